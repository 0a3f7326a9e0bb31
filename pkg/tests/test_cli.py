import csv
import json

import numpy as np
import pytest

from polymorph import io
from polymorph.cli import main, parse_grid
from polymorph.errors import CompositionError, DomainError, ParseError, ValidationError
from polymorph.invert import sample_measure, sample_polymorphism
from polymorph.markov import random_kernel
from polymorph.measure import AtomicMeasure
from polymorph.poly import Polymorphism, from_markov, pol_distance
from polymorph.pwl import oscillating_family
from polymorph.space import DiscreteSpace, random_space

ONE = DiscreteSpace([1.0])


@pytest.fixture
def files(tmp_path):
    P = Polymorphism(ONE, ONE, [[AtomicMeasure([0.5, 1.5], [0.5, 0.5])]])
    Q = Polymorphism(ONE, ONE, [[AtomicMeasure([2.0, 0.5], [1 / 3, 2 / 3])]])
    io.save(P, tmp_path / "P.poly")
    io.save(Q, tmp_path / "Q.poly")
    bad = Polymorphism(ONE, ONE, [[AtomicMeasure([2.0, 2 / 3], [0.25, 1.5])]])
    io.save(bad, tmp_path / "bad.poly")
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


def test_grid_syntax():
    assert parse_grid("-10:10:0.5").size == 41
    assert parse_grid("0:1:0.3").tolist() == [0.0, 0.3, 0.6, 0.9]
    with pytest.raises(ParseError):
        parse_grid("0:1")
    with pytest.raises(DomainError):
        parse_grid("1:0:0.1")


def test_compose(files):
    assert run("compose", files / "P.poly", files / "Q.poly", "-o", files / "R.poly") == 0
    R = io.load(files / "R.poly")
    assert R[0, 0].atoms == pytest.approx([(0.25, 1 / 3), (0.75, 1 / 3), (1, 1 / 6), (3, 1 / 6)])


def test_compose_mismatch(files, rng):
    io.save(from_markov(random_kernel(rng, random_space(rng, 2), random_space(rng, 2))), files / "K.poly")
    assert run("compose", files / "P.poly", files / "K.poly", "-o", files / "x") == CompositionError.exit_code


def test_validate_names_identity(files, capsys):
    assert run("validate", files / "P.poly") == 0
    code = run("validate", files / "bad.poly")
    err = capsys.readouterr().err
    assert code == ValidationError.exit_code
    assert "column moment identity" in err and "+5.000e-01" in err


def test_exit_codes_are_distinct(files, capsys):
    (files / "junk.json").write_text("{")
    assert run("validate", files / "junk.json") == ParseError.exit_code
    assert run("validate", files / "missing.json") == 7
    assert run("mellin", files / "P.poly", "--v", "1.5", "--w-grid", "0:1:1", "--csv",
               files / "o.csv") == DomainError.exit_code
    with pytest.raises(SystemExit) as e:
        run("mellin", files / "P.poly")
    assert e.value.code == 2
    assert len({ParseError.exit_code, 7, DomainError.exit_code, 2, ValidationError.exit_code,
                CompositionError.exit_code}) == 6


def test_mellin_rows(files):
    out = files / "m.csv"
    assert run("mellin", files / "P.poly", "--v", "0", "--w-grid", "-10:10:0.5", "--csv", out) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["i", "j", "v", "w", "re", "im", "abs"] and len(rows) == 42
    first = out.read_bytes()
    run("mellin", files / "P.poly", "--v", "0", "--w-grid", "-10:10:0.5", "--csv", out,
        "--operators", files / "ops.json")
    assert out.read_bytes() == first
    assert len(json.loads((files / "ops.json").read_text())["operators"]) == 41


def test_star(files):
    assert run("star", files / "P.poly", "-o", files / "S.poly") == 0
    assert io.load(files / "S.poly")[0, 0].atoms == pytest.approx([(2 / 3, 0.75), (2.0, 0.25)])


def test_invert_measure(files):
    m = AtomicMeasure([1.0, np.e], [0.5, 0.5])
    io.write_samples_csv(files / "s.csv", sample_measure(m))
    code = run("invert", "--samples", files / "s.csv", "--grid", "-5:5:0.01", "-o", files / "m.json",
               "--report", files / "r.json")
    assert code == 0
    got = io.load(files / "m.json")
    assert np.allclose(got.w, 0.5, atol=1e-8) and len(got) == 2
    assert json.loads((files / "r.json").read_text())["thresholds_are_engineering_choices"]


def test_invert_polymorphism(files, rng):
    a, b = random_space(rng, 2), random_space(rng, 2)
    P = from_markov(random_kernel(rng, a, b))
    io.write_samples_csv(files / "k.csv", sample_polymorphism(P))
    io.save(a, files / "a.json")
    io.save(b, files / "b.json")
    args = ["invert", "--samples", files / "k.csv", "--grid", "-1:1:0.01", "-o", files / "rec.poly"]
    assert run(*args) == ParseError.exit_code
    assert run(*args, "--source", files / "a.json", "--target", files / "b.json") == 0
    assert pol_distance(io.load(files / "rec.poly"), P) < 1e-8


def test_discretize_and_synthesize(files):
    io.save(oscillating_family(2.0, 2 / 3, 0.25, 4), files / "g.map")
    assert run("discretize", files / "g.map", "--level", "2", "-o", files / "D.poly") == 0
    D = io.load(files / "D.poly")
    assert D[1, 1].atoms == pytest.approx([(2 / 3, 3 / 16), (2.0, 1 / 16)])
    assert run("synthesize-map", files / "D.poly", "--level", "2", "-o", files / "h.map") == 0
    assert run("discretize", files / "h.map", "--level", "2", "-o", files / "E.poly") == 0
    assert pol_distance(io.load(files / "E.poly"), D) < 1e-12
    assert run("synthesize-map", files / "bad.poly", "--level", "0", "-o", files / "x") == \
        ValidationError.exit_code


def test_converge(files, capsys):
    out = files / "c.csv"
    code = run("converge", "--t1", 2, "--t2", 2 / 3, "--lambda", 0.25, "--level", 2, "--n-max", 64,
               "--csv", out)
    assert code == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["n", "level", "distance"] and len(rows) == 65
    assert float(rows[4][2]) < 1e-12
    assert json.loads(capsys.readouterr().out)["decay_slope"] >= 0.9
    assert run("converge", "--t1", 2, "--t2", 0.7, "--lambda", 0.25, "--level", 2, "--n-max", 4,
               "--csv", out) == DomainError.exit_code


def test_module_entry_point(files):
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "polymorph", "validate", str(files / "bad.poly")],
                       capture_output=True, text=True)
    assert r.returncode == ValidationError.exit_code and "column moment identity" in r.stderr
