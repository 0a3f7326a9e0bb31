import csv

import numpy as np
import pytest

from polymorph.errors import CompositionError, DomainError, ValidationError
from polymorph.markov import markov_operator, random_kernel
from polymorph.measure import AtomicMeasure, mellin_eval
from polymorph.mellin import (apply, apply_dual, check_duality, check_homomorphism,
                              check_pairing, contraction_ratio, holomorphy_probe,
                              three_lines_ratio, transform_matrix, write_matrix_element_csv)
from polymorph.poly import Polymorphism, bilinear_form, compose, from_markov, identity, star
from polymorph.space import DiscreteSpace, random_space

from helpers import random_chain, random_strip_point, random_vector

ONE = DiscreteSpace([1.0])
P53 = Polymorphism(ONE, ONE, [[AtomicMeasure([0.5, 1.5], [0.5, 0.5])]])
Q53 = Polymorphism(ONE, ONE, [[AtomicMeasure([2.0, 0.5], [1 / 3, 2 / 3])]])
VS = (0.0, 0.25, 0.5, 0.75, 1.0)


def test_pairing_identity(rng):
    for _ in range(50):
        (P,) = random_chain(rng, [rng.integers(1, 5), rng.integers(1, 5)])
        f, g = random_vector(rng, len(P.source)), random_vector(rng, len(P.target))
        assert check_pairing(P, random_strip_point(rng), f, g) < 1e-12


def test_markov_images_are_u_independent(rng):
    k = random_kernel(rng, random_space(rng, 3), random_space(rng, 4))
    P = from_markov(k)
    M = markov_operator(k)
    for u in (0, 0.3 + 2j, 1 - 5j):
        T = transform_matrix(P, u)
        assert np.array_equal(T.M.real, M) and not np.any(T.M.imag)
    T0 = transform_matrix(P, 0)
    assert np.all(T0.M.real >= 0) and np.allclose(T0.M.sum(1), 1.0, atol=1e-15)


@pytest.mark.parametrize("u", [0, 1, 0.5, 0.25 + 1j, 0.8 - 3j])
def test_single_point_scalar(u):
    M = transform_matrix(P53, u).M[0, 0]
    assert M == pytest.approx(0.5 * (0.5 ** u + 1.5 ** u), abs=1e-15)
    if u in (0, 1):
        assert M == pytest.approx(1.0, abs=1e-15)


def test_marginal_actions(rng):
    (P,) = random_chain(rng, [3, 4])
    T0, T1 = transform_matrix(P, 0), transform_matrix(P, 1)
    assert np.allclose(apply(T0, np.ones(4)), 1.0, atol=1e-14)
    assert np.allclose(P.source.masses @ T1.M, P.target.masses, atol=1e-14)
    assert T1.p == 1.0 and T0.p == np.inf and transform_matrix(P, 0.25).p == 4.0


def test_apply_checks_shape(rng):
    (P,) = random_chain(rng, [3, 4])
    T = transform_matrix(P, 0.5)
    with pytest.raises(ValidationError):
        apply(T, np.ones(3))
    with pytest.raises(DomainError):
        transform_matrix(P, 1.2)


def test_dual_pairing(rng):
    (P,) = random_chain(rng, [3, 4])
    T = transform_matrix(P, 0.3 + 0.7j)
    f, g = random_vector(rng, 3), random_vector(rng, 4)
    lhs = np.sum(P.target.masses * apply_dual(T, f) * g)
    rhs = np.sum(P.source.masses * f * apply(T, g))
    assert abs(lhs - rhs) < 1e-13


@pytest.mark.parametrize("v", VS)
def test_contraction(rng, v):
    for _ in range(100):
        (P,) = random_chain(rng, [rng.integers(1, 5), rng.integers(1, 5)])
        g = random_vector(rng, len(P.target))
        assert contraction_ratio(P, complex(v, rng.uniform(-5, 5)), g) <= 1 + 1e-12


def test_contraction_endpoints_explicit(rng):
    for _ in range(100):
        (P,) = random_chain(rng, [3, 3])
        g = random_vector(rng, 3)
        w = rng.uniform(-5, 5)
        tg0 = apply(transform_matrix(P, 1j * w), g)
        assert np.max(np.abs(tg0)) <= np.max(np.abs(g)) * (1 + 1e-12)
        tg1 = apply(transform_matrix(P, 1 + 1j * w), g)
        assert np.sum(P.source.masses * np.abs(tg1)) <= np.sum(P.target.masses * np.abs(g)) * (1 + 1e-12)


def test_homomorphism(rng):
    P, Q = random_chain(rng, [3, 3, 3])
    assert check_homomorphism(identity(P.source), P, 0.4 + 1j) == 0.0
    assert check_homomorphism(P, identity(P.target), 0.4 + 1j) == 0.0
    u = 0.3 - 2j
    lhs = transform_matrix(P53, u).M[0, 0] * transform_matrix(Q53, u).M[0, 0]
    assert lhs == pytest.approx(mellin_eval(compose(P53, Q53)[0, 0], u), abs=1e-15)
    P4, Q4 = random_chain(rng, [4, 4, 4], max_atoms=4)
    for v in (0.0, 0.5, 1.0):
        for w in (-3.0, 0.0, 3.0):
            assert check_homomorphism(P4, Q4, complex(v, w)) < 1e-10
    with pytest.raises(CompositionError):
        check_homomorphism(P, random_chain(rng, [2, 2])[0], 0.5)


def test_duality(rng):
    sym = Q53  # self-star: (2, 1/3) and (1/2, 2/3) swap under the involution
    assert star(sym)[0, 0].atoms == pytest.approx(sym[0, 0].atoms)
    assert check_duality(sym, 0.5, [1.0], [1.0]) < 1e-16
    k = random_kernel(rng, random_space(rng, 3), random_space(rng, 2))
    f, g = random_vector(rng, 2), random_vector(rng, 3)
    M = markov_operator(k)
    # transpose duality of Markov operators: <f, T(p*) g>_beta = <T(p) f, g>_alpha
    lhs = np.sum(k.target.masses * f * (markov_operator(k.star) @ g))
    rhs = np.sum(k.source.masses * (M @ f) * g)
    assert abs(lhs - rhs) < 1e-14
    assert check_duality(from_markov(k), 0.2 + 1j, f, g) < 1e-14
    (P,) = random_chain(rng, [3, 4])
    for _ in range(20):
        u = random_strip_point(rng)
        assert check_duality(P, u, random_vector(rng, 4), random_vector(rng, 3)) < 1e-12


def test_three_lines(rng):
    for _ in range(100):
        (P,) = random_chain(rng, [rng.integers(1, 4), rng.integers(1, 4)])
        f, g = random_vector(rng, len(P.source)), random_vector(rng, len(P.target))
        assert three_lines_ratio(P, random_strip_point(rng), f, g) <= 1 + 1e-10


INTERIOR = [complex(v, w) for v in (0.25, 0.5, 0.75) for w in (-1.5, 0.0, 1.5)]


def test_holomorphy_markov_constant(rng):
    P = from_markov(random_kernel(rng, random_space(rng, 2), random_space(rng, 3)))
    rep = holomorphy_probe(P, np.ones(2), np.ones(3), INTERIOR)
    assert np.all(rep.cr_residuals == 0) and rep.psd


def test_holomorphy_single_atoms_second_order(rng):
    a, b = random_space(rng, 2), random_space(rng, 2)
    P = random_chain(rng, [2, 2], max_atoms=1)[0]
    assert all(len(P[i, j]) == 1 for i in range(2) for j in range(2))
    rep = holomorphy_probe(P, rng.uniform(0, 1, 2), rng.uniform(0, 1, 2), INTERIOR)
    assert np.all(np.abs(rep.ratios - 4) < 0.5)


def test_holomorphy_gram(rng):
    (P,) = random_chain(rng, [3, 3])
    pts = [complex(rng.uniform(0, 0.5), rng.uniform(-3, 3)) for _ in range(8)]
    rep = holomorphy_probe(P, rng.uniform(0, 1, 3), rng.uniform(0, 1, 3), INTERIOR, gram_points=pts)
    assert rep.psd and rep.gram_min_eigenvalue > -1e-10


def test_holomorphy_domain(rng):
    (P,) = random_chain(rng, [2, 2])
    with pytest.raises(DomainError):
        holomorphy_probe(P, np.ones(2), np.ones(2), [0.0 + 1j])
    with pytest.raises(DomainError):
        holomorphy_probe(P, -np.ones(2), np.ones(2), [0.5])


def test_csv_emitter(tmp_path, rng):
    (P,) = random_chain(rng, [2, 3])
    ws = np.arange(-10, 10.001, 0.5)
    path = tmp_path / "s.csv"
    n = write_matrix_element_csv(path, P, 0.25, ws, pairs=[(0, 1), (1, 2)])
    rows = list(csv.DictReader(open(path)))
    assert n == len(rows) == 2 * 41
    r = rows[45]
    i, j, w = int(r["i"]), int(r["j"]), float(r["w"])
    ref = mellin_eval(P[i, j], 0.25 + 1j * w)
    assert abs(complex(float(r["re"]), float(r["im"])) - ref) < 1e-15
    assert float(r["abs"]) == pytest.approx(abs(ref), abs=1e-15)
    # deterministic output
    path2 = tmp_path / "t.csv"
    write_matrix_element_csv(path2, P, 0.25, ws, pairs=[(0, 1), (1, 2)])
    assert path.read_bytes() == path2.read_bytes()
    with pytest.raises(ValidationError):
        write_matrix_element_csv(path, P, 0.25, ws, pairs=[(2, 0)])


def test_operator_record(rng):
    (P,) = random_chain(rng, [2, 2])
    rec = transform_matrix(P, 0.5 + 1j).to_record()
    assert rec["u"] == [0.5, 1.0]
    assert np.array(rec["M"]).shape == (2, 2, 2)
