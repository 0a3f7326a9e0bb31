"""JSON and CSV formats for all domain objects.

Reals are written with ``repr`` (the shortest string that round-trips), so
``load(save(x))`` reproduces ``x`` bit for bit and repeated saves are
byte-identical.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import ParseError, PolymorphError
from .invert import MellinSamples
from .markov import BistochasticKernel
from .measure import AtomicMeasure
from .mellin import OperatorMatrix
from .poly import Polymorphism
from .pwl import PiecewiseLinearMap
from .space import DiscreteSpace, Partition

__all__ = [
    "to_record",
    "from_record",
    "dumps",
    "loads",
    "save",
    "load",
    "read_samples_csv",
    "write_samples_csv",
    "write_study_csv",
]

PathLike = Union[str, Path]


def _f(x) -> float:
    return float(x)


def _atoms(m: AtomicMeasure) -> list:
    return [[_f(t), _f(w)] for t, w in zip(m.t, m.w)]


def to_record(obj) -> dict:
    """Plain-JSON record for a domain object."""
    if isinstance(obj, AtomicMeasure):
        return {"atoms": _atoms(obj)}
    if isinstance(obj, DiscreteSpace):
        return {"masses": [_f(x) for x in obj.masses], "probabilistic": bool(obj.probabilistic)}
    if isinstance(obj, Partition):
        return {"blocks": [[int(i) for i in b] for b in obj.blocks]}
    if isinstance(obj, BistochasticKernel):
        return {"source": [_f(x) for x in obj.source.masses],
                "target": [_f(x) for x in obj.target.masses],
                "p": [[_f(x) for x in row] for row in obj.p]}
    if isinstance(obj, Polymorphism):
        na, nb = obj.shape
        entries = [{"i": i, "j": j, "atoms": _atoms(obj[i, j])}
                   for i in range(na) for j in range(nb) if not obj[i, j].is_zero()]
        return {"source": [_f(x) for x in obj.source.masses],
                "target": [_f(x) for x in obj.target.masses],
                "entries": entries}
    if isinstance(obj, PiecewiseLinearMap):
        return obj.to_record()
    if isinstance(obj, OperatorMatrix):
        return obj.to_record()
    raise TypeError(f"no text format for {type(obj).__name__}")


class _Ctx:
    """Tracks the field path for parse diagnostics."""

    def __init__(self, where: str):
        self.where = where

    def fail(self, path: str, msg: str):
        raise ParseError(f"{self.where}: field '{path}': {msg}")

    def get(self, rec, key, path=""):
        full = f"{path}.{key}" if path else key
        if not isinstance(rec, dict):
            self.fail(path or "<root>", "expected an object")
        if key not in rec:
            self.fail(full, "missing")
        return rec[key], full

    def real(self, x, path) -> float:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            self.fail(path, f"expected a number, got {x!r}")
        return float(x)

    def reals(self, xs, path) -> list:
        if not isinstance(xs, list):
            self.fail(path, "expected a list")
        return [self.real(x, f"{path}[{k}]") for k, x in enumerate(xs)]

    def integer(self, x, path) -> int:
        if isinstance(x, bool) or not isinstance(x, int):
            self.fail(path, f"expected an integer, got {x!r}")
        return x

    def atoms(self, xs, path) -> AtomicMeasure:
        if not isinstance(xs, list):
            self.fail(path, "expected a list of [t, w] pairs")
        ts, ws = [], []
        for k, a in enumerate(xs):
            if not (isinstance(a, list) and len(a) == 2):
                self.fail(f"{path}[{k}]", "expected a [t, w] pair")
            ts.append(self.real(a[0], f"{path}[{k}][0]"))
            ws.append(self.real(a[1], f"{path}[{k}][1]"))
        return self.build(lambda: AtomicMeasure(ts, ws), path)

    def build(self, fn, path):
        try:
            return fn()
        except PolymorphError as e:
            if isinstance(e, ParseError):
                raise
            # keep the domain error type so callers can map it to an exit code
            raise type(e)(f"{self.where}: field '{path or '<root>'}': {e}") from e


def kind_of(rec: Any) -> str:
    """Record kind inferred from its keys."""
    if isinstance(rec, dict):
        for key, kind in (("pieces", "map"), ("entries", "polymorphism"), ("p", "kernel"),
                          ("atoms", "measure"), ("masses", "space"), ("blocks", "partition"),
                          ("M", "operator")):
            if key in rec:
                return kind
    raise ParseError("unrecognized record: expected one of the keys "
                     "pieces, entries, p, atoms, masses, blocks, M")


def from_record(rec: Any, kind: str | None = None, where: str = "<record>"):
    """Inverse of :func:`to_record`; measures are canonicalized."""
    c = _Ctx(where)
    kind = kind or kind_of(rec)
    if kind == "measure":
        return c.atoms(c.get(rec, "atoms")[0], "atoms")
    if kind == "space":
        m, p = c.get(rec, "masses")
        prob = rec.get("probabilistic", False) if isinstance(rec, dict) else False
        if not isinstance(prob, bool):
            c.fail("probabilistic", "expected true or false")
        masses = c.reals(m, p)
        return c.build(lambda: DiscreteSpace(masses, prob), p)
    if kind == "partition":
        b, p = c.get(rec, "blocks")
        if not isinstance(b, list):
            c.fail(p, "expected a list of index lists")
        blocks = []
        for k, blk in enumerate(b):
            if not isinstance(blk, list):
                c.fail(f"{p}[{k}]", "expected a list of indices")
            blocks.append([c.integer(i, f"{p}[{k}][{q}]") for q, i in enumerate(blk)])
        return c.build(lambda: Partition(blocks), p)
    if kind in ("kernel", "polymorphism"):
        a, pa = c.get(rec, "source")
        b, pb = c.get(rec, "target")
        src = c.build(lambda: DiscreteSpace(c.reals(a, pa)), pa)
        tgt = c.build(lambda: DiscreteSpace(c.reals(b, pb)), pb)
        if kind == "kernel":
            rows, pp = c.get(rec, "p")
            if not isinstance(rows, list):
                c.fail(pp, "expected a matrix")
            mat = [c.reals(r, f"{pp}[{k}]") for k, r in enumerate(rows)]
            return c.build(lambda: BistochasticKernel(src, tgt, np.array(mat, dtype=float)), pp)
        ents, pe = c.get(rec, "entries")
        if not isinstance(ents, list):
            c.fail(pe, "expected a list of entries")
        na, nb = len(src), len(tgt)
        grid = [[AtomicMeasure.zero() for _ in range(nb)] for _ in range(na)]
        seen = set()
        for k, e in enumerate(ents):
            path = f"{pe}[{k}]"
            i = c.integer(c.get(e, "i", path)[0], f"{path}.i")
            j = c.integer(c.get(e, "j", path)[0], f"{path}.j")
            if not (0 <= i < na and 0 <= j < nb):
                c.fail(path, f"entry ({i}, {j}) outside a {na}x{nb} polymorphism")
            if (i, j) in seen:
                c.fail(path, f"duplicate entry ({i}, {j})")
            seen.add((i, j))
            grid[i][j] = c.atoms(c.get(e, "atoms", path)[0], f"{path}.atoms")
        return Polymorphism(src, tgt, grid)
    if kind == "map":
        ps, pp = c.get(rec, "pieces")
        if not isinstance(ps, list):
            c.fail(pp, "expected a list of pieces")
        pieces = []
        for k, q in enumerate(ps):
            vals = c.reals(q, f"{pp}[{k}]")
            if len(vals) != 5:
                c.fail(f"{pp}[{k}]", "expected [a, b, c, d, slope]")
            pieces.append(vals)
        return c.build(lambda: PiecewiseLinearMap(pieces), pp)
    if kind == "operator":
        raise ParseError(f"{where}: operator records are output-only")
    raise ParseError(f"{where}: unknown record kind {kind!r}")


def _format(rec: dict) -> str:
    # one top-level key per line and one list element per line keeps diffs readable
    lines = []
    for k, v in rec.items():
        if isinstance(v, list) and v:
            body = ",\n  ".join(json.dumps(x) for x in v)
            lines.append(f" {json.dumps(k)}: [\n  {body}\n ]")
        else:
            lines.append(f" {json.dumps(k)}: {json.dumps(v)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def dumps(obj) -> str:
    return _format(to_record(obj))


def loads(text: str, kind: str | None = None, where: str = "<string>"):
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{where}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    return from_record(rec, kind, where)


def save(obj, path: PathLike) -> None:
    Path(path).write_text(dumps(obj))


def load(path: PathLike, kind: str | None = None):
    return loads(Path(path).read_text(), kind, where=str(path))


def write_samples_csv(path: PathLike, samples) -> int:
    """Write ``line, w, re, im`` rows; a dict keyed by ``(i, j)`` adds leading ``i, j`` columns."""
    keyed = isinstance(samples, dict)
    items = sorted(samples.items()) if keyed else [(None, samples)]
    n = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow((["i", "j"] if keyed else []) + ["line", "w", "re", "im"])
        for key, s in items:
            for line, ws, ph in ((0, s.w0, s.phi0), (1, s.w1, s.phi1)):
                for w, z in zip(ws, ph):
                    lead = list(key) if keyed else []
                    wr.writerow(lead + [line, repr(float(w)), repr(float(z.real)), repr(float(z.imag))])
                    n += 1
    return n


def read_samples_csv(path: PathLike):
    """Read a samples CSV written by :func:`write_samples_csv`.

    Returns a :class:`MellinSamples`, or a dict ``(i, j) -> MellinSamples``
    when the file has ``i, j`` columns.
    """
    where = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{where}: empty file")
    header = [h.strip() for h in rows[0]]
    base = ["line", "w", "re", "im"]
    if header == base:
        keyed = False
    elif header == ["i", "j"] + base:
        keyed = True
    else:
        raise ParseError(f"{where}: line 1: expected header {','.join(base)} (optionally prefixed by i,j)")
    data: dict = {}
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{where}: line {ln}: expected {len(header)} fields, got {len(row)}")
        vals = {}
        for name, cell in zip(header, row):
            try:
                vals[name] = int(cell) if name in ("i", "j", "line") else float(cell)
            except ValueError:
                raise ParseError(f"{where}: line {ln}: field '{name}': cannot parse {cell!r}") from None
        if vals["line"] not in (0, 1):
            raise ParseError(f"{where}: line {ln}: field 'line': must be 0 or 1")
        key = (vals["i"], vals["j"]) if keyed else None
        d = data.setdefault(key, ([], [], [], []))
        k = 2 * vals["line"]
        d[k].append(vals["w"])
        d[k + 1].append(complex(vals["re"], vals["im"]))
    out = {}
    for key, (w0, p0, w1, p1) in data.items():
        try:
            out[key] = MellinSamples(np.array(w0), np.array(p0), np.array(w1), np.array(p1))
        except PolymorphError as e:
            raise type(e)(f"{where}: samples {key if keyed else ''}: {e}") from e
    if not keyed:
        if None not in out:
            raise ParseError(f"{where}: no sample rows")
        return out[None]
    return out


def write_study_csv(path: PathLike, rows) -> int:
    """Write ``n, level, distance`` rows of a convergence study."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "level", "distance"])
        for r in rows:
            wr.writerow([int(r.n), int(r.level), repr(float(r.distance))])
    return len(rows)
