"""Polymorphisms between discrete spaces.

A polymorphism ``P: A ~> B`` is a matrix of atomic measures ``p_ij`` on the
positive reals with

* row identity:    ``sum_j mass(p_ij) = alpha_i``
* column identity: ``sum_i moment(p_ij) = beta_j``

Composition convolves entries through the middle space,
``(Q o P)_ik = sum_j conv(q_jk, p_ij) / beta_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import measure as _m
from .errors import CompositionError, ValidationError
from .markov import BistochasticKernel
from .measure import AtomicMeasure, as_u, MELLIN_GRID
from .space import DiscreteSpace, Partition, quotient

__all__ = [
    "POLY_TOL",
    "Polymorphism",
    "ValidationReport",
    "validate",
    "compose",
    "star",
    "from_markov",
    "identity",
    "coarsen",
    "spread",
    "mellin_matrix",
    "bilinear_form",
    "pol_distance",
    "pol_mellin_gap",
    "random_polymorphism",
]

POLY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Polymorphism:
    """Matrix of atomic measures between two discrete spaces.

    Only the shape is checked on construction; use :func:`validate` for the
    marginal identities. ``dropped`` accumulates mass removed by pruning
    during composition.
    """

    source: DiscreteSpace
    target: DiscreteSpace
    entries: tuple
    dropped: float = field(default=0.0)

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if len(rows) != len(self.source) or any(len(r) != len(self.target) for r in rows):
            raise ValidationError(
                f"entry matrix does not have shape {(len(self.source), len(self.target))}")
        if not all(isinstance(e, AtomicMeasure) for r in rows for e in r):
            raise ValidationError("polymorphism entries must be AtomicMeasure instances")
        object.__setattr__(self, "entries", rows)

    @property
    def shape(self):
        return len(self.source), len(self.target)

    def __getitem__(self, ij) -> AtomicMeasure:
        i, j = ij
        return self.entries[i][j]

    def masses(self) -> np.ndarray:
        """``mass(p_ij)`` as a matrix."""
        return np.array([[e.mass() for e in r] for r in self.entries], dtype=float)

    def moments(self) -> np.ndarray:
        """``moment(p_ij)`` as a matrix."""
        return np.array([[e.moment() for e in r] for r in self.entries], dtype=float)

    def total(self) -> AtomicMeasure:
        """Sum of all entries (the coarsening to single points)."""
        return _sum_measures([e for r in self.entries for e in r])

    @property
    def star(self) -> "Polymorphism":
        return star(self)

    def __repr__(self):
        return f"Polymorphism({len(self.source)}x{len(self.target)}, atoms={sum(len(e) for r in self.entries for e in r)})"


def _sum_measures(ms: Sequence[AtomicMeasure], weights=None) -> AtomicMeasure:
    if weights is None:
        weights = np.ones(len(ms))
    ts = [m.t for m in ms]
    ws = [m.w * c for m, c in zip(ms, weights)]
    if not ts:
        return AtomicMeasure.zero()
    return AtomicMeasure(np.concatenate(ts), np.concatenate(ws))


@dataclass
class ValidationReport:
    """Residuals of the two marginal identities."""

    row_residuals: np.ndarray
    col_residuals: np.ndarray
    tol: float = POLY_TOL
    dropped: float = 0.0

    @property
    def row_ok(self) -> bool:
        return bool(np.all(np.abs(self.row_residuals) <= self.tol))

    @property
    def col_ok(self) -> bool:
        return bool(np.all(np.abs(self.col_residuals) <= self.tol))

    @property
    def passed(self) -> bool:
        return self.row_ok and self.col_ok

    def __bool__(self):
        return self.passed

    def messages(self) -> list[str]:
        out = []
        for i in np.flatnonzero(np.abs(self.row_residuals) > self.tol):
            out.append(f"row mass identity sum_j mass(p_ij) = alpha_i violated at i={i} "
                       f"(residual {self.row_residuals[i]:+.3e})")
        for j in np.flatnonzero(np.abs(self.col_residuals) > self.tol):
            out.append(f"column moment identity sum_i moment(p_ij) = beta_j violated at j={j} "
                       f"(residual {self.col_residuals[j]:+.3e})")
        return out

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "max_row_residual": float(np.max(np.abs(self.row_residuals))),
            "max_col_residual": float(np.max(np.abs(self.col_residuals))),
            "dropped_mass": self.dropped,
            "tol": self.tol,
            "violations": self.messages(),
        }

    def raise_if_failed(self):
        if not self.passed:
            raise ValidationError("; ".join(self.messages()))


def validate(P: Polymorphism, tol: float = POLY_TOL) -> ValidationReport:
    """Check both marginal identities of ``P`` and report per-row/column residuals."""
    if not isinstance(P, Polymorphism):
        raise ValidationError("validate expects a Polymorphism")
    rows = P.masses().sum(axis=1) - P.source.masses
    cols = P.moments().sum(axis=0) - P.target.masses
    return ValidationReport(rows, cols, tol, P.dropped)


def compose(P: Polymorphism, Q: Polymorphism, prune_eps: Optional[float] = None) -> Polymorphism:
    """Product ``Q o P`` of ``P: A ~> B`` and ``Q: B ~> C``.

    ``r_ik = sum_j conv(q_jk, p_ij) / beta_j`` with the stored masses
    ``beta_j`` of the middle space. With ``prune_eps`` every output entry is
    pruned and the dropped mass is recorded on the result.
    """
    if not P.target.same_as(Q.source):
        raise CompositionError("target of P differs from source of Q")
    beta = P.target.masses
    na, nb = P.shape
    nc = Q.shape[1]
    dropped = P.dropped + Q.dropped
    rows = []
    for i in range(na):
        row = []
        for k in range(nc):
            ts, ws = [], []
            for j in range(nb):
                p, q = P.entries[i][j], Q.entries[j][k]
                if p.is_zero() or q.is_zero():
                    continue
                ts.append(np.multiply.outer(p.t, q.t).ravel())
                ws.append(np.multiply.outer(p.w, q.w).ravel() / beta[j])
            r = AtomicMeasure(np.concatenate(ts), np.concatenate(ws)) if ts else AtomicMeasure.zero()
            if prune_eps is not None:
                r, d = _m.prune(r, prune_eps)
                dropped += d
            row.append(r)
        rows.append(row)
    return Polymorphism(P.source, Q.target, rows, dropped)


def star(P: Polymorphism) -> Polymorphism:
    """Arrow reversal ``B ~> A`` with entries ``star(p_ij)`` at position ``(j, i)``."""
    na, nb = P.shape
    rows = [[_m.star(P.entries[i][j]) for i in range(na)] for j in range(nb)]
    return Polymorphism(P.target, P.source, rows, P.dropped)


def from_markov(k: BistochasticKernel) -> Polymorphism:
    """Embed a kernel: entry ``(i, j)`` is ``p_ij`` times the unit mass at ``t = 1``."""
    rows = [[AtomicMeasure([1.0], [x]) for x in r] for r in k.p]
    return Polymorphism(k.source, k.target, rows)


def identity(s: DiscreteSpace) -> Polymorphism:
    n = len(s)
    rows = [[AtomicMeasure([1.0], [s.masses[i]]) if i == j else AtomicMeasure.zero()
             for j in range(n)] for i in range(n)]
    return Polymorphism(s, s, rows)


def coarsen(P: Polymorphism, x: Partition, y: Partition) -> Polymorphism:
    """Polymorphism ``A/X ~> B/Y`` with block entries ``sum_{i in I, j in J} p_ij``."""
    x.check(P.source)
    y.check(P.target)
    rows = [[_sum_measures([P.entries[i][j] for i in bi for j in bj]) for bj in y.blocks]
            for bi in x.blocks]
    return Polymorphism(quotient(P.source, x), quotient(P.target, y), rows, P.dropped)


def spread(P: Polymorphism, x: Partition, y: Partition) -> Polymorphism:
    """Average ``P`` over blocks: ``t[B;Y] o P o t[A;X]`` in closed form.

    Entry ``(i, j)`` with ``i`` in block ``I`` and ``j`` in ``J`` is
    ``alpha_i beta_j / (alpha(I) beta(J)) * p[I x J]``.
    """
    c = coarsen(P, x, y)
    a, b = P.source.masses, P.target.masses
    la, lb = x.labels(), y.labels()
    ab, bb = c.source.masses, c.target.masses
    rows = []
    for i in range(len(a)):
        row = []
        for j in range(len(b)):
            blk = c.entries[la[i]][lb[j]]
            row.append(blk * (a[i] * b[j] / (ab[la[i]] * bb[lb[j]])))
        rows.append(row)
    return Polymorphism(P.source, P.target, rows, P.dropped)


def mellin_matrix(P: Polymorphism, u) -> np.ndarray:
    """``Phi_{p_ij}(u)``; shape ``u.shape + (|A|, |B|)``."""
    uu = as_u(u)
    out = np.empty(uu.shape + P.shape, dtype=complex)
    for i, r in enumerate(P.entries):
        for j, e in enumerate(r):
            out[..., i, j] = _m.mellin_eval(e, uu)
    return out


def bilinear_form(P: Polymorphism, f, g, u):
    """``S_u(P; f, g) = sum_ij f_i g_j Phi_{p_ij}(u)``."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (len(P.source),) or g.shape != (len(P.target),):
        raise ValidationError("test vectors do not match the spaces of P")
    phi = mellin_matrix(P, u)
    out = np.einsum("i,...ij,j->...", f, phi, g)
    return complex(out) if out.ndim == 0 else out


def pol_distance(P: Polymorphism, Q: Polymorphism) -> float:
    """Largest measure distance over entries and over the full coarsening."""
    if P.shape != Q.shape or not (P.source.same_as(Q.source) and P.target.same_as(Q.target)):
        raise CompositionError("pol_distance needs polymorphisms between the same spaces")
    d = max(_m.distance(p, q) for rp, rq in zip(P.entries, Q.entries) for p, q in zip(rp, rq))
    return max(d, _m.distance(P.total(), Q.total()))


def pol_mellin_gap(P: Polymorphism, Q: Polymorphism, grid=MELLIN_GRID) -> float:
    """Largest entrywise :func:`polymorph.measure.mellin_gap`."""
    if P.shape != Q.shape:
        return float("inf")
    return max(_m.mellin_gap(p, q, grid) for rp, rq in zip(P.entries, Q.entries)
               for p, q in zip(rp, rq))


def random_polymorphism(rng: np.random.Generator, a: DiscreteSpace, b: DiscreteSpace,
                        max_atoms: int = 4, log_range: float = 1.0,
                        exact_atoms: bool = False) -> Polymorphism:
    """Random valid polymorphism.

    Weights are drawn freely and rescaled per row to the masses ``alpha_i``;
    then the locations in each column are rescaled so the moments sum to
    ``beta_j`` (which leaves the row masses untouched).
    """
    na, nb = len(a), len(b)
    ts = [[None] * nb for _ in range(na)]
    ws = [[None] * nb for _ in range(na)]
    for i in range(na):
        for j in range(nb):
            k = max_atoms if exact_atoms else int(rng.integers(1, max_atoms + 1))
            ts[i][j] = np.exp(rng.uniform(-log_range, log_range, size=k))
            ws[i][j] = rng.uniform(0.05, 1.0, size=k)
    for i in range(na):
        s = sum(ws[i][j].sum() for j in range(nb))
        for j in range(nb):
            ws[i][j] = ws[i][j] * (a.masses[i] / s)
    for j in range(nb):
        mom = sum(ws[i][j] @ ts[i][j] for i in range(na))
        for i in range(na):
            ts[i][j] = ts[i][j] * (b.masses[j] / mom)
    rows = [[AtomicMeasure(ts[i][j], ws[i][j]) for j in range(nb)] for i in range(na)]
    return Polymorphism(a, b, rows)
