"""Piecewise-linear bijections of [0, 1) and their discretization into polymorphisms.

A map ``g`` is sent to the polymorphism whose ``(i, j)`` entry records, for
every linear piece, the length of ``{x in cell_i : g(x) in cell_j}`` at the
location ``|g'|``. The reverse construction builds, for a polymorphism between
cell spaces, a piecewise-linear map whose discretization returns it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .measure import AtomicMeasure, mellin_eval
from .poly import Polymorphism, pol_distance, validate
from .space import DiscreteSpace, uniform_space

__all__ = [
    "Piece",
    "PiecewiseLinearMap",
    "DyadicPartition",
    "cell_space",
    "discretize",
    "gms_dense_construct",
    "oscillating_family",
    "limit_polymorphism",
    "StudyRow",
    "ConvergenceStudy",
    "convergence_study",
    "loglog_slope",
    "random_map",
    "cell_permutation",
    "smooth_limit_mellin",
    "smooth_family_entry",
]

LENGTH_TOL = 1e-9
ALIGNED_TOL = 1e-12
_TINY = 1e-15


@dataclass(frozen=True)
class Piece:
    """Affine bijection of ``[a, b)`` onto ``[c, d)``; ``slope < 0`` reverses orientation."""

    a: float
    b: float
    c: float
    d: float
    slope: float

    def __post_init__(self):
        for k in ("a", "b", "c", "d", "slope"):
            object.__setattr__(self, k, float(getattr(self, k)))

    def __call__(self, x):
        if self.slope > 0:
            return self.c + self.slope * (x - self.a)
        return self.d + self.slope * (x - self.a)

    def preimage(self, lo: float, hi: float) -> tuple[float, float]:
        """Source interval mapped onto ``[lo, hi)`` (a subinterval of ``[c, d)``)."""
        s = abs(self.slope)
        if self.slope > 0:
            return self.a + (lo - self.c) / s, self.a + (hi - self.c) / s
        return self.a + (self.d - hi) / s, self.a + (self.d - lo) / s

    def image(self, lo: float, hi: float) -> tuple[float, float]:
        """Image of the source subinterval ``[lo, hi)``."""
        if self.slope > 0:
            return self(lo), self(hi)
        return self(hi), self(lo)

    def as_list(self) -> list[float]:
        return [self.a, self.b, self.c, self.d, self.slope]


def _check_cover(intervals, what: str):
    iv = sorted(intervals)
    if abs(iv[0][0]) > LENGTH_TOL or abs(iv[-1][1] - 1.0) > LENGTH_TOL:
        raise ValidationError(f"{what} intervals do not cover [0, 1)")
    for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
        if abs(b0 - a1) > LENGTH_TOL:
            raise ValidationError(f"{what} intervals overlap or leave a gap near {b0:.6g}")


class PiecewiseLinearMap:
    """An a.e. bijection of ``[0, 1)`` that is affine on finitely many intervals.

    Parameters
    ----------
    pieces : iterable of Piece or of ``(a, b, c, d, slope)``
        Source intervals must partition ``[0, 1)``, and so must the target
        intervals; ``|slope| = (d - c) / (b - a)``.
    """

    def __init__(self, pieces: Iterable):
        ps = []
        for p in pieces:
            p = p if isinstance(p, Piece) else Piece(*map(float, p))
            if not (p.b > p.a and p.d > p.c):
                raise ValidationError(f"degenerate piece {p.as_list()}")
            if p.slope == 0 or not math.isfinite(p.slope):
                raise ValidationError("slopes must be nonzero and finite")
            if abs(abs(p.slope) * (p.b - p.a) - (p.d - p.c)) > LENGTH_TOL:
                raise ValidationError(f"slope of piece {p.as_list()} does not match its intervals")
            ps.append(p)
        if not ps:
            raise ValidationError("a map needs at least one piece")
        _check_cover([(p.a, p.b) for p in ps], "source")
        _check_cover([(p.c, p.d) for p in ps], "target")
        self.pieces = tuple(sorted(ps, key=lambda p: p.a))

    @classmethod
    def identity(cls) -> "PiecewiseLinearMap":
        return cls([(0.0, 1.0, 0.0, 1.0, 1.0)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        starts = np.array([p.a for p in self.pieces])
        k = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(x)
        for idx, p in enumerate(self.pieces):
            sel = k == idx
            out[sel] = p(x[sel])
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        starts = np.array([p.a for p in self.pieces])
        k = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(self.pieces) - 1)
        return np.array([self.pieces[i].slope for i in np.atleast_1d(k)]).reshape(x.shape)

    def compose(self, inner: "PiecewiseLinearMap") -> "PiecewiseLinearMap":
        """``self o inner`` (apply ``inner`` first)."""
        out = []
        for h in inner.pieces:
            for g in self.pieces:
                lo, hi = max(h.c, g.a), min(h.d, g.b)
                if hi - lo <= _TINY:
                    continue
                x0, x1 = h.preimage(lo, hi)
                y0, y1 = g.image(lo, hi)
                out.append(Piece(x0, x1, y0, y1, h.slope * g.slope))
        return PiecewiseLinearMap(out)

    def inverse(self) -> "PiecewiseLinearMap":
        return PiecewiseLinearMap([Piece(p.c, p.d, p.a, p.b, 1.0 / p.slope) for p in self.pieces])

    def to_record(self) -> dict:
        return {"pieces": [p.as_list() for p in self.pieces]}

    def __len__(self):
        return len(self.pieces)

    def __repr__(self):
        return f"PiecewiseLinearMap({len(self.pieces)} pieces)"


@dataclass(frozen=True)
class DyadicPartition:
    """Partition of ``[0, 1)`` into ``2**level`` equal cells."""

    level: int

    def __post_init__(self):
        if self.level < 0:
            raise DomainError("dyadic level must be nonnegative")

    @property
    def cells(self) -> int:
        return 2 ** self.level

    @property
    def width(self) -> float:
        return 2.0 ** -self.level

    def cell_range(self, lo: float, hi: float) -> range:
        """Indices of the cells meeting ``[lo, hi)``."""
        n = self.cells
        i0 = min(max(int(math.floor(lo * n)), 0), n - 1)
        i1 = min(max(int(math.ceil(hi * n)), i0 + 1), n)
        return range(i0, i1)


def cell_space(level: int) -> DiscreteSpace:
    return uniform_space(2 ** level)


def _as_dyadic(x) -> DyadicPartition:
    return x if isinstance(x, DyadicPartition) else DyadicPartition(int(x))


def discretize(g: PiecewiseLinearMap, x, y=None) -> Polymorphism:
    """Polymorphism between the cell spaces of ``x`` (source) and ``y`` (target).

    Entry ``(i, j)`` has one atom per piece, at ``|slope|``, weighted by the
    length of the part of cell ``i`` that the piece sends into cell ``j``.
    """
    x = _as_dyadic(x)
    y = x if y is None else _as_dyadic(y)
    ts = [[[] for _ in range(y.cells)] for _ in range(x.cells)]
    ws = [[[] for _ in range(y.cells)] for _ in range(x.cells)]
    hx, hy = x.width, y.width
    for p in g.pieces:
        s = abs(p.slope)
        for i in x.cell_range(p.a, p.b):
            lo, hi = max(p.a, i * hx), min(p.b, (i + 1) * hx)
            if hi - lo <= _TINY:
                continue
            y0, y1 = p.image(lo, hi)
            js = list(y.cell_range(y0, y1))
            # cut points are preimages of target cell boundaries, so a coarser
            # level reuses exactly the same floats
            inner = [p.preimage(j * hy, j * hy)[0] for j in js[1:]]
            if p.slope < 0:
                inner, js = inner[::-1], js[::-1]
            cuts = [lo] + [min(max(c, lo), hi) for c in inner] + [hi]
            for j, a0, a1 in zip(js, cuts, cuts[1:]):
                if a1 - a0 <= _TINY:
                    continue
                ts[i][j].append(s)
                ws[i][j].append(a1 - a0)
    rows = [[AtomicMeasure(ts[i][j], ws[i][j]) for j in range(y.cells)] for i in range(x.cells)]
    return Polymorphism(cell_space(x.level), cell_space(y.level), rows)


def gms_dense_construct(P: Polymorphism, level: int) -> PiecewiseLinearMap:
    """Piecewise-linear map whose level-``level`` discretization is ``P``.

    Cell ``i`` of the source is cut into intervals of length ``w`` and cell
    ``j`` of the target into intervals of length ``w t``, one per atom
    ``(t, w)`` of ``p_ij``; matching intervals are joined with slope ``t``.
    Source cuts are ordered by ``(j, atom)``, target cuts by ``(i, atom)``.
    """
    n = 2 ** level
    if P.shape != (n, n):
        raise ValidationError(f"need a {n}x{n} polymorphism for level {level}, got {P.shape}")
    h = 2.0 ** -level
    if not (np.allclose(P.source.masses, h, rtol=0, atol=1e-15)
            and np.allclose(P.target.masses, h, rtol=0, atol=1e-15)):
        raise ValidationError("spaces must be uniform cell spaces")
    report = validate(P)
    if not report.passed:
        raise ValidationError("cannot construct a map: " + "; ".join(report.messages()))

    src = {}
    for i in range(n):
        cur = i * h
        cuts = [(j, k) for j in range(n) for k in range(len(P[i, j]))]
        for idx, (j, k) in enumerate(cuts):
            end = (i + 1) * h if idx == len(cuts) - 1 else cur + P[i, j].w[k]
            src[i, j, k] = (cur, end)
            cur = end
    pieces = []
    for j in range(n):
        cur = j * h
        cuts = [(i, k) for i in range(n) for k in range(len(P[i, j]))]
        for idx, (i, k) in enumerate(cuts):
            t, w = P[i, j].t[k], P[i, j].w[k]
            end = (j + 1) * h if idx == len(cuts) - 1 else cur + w * t
            a, b = src[i, j, k]
            pieces.append(Piece(a, b, cur, end, t))
            cur = end
    return PiecewiseLinearMap(pieces)


def oscillating_family(t1: float, t2: float, lam: float, n: int) -> PiecewiseLinearMap:
    """``n`` identical blocks, each mapping its cell onto itself.

    Within a block the first fraction ``lam`` of the cell has slope ``t1`` and
    the rest slope ``t2``; requires ``lam t1 + (1 - lam) t2 = 1``.
    """
    if not (t1 > 0 and t2 > 0):
        raise DomainError("slopes must be positive")
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    if abs(lam * t1 + (1 - lam) * t2 - 1.0) > 1e-12:
        raise DomainError("slopes are incompatible with lambda: lam*t1 + (1-lam)*t2 != 1")
    if n < 1:
        raise DomainError("n must be a positive integer")
    pieces = []
    for k in range(n):
        a, b = k / n, (k + 1) / n
        h = b - a
        mid_src = a + lam * h
        mid_tgt = a + lam * t1 * h
        pieces.append(Piece(a, mid_src, a, mid_tgt, t1))
        pieces.append(Piece(mid_src, b, mid_tgt, b, t2))
    return PiecewiseLinearMap(pieces)


def limit_polymorphism(t1: float, t2: float, lam: float, level: int) -> Polymorphism:
    """Diagonal polymorphism with conditional law ``lam delta_t1 + (1-lam) delta_t2`` in every cell."""
    n = 2 ** level
    h = 2.0 ** -level
    diag = AtomicMeasure([t1, t2], [lam * h, (1 - lam) * h])
    rows = [[diag if i == j else AtomicMeasure.zero() for j in range(n)] for i in range(n)]
    return Polymorphism(cell_space(level), cell_space(level), rows)


@dataclass
class StudyRow:
    n: int
    level: int
    distance: float
    defect: float


@dataclass
class ConvergenceStudy:
    t1: float
    t2: float
    lam: float
    rows: list

    def table(self) -> list[tuple[int, int, float]]:
        return [(r.n, r.level, r.distance) for r in self.rows]

    def slope(self, ns: Sequence[int] | None = None, key: str = "distance") -> float:
        """Decay exponent ``-d log(value) / d log(n)`` fitted over ``ns`` (default all rows).

        Rows where the value vanishes up to roundoff (cell-aligned ``n``)
        carry no slope information and are skipped.
        """
        keep = None if ns is None else set(ns)
        rows = [r for r in self.rows
                if (keep is None or r.n in keep) and getattr(r, key) > ALIGNED_TOL]
        return loglog_slope([r.n for r in rows], [getattr(r, key) for r in rows])


def loglog_slope(ns, values) -> float:
    """Least-squares decay exponent of ``values`` against ``ns``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])


def convergence_study(t1: float, t2: float, lam: float, level: int,
                      ns: Iterable[int]) -> ConvergenceStudy:
    """Distance between the discretized oscillating maps and their limit.

    For every ``n`` reports ``pol_distance`` to :func:`limit_polymorphism`
    and the off-diagonal (off-block) mass.
    """
    limit = limit_polymorphism(t1, t2, lam, level)
    rows = []
    for n in ns:
        P = discretize(oscillating_family(t1, t2, lam, int(n)), level)
        off = P.masses()
        defect = float(off.sum() - np.trace(off))
        rows.append(StudyRow(int(n), level, pol_distance(P, limit), defect))
    return ConvergenceStudy(t1, t2, lam, rows)


def random_map(rng: np.random.Generator, pieces: int = 4, flips: bool = True) -> PiecewiseLinearMap:
    """Random PL bijection: random source cuts, target cuts and piece order, random orientation."""
    src = np.sort(rng.uniform(0, 1, pieces - 1))
    tgt = np.sort(rng.uniform(0, 1, pieces - 1))
    a = np.concatenate([[0.0], src, [1.0]])
    c = np.concatenate([[0.0], tgt, [1.0]])
    order = rng.permutation(pieces)
    out = []
    for k in range(pieces):
        m = order[k]
        sign = -1.0 if flips and rng.random() < 0.5 else 1.0
        out.append(Piece(a[k], a[k + 1], c[m], c[m + 1], sign * (c[m + 1] - c[m]) / (a[k + 1] - a[k])))
    return PiecewiseLinearMap(out)


def cell_permutation(perm: Sequence[int], level: int, flips: Sequence[bool] | None = None) -> PiecewiseLinearMap:
    """Map sending cell ``i`` affinely onto cell ``perm[i]``, reversed where ``flips[i]``."""
    n = 2 ** level
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"not a permutation of {n} cells")
    flips = [False] * n if flips is None else list(flips)
    h = 2.0 ** -level
    return PiecewiseLinearMap([Piece(i * h, (i + 1) * h, perm[i] * h, (perm[i] + 1) * h,
                                     -1.0 if flips[i] else 1.0) for i in range(n)])


def smooth_limit_mellin(u, nodes: int = 4096):
    """``(1/2pi) int_0^{2pi} (1 + cos s)^u ds`` by the periodic trapezoid rule.

    The integrand has a root singularity at ``s = pi`` for small ``Re u``;
    the midpoint nodes avoid it and converge algebraically.
    """
    s = (np.arange(nodes) + 0.5) * (2 * np.pi / nodes)
    base = np.log1p(np.cos(s))
    uu = np.asarray(u, dtype=complex)
    return np.exp(np.multiply.outer(uu, base)).mean(axis=-1)


def smooth_family_entry(n: int, level: int, i: int, j: int, samples: int = 200000) -> AtomicMeasure:
    """Quadrature discretization of ``x -> x + sin(2 pi n x) / (2 pi n)`` on ``[0, 1)``.

    Midpoint samples in cell ``i`` whose image lands in cell ``j`` become atoms
    at the local derivative ``1 + cos(2 pi n x)``.
    """
    h = 2.0 ** -level
    x = i * h + (np.arange(samples) + 0.5) * (h / samples)
    gx = x + np.sin(2 * np.pi * n * x) / (2 * np.pi * n)
    dg = 1.0 + np.cos(2 * np.pi * n * x)
    sel = (np.floor(gx / h) == j) & (dg > 0)
    return AtomicMeasure(dg[sel], np.full(sel.sum(), h / samples), merge_tol=1e-6)
