"""Finite atomic measures on the multiplicative group of positive reals.

The set of such measures is a semiring under addition and multiplicative
convolution, carries the involution ``(t, w) -> (1/t, w t)`` and is mapped
homomorphically to bounded holomorphic functions on the strip
``0 <= Re u <= 1`` by the Mellin transform ``Phi(u) = sum_k w_k t_k**u``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, ValidationError

__all__ = [
    "MERGE_TOL",
    "MELLIN_GRID",
    "AtomicMeasure",
    "StripPoint",
    "canonicalize",
    "convolve",
    "star",
    "mellin_eval",
    "distance",
    "bl_distance",
    "prune",
    "gram_matrix",
    "psd_gram_check",
    "mellin_gap",
    "mellin_close",
    "strip_grid",
    "random_measure",
]

#: Atoms whose logarithms differ by at most this much are merged.
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class StripPoint:
    """A point ``u = v + i w`` of the closed strip ``0 <= v <= 1``."""

    v: float
    w: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.v <= 1.0):
            raise DomainError(f"real part v={self.v} outside the strip [0, 1]")

    @property
    def u(self) -> complex:
        return complex(self.v, self.w)

    def __complex__(self):
        return self.u

    def reflect(self) -> "StripPoint":
        """The point ``1 - u``."""
        return StripPoint(1.0 - self.v, -self.w)


UType = Union[StripPoint, complex, float, Sequence, np.ndarray]


def as_u(u: UType, vmax: float = 1.0) -> np.ndarray:
    """Convert strip points to a complex array and check ``0 <= Re u <= vmax``."""
    if isinstance(u, StripPoint):
        arr = np.asarray(u.u, dtype=complex)
    elif isinstance(u, (list, tuple)) and u and isinstance(u[0], StripPoint):
        arr = np.array([p.u for p in u], dtype=complex)
    else:
        arr = np.asarray(u, dtype=complex)
    v = arr.real
    if np.any(v < 0.0) or np.any(v > vmax) or not np.all(np.isfinite(arr)):
        raise DomainError(f"Re u must lie in [0, {vmax}]")
    return arr


def _merge_sorted(t: np.ndarray, w: np.ndarray, merge_tol: float):
    """Merge runs of sorted atoms whose log-gaps are within ``merge_tol``."""
    if t.size == 0:
        return t, w
    s = np.log(t)
    new_group = np.empty(t.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(s) > merge_tol
    if new_group.all():
        return t, w
    starts = np.flatnonzero(new_group)
    wm = np.add.reduceat(w, starts)
    moment = np.add.reduceat(w * t, starts)
    tmin = np.minimum.reduceat(t, starts)
    tmax = np.maximum.reduceat(t, starts)
    # keep the common location of exact duplicates, else preserve the moment
    tm = np.where(tmin == tmax, tmin, moment / wm)
    return tm, wm


def _canonical_arrays(t, w, merge_tol: float = MERGE_TOL):
    t = np.asarray(t, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if t.shape != w.shape:
        raise ValidationError("atom locations and weights differ in length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
        raise ValidationError("atoms must be finite")
    if np.any(t <= 0):
        raise ValidationError("atom locations must be positive")
    if np.any(w < 0):
        raise ValidationError("atom weights must be nonnegative")
    keep = w > 0
    t, w = t[keep], w[keep]
    order = np.argsort(t, kind="stable")
    t, w = _merge_sorted(t[order], w[order], merge_tol)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


class AtomicMeasure:
    """A finite positive measure ``sum_k w_k delta_{t_k}`` on ``(0, inf)``.

    Instances are immutable and always stored in canonical form: locations
    strictly increasing, zero weights dropped, near-coincident atoms merged.

    Parameters
    ----------
    t : array_like
        Atom locations, all positive.
    w : array_like
        Atom weights, all nonnegative.
    merge_tol : float, optional
        Log-distance below which neighbouring atoms are merged.
    """

    __slots__ = ("_t", "_w")

    def __init__(self, t=(), w=(), merge_tol: float = MERGE_TOL):
        self._t, self._w = _canonical_arrays(t, w, merge_tol)

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]], merge_tol: float = MERGE_TOL):
        atoms = [tuple(a) for a in atoms]
        if any(len(a) != 2 for a in atoms):
            raise ValidationError("atoms must be (t, w) pairs")
        t = [a[0] for a in atoms]
        w = [a[1] for a in atoms]
        return cls(t, w, merge_tol)

    @classmethod
    def point(cls, t: float = 1.0, w: float = 1.0):
        return cls([t], [w])

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def _raw(cls, t: np.ndarray, w: np.ndarray):
        # trusted constructor for arrays already in canonical form
        obj = cls.__new__(cls)
        t.setflags(write=False)
        w.setflags(write=False)
        obj._t, obj._w = t, w
        return obj

    @property
    def t(self) -> np.ndarray:
        return self._t

    @property
    def w(self) -> np.ndarray:
        return self._w

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self._t, self._w)]

    def mass(self) -> float:
        return float(self._w.sum())

    def moment(self) -> float:
        return float(self._w @ self._t)

    def __len__(self):
        return self._t.size

    def is_zero(self) -> bool:
        return self._t.size == 0

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return AtomicMeasure(np.concatenate([self._t, other._t]),
                             np.concatenate([self._w, other._w]))

    def __mul__(self, c: float) -> "AtomicMeasure":
        c = float(c)
        if c < 0:
            raise ValidationError("measures can only be scaled by c >= 0")
        if c == 0:
            return AtomicMeasure.zero()
        return AtomicMeasure._raw(self._t.copy(), self._w * c)

    __rmul__ = __mul__

    def tilt(self) -> "AtomicMeasure":
        """The measure ``t * mu`` (weights multiplied by their locations)."""
        return AtomicMeasure._raw(self._t.copy(), self._w * self._t)

    def __call__(self, u):
        return mellin_eval(self, u)

    def __repr__(self):
        body = ", ".join(f"({a:.6g}, {b:.6g})" for a, b in self.atoms)
        return f"AtomicMeasure({{{body}}})"


def canonicalize(m, merge_tol: float = MERGE_TOL) -> AtomicMeasure:
    """Return the canonical form of a measure or of an iterable of ``(t, w)`` atoms.

    Mass is preserved exactly and moment up to rounding: merged atoms sum
    their weights and sit at the weight-averaged location.
    """
    if isinstance(m, AtomicMeasure):
        return AtomicMeasure(m.t, m.w, merge_tol)
    return AtomicMeasure.from_atoms(m, merge_tol)


def convolve(m: AtomicMeasure, n: AtomicMeasure) -> AtomicMeasure:
    """Multiplicative convolution: atoms ``(t_i s_j, w_i x_j)``."""
    if m.is_zero() or n.is_zero():
        return AtomicMeasure.zero()
    t = np.multiply.outer(m.t, n.t).ravel()
    w = np.multiply.outer(m.w, n.w).ravel()
    return AtomicMeasure(t, w)


def star(m: AtomicMeasure) -> AtomicMeasure:
    """Involution ``mu*(t) = t^{-1} mu(t^{-1})``: atom ``(t, w) -> (1/t, w t)``."""
    t = 1.0 / m.t[::-1]
    w = (m.w * m.t)[::-1]
    return AtomicMeasure(t, w)


def mellin_eval(m: AtomicMeasure, u: UType):
    """Mellin transform ``Phi_m(u) = sum_k w_k t_k**u`` for ``0 <= Re u <= 1``.

    Accepts a single point (returns a complex scalar) or an array of points
    (returns an array of the same shape).
    """
    uu = as_u(u)
    if m.is_zero():
        out = np.zeros(uu.shape, dtype=complex)
    else:
        out = np.exp(np.multiply.outer(uu, np.log(m.t))) @ m.w
    if out.ndim == 0:
        return complex(out)
    return out


def prune(m: AtomicMeasure, eps: float) -> tuple[AtomicMeasure, float]:
    """Drop atoms with weight below ``eps * mass``.

    Returns the pruned measure and the dropped mass; the remainder is never
    renormalized.
    """
    if eps < 0:
        raise DomainError("prune threshold must be nonnegative")
    keep = m.w >= eps * m.mass()
    dropped = float(m.w[~keep].sum())
    return AtomicMeasure._raw(m.t[keep].copy(), m.w[keep].copy()), dropped


def _signed_union(sa, wa, sb, wb, merge_tol=MERGE_TOL):
    s = np.concatenate([sa, sb])
    nu = np.concatenate([wa, -wb])
    if s.size == 0:
        return s, nu
    order = np.argsort(s, kind="stable")
    s, nu = s[order], nu[order]
    new_group = np.empty(s.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(s) > merge_tol
    starts = np.flatnonzero(new_group)
    return s[starts], np.add.reduceat(nu, starts)


def bl_distance(s, nu) -> float:
    """Bounded-Lipschitz norm of a signed atomic measure on the real line.

    ``sup { sum_k f(s_k) nu_k : |f| <= 1, Lip(f) <= 1 }``. On a line it is
    enough to constrain ``f`` at the (sorted) atoms: consecutive values may
    differ by at most the gap, and the piecewise-linear interpolant extends
    them. The resulting small LP is solved to a vertex.
    """
    s = np.asarray(s, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if not np.any(nu):
        return 0.0
    if s.size == 1:
        return float(abs(nu[0]))
    k = s.size
    gaps = np.diff(s)
    d = np.zeros((k - 1, k))
    idx = np.arange(k - 1)
    d[idx, idx] = -1.0
    d[idx, idx + 1] = 1.0
    res = linprog(-nu, A_ub=np.vstack([d, -d]), b_ub=np.concatenate([gaps, gaps]),
                  bounds=(-1.0, 1.0), method="highs")
    if res.status != 0:  # pragma: no cover - the LP is always feasible and bounded
        raise RuntimeError(f"BL linear program failed: {res.message}")
    return max(float(-res.fun), 0.0)


def distance(m: AtomicMeasure, n: AtomicMeasure) -> float:
    """Metric for convergence of measures and of their ``t``-tilts.

    Sum of the bounded-Lipschitz distances, in the coordinate ``s = ln t``,
    between ``m`` and ``n`` and between ``t m`` and ``t n``.
    """
    sm, sn = np.log(m.t), np.log(n.t)
    s, nu = _signed_union(sm, m.w, sn, n.w)
    s1, nu1 = _signed_union(sm, m.w * m.t, sn, n.w * n.t)
    return bl_distance(s, nu) + bl_distance(s1, nu1)


def gram_matrix(phi: Callable, us: UType) -> np.ndarray:
    """Hermitian matrix ``G[l, m] = phi(u_l + conj(u_m))`` for ``Re u <= 1/2``."""
    uu = as_u(us, vmax=0.5).ravel()
    arg = uu[:, None] + np.conj(uu)[None, :]
    g = np.asarray(phi(arg), dtype=complex).reshape(arg.shape)
    return 0.5 * (g + g.conj().T)


def psd_gram_check(m: Union[AtomicMeasure, Callable], us: UType, tol: float = 1e-10) -> bool:
    """Whether the Gram matrix of ``m`` at the sample points is positive semidefinite.

    ``m`` is a measure (its Mellin transform is used) or any callable on
    complex arrays, e.g. a table of candidate values. True iff the smallest
    eigenvalue is at least ``-tol``.
    """
    phi = m if not isinstance(m, AtomicMeasure) else (lambda z: mellin_eval(m, z))
    g = gram_matrix(phi, us)
    return bool(np.linalg.eigvalsh(g)[0] >= -tol)


def strip_grid(nv: int = 5, nw: int = 9, wmax: float = 4.0) -> np.ndarray:
    """Rectangular sample of the closed strip, ``nv`` real parts by ``nw`` imaginary parts."""
    v = np.linspace(0.0, 1.0, nv)
    w = np.linspace(-wmax, wmax, nw)
    return (v[:, None] + 1j * w[None, :]).ravel()


#: Fixed grid on which measures are compared.
MELLIN_GRID = strip_grid()
MELLIN_GRID.setflags(write=False)


def mellin_gap(m: AtomicMeasure, n: AtomicMeasure, grid: np.ndarray = MELLIN_GRID) -> float:
    """Largest Mellin discrepancy on ``grid`` relative to ``max(1, |Phi|)``.

    The grid contains ``u = 0`` and ``u = 1`` so mass and moment are included.
    """
    a = mellin_eval(m, grid)
    b = mellin_eval(n, grid)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    diff = max(float(np.max(np.abs(a - b), initial=0.0)),
               abs(m.mass() - n.mass()), abs(m.moment() - n.moment()))
    return diff / scale


def mellin_close(m: AtomicMeasure, n: AtomicMeasure, tol: float = 1e-12,
                 grid: np.ndarray = MELLIN_GRID) -> bool:
    """Measure equality up to ``tol`` as seen through the Mellin grid."""
    return mellin_gap(m, n, grid) <= tol


def random_measure(rng: np.random.Generator, max_atoms: int = 8, log_range: float = 3.0,
                   mass: float | None = None) -> AtomicMeasure:
    """A random measure with 1..max_atoms atoms, ``ln t`` uniform in ``[-log_range, log_range]``."""
    k = int(rng.integers(1, max_atoms + 1))
    t = np.exp(rng.uniform(-log_range, log_range, size=k))
    w = rng.uniform(0.05, 1.0, size=k)
    if mass is not None:
        w *= mass / w.sum()
    return AtomicMeasure(t, w)
