"""Recover measures and polymorphisms from Mellin samples on the lines Re u = 0 and Re u = 1.

Unknowns are nonnegative weights on a fixed grid of candidate locations
``ln t``; the fit is a nonnegative least-squares problem over the real and
imaginary parts of all samples. Residual thresholds below are engineering
choices, not guarantees: there is no quantitative stability theory behind
them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .errors import DomainError, ValidationError
from .measure import AtomicMeasure, mellin_eval
from .nnls import nnls
from .poly import Polymorphism, ValidationReport, bilinear_form, validate
from .space import DiscreteSpace

__all__ = [
    "MellinSamples",
    "MeasureRecovery",
    "PolymorphismRecovery",
    "log_grid",
    "DEFAULT_GRID",
    "DEFAULT_WS",
    "RESOLVING_WS",
    "sample_measure",
    "sample_polymorphism",
    "design_matrix",
    "recover_measure",
    "recover_polymorphism",
]

SYMMETRY_TOL = 1e-12
RESIDUAL_THRESHOLD = 1e-8
MARGINAL_THRESHOLD = 1e-6


def log_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Candidate ``ln t`` values ``start, start + step, ...`` up to ``stop`` inclusive."""
    if step <= 0:
        raise DomainError("grid step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise DomainError("empty candidate grid")
    # rounding keeps nodes such as 0 and 1 exactly representable
    return np.round(start + step * np.arange(n), 12)


DEFAULT_GRID = log_grid(-5.0, 5.0, 0.01)
#: Forward-model frequencies. Larger |w| separates closely spaced atoms but
#: amplifies the phase error of atoms that sit between grid nodes.
DEFAULT_WS = log_grid(-8.0, 8.0, 0.25)
#: Frequencies that resolve on-grid atoms a few grid steps apart.
RESOLVING_WS = log_grid(-25.0, 25.0, 0.5)


@dataclass(frozen=True, eq=False)
class MellinSamples:
    """Values ``Phi(iw)`` on ``w0`` and ``Phi(1 + iw)`` on ``w1``."""

    w0: np.ndarray
    phi0: np.ndarray
    w1: np.ndarray
    phi1: np.ndarray

    def __post_init__(self):
        for wn, pn in (("w0", "phi0"), ("w1", "phi1")):
            w = np.asarray(getattr(self, wn), dtype=float).ravel()
            p = np.asarray(getattr(self, pn), dtype=complex).ravel()
            if w.shape != p.shape:
                raise ValidationError(f"{wn} and {pn} differ in length")
            ws = np.sort(w)
            if not np.allclose(ws, -ws[::-1], rtol=0, atol=SYMMETRY_TOL):
                raise ValidationError(f"{wn} grid is not symmetric about 0")
            zero = np.abs(w) <= SYMMETRY_TOL
            scale = max(1.0, float(np.abs(p).max(initial=0.0)))
            if np.any(np.abs(p[zero].imag) > SYMMETRY_TOL * scale) or np.any(p[zero].real < -SYMMETRY_TOL * scale):
                raise ValidationError(f"{pn} at w = 0 must be real and nonnegative")
            object.__setattr__(self, wn, w)
            object.__setattr__(self, pn, p)

    def corrupted(self, line: int, delta: complex) -> "MellinSamples":
        """Copy with ``delta`` added to every sample of one line."""
        if line == 0:
            return MellinSamples(self.w0, self.phi0 + delta, self.w1, self.phi1)
        return MellinSamples(self.w0, self.phi0, self.w1, self.phi1 + delta)

    def __len__(self):
        return self.w0.size + self.w1.size


@dataclass
class MeasureRecovery:
    measure: AtomicMeasure
    objective: float
    residual: float
    threshold: float = RESIDUAL_THRESHOLD

    @property
    def ok(self) -> bool:
        return self.residual <= self.threshold

    def summary(self) -> dict:
        return {"atoms": len(self.measure), "mass": self.measure.mass(),
                "moment": self.measure.moment(), "objective": self.objective,
                "residual": self.residual, "threshold": self.threshold,
                "within_threshold": self.ok, "thresholds_are_engineering_choices": True}


@dataclass
class PolymorphismRecovery:
    polymorphism: Polymorphism
    entries: dict = field(default_factory=dict)
    validation: ValidationReport = None

    @property
    def valid(self) -> bool:
        return self.validation.passed

    def summary(self) -> dict:
        return {"valid": self.valid,
                "marginals": self.validation.summary(),
                "max_entry_residual": max((r.residual for r in self.entries.values()), default=0.0),
                "thresholds_are_engineering_choices": True}


def sample_measure(m: AtomicMeasure, ws=None, ws1=None) -> MellinSamples:
    """Forward model: Mellin values of ``m`` on both boundary lines."""
    ws = DEFAULT_WS if ws is None else np.asarray(ws, dtype=float)
    ws1 = ws if ws1 is None else np.asarray(ws1, dtype=float)
    return MellinSamples(ws, mellin_eval(m, 1j * ws), ws1, mellin_eval(m, 1.0 + 1j * ws1))


def sample_polymorphism(P: Polymorphism, ws=None) -> dict:
    """Matrix elements ``S_u(P; 1_i, 1_j)`` of indicator vectors on both lines, per entry."""
    ws = DEFAULT_WS if ws is None else np.asarray(ws, dtype=float)
    na, nb = P.shape
    out = {}
    for i in range(na):
        f = np.zeros(na)
        f[i] = 1.0
        for j in range(nb):
            g = np.zeros(nb)
            g[j] = 1.0
            out[i, j] = MellinSamples(ws, bilinear_form(P, f, g, 1j * ws),
                                      ws, bilinear_form(P, f, g, 1.0 + 1j * ws))
    return out


def design_matrix(samples: MellinSamples, grid) -> tuple[np.ndarray, np.ndarray]:
    """Real least-squares system ``A x = b`` for weights on the candidate ``ln t`` grid."""
    s = np.asarray(grid, dtype=float)
    e0 = np.exp(1j * np.multiply.outer(samples.w0, s))
    e1 = np.exp(np.multiply.outer(1.0 + 1j * samples.w1, s))
    A = np.vstack([e0.real, e0.imag, e1.real, e1.imag])
    b = np.concatenate([samples.phi0.real, samples.phi0.imag, samples.phi1.real, samples.phi1.imag])
    return A, b


def recover_measure(samples: MellinSamples, grid=None, reg: float = 0.0,
                    threshold: float = RESIDUAL_THRESHOLD) -> MeasureRecovery:
    """Nonnegative weights on ``grid`` that best reproduce ``samples``.

    Minimizes ``sum |sum_k w_k t_k^u - Phi(u)|^2 + reg * sum_k w_k`` over
    ``w >= 0``. A residual above ``threshold`` is reported, not raised.
    Weights below ``64 eps`` times the largest weight are discarded as
    solver roundoff.

    Parameters
    ----------
    samples : MellinSamples
    grid : array_like, optional
        Candidate values of ``ln t`` (default ``[-5, 5]`` in steps of 0.01).
    reg : float
        Weight of the mass penalty.
    """
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise DomainError("empty candidate grid")
    if reg < 0:
        raise DomainError("regularization must be nonnegative")
    A, b = design_matrix(samples, grid)
    # column scaling leaves the feasible cone and the fit unchanged
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    y, _ = nnls(A / norms, b, c=0.5 * reg / norms)
    x = y / norms
    resid = A @ x - b
    obj = float(resid @ resid + reg * x.sum())
    # weights at roundoff level relative to the largest one are solver noise
    keep = x > 64 * np.finfo(float).eps * x.max(initial=0.0)
    m = AtomicMeasure(np.exp(grid[keep]), x[keep])
    rms = float(np.sqrt(resid @ resid / max(1, b.size)))
    return MeasureRecovery(m, obj, rms, threshold)


SampleSource = Union[Mapping, Callable]


def recover_polymorphism(sample_fn: SampleSource, source: DiscreteSpace, target: DiscreteSpace,
                         grid=None, reg: float = 0.0,
                         marginal_tol: float = MARGINAL_THRESHOLD) -> PolymorphismRecovery:
    """Recover every entry from its indicator matrix elements and check the marginals.

    ``sample_fn`` maps ``(i, j)`` to :class:`MellinSamples` (a dict or a
    callable). The result is flagged invalid when a marginal residual
    exceeds ``marginal_tol``.
    """
    get = sample_fn.__getitem__ if isinstance(sample_fn, Mapping) else (lambda ij: sample_fn(*ij))
    na, nb = len(source), len(target)
    entries = {}
    rows = []
    for i in range(na):
        row = []
        for j in range(nb):
            rec = recover_measure(get((i, j)), grid, reg)
            entries[i, j] = rec
            row.append(rec.measure)
        rows.append(row)
    P = Polymorphism(source, target, rows)
    return PolymorphismRecovery(P, entries, validate(P, tol=marginal_tol))
