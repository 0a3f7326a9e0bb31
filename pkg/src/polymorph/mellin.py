"""Mellin-Markov transform of polymorphisms.

For ``u = v + iw`` in the strip, ``T_u(P)`` acts on functions on ``B`` by
``(T_u g)_i = sum_j Phi_{p_ij}(u) g_j / alpha_i``; it is a contraction of
``L^{1/v}`` and ``u -> T_u`` turns composition into (reversed) matrix product.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CompositionError, DomainError, ValidationError
from .measure import StripPoint, as_u, gram_matrix
from .poly import Polymorphism, bilinear_form, compose, mellin_matrix, star
from .space import DiscreteSpace, lp_norm

__all__ = [
    "OperatorMatrix",
    "transform_matrix",
    "apply",
    "apply_dual",
    "check_pairing",
    "check_homomorphism",
    "check_duality",
    "contraction_ratio",
    "three_lines_ratio",
    "HolomorphyReport",
    "holomorphy_probe",
    "write_matrix_element_csv",
]


def _to_complex(u) -> complex:
    if isinstance(u, StripPoint):
        return u.u
    return complex(as_u(u))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix of ``T_u(P)``: rows indexed by the source of ``P``, columns by its target."""

    u: complex
    M: np.ndarray
    source: DiscreteSpace
    target: DiscreteSpace

    @property
    def v(self) -> float:
        return self.u.real

    @property
    def p(self) -> float:
        """Exponent of the ``L^p`` space on which ``T_u`` contracts."""
        return np.inf if self.u.real == 0 else 1.0 / self.u.real

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if not self.target.same_as(other.source):
            raise CompositionError("operator spaces do not match")
        return OperatorMatrix(self.u, self.M @ other.M, self.source, other.target)

    def to_record(self) -> dict:
        return {"u": [self.u.real, self.u.imag],
                "M": [[[z.real, z.imag] for z in row] for row in self.M.tolist()]}


def transform_matrix(P: Polymorphism, u) -> OperatorMatrix:
    """``T_u(P)`` with entries ``Phi_{p_ij}(u) / alpha_i``."""
    uc = _to_complex(u)
    phi = mellin_matrix(P, uc)
    a = P.source.masses[:, None]
    # divide the parts separately: complex division by a promoted real is not exact
    M = np.empty_like(phi)
    M.real = phi.real / a
    M.imag = phi.imag / a
    return OperatorMatrix(uc, M, P.source, P.target)


def apply(T: OperatorMatrix, g) -> np.ndarray:
    """``T g`` for a vector ``g`` on the target space."""
    g = np.asarray(g)
    if g.shape != (len(T.target),):
        raise ValidationError(f"vector of length {g.shape} for an operator on {len(T.target)} atoms")
    return T.M @ g


def apply_dual(T: OperatorMatrix, f) -> np.ndarray:
    """Dual operator w.r.t. the mass pairings: ``<T' f, g>_beta = <f, T g>_alpha``."""
    f = np.asarray(f)
    if f.shape != (len(T.source),):
        raise ValidationError(f"vector of length {f.shape} for an operator from {len(T.source)} atoms")
    return (T.source.masses * f) @ T.M / T.target.masses


def check_pairing(P: Polymorphism, u, f, g) -> float:
    """``|sum_i alpha_i f_i (T_u g)_i - S_u(P; f, g)|``."""
    T = transform_matrix(P, u)
    lhs = np.sum(P.source.masses * np.asarray(f) * apply(T, g))
    return float(abs(lhs - bilinear_form(P, f, g, T.u)))


def check_homomorphism(P: Polymorphism, Q: Polymorphism, u) -> float:
    """Max-norm of ``T_u(P) T_u(Q) - T_u(Q o P)``."""
    if not P.target.same_as(Q.source):
        raise CompositionError("P and Q are not composable")
    lhs = transform_matrix(P, u) @ transform_matrix(Q, u)
    rhs = transform_matrix(compose(P, Q), u)
    return float(np.max(np.abs(lhs.M - rhs.M)))


def check_duality(P: Polymorphism, u, f, g) -> float:
    """``|S_u(P*; f, g) - S_{1-u}(P; g, f)|`` with ``f`` on the target and ``g`` on the source of ``P``."""
    uc = _to_complex(u)
    return float(abs(bilinear_form(star(P), f, g, uc) - bilinear_form(P, g, f, 1.0 - uc)))


def contraction_ratio(P: Polymorphism, u, g) -> float:
    """``||T_u g||_{1/v} / ||g||_{1/v}``; at most 1 for every polymorphism."""
    T = transform_matrix(P, u)
    denom = lp_norm(P.target, g, T.p)
    if denom == 0:
        return 0.0
    return lp_norm(P.source, apply(T, g), T.p) / denom


def three_lines_ratio(P: Polymorphism, u, f, g) -> float:
    """``|S_u(f, g)| / (S_0(|f|,|g|)^{1-v} S_1(|f|,|g|)^v)``; at most 1."""
    uc = _to_complex(u)
    v = uc.real
    af, ag = np.abs(f), np.abs(g)
    s0 = bilinear_form(P, af, ag, 0.0).real
    s1 = bilinear_form(P, af, ag, 1.0).real
    bound = s0 ** (1 - v) * s1 ** v
    val = abs(bilinear_form(P, f, g, uc))
    if bound == 0:
        return 0.0 if val == 0 else np.inf
    return val / bound


@dataclass
class HolomorphyReport:
    points: np.ndarray
    step: float
    cr_residuals: np.ndarray
    cr_residuals_half: np.ndarray
    gram_min_eigenvalue: float
    psd: bool

    @property
    def ratios(self) -> np.ndarray:
        """Residual reduction from step ``h`` to ``h/2`` (about 4 for a second-order scheme)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.cr_residuals / self.cr_residuals_half


def _cr_residual(fn, u: np.ndarray, h: float) -> np.ndarray:
    dv = (fn(u + h) - fn(u - h)) / (2 * h)
    dw = (fn(u + 1j * h) - fn(u - 1j * h)) / (2 * h)
    # analytic functions satisfy d/dv + i d/dw = 0
    return np.abs(dv + 1j * dw)


def holomorphy_probe(P: Polymorphism, f, g, points, step: float = 1e-2,
                     gram_points=None, tol: float = 1e-10) -> HolomorphyReport:
    """Finite-difference Cauchy-Riemann residuals and a positive-definiteness check.

    Parameters
    ----------
    P : Polymorphism
    f, g : array_like
        Nonnegative test vectors on the source and target of ``P``.
    points : array_like of complex
        Interior strip points; each needs ``step <= v <= 1 - step``.
    step : float
        Central-difference step; residuals are also computed at ``step / 2``.
    gram_points : array_like of complex, optional
        Points with ``0 <= v <= 1/2`` for the Gram check (default: a small
        fixed sample).
    """
    pts = np.asarray(points, dtype=complex).ravel()
    if np.any(pts.real - step < 0) or np.any(pts.real + step > 1):
        raise DomainError("probe points must be interior to the strip by at least one step")
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(f < 0) or np.any(g < 0):
        raise DomainError("holomorphy probe needs nonnegative test vectors")

    def fn(u):
        return bilinear_form(P, f, g, u)

    r1 = _cr_residual(fn, pts, step)
    r2 = _cr_residual(fn, pts, step / 2)
    if gram_points is None:
        gram_points = np.array([0.0, 0.5, 0.25 + 1j, 0.1 - 2j, 0.4 + 0.5j, 0.2 + 3j])
    G = gram_matrix(fn, gram_points)
    lam = float(np.linalg.eigvalsh(G)[0])
    return HolomorphyReport(pts, step, r1, r2, lam, lam >= -tol)


def write_matrix_element_csv(path, P: Polymorphism, v: float, ws: Sequence[float],
                             pairs=None) -> int:
    """Write rows ``(i, j, v, w, re, im, abs)`` of ``S_{v+iw}(P; 1_i, 1_j)``.

    ``pairs`` selects entries (default: all). Returns the number of data rows.
    """
    if not 0 <= v <= 1:
        raise DomainError(f"v={v} outside the strip")
    ws = np.asarray(ws, dtype=float)
    na, nb = P.shape
    if pairs is None:
        pairs = [(i, j) for i in range(na) for j in range(nb)]
    phi = mellin_matrix(P, v + 1j * ws)
    n = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["i", "j", "v", "w", "re", "im", "abs"])
        for i, j in pairs:
            if not (0 <= i < na and 0 <= j < nb):
                raise ValidationError(f"entry ({i}, {j}) outside a {na}x{nb} polymorphism")
            for w, z in zip(ws, phi[:, i, j]):
                wr.writerow([i, j, repr(float(v)), repr(float(w)), repr(float(z.real)),
                             repr(float(z.imag)), repr(float(abs(z)))])
                n += 1
    return n
