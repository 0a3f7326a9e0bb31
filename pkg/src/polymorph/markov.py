"""Bistochastic kernels between discrete spaces and their Markov operators.

A kernel ``A -> B`` is stored as its joint measure ``p[i, j] >= 0`` with row
sums ``alpha_i`` and column sums ``beta_j``. Composition and the Markov
operator divide by the intermediate or source masses on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CompositionError, ValidationError
from .space import DiscreteSpace, Partition, quotient

__all__ = [
    "MARGINAL_TOL",
    "BistochasticKernel",
    "compose_kernels",
    "markov_operator",
    "identity_kernel",
    "product_kernel",
    "partition_morphisms",
    "approximate_product",
    "sinkhorn_project",
    "random_kernel",
]

MARGINAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BistochasticKernel:
    """Nonnegative matrix ``p`` whose row/column sums are the source/target masses."""

    source: DiscreteSpace
    target: DiscreteSpace
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != (len(self.source), len(self.target)):
            raise ValidationError(
                f"kernel matrix has shape {p.shape}, spaces need "
                f"{(len(self.source), len(self.target))}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("kernel entries must be finite and nonnegative")
        rows = np.abs(p.sum(axis=1) - self.source.masses).max()
        cols = np.abs(p.sum(axis=0) - self.target.masses).max()
        if rows > MARGINAL_TOL:
            raise ValidationError(f"row sums differ from source masses by {rows:.3g}")
        if cols > MARGINAL_TOL:
            raise ValidationError(f"column sums differ from target masses by {cols:.3g}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def projected(cls, source: DiscreteSpace, target: DiscreteSpace, p, **kw):
        """Build a kernel after Sinkhorn-projecting ``p`` onto the marginals (lossy)."""
        return cls(source, target, sinkhorn_project(p, source.masses, target.masses, **kw))

    @property
    def star(self) -> "BistochasticKernel":
        """The transposed kernel ``B -> A``."""
        return BistochasticKernel(self.target, self.source, self.p.T)

    @property
    def shape(self):
        return self.p.shape


def sinkhorn_project(p, row_sums, col_sums, tol: float = 1e-15, max_iter: int = 10000) -> np.ndarray:
    """Alternately rescale rows and columns of ``p`` to the prescribed sums.

    The zero pattern of ``p`` is kept, so inputs whose support admits no
    matrix with these marginals do not converge.
    """
    p = np.array(p, dtype=float)
    r = np.asarray(row_sums, dtype=float)
    c = np.asarray(col_sums, dtype=float)
    if np.any(p < 0):
        raise ValidationError("Sinkhorn projection needs a nonnegative matrix")
    scale = max(r.max(), c.max())
    for _ in range(max_iter):
        rs = p.sum(axis=1)
        p *= np.divide(r, rs, out=np.zeros_like(r), where=rs > 0)[:, None]
        cs = p.sum(axis=0)
        p *= np.divide(c, cs, out=np.zeros_like(c), where=cs > 0)[None, :]
        if np.abs(p.sum(axis=1) - r).max() <= tol * scale:
            break
    else:
        raise ValidationError("Sinkhorn projection did not converge")
    return p


def _check_composable(b1: DiscreteSpace, b2: DiscreteSpace):
    if not b1.same_as(b2):
        raise CompositionError("target of the first morphism differs from source of the second")


def compose_kernels(p: BistochasticKernel, q: BistochasticKernel) -> BistochasticKernel:
    """Product ``q o p`` of ``p: A -> B`` and ``q: B -> C``: ``r_ik = sum_j p_ij q_jk / beta_j``."""
    _check_composable(p.target, q.source)
    r = (p.p / p.target.masses[None, :]) @ q.p
    return BistochasticKernel(p.source, q.target, r)


def markov_operator(p: BistochasticKernel) -> np.ndarray:
    """Matrix of the averaging operator ``(T f)_i = sum_j p_ij f_j / alpha_i``.

    Contravariant: ``markov_operator(compose_kernels(p, q))`` equals
    ``markov_operator(p) @ markov_operator(q)``.
    """
    return p.p / p.source.masses[:, None]


def identity_kernel(s: DiscreteSpace) -> BistochasticKernel:
    return BistochasticKernel(s, s, np.diag(s.masses))


def product_kernel(a: DiscreteSpace, b: DiscreteSpace) -> BistochasticKernel:
    """The independent coupling ``alpha_i beta_j / beta(B)``."""
    return BistochasticKernel(a, b, np.outer(a.masses, b.masses) / b.total)


def partition_morphisms(s: DiscreteSpace, x: Partition):
    """Kernels ``m: A -> A/X``, ``l: A/X -> A`` and ``t = l o m: A -> A``.

    Their Markov operators are the lift ``K``, the conditional expectation
    ``J`` and the conditional average ``I = KJ``.
    """
    x.check(s)
    q = quotient(s, x)
    m_mat = x.indicator() * s.masses[:, None]
    m = BistochasticKernel(s, q, m_mat)
    l = m.star
    return m, l, compose_kernels(m, l)


def approximate_product(p: BistochasticKernel, q: BistochasticKernel,
                        xs: Sequence[Partition], ys: Sequence[Partition],
                        zs: Sequence[Partition]) -> list[BistochasticKernel]:
    """Products ``t[C;Z_k] o q o t[B;Y_k] o p o t[A;X_k]`` along refinement chains."""
    if not (len(xs) == len(ys) == len(zs)):
        raise ValueError("refinement sequences must have equal length")
    out = []
    for x, y, z in zip(xs, ys, zs):
        ta = partition_morphisms(p.source, x)[2]
        tb = partition_morphisms(p.target, y)[2]
        tc = partition_morphisms(q.target, z)[2]
        r = compose_kernels(ta, p)
        r = compose_kernels(r, tb)
        r = compose_kernels(r, q)
        out.append(compose_kernels(r, tc))
    return out


def random_kernel(rng: np.random.Generator, a: DiscreteSpace, b: DiscreteSpace) -> BistochasticKernel:
    """Random full-support kernel with the marginals of ``a`` and ``b``."""
    return BistochasticKernel.projected(a, b, rng.uniform(0.05, 1.0, size=(len(a), len(b))))
