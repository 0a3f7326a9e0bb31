"""Discrete Lebesgue spaces, their partitions and quotients, and discrete L^p norms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "DiscreteSpace",
    "Partition",
    "quotient",
    "lp_norm",
    "refine_sequence",
    "refines",
    "uniform_space",
    "random_space",
]

PROB_TOL = 1e-12
SAME_SPACE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """A finite measure space: atoms ``0..n-1`` with positive masses."""

    masses: np.ndarray
    probabilistic: bool = False

    def __post_init__(self):
        a = np.array(self.masses, dtype=float).ravel()
        if a.size == 0:
            raise ValidationError("a space needs at least one atom")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValidationError("atom masses must be positive and finite")
        if self.probabilistic and abs(a.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilistic space has total mass {a.sum()!r}")
        a.setflags(write=False)
        object.__setattr__(self, "masses", a)

    def __len__(self):
        return self.masses.size

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def same_as(self, other: "DiscreteSpace", tol: float = SAME_SPACE_TOL) -> bool:
        return len(self) == len(other) and bool(np.all(np.abs(self.masses - other.masses) <= tol))

    def __eq__(self, other):
        if not isinstance(other, DiscreteSpace):
            return NotImplemented
        return self.probabilistic == other.probabilistic and np.array_equal(self.masses, other.masses)

    __hash__ = None

    def __repr__(self):
        return f"DiscreteSpace({self.masses.tolist()}, probabilistic={self.probabilistic})"


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks of atom indices covering ``range(size)``."""

    blocks: tuple
    size: int = field(default=-1)

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValidationError("partition blocks must be nonempty")
        flat = [i for b in blocks for i in b]
        n = len(flat) if self.size < 0 else self.size
        if sorted(flat) != list(range(n)):
            raise ValidationError("partition blocks must be disjoint and cover every atom")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "size", n)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        labels = list(labels)
        order = sorted(set(labels))
        return cls(tuple(tuple(i for i, l in enumerate(labels) if l == b) for b in order))

    def __len__(self):
        return len(self.blocks)

    def labels(self) -> np.ndarray:
        """Block index of every atom."""
        out = np.empty(self.size, dtype=int)
        for k, b in enumerate(self.blocks):
            out[list(b)] = k
        return out

    def indicator(self) -> np.ndarray:
        """0/1 matrix of shape ``(size, len(blocks))``."""
        m = np.zeros((self.size, len(self.blocks)))
        m[np.arange(self.size), self.labels()] = 1.0
        return m

    def check(self, s: DiscreteSpace):
        if self.size != len(s):
            raise ValidationError(f"partition of {self.size} atoms used on a space with {len(s)}")


def quotient(s: DiscreteSpace, x: Partition) -> DiscreteSpace:
    """The quotient space ``A/X``: one atom per block, carrying the block mass."""
    x.check(s)
    masses = np.array([s.masses[list(b)].sum() for b in x.blocks])
    return DiscreteSpace(masses, s.probabilistic)


def lp_norm(s: DiscreteSpace, f, p: float) -> float:
    """``(sum_i alpha_i |f_i|^p)^(1/p)``; for ``p = inf`` the maximum of ``|f_i|``."""
    f = np.asarray(f)
    if f.shape != (len(s),):
        raise ValidationError(f"vector of shape {f.shape} on a space with {len(s)} atoms")
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(f)
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(s.masses @ a)
    # scale by the max to avoid under/overflow of |f|^p
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * (s.masses @ (a / top) ** p) ** (1.0 / p))


def refines(fine: Partition, coarse: Partition) -> bool:
    """Whether every block of ``fine`` lies inside a single block of ``coarse``."""
    if fine.size != coarse.size:
        return False
    lab = coarse.labels()
    return all(len({lab[i] for i in b}) == 1 for b in fine.blocks)


def refine_sequence(s: DiscreteSpace, depth: int) -> list[Partition]:
    """Dyadic refinement chain of length ``depth + 1``.

    Level 0 is the one-block partition; each level halves every block of the
    previous one (contiguous index ranges); the last level is always the
    singleton partition.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    n = len(s)
    ranges = [(0, n)]
    out = []
    for level in range(depth + 1):
        if level == depth:
            out.append(Partition.singletons(n))
            break
        out.append(Partition(tuple(tuple(range(a, b)) for a, b in ranges)))
        nxt = []
        for a, b in ranges:
            if b - a > 1:
                mid = a + (b - a) // 2
                nxt.extend([(a, mid), (mid, b)])
            else:
                nxt.append((a, b))
        ranges = nxt
    return out


def uniform_space(n: int) -> DiscreteSpace:
    return DiscreteSpace(np.full(n, 1.0 / n), probabilistic=True)


def random_space(rng: np.random.Generator, n: int) -> DiscreteSpace:
    a = rng.uniform(0.2, 1.0, size=n)
    a /= a.sum()
    # absorb the rounding of the normalization into the largest atom
    a[np.argmax(a)] += 1.0 - a.sum()
    return DiscreteSpace(a, probabilistic=True)
