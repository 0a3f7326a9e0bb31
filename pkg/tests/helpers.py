import numpy as np

from polymorph.poly import random_polymorphism
from polymorph.space import random_space


def random_chain(rng, sizes, max_atoms=4, log_range=1.0):
    """Random composable polymorphisms between spaces of the given sizes."""
    spaces = [random_space(rng, n) for n in sizes]
    return [random_polymorphism(rng, a, b, max_atoms=max_atoms, log_range=log_range)
            for a, b in zip(spaces, spaces[1:])]


def random_vector(rng, n, complex_=True):
    v = rng.normal(size=n)
    return v + 1j * rng.normal(size=n) if complex_ else v


def random_strip_point(rng, vmax=1.0, wmax=5.0):
    return complex(rng.uniform(0, vmax), rng.uniform(-wmax, wmax))
