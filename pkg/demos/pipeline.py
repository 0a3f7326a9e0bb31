"""Walk through the main objects: measures, polymorphisms, operators, maps.

Run: python3 demos/pipeline.py
"""
import numpy as np

from polymorph import io
from polymorph.invert import recover_polymorphism, sample_polymorphism
from polymorph.markov import random_kernel
from polymorph.mellin import holomorphy_probe, transform_matrix
from polymorph.poly import compose, from_markov, pol_distance, random_polymorphism, validate
from polymorph.pwl import discretize, gms_dense_construct, oscillating_family
from polymorph.space import random_space

rng = np.random.default_rng(3)
a, b, c = (random_space(rng, n) for n in (2, 3, 2))

# a kernel embeds with every atom at t = 1; a general polymorphism spreads them
K = from_markov(random_kernel(rng, a, b))
P = random_polymorphism(rng, b, c, max_atoms=2)
R = compose(K, P)
print("composite valid:", validate(R).passed, "atoms per entry:",
      [len(R[i, j]) for i in range(2) for j in range(2)])

# T_u is multiplicative under composition
u = 0.3 + 1.2j
gap = np.max(np.abs((transform_matrix(K, u) @ transform_matrix(P, u)).M - transform_matrix(R, u).M))
print("homomorphism gap:", gap)

rep = holomorphy_probe(R, np.ones(2), np.ones(2), [0.5 + 0j, 0.25 + 1j])
print("Cauchy-Riemann residual ratios:", np.round(rep.ratios, 3))

# indicator matrix elements determine the polymorphism when atoms sit on the grid
grid = np.linspace(-1, 1, 201)
Q = from_markov(random_kernel(rng, a, c))
rec = recover_polymorphism(sample_polymorphism(Q), a, c, grid)
print("recovery distance:", pol_distance(rec.polymorphism, Q),
      "(marginal check:", rec.valid, ")")

# oscillating family: block diagonal once n is a multiple of the cell count
g = oscillating_family(2.0, 2 / 3, 0.25, 8)
D = discretize(g, 2)
h = gms_dense_construct(D, 2)
print("map -> polymorphism -> map -> polymorphism:", pol_distance(discretize(h, 2), D))
print(io.dumps(D).splitlines()[0:4])
