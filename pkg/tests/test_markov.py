import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymorph.errors import CompositionError, ValidationError
from polymorph.markov import (BistochasticKernel, approximate_product, compose_kernels,
                              identity_kernel, markov_operator, partition_morphisms,
                              product_kernel, random_kernel, sinkhorn_project)
from polymorph.space import (DiscreteSpace, Partition, lp_norm, random_space, refine_sequence,
                             uniform_space)


def triple(seed, na=3, nb=4, nc=2):
    rng = np.random.default_rng(seed)
    a, b, c = random_space(rng, na), random_space(rng, nb), random_space(rng, nc)
    return rng, a, b, c, random_kernel(rng, a, b), random_kernel(rng, b, c)


def compose_oracle(p, q):
    # literal triple loop over r_ik = sum_j p_ij q_jk / beta_j
    na, nb = p.p.shape
    nc = q.p.shape[1]
    r = np.zeros((na, nc))
    for i in range(na):
        for k in range(nc):
            for j in range(nb):
                r[i, k] += p.p[i, j] * q.p[j, k] / p.target.masses[j]
    return r


def test_kernel_validation():
    s = uniform_space(2)
    with pytest.raises(ValidationError):
        BistochasticKernel(s, s, [[0.5, 0.0], [0.0, 0.6]])
    with pytest.raises(ValidationError):
        BistochasticKernel(s, s, [[0.75, -0.25], [-0.25, 0.75]])
    with pytest.raises(ValidationError):
        BistochasticKernel(s, s, [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0]])


def test_projection_is_lossy_but_valid():
    s = DiscreteSpace([0.3, 0.7])
    t = DiscreteSpace([0.6, 0.4])
    raw = np.array([[0.2, 0.1], [0.35, 0.36]])
    k = BistochasticKernel.projected(s, t, raw)
    assert np.allclose(k.p.sum(1), s.masses, atol=1e-14)
    assert np.allclose(k.p.sum(0), t.masses, atol=1e-14)
    assert not np.allclose(k.p, raw)
    p = sinkhorn_project(np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5])
    assert np.allclose(p, 0.25)


def test_compose_examples():
    _, a, b, c, p, q = triple(1)
    assert np.allclose(compose_kernels(identity_kernel(b), q).p, q.p, atol=1e-15)
    r = compose_kernels(p, product_kernel(b, c))
    assert np.allclose(r.p, product_kernel(a, c).p, atol=1e-15)
    h = uniform_space(2)
    quarter = BistochasticKernel(h, h, np.full((2, 2), 0.25))
    assert np.allclose(compose_kernels(quarter, quarter).p, 0.25, atol=1e-16)


def test_compose_mismatch():
    _, a, b, c, p, q = triple(2)
    with pytest.raises(CompositionError):
        compose_kernels(p, p)


@given(st.integers(0, 2 ** 31))
def test_compose_against_loop_oracle(seed):
    _, a, b, c, p, q = triple(seed)
    r = compose_kernels(p, q)
    assert np.max(np.abs(r.p - compose_oracle(p, q))) < 1e-15
    assert np.allclose(r.p.sum(1), a.masses, atol=1e-12)
    assert np.allclose(r.p.sum(0), c.masses, atol=1e-12)


@given(st.integers(0, 2 ** 31), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8),
       st.integers(1, 8))
def test_associativity_and_involution(seed, na, nb, nc, nd):
    rng = np.random.default_rng(seed)
    sp = [random_space(rng, n) for n in (na, nb, nc, nd)]
    p, q, r = (random_kernel(rng, sp[k], sp[k + 1]) for k in range(3))
    left = compose_kernels(compose_kernels(p, q), r)
    right = compose_kernels(p, compose_kernels(q, r))
    assert np.max(np.abs(left.p - right.p)) < 1e-12
    assert np.max(np.abs(compose_kernels(p, q).star.p - compose_kernels(q.star, p.star).p)) < 1e-15


def test_markov_operator_examples():
    _, a, b, c, p, q = triple(3)
    assert np.allclose(markov_operator(identity_kernel(a)), np.eye(len(a)))
    m = markov_operator(product_kernel(a, b))
    assert np.allclose(m, np.tile(b.masses, (len(a), 1)), atol=1e-15)


@given(st.integers(0, 2 ** 31))
def test_markov_operator_contravariant_and_stochastic(seed):
    _, a, b, c, p, q = triple(seed)
    lhs = markov_operator(compose_kernels(p, q))
    assert np.max(np.abs(lhs - markov_operator(p) @ markov_operator(q))) < 1e-12
    assert np.allclose(markov_operator(p).sum(1), 1.0, atol=1e-12)


def test_markov_operator_contracts():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b = random_space(rng, rng.integers(1, 6)), random_space(rng, rng.integers(1, 6))
        k = random_kernel(rng, a, b)
        g = rng.normal(size=len(b))
        for pexp in (1, 2, np.inf):
            assert lp_norm(a, markov_operator(k) @ g, pexp) <= lp_norm(b, g, pexp) * (1 + 1e-12)


def test_partition_morphisms():
    s = DiscreteSpace([0.1, 0.2, 0.3, 0.4], probabilistic=True)
    m, l, t = partition_morphisms(s, Partition.singletons(4))
    assert np.allclose(markov_operator(m), np.eye(4)) and np.allclose(t.p, np.diag(s.masses))
    m, l, t = partition_morphisms(s, Partition.whole(4))
    assert np.allclose(t.p, np.outer(s.masses, s.masses), atol=1e-16)
    x = Partition([[0, 3], [1, 2]])
    m, l, t = partition_morphisms(s, x)
    J, K = markov_operator(l), markov_operator(m)
    assert np.allclose(J @ K, np.eye(2), atol=1e-15)
    I = markov_operator(t)
    assert np.allclose(I @ I, I, atol=1e-15) and np.allclose(I @ K, K, atol=1e-15)
    assert np.allclose(J @ I, J, atol=1e-15)
    assert t.p[0, 3] == pytest.approx(0.1 * 0.4 / 0.5)
    assert t.p[0, 1] == 0.0


def test_approximate_product():
    _, a, b, c, p, q = triple(5, 8, 8, 8)
    qp = compose_kernels(p, q).p
    single = [Partition.singletons(8)]
    assert np.allclose(approximate_product(p, q, single, single, single)[0].p, qp, atol=1e-15)
    whole = [Partition.whole(8)]
    assert np.allclose(approximate_product(p, q, whole, whole, whole)[0].p,
                       product_kernel(a, c).p, atol=1e-15)
    chain = [refine_sequence(s, 3) for s in (a, b, c)]
    seq = approximate_product(p, q, *chain)
    assert len(seq) == 4
    assert np.linalg.norm(seq[-1].p - qp) < 1e-15


def hs_distance(k, ref, a, c):
    # Hilbert-Schmidt norm of the operator difference from L^2(gamma) to L^2(alpha)
    return np.sqrt(np.sum((k.p - ref) ** 2 / np.outer(a.masses, c.masses)))


@given(st.integers(0, 2 ** 31))
def test_outer_averaging_converges_monotonically(seed):
    # averaging only the outer spaces is an orthogonal projection onto nested
    # subspaces, so the Hilbert-Schmidt error cannot grow under refinement
    _, a, b, c, p, q = triple(seed, 8, 8, 8)
    qp = compose_kernels(p, q).p
    ys = [Partition.singletons(8)] * 4
    seq = approximate_product(p, q, refine_sequence(a, 3), ys, refine_sequence(c, 3))
    errs = [hs_distance(k, qp, a, c) for k in seq]
    assert all(e1 <= e0 + 1e-12 for e0, e1 in zip(errs, errs[1:]))
    assert errs[-1] < 1e-14


def test_middle_averaging_need_not_be_monotone():
    # documents why monotonicity is asserted only for the outer averaging
    found = False
    for seed in range(50):
        _, a, b, c, p, q = triple(seed, 8, 8, 8)
        qp = compose_kernels(p, q).p
        seq = approximate_product(p, q, *[refine_sequence(s, 3) for s in (a, b, c)])
        errs = [np.linalg.norm(k.p - qp) for k in seq]
        found |= any(e1 > e0 + 1e-12 for e0, e1 in zip(errs, errs[1:]))
    assert found
