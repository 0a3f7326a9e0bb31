import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import lsq_linear

from polymorph.nnls import nnls


def objective(A, b, x, c=None):
    r = A @ x - b
    return 0.5 * r @ r + (0.0 if c is None else c @ x)


@given(st.integers(0, 2 ** 31), st.integers(1, 30), st.integers(1, 30))
def test_matches_bounded_least_squares(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    x, rnorm = nnls(A, b)
    ref = lsq_linear(A, b, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    assert np.all(x >= 0)
    assert rnorm == pytest.approx(np.linalg.norm(A @ x - b), abs=1e-12)
    assert objective(A, b, x) <= objective(A, b, ref) + 1e-10 * (1 + b @ b)


@given(st.integers(0, 2 ** 31))
def test_kkt_conditions(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(12, 8))
    b = rng.normal(size=12)
    x, _ = nnls(A, b)
    grad = A.T @ (A @ x - b)
    assert np.all(grad >= -1e-10)
    assert np.all(np.abs(grad[x > 0]) < 1e-10)


@given(st.integers(0, 2 ** 31))
def test_linear_penalty_against_shifted_problem(seed):
    # for full column rank A, 1/2|Ax - b|^2 + c.x differs by a constant from
    # 1/2|Ax - b'|^2 with b' = b - A (A^T A)^{-1} c
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(15, 6))
    b = rng.normal(size=15)
    c = rng.uniform(0, 2, size=6)
    x, _ = nnls(A, b, c=c)
    b2 = b - A @ np.linalg.solve(A.T @ A, c)
    ref = lsq_linear(A, b2, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    assert np.all(x >= 0)
    assert objective(A, b, x, c) <= objective(A, b, ref, c) + 1e-10


def test_exact_nonnegative_solution():
    A = np.eye(3)
    x, r = nnls(A, np.array([1.0, -2.0, 3.0]))
    assert x.tolist() == [1.0, 0.0, 3.0] and r == pytest.approx(2.0)


def test_underdetermined_exact_fit():
    rng = np.random.default_rng(7)
    A = np.abs(rng.normal(size=(5, 40)))
    x0 = np.zeros(40)
    x0[[3, 17]] = [0.4, 1.1]
    x, r = nnls(A, A @ x0)
    assert r < 1e-12 and np.all(x >= 0)
