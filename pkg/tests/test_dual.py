import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from laxtensor import dual
from laxtensor.dual import Dual

reals = st.floats(-3.0, 3.0, allow_nan=False)
positive = st.floats(0.1, 5.0)


def d(v):
    return Dual(v, np.array([1.0]))


@given(reals, reals)
def test_product_and_quotient_rules(a, b):
    x = d(a)
    f = x * x * b + 3.0 * x - b
    assert_allclose(f.der[0], 2 * a * b + 3.0)
    g = (x + 4.0) / (x * x + 1.0)
    ref = ((a * a + 1) - 2 * a * (a + 4)) / (a * a + 1) ** 2
    assert_allclose(g.der[0], ref, rtol=1e-12, atol=1e-14)


@given(reals)
def test_elementary_functions(a):
    x = d(a)
    assert_allclose(np.sin(x).der[0], math.cos(a))
    assert_allclose(np.cos(x).der[0], -math.sin(a))
    assert_allclose(np.exp(x).der[0], math.exp(a))
    assert_allclose(np.arctan(x).der[0], 1 / (1 + a * a))


@given(positive)
def test_sqrt_log_and_power(a):
    x = d(a)
    assert_allclose(dual.sqrt(x).der[0], 0.5 / math.sqrt(a))
    assert_allclose(np.log(x).der[0], 1 / a)
    assert_allclose((x ** 3).der[0], 3 * a * a)


def test_seed_split_round_trip():
    x = dual.seed([1.0, 2.0, 3.0], 0, 3)
    f = np.array([x[0] * x[1], x[2] ** 2], dtype=object)
    vals, ders = dual.split(f, 3)
    assert_allclose(vals, [2.0, 9.0])
    assert_allclose(ders, [[2.0, 1.0, 0.0], [0.0, 0.0, 6.0]])
    assert_allclose(dual.value(dual.join(vals, ders)), vals)


def test_plain_arrays_pass_through():
    a = np.arange(4.0)
    assert dual.as_array(a).dtype == float
    assert not dual.is_dual(a)
    vals, ders = dual.split(a, 2)
    assert ders.shape == (4, 2) and not ders.any()


@given(st.integers(0, 10_000))
def test_inverse_and_determinant_derivatives(s):
    rng = np.random.default_rng(s)
    A0 = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    dA = rng.normal(size=(3, 3))
    t = dual.seed([0.0], 0, 1)[0]
    A = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            A[i, j] = A0[i, j] + dA[i, j] * t
    _, dinv = dual.split(dual.inv(A), 1)
    ref = -np.linalg.inv(A0) @ dA @ np.linalg.inv(A0)
    assert_allclose(dinv[..., 0], ref, rtol=1e-10, atol=1e-12)
    ddet = dual.det(A).der[0]
    assert_allclose(ddet, np.linalg.det(A0) * np.trace(np.linalg.inv(A0) @ dA), rtol=1e-10)
