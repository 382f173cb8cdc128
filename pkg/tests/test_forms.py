import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from laxtensor import spacetimes
from laxtensor.forms import (
    Form,
    RankOverflowWarning,
    antisymmetrize,
    contract,
    form_identity_residual,
    hodge,
    hodge_from_metric,
    levi_civita,
    wedge,
)

seeds = st.integers(0, 2**31 - 1)


def random_form(rng, dim, rank):
    if rank == 0:
        return Form.scalar(dim, rng.normal())
    return Form(rank, dim, antisymmetrize(rng.normal(size=(dim,) * rank)))


def wedge_reference(a, b):
    """Component loop: (a^b)_{I} = sum over (r,s)-splits of I with the permutation sign."""
    D, r, s = a.dim, a.rank, b.rank
    out = np.zeros((D,) * (r + s))
    for idx in itertools.product(range(D), repeat=r + s):
        if len(set(idx)) < r + s:
            continue
        tot = 0.0
        for perm in itertools.permutations(range(r + s)):
            sign = np.linalg.det(np.eye(r + s)[list(perm)])
            tot += sign * a.comps[tuple(idx[i] for i in perm[:r])] * b.comps[tuple(idx[i] for i in perm[r:])]
        out[idx] = tot / (math.factorial(r) * math.factorial(s))
    return out


def test_contraction_example():
    a = Form.from_independent(3, 2, {(0, 1): 1.0})
    res = contract(a, [1.0, 0.0, 0.0])
    assert res.comps[1] == -1.0
    assert res.comps[0] == 0.0 and res.comps[2] == 0.0


def test_hodge_of_dx_in_flat_3d():
    star = hodge_from_metric(np.eye(3), Form.one_form([1.0, 0.0, 0.0]))
    assert_allclose(star.comps, Form.from_independent(3, 2, {(1, 2): 1.0}).comps)


@given(seeds, st.integers(2, 5), st.data())
def test_wedge_matches_component_loop(s, D, data):
    rng = np.random.default_rng(s)
    r = data.draw(st.integers(0, min(2, D)))
    q = data.draw(st.integers(0, D - r))
    a, b = random_form(rng, D, r), random_form(rng, D, q)
    assert_allclose(wedge(a, b).comps, wedge_reference(a, b), atol=1e-12)


@given(seeds, st.integers(2, 6), st.data())
def test_wedge_graded_commutative(s, D, data):
    rng = np.random.default_rng(s)
    r = data.draw(st.integers(0, D))
    q = data.draw(st.integers(0, D - r))
    a, b = random_form(rng, D, r), random_form(rng, D, q)
    assert_allclose(wedge(a, b).comps, (-1) ** (r * q) * wedge(b, a).comps, atol=1e-12)


@given(seeds, st.integers(3, 5))
def test_wedge_associative(s, D):
    rng = np.random.default_rng(s)
    a, b, c = random_form(rng, D, 1), random_form(rng, D, 1), random_form(rng, D, D - 2)
    assert_allclose(wedge(wedge(a, b), c).comps, wedge(a, wedge(b, c)).comps, atol=1e-12)


@given(seeds, st.integers(2, 5))
def test_wedge_result_antisymmetric(s, D):
    rng = np.random.default_rng(s)
    w = wedge(random_form(rng, D, 1), random_form(rng, D, 1)).comps
    assert_allclose(w, -w.T, atol=0)


@pytest.mark.parametrize("name", ["minkowski4", "kerr"])
@given(s=seeds)
def test_double_hodge_on_two_forms(name, s):
    entry = spacetimes.get(name)
    rng = np.random.default_rng(s)
    x = entry.sample_points(1, seed=s % 1000)[0]
    a = random_form(rng, 4, 2)
    assert_allclose(hodge(entry.spec, x, hodge(entry.spec, x, a)).comps, -a.comps, atol=1e-10)


@given(seeds, st.integers(2, 6), st.data())
def test_double_hodge_sign_rule(s, D, data):
    rng = np.random.default_rng(s)
    r = data.draw(st.integers(0, D))
    sig = data.draw(st.sampled_from([1, -1]))
    A = rng.normal(size=(D, D)) + D * np.eye(D)
    g = A.T @ np.diag(np.r_[sig, np.ones(D - 1)]) @ A
    a = random_form(rng, D, r)
    sign = (-1) ** (r * (D - r)) * np.sign(np.linalg.det(g))
    twice = hodge_from_metric(g, hodge_from_metric(g, a))
    assert_allclose(twice.comps, sign * a.comps, atol=1e-10)


@given(seeds, st.integers(2, 6), st.data())
def test_contract_wedge_identity(s, D, data):
    rng = np.random.default_rng(s)
    r = data.draw(st.integers(0, D))
    A = rng.normal(size=(D, D))
    gi = np.linalg.inv(A @ A.T + np.eye(D))
    assert form_identity_residual(random_form(rng, D, r), rng.normal(size=D), gi) <= 1e-12


def test_levi_civita_properties():
    eps = levi_civita(4)
    assert eps[0, 1, 2, 3] == 1 and eps[1, 0, 2, 3] == -1
    assert np.count_nonzero(eps) == 24


def test_rank_overflow_warns_and_returns_zero():
    a = Form.from_independent(3, 2, {(0, 1): 1.0})
    with pytest.warns(RankOverflowWarning):
        out = wedge(a, Form.from_independent(3, 2, {(1, 2): 1.0}))
    assert out.max_abs() == 0.0


def test_shape_and_rank_validation():
    with pytest.raises(ValueError):
        Form(2, 3, np.zeros((3,)))
    with pytest.raises(ValueError):
        Form(4, 3, np.zeros((3,) * 4))
    with pytest.raises(ValueError):
        Form.from_independent(3, 2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        contract(Form.scalar(3, 1.0), [1.0, 0.0, 0.0])
