import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from laxtensor import clifford as cl
from laxtensor import spacetimes
from laxtensor.forms import Form, antisymmetrize
from laxtensor.manifold import frame_at, inverse_metric_at, ricci_rotation_at

from conftest import random_phase_points


@pytest.mark.parametrize("D", range(2, 11))
def test_anticommutators_exact_all_supported_dimensions(D):
    assert cl.anticommutator_defect(cl.build_gamma_basis(D)) == 0
    assert cl.anticommutator_defect(cl.build_gamma_basis(D, (-1,) + (1,) * (D - 1))) == 0


@pytest.mark.parametrize("D", range(2, 11))
def test_representation_size(D):
    assert cl.build_gamma_basis(D).size == 2 ** (D // 2)


def test_unsupported_dimension_and_signature():
    with pytest.raises(ValueError):
        cl.build_gamma_basis(11)
    with pytest.raises(ValueError):
        cl.build_gamma_basis(1)
    with pytest.raises(ValueError):
        cl.build_gamma_basis(3, (1, 1))


def test_odd_dimension_last_gamma_is_product():
    b = cl.build_gamma_basis(5)
    prod = b.gammas[0] @ b.gammas[1] @ b.gammas[2] @ b.gammas[3]
    ratio = b.gammas[4][np.nonzero(prod)] / prod[np.nonzero(prod)]
    assert_allclose(ratio, ratio[0])
    assert abs(abs(ratio[0]) - 1) < 1e-15


@pytest.mark.parametrize("D", range(2, 7))
def test_traces_of_antisymmetrized_products_vanish(D):
    b = cl.build_gamma_basis(D, (-1,) + (1,) * (D - 1))
    top = D if D % 2 == 0 else D - 1
    for r in range(1, top + 1):
        for combo in itertools.combinations(range(D), r):
            assert abs(np.trace(cl.gamma_antisym(b, combo))) < 1e-12


def test_euclidean_gammas_hermitian():
    for g in cl.build_gamma_basis(6).gammas:
        assert_allclose(g, g.conj().T)


@given(st.permutations([0, 1, 2]))
def test_gamma_antisym_sign(perm):
    b = cl.build_gamma_basis(4)
    sign = round(np.linalg.det(np.eye(3)[list(perm)]))
    assert_allclose(cl.gamma_antisym(b, perm), sign * cl.gamma_antisym(b, (0, 1, 2)), atol=1e-15)
    assert_allclose(cl.gamma_antisym(b, (1, 1)), 0.0)


@given(st.integers(0, 10_000))
def test_clifford_from_frame_matches_antisymmetrized_sum(s):
    rng = np.random.default_rng(s)
    b = cl.build_gamma_basis(4, (-1, 1, 1, 1))
    w = antisymmetrize(rng.normal(size=(4, 4)))
    ref = sum(w[i, j] * cl.gamma_antisym(b, (i, j)) for i in range(4) for j in range(4)) / 2
    assert_allclose(cl.clifford_from_frame(b, {2: w}), ref, atol=1e-12)


def test_sphere_spin_connection():
    spec = spacetimes.sphere_spec(1.5)
    b = cl.build_gamma_basis(2)
    for th in (0.3, 1.0, 2.2):
        x = [th, 0.4]
        S = cl.spin_connection_at(spec, x, b)
        g12 = cl.gamma_antisym(b, (0, 1))
        assert_allclose(S[0], 0.0, atol=1e-14)
        c = np.trace(S[1] @ np.linalg.inv(g12)) / b.size
        assert_allclose(S[1], c * g12, atol=1e-14)
        assert_allclose(abs(c), 0.5 * abs(math.cos(th)), rtol=1e-12)
        R = ricci_rotation_at(spec, x)
        assert_allclose(c, 0.5 * R[0, 1, 1], rtol=1e-12)


@pytest.mark.parametrize("name", ["kerr", "schwarzschild", "sphere2", "minkowski4"])
def test_spin_compatibility(name):
    entry = spacetimes.get(name)
    b = cl.build_gamma_basis(entry.dimension, entry.spec.signature)
    for x in entry.sample_points(5, seed=1):
        assert cl.spin_compatibility_residual(entry.spec, x, b) <= 1e-12


def test_momentum_lambda_squares_to_p2(kerr_entry):
    spec = kerr_entry.spec
    b = cl.build_gamma_basis(4, spec.signature)
    for z in random_phase_points(kerr_entry, 5, seed=2):
        Lam = cl.clifford_lax_eval(cl.CliffordLax("momentum"), spec, z, b)
        p2 = z.p @ inverse_metric_at(spec, z.x) @ z.p
        assert_allclose(Lam @ Lam, p2 * b.identity(), atol=1e-12 * max(1, abs(p2)))
        assert_allclose(np.trace(Lam @ Lam).real, b.size * p2, rtol=1e-12)


def test_form_to_clifford_linear(kerr_entry):
    b = cl.build_gamma_basis(4, kerr_entry.spec.signature)
    x = kerr_entry.sample_points(1, seed=3)[0]
    fr = frame_at(kerr_entry.spec, x)
    a = Form(2, 4, antisymmetrize(np.arange(16.0).reshape(4, 4)))
    c = Form.one_form(np.array([1.0, -2.0, 0.5, 3.0]))
    both = cl.form_to_clifford([a, c], b, fr)
    assert_allclose(both, cl.form_to_clifford([a], b, fr) + cl.form_to_clifford([c], b, fr), atol=1e-12)
    with pytest.raises(ValueError):
        cl.form_to_clifford([Form.zero(4, 3)], cl.build_gamma_basis(2), fr)


@pytest.mark.parametrize("kind", ["momentum", "ky", "ccky", "scaled"])
def test_clifford_covariant_residual(kerr_entry, kind):
    spec, H = kerr_entry.spec, kerr_entry.hamiltonian()
    if kind == "ky":
        op = cl.CliffordLax("ky", kerr_entry.ky["ky"])
    elif kind == "ccky":
        op = cl.CliffordLax("ccky", kerr_entry.ccky["principal"])
    elif kind == "scaled":
        op = cl.CliffordLax("scaled", inner=cl.CliffordLax("ky", kerr_entry.ky["ky"]),
                            scalar=lambda s, x, p: 2.0 + H.value(s, x, p))
    else:
        op = cl.CliffordLax("momentum")
    b = cl.build_gamma_basis(4, spec.signature)
    worst = max(cl.clifford_covariant_residual(op, H, spec, z, b) for z in random_phase_points(kerr_entry, 10, 4))
    assert worst <= 1e-9


def test_eigen_invariants_conserved(kerr_entry, kerr_short_trajectory):
    spec = kerr_entry.spec
    b = cl.build_gamma_basis(4, spec.signature)
    op = cl.CliffordLax("ccky", kerr_entry.ccky["principal"])
    inv = np.array([cl.eigen_invariants(cl.clifford_lax_eval(op, spec, z, b)) for z in kerr_short_trajectory.states])
    scale = np.max(np.abs(inv), axis=0)
    assert np.max(np.abs(inv - inv[0]) / np.maximum(scale, 1.0)) <= 1e-9


def test_clifford_lax_pair_residual_small(kerr_entry, kerr_short_trajectory):
    op = cl.CliffordLax("ky", kerr_entry.ky["ky"])
    r = cl.clifford_lax_pair_residual(kerr_short_trajectory, op, kerr_entry.hamiltonian(), kerr_entry.spec)
    assert r <= 1e-2


def test_frame_momentum_bracket(kerr_entry):
    for z in random_phase_points(kerr_entry, 5, seed=5):
        assert cl.frame_momentum_bracket_residual(kerr_entry.spec, z, 1.3) <= 1e-10


def test_lax_validation(kerr_entry):
    with pytest.raises(ValueError):
        cl.CliffordLax("spinor")
    with pytest.raises(ValueError):
        cl.CliffordLax("ky", kerr_entry.ccky["principal"])
    with pytest.raises(ValueError):
        cl.CliffordLax("ccky", kerr_entry.ky["ky"])
    with pytest.raises(ValueError):
        cl.CliffordLax("scaled")
    with pytest.raises(IndexError):
        cl.gamma_antisym(cl.build_gamma_basis(3), (0, 3))
