import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from laxtensor import spacetimes
from laxtensor.manifold import (
    ChartDomainError,
    MetricSpec,
    SingularMetricError,
    christoffel_at,
    frame_at,
    inverse_metric_at,
    metric_at,
    metric_derivatives,
    ricci_rotation_at,
)

radii = st.floats(2.0, 20.0)
thetas = st.floats(0.15, math.pi - 0.15)


def kerr_metric_reference(r, th, M, a):
    """Boyer-Lindquist Kerr from the Sigma/Delta/A form (independent of the package)."""
    S = r * r + a * a * math.cos(th) ** 2
    Dl = r * r - 2 * M * r + a * a
    A = (r * r + a * a) ** 2 - a * a * Dl * math.sin(th) ** 2
    g = np.zeros((4, 4))
    g[0, 0] = -(1 - 2 * M * r / S)
    g[0, 3] = g[3, 0] = -2 * M * a * r * math.sin(th) ** 2 / S
    g[1, 1] = S / Dl
    g[2, 2] = S
    g[3, 3] = A * math.sin(th) ** 2 / S
    return g


def test_schwarzschild_reference_values():
    spec = spacetimes.schwarzschild_spec(1.0)
    x = [0.0, 4.0, math.pi / 2, 0.0]
    assert metric_at(spec, x)[0, 0] == pytest.approx(-0.5, abs=1e-15)
    assert inverse_metric_at(spec, x)[0, 0] == pytest.approx(-2.0, abs=1e-15)
    assert christoffel_at(spec, x)[1, 0, 0] == pytest.approx(0.03125, abs=1e-15)


@given(st.floats(1.6, 20.0), thetas, st.floats(0.0, 0.99))
def test_kerr_matches_independent_line_element(r, th, a):
    rp = 1 + math.sqrt(1 - a * a)
    if r <= rp + 0.05:
        r = rp + 0.05 + r
    g = metric_at(spacetimes.kerr_spec(1.0, a), [0.0, r, th, 0.3])
    assert_allclose(g, kerr_metric_reference(r, th, 1.0, a), rtol=1e-12, atol=1e-13)


@given(thetas, st.floats(0.5, 3.0))
def test_sphere_christoffels(th, R):
    G = christoffel_at(spacetimes.sphere_spec(R), [th, 1.0])
    assert_allclose(G[0, 1, 1], -math.sin(th) * math.cos(th), atol=1e-14)
    assert_allclose(G[1, 0, 1], math.cos(th) / math.sin(th), rtol=1e-13)
    assert_allclose(G[1, 1, 0], G[1, 0, 1])
    assert_allclose(G[0, 0, 0], 0.0, atol=1e-15)


@given(radii, thetas)
def test_metric_derivative_matches_finite_difference(r, th):
    spec = spacetimes.kerr_spec(1.0, 0.9)
    x = np.array([0.0, r, th, 0.4])
    _, dg = metric_derivatives(spec, x)
    for c in (1, 2):
        e = np.zeros(4)
        e[c] = 1e-5
        fd = (metric_at(spec, x + e) - metric_at(spec, x - e)) / 2e-5
        assert_allclose(dg[:, :, c], fd, rtol=1e-7, atol=1e-8)
    assert not dg[:, :, 0].any() and not dg[:, :, 3].any()


@given(radii, thetas)
def test_christoffel_symmetric_lower_indices(r, th):
    G = christoffel_at(spacetimes.kerr_spec(), [0.0, r, th, 0.0])
    assert_allclose(G, np.transpose(G, (0, 2, 1)), atol=0)


@pytest.mark.parametrize("x", [[0.0, 1.8, math.pi / 2, 0.0], [0.0, 7.0, 0.3, 1.0]], ids=["ergoregion", "exterior"])
def test_frame_is_orthonormal(x):
    spec = spacetimes.kerr_spec(1.0, 0.9)
    fr = frame_at(spec, x)
    g = metric_at(spec, x)
    assert_allclose(fr.frame @ g @ fr.frame.T, np.diag(spec.signature), atol=1e-12)
    assert_allclose(fr.coframe @ fr.frame.T, np.eye(4), atol=1e-12)


@given(radii, thetas)
def test_ricci_rotation_antisymmetric(r, th):
    spec = spacetimes.kerr_spec()
    R = ricci_rotation_at(spec, [0.0, r, th, 0.0])
    low = np.einsum("m,man->man", np.asarray(spec.signature, float), R)
    assert_allclose(low, -np.transpose(low, (2, 1, 0)), atol=1e-12)


def test_chart_violation_raises():
    spec = spacetimes.kerr_spec()
    with pytest.raises(ChartDomainError):
        metric_at(spec, [0.0, 1.2, 1.0, 0.0])
    with pytest.raises(ChartDomainError):
        christoffel_at(spec, [0.0, 5.0, 0.0, 0.0])


def test_singular_metric_raises():
    spec = MetricSpec("degenerate", 2, (1, 1), lambda x: [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularMetricError):
        inverse_metric_at(spec, [0.0, 0.0])


def test_bad_signature_rejected():
    with pytest.raises(ValueError):
        MetricSpec("bad", 3, (1, 1), lambda x: np.eye(3))
