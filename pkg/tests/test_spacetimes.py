import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from laxtensor import spacetimes
from laxtensor.forms import hodge
from laxtensor.manifold import ChartDomainError, metric_at
from laxtensor.symmetry import KYField


@pytest.mark.parametrize("name", spacetimes.names())
def test_catalog_entry_passes_gates(name):
    report = spacetimes.validate_entry(spacetimes.get(name), raise_on_failure=True)
    assert report.passed
    assert all(c.residual <= 1e-10 for c in report.checks), report.checks


def test_catalog_names_and_lookup():
    assert set(spacetimes.names()) == {"minkowski4", "euclidean3", "sphere2", "schwarzschild", "kerr", "kerr_charged"}
    assert spacetimes.get("kerr", M=2.0, a=0.5).params == {"M": 2.0, "a": 0.5}
    with pytest.raises(KeyError):
        spacetimes.get("de_sitter")


def test_tampered_kerr_ky_fails_gate():
    entry = spacetimes.kerr()
    good = entry.ky["ky"]
    bad = KYField(2, lambda x: good.fn(x) + 1e-3 * np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0] * 4, [0] * 4]))
    tampered = dataclasses.replace(entry, ky={"ky": bad})
    report = spacetimes.validate_entry(tampered, n_points=8)
    assert report.failures() == ["verify_ky:ky"]
    with pytest.raises(spacetimes.GateFailure):
        spacetimes.validate_entry(tampered, n_points=8, raise_on_failure=True)


def test_kerr_reduces_to_schwarzschild():
    k, s = spacetimes.kerr(1.0, 0.0), spacetimes.schwarzschild(1.0)
    for x in s.sample_points(20, seed=1):
        assert_allclose(metric_at(k.spec, x), metric_at(s.spec, x), rtol=1e-12, atol=1e-12)
        assert_allclose(np.asarray(k.ky["ky"].fn(x), float), np.asarray(s.ky["ky"].fn(x), float), atol=1e-12)
        assert_allclose(np.asarray(k.ccky["principal"].fn(x), float),
                        np.asarray(s.ccky["principal"].fn(x), float), atol=1e-12)


def test_kerr_ky_is_hodge_dual_of_principal(kerr_entry):
    h, ky = kerr_entry.ccky["principal"], kerr_entry.ky["ky"]
    for x in kerr_entry.sample_points(10, seed=2):
        star = hodge(kerr_entry.spec, x, h.at(x, 4)).comps
        assert_allclose(star, np.asarray(ky.fn(x), dtype=float), atol=1e-12)


def test_hodge_ky_helper(kerr_entry):
    derived = spacetimes.hodge_ky(kerr_entry.spec, kerr_entry.ccky["principal"])
    x = kerr_entry.sample_points(1, seed=3)[0]
    assert derived.rank == 2
    assert_allclose(derived.fn(x), np.asarray(kerr_entry.ky["ky"].fn(x), float), atol=1e-12)


def test_kerr_chart_domain():
    spec = spacetimes.kerr_spec(1.0, 0.9)
    rp = 1 + math.sqrt(1 - 0.81)
    assert spec.in_domain([0.0, rp + 1e-3, 1.0, 0.0])
    for bad in ([0.0, rp, 1.0, 0.0], [0.0, 5.0, math.pi, 0.0], [0.0, 5.0, -0.1, 0.0]):
        assert not spec.in_domain(bad)
        with pytest.raises(ChartDomainError):
            metric_at(spec, bad)
    assert_allclose(spec.boundary_distance([0.0, rp + 0.25, 1.0, 0.0]), 0.25)
    with pytest.raises(ValueError):
        spacetimes.kerr_spec(1.0, 1.2)


def test_sample_points_deterministic_and_inside_box(kerr_entry):
    a = kerr_entry.sample_points(64, seed=5)
    assert_allclose(a, kerr_entry.sample_points(64, seed=5))
    assert np.all(a >= np.array(kerr_entry.sample_low)) and np.all(a <= np.array(kerr_entry.sample_high))
    assert all(kerr_entry.spec.in_domain(x) for x in a)


def test_charged_entry_hamiltonian(charged_entry):
    H = charged_entry.hamiltonian()
    assert H.kind == "charged" and H.coupling == 0.05
    assert spacetimes.kerr().hamiltonian().kind == "geodesic"


def test_euclidean_m_wedge_x_divergence():
    e = spacetimes.euclidean3()
    from laxtensor.symmetry import ccky_divergence

    xi = ccky_divergence(e.spec, e.ccky["m_wedge_x"], [0.3, 0.1, -0.7]).comps
    assert_allclose(xi, [-0.2, 0.5, -1.1], atol=1e-14)
