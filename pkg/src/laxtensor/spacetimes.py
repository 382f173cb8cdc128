"""Catalog of metrics with registered hidden-symmetry fields.

Line elements (coordinates in the order listed, orientation by that order):

* ``minkowski4``: ``-dt^2 + dx^2 + dy^2 + dz^2``.
* ``euclidean3``: ``dx^2 + dy^2 + dz^2``.
* ``sphere2``: ``R^2 (dtheta^2 + sin^2 theta dphi^2)``.
* ``schwarzschild``: ``-(1 - 2M/r) dt^2 + dr^2/(1 - 2M/r) + r^2 dOmega^2``.
* ``kerr``: Boyer-Lindquist,
  ``-(1 - 2Mr/S) dt^2 - (4 M a r sin^2/S) dt dphi + (S/Delta) dr^2 + S dtheta^2
  + (r^2 + a^2 + 2 M a^2 r sin^2/S) sin^2 dphi^2`` with ``S = r^2 + a^2 cos^2``
  and ``Delta = r^2 - 2Mr + a^2``.

Symmetry components for Kerr follow the standard Boyer-Lindquist expressions
of the principal tensor ``h = db``,
``b = -1/2 [(r^2 - a^2 cos^2) dt - a (r^2 + a^2) sin^2 dphi]``,
and its Hodge dual.  They are treated as untrusted input: every entry must
pass :func:`validate_entry` before use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import dual
from .forms import Form, hodge
from .manifold import (
    MetricSpec,
    christoffel_from,
    inverse_metric_at,
    metric_at,
    metric_derivatives,
)
from .phasespace import HamiltonianSpec
from .symmetry import (
    CCKYField,
    KYField,
    ccky_divergence,
    flat_ky_2form,
    killing_vector_residual,
    verify_ccky,
    verify_ky,
)


GATE_TOLERANCE = 1e-9
GATE_POINTS = 64


@dataclass(frozen=True)
class SpacetimeEntry:
    name: str
    spec: MetricSpec
    params: dict
    ky: dict = field(default_factory=dict)
    ccky: dict = field(default_factory=dict)
    killing_vector: Optional[Callable] = None
    principal: Optional[str] = None
    coupling: float = 0.0
    sample_low: tuple = ()
    sample_high: tuple = ()
    reference_points: tuple = ()

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    def hamiltonian(self, mass: float = 1.0) -> HamiltonianSpec:
        if self.coupling:
            return HamiltonianSpec.charged(self.killing_vector, self.coupling, mass)
        return HamiltonianSpec.geodesic(mass)

    def sample_points(self, n: int, seed: int = 0) -> np.ndarray:
        """Scrambled Halton points in the entry's sampling box."""
        sampler = qmc.Halton(d=self.dimension, scramble=True, seed=seed)
        return qmc.scale(sampler.random(n), self.sample_low, self.sample_high)


# line elements -----------------------------------------------------------------


def _flat(signature):
    eta = np.diag(np.asarray(signature, dtype=float))

    def fn(x):
        return eta

    return fn


def minkowski_spec(dim: int = 4) -> MetricSpec:
    sig = (-1,) + (1,) * (dim - 1)
    return MetricSpec(f"minkowski{dim}", dim, sig, _flat(sig))


def euclidean_spec(dim: int = 3) -> MetricSpec:
    sig = (1,) * dim
    return MetricSpec(f"euclidean{dim}", dim, sig, _flat(sig))


def _polar_ok(th):
    return 0.0 < th < math.pi


def sphere_spec(radius: float = 1.0) -> MetricSpec:
    R2 = radius * radius

    def fn(x):
        s = np.sin(x[0])
        return [[R2, 0.0], [0.0, R2 * s * s]]

    return MetricSpec(
        "sphere2", 2, (1, 1), fn,
        chart_domain=lambda x: _polar_ok(x[0]),
        domain_description="0 < theta < pi",
        params={"R": radius},
    )


def kerr_spec(M: float = 1.0, a: float = 0.9) -> MetricSpec:
    if M <= 0 or abs(a) > M:
        raise ValueError("need M > 0 and |a| <= M")
    rp = M + math.sqrt(M * M - a * a)

    def fn(x):
        r, th = x[1], x[2]
        s, c = np.sin(th), np.cos(th)
        s2 = s * s
        sig = r * r + a * a * c * c
        delta = r * r - 2 * M * r + a * a
        gtt = -(1 - 2 * M * r / sig)
        gtp = -2 * M * a * r * s2 / sig
        gpp = (r * r + a * a + 2 * M * a * a * r * s2 / sig) * s2
        return [
            [gtt, 0.0, 0.0, gtp],
            [0.0, sig / delta, 0.0, 0.0],
            [0.0, 0.0, sig, 0.0],
            [gtp, 0.0, 0.0, gpp],
        ]

    name = "kerr" if a else "schwarzschild"
    return MetricSpec(
        name, 4, (-1, 1, 1, 1), fn,
        chart_domain=lambda x: x[1] > rp and _polar_ok(x[2]),
        domain_description=f"r > r_+ = {rp:.12g} and 0 < theta < pi",
        boundary_distance=lambda x: float(x[1]) - rp,
        params={"M": M, "a": a},
    )


def schwarzschild_spec(M: float = 1.0) -> MetricSpec:
    # written directly rather than as kerr_spec(M, 0) so the a -> 0 limit can be cross-checked
    def fn(x):
        r, th = x[1], x[2]
        f = 1 - 2 * M / r
        s = np.sin(th)
        return [
            [-f, 0.0, 0.0, 0.0],
            [0.0, 1 / f, 0.0, 0.0],
            [0.0, 0.0, r * r, 0.0],
            [0.0, 0.0, 0.0, r * r * s * s],
        ]

    return MetricSpec(
        "schwarzschild", 4, (-1, 1, 1, 1), fn,
        chart_domain=lambda x: x[1] > 2 * M and _polar_ok(x[2]),
        domain_description=f"r > 2M = {2 * M:.12g} and 0 < theta < pi",
        boundary_distance=lambda x: float(x[1]) - 2 * M,
        params={"M": M},
    )


# symmetry fields ---------------------------------------------------------------


def _antisym(dim, entries):
    """Dense 2-form from ``{(i, j): value}`` with object dtype if needed."""
    out = np.zeros((dim, dim), dtype=object)
    out[...] = 0.0
    for (i, j), v in entries.items():
        out[i, j] = v
        out[j, i] = -v
    return dual.as_array(out)


def kerr_ccky(a: float) -> CCKYField:
    """Principal tensor ``h = db`` in Boyer-Lindquist components."""

    def fn(x):
        r, th = x[1], x[2]
        s, c = np.sin(th), np.cos(th)
        return _antisym(4, {
            (0, 1): r,
            (0, 2): a * a * s * c,
            (1, 3): a * r * s * s,
            (2, 3): a * (r * r + a * a) * s * c,
        })

    return CCKYField(2, fn, "principal")


def kerr_ky(a: float) -> KYField:
    """``*h = a cos (dt - a sin^2 dphi) ^ dr + r sin ((r^2+a^2) dphi - a dt) ^ dtheta``."""

    def fn(x):
        r, th = x[1], x[2]
        s, c = np.sin(th), np.cos(th)
        return _antisym(4, {
            (0, 1): a * c,
            (3, 1): -a * a * c * s * s,
            (3, 2): r * s * (r * r + a * a),
            (0, 2): -a * r * s,
        })

    return KYField(2, fn, "ky")


def kerr_killing_vector(M: float, a: float) -> Callable:
    """Covector ``xi_a = g_{a t}`` of the stationary Killing vector."""

    def fn(x):
        r, th = x[1], x[2]
        s, c = np.sin(th), np.cos(th)
        sig = r * r + a * a * c * c
        gtt = -(1 - 2 * M * r / sig)
        gtp = -2 * M * a * r * s * s / sig
        return dual.as_array([gtt, 0.0 * r, 0.0 * r, gtp])

    return fn


def position_ccky(signature) -> CCKYField:
    """``h_a = eta_ab x^b`` in Cartesian coordinates; divergence 1."""
    eta = np.asarray(signature, dtype=float)

    def fn(x):
        return dual.as_array(x) * eta

    return CCKYField(1, fn, "position")


def flat_ccky_2form(dim: int, omega: dict, m) -> CCKYField:
    """``h = omega + m ^ x`` in Euclidean Cartesian coordinates; divergence ``-m``."""
    W = Form.from_independent(dim, 2, omega).comps if omega else np.zeros((dim, dim))
    m = np.asarray(m, dtype=float)

    def fn(x):
        x = dual.as_array(x)
        return W + np.multiply.outer(m, x) - np.multiply.outer(x, m)

    return CCKYField(2, fn, "m_wedge_x")


def hodge_ky(spec: MetricSpec, h: CCKYField) -> KYField:
    """KY field ``*h`` computed pointwise from the metric."""
    D = spec.dimension

    def fn(x):
        return hodge(spec, x, h.at(x, D)).comps

    return KYField(D - h.rank, fn, f"*{h.name}")


# catalog -----------------------------------------------------------------------

_FLAT_OMEGA3 = {(0, 1): 0.7, (1, 2): -0.3}
_FLAT_CUBIC3 = {(0, 1, 2): 0.45}


def minkowski4() -> SpacetimeEntry:
    spec = minkowski_spec(4)
    return SpacetimeEntry(
        "minkowski4", spec, {},
        ky={"ky": flat_ky_2form(4, {(0, 1): 0.5, (2, 3): 1.0}, {(0, 1, 2): 0.25, (1, 2, 3): -0.4})},
        ccky={"position": position_ccky(spec.signature)},
        sample_low=(-5.0,) * 4, sample_high=(5.0,) * 4,
        reference_points=((0.0, 1.0, 2.0, 3.0),),
    )


def euclidean3() -> SpacetimeEntry:
    spec = euclidean_spec(3)
    return SpacetimeEntry(
        "euclidean3", spec, {},
        ky={"flat_ky": flat_ky_2form(3, _FLAT_OMEGA3, _FLAT_CUBIC3)},
        ccky={
            "position": position_ccky(spec.signature),
            "m_wedge_x": flat_ccky_2form(3, _FLAT_OMEGA3, (0.2, -0.5, 1.1)),
        },
        sample_low=(-3.0,) * 3, sample_high=(3.0,) * 3,
        reference_points=((1.0, 0.0, 0.0),),
    )


def sphere2(radius: float = 1.0) -> SpacetimeEntry:
    return SpacetimeEntry(
        "sphere2", sphere_spec(radius), {"R": radius},
        sample_low=(0.2, 0.0), sample_high=(math.pi - 0.2, 2 * math.pi),
        reference_points=((math.pi / 3, 0.0),),
    )


def schwarzschild(M: float = 1.0) -> SpacetimeEntry:
    spec = schwarzschild_spec(M)

    def ky(x):
        r, th = x[1], x[2]
        return _antisym(4, {(3, 2): r ** 3 * np.sin(th)})

    def ccky(x):
        return _antisym(4, {(0, 1): x[1]})

    return SpacetimeEntry(
        "schwarzschild", spec, {"M": M},
        ky={"ky": KYField(2, ky, "ky")},
        ccky={"principal": CCKYField(2, ccky, "principal")},
        killing_vector=kerr_killing_vector(M, 0.0),
        principal="principal",
        sample_low=(0.0, 2.5 * M, 0.3, 0.0),
        sample_high=(10.0, 15.0 * M, math.pi - 0.3, 2 * math.pi),
        reference_points=((0.0, 4.0 * M, math.pi / 2, 0.0),),
    )


def kerr(M: float = 1.0, a: float = 0.9) -> SpacetimeEntry:
    spec = kerr_spec(M, a)
    rp = M + math.sqrt(M * M - a * a)
    return SpacetimeEntry(
        "kerr", spec, {"M": M, "a": a},
        ky={"ky": kerr_ky(a)},
        ccky={"principal": kerr_ccky(a)},
        killing_vector=kerr_killing_vector(M, a),
        principal="principal",
        sample_low=(0.0, rp + 0.5 * M, 0.2, 0.0),
        sample_high=(10.0, 12.0 * M, math.pi - 0.2, 2 * math.pi),
        reference_points=((0.0, 6.0 * M, 1.1, 0.3),),
    )


def kerr_charged(M: float = 1.0, a: float = 0.9, e: float = 0.05) -> SpacetimeEntry:
    base = kerr(M, a)
    return SpacetimeEntry(
        "kerr_charged", base.spec, {"M": M, "a": a, "e": e},
        ky=base.ky, ccky=base.ccky,
        killing_vector=base.killing_vector,
        principal=base.principal,
        coupling=e,
        sample_low=base.sample_low, sample_high=base.sample_high,
        reference_points=base.reference_points,
    )


_BUILDERS = {
    "minkowski4": minkowski4,
    "euclidean3": euclidean3,
    "sphere2": sphere2,
    "schwarzschild": schwarzschild,
    "kerr": kerr,
    "kerr_charged": kerr_charged,
}


def catalog() -> list:
    return [b() for b in _BUILDERS.values()]


def names() -> list:
    return list(_BUILDERS)


def get(name: str, **params) -> SpacetimeEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown spacetime {name!r}; known: {', '.join(_BUILDERS)}") from None
    return builder(**params)


# gates -------------------------------------------------------------------------


@dataclass(frozen=True)
class GateCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


@dataclass(frozen=True)
class GateReport:
    entry: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]


class GateFailure(RuntimeError):
    def __init__(self, report: GateReport):
        super().__init__(f"{report.entry}: failed checks {report.failures()}")
        self.report = report


def metric_compatibility_residual(spec: MetricSpec, x) -> float:
    """Max-abs of ``d_c g_ab - Gamma^n_ca g_nb - Gamma^n_cb g_an``."""
    g, dg = metric_derivatives(spec, x)
    gam = christoffel_from(np.linalg.inv(g), dg)
    t1 = np.einsum("nca,nb->abc", gam, g)
    t2 = np.einsum("ncb,an->abc", gam, g)
    return float(np.max(np.abs(dg - t1 - t2)))


def _metric_invariants(spec, x) -> float:
    g = metric_at(spec, x)
    asym = float(np.max(np.abs(g - g.T)))
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    if sorted(np.sign(eig)) != sorted(spec.signature):
        return float("inf")
    gi = inverse_metric_at(spec, x)
    return max(asym, float(np.max(np.abs(gi @ g - np.eye(spec.dimension)))))


def validate_entry(entry: SpacetimeEntry, n_points: int = GATE_POINTS, tolerance: float = GATE_TOLERANCE,
                   seed: int = 0, raise_on_failure: bool = False) -> GateReport:
    """Run every gate of ``entry`` at ``n_points`` quasi-random points."""
    spec = entry.spec
    pts = entry.sample_points(n_points, seed)
    worst = {}

    def note(name, val):
        worst[name] = max(worst.get(name, 0.0), val)

    for x in pts:
        note("metric_invariants", _metric_invariants(spec, x))
        note("metric_compatibility", metric_compatibility_residual(spec, x))
        for key, phi in entry.ky.items():
            note(f"verify_ky:{key}", verify_ky(spec, phi, x))
        for key, h in entry.ccky.items():
            note(f"verify_ccky:{key}", verify_ccky(spec, h, x))
        if entry.killing_vector is not None:
            note("killing_vector", killing_vector_residual(spec, entry.killing_vector, x))
        if entry.principal is not None and entry.killing_vector is not None:
            xi = ccky_divergence(spec, entry.ccky[entry.principal], x).comps
            ref = dual.value(entry.killing_vector(x))
            note("xi_divergence", float(np.max(np.abs(xi - ref))))
    checks = tuple(GateCheck(k, float(v), tolerance) for k, v in worst.items())
    report = GateReport(entry.name, checks)
    if raise_on_failure and not report.passed:
        raise GateFailure(report)
    return report
