"""Metric geometry at a point: metric, inverse, Christoffel symbols, frames.

Derivatives of the metric are exact: ``metric_fn`` is evaluated on
:class:`~laxtensor.dual.Dual` coordinates.  Every routine here accepts plain
float coordinates; the ones marked dual-generic also accept object arrays of
duals and then return object arrays, which is how higher-level code
differentiates frames and metric-built tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import dual


class ChartDomainError(ValueError):
    """Point lies outside the chart on which the metric is valid."""


class SingularMetricError(ArithmeticError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class MetricSpec:
    """A metric on one coordinate chart.

    ``metric_fn(x)`` must return a ``D x D`` nested sequence and be written
    with ordinary arithmetic and numpy ufuncs so that it also runs on duals.
    ``chart_domain`` returns True for valid points; ``boundary_distance``
    (optional) measures coordinate distance to a genuine singularity such as
    a horizon, and the integrator halts when it drops below its guard.
    """

    name: str
    dimension: int
    signature: tuple
    metric_fn: Callable[[Sequence], Sequence]
    chart_domain: Optional[Callable[[Sequence], bool]] = None
    domain_description: str = "inside chart"
    boundary_distance: Optional[Callable[[Sequence], float]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if len(self.signature) != self.dimension or any(s not in (1, -1) for s in self.signature):
            raise ValueError(f"signature must be {self.dimension} entries of +-1")

    @property
    def eta(self) -> np.ndarray:
        return np.diag(np.asarray(self.signature, dtype=float))

    def in_domain(self, x) -> bool:
        return self.chart_domain is None or bool(self.chart_domain(x))


def check_domain(spec: MetricSpec, x) -> None:
    if not spec.in_domain(x):
        raise ChartDomainError(
            f"{spec.name}: point {np.round(dual.value(np.asarray(x, dtype=object)), 12).tolist()} "
            f"violates chart predicate ({spec.domain_description})"
        )


def metric_at(spec: MetricSpec, x) -> np.ndarray:
    """``g_ab(x)``. Dual-generic."""
    check_domain(spec, x)
    return dual.as_array(spec.metric_fn(x))


def metric_derivatives(spec: MetricSpec, x):
    """``(g, dg)`` with ``dg[a, b, c] = d_c g_ab`` from one dual evaluation."""
    D = spec.dimension
    xd = dual.seed(x, 0, D)
    check_domain(spec, xd)
    return dual.split(dual.as_array(spec.metric_fn(xd)), D)


def _condition_check(spec, g):
    cond = np.linalg.cond(dual.value(g))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularMetricError(f"{spec.name}: metric numerically singular (cond={cond:.3g})", cond)


def inverse_metric_at(spec: MetricSpec, x) -> np.ndarray:
    """``g^ab(x)``. Dual-generic."""
    g = metric_at(spec, x)
    _condition_check(spec, g)
    return dual.inv(g)


def christoffel_from(gi: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``Gamma[a, b, c] = 1/2 g^an (d_b g_nc + d_c g_nb - d_n g_bc)``."""
    t = np.transpose(dg, (0, 2, 1)) + dg - np.transpose(dg, (2, 0, 1))
    gam = 0.5 * np.einsum("an,nbc->abc", gi, t)
    # exact bc symmetry
    return 0.5 * (gam + np.transpose(gam, (0, 2, 1)))


def christoffel_at(spec: MetricSpec, x) -> np.ndarray:
    g, dg = metric_derivatives(spec, x)
    _condition_check(spec, g)
    return christoffel_from(np.linalg.inv(g), dg)


@dataclass(frozen=True)
class FrameField:
    """Orthonormal frame at a point.

    ``frame[i, a]`` is leg ``e_i^a`` (rows are legs); ``coframe[i, a]`` is
    ``e^i_a`` with ``coframe @ frame.T == I`` and ``frame @ g @ frame.T == eta``.
    """

    frame: np.ndarray
    coframe: np.ndarray


def _orthonormal_coframe(g, gi, signature):
    # Gram-Schmidt on the coordinate covectors dx^0..dx^{D-1} with the inverse
    # metric. Covector dt stays timelike wherever g^tt < 0, which holds in
    # ergoregions where the vector d_t does not.
    D = len(signature)
    want_neg = sum(1 for s in signature if s < 0)
    scale = max(abs(float(v)) for v in dual.value(gi).ravel())
    candidates = list(range(D))
    legs, signs = [], []

    def ip(a, b):
        return a @ gi @ b

    def residual(i):
        w = np.zeros(D, dtype=object if gi.dtype == object else float)
        w[i] = 1.0
        for leg, s in zip(legs, signs):
            w = w - (s * ip(w, leg)) * leg
        return w

    while candidates:
        pick = None
        if signs.count(-1) < want_neg:
            for i in candidates:
                w = residual(i)
                if dual.value(ip(w, w)) < 0:
                    pick = (i, w)
                    break
            if pick is None:
                raise SingularMetricError("no timelike direction found for the frame")
        else:
            i = candidates[0]
            pick = (i, residual(i))
        i, w = pick
        n = ip(w, w)
        nv = float(dual.value(n))
        if abs(nv) <= 1e-14 * scale:
            raise SingularMetricError("degenerate metric: null or zero frame leg")
        s = 1 if nv > 0 else -1
        legs.append(w / dual.sqrt(s * n))
        signs.append(s)
        candidates.remove(i)

    # order legs to match the signature pattern (timelike legs where sig is -1)
    neg = [leg for leg, s in zip(legs, signs) if s < 0]
    pos = [leg for leg, s in zip(legs, signs) if s > 0]
    if len(neg) != want_neg:
        raise SingularMetricError("metric eigenvalue signs do not match signature")
    ordered = [neg.pop(0) if s < 0 else pos.pop(0) for s in signature]
    return np.array(ordered, dtype=gi.dtype)


def frame_from_metric(g, signature) -> FrameField:
    """Dual-generic frame construction from a metric matrix."""
    gi = dual.inv(g)
    coframe = _orthonormal_coframe(g, gi, signature)
    frame = dual.inv(coframe).T
    return FrameField(frame=np.ascontiguousarray(frame), coframe=coframe)


def frame_at(spec: MetricSpec, x) -> FrameField:
    """Orthonormal frame at ``x``; deterministic and smooth in ``x``. Dual-generic."""
    g = metric_at(spec, x)
    _condition_check(spec, g)
    return frame_from_metric(g, spec.signature)


def frame_derivatives(spec: MetricSpec, x):
    """``(frame, coframe, dframe)`` with ``dframe[i, k, a] = d_a e_i^k``."""
    D = spec.dimension
    xd = dual.seed(x, 0, D)
    fr = frame_at(spec, xd)
    e, de = dual.split(fr.frame, D)
    return e, dual.value(fr.coframe), de


def ricci_rotation_at(spec: MetricSpec, x) -> np.ndarray:
    """Ricci rotation coefficients ``R[m, a, n] = (nabla_a e_n^k) e^m_k``.

    After lowering ``m`` with eta the result is antisymmetric in ``(m, n)``.
    """
    e, co, de = frame_derivatives(spec, x)
    gam = christoffel_at(spec, x)
    # nabla_a e_n^k = d_a e_n^k + Gamma^k_al e_n^l
    nab = de + np.einsum("kal,nl->nka", gam, e)
    return np.einsum("nka,mk->man", nab, co)
