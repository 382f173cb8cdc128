"""Killing-Yano and closed conformal Killing-Yano forms.

Both field types wrap a dual-generic evaluator ``fn(x)`` returning the dense
covariant components.  Covariant derivatives of such fields are assembled
index by index from :func:`~laxtensor.manifold.christoffel_at`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .forms import Form, antisymmetrize, contract, wedge
from .manifold import MetricSpec, christoffel_at, inverse_metric_at, metric_at
from .phasespace import PhasePoint


class NullMomentumError(ValueError):
    """``p^2`` too close to zero for an identity that divides by it."""


@dataclass(frozen=True)
class KYField:
    rank: int
    fn: Callable
    name: str = "ky"

    def at(self, x, dim=None) -> Form:
        c = dual.as_array(self.fn(x))
        return Form(self.rank, c.shape[0] if c.ndim else dim, c)


@dataclass(frozen=True)
class CCKYField:
    rank: int
    fn: Callable
    name: str = "ccky"

    def at(self, x, dim=None) -> Form:
        c = dual.as_array(self.fn(x))
        return Form(self.rank, c.shape[0] if c.ndim else dim, c)


def covariant_derivative_of_form(spec: MetricSpec, field, x) -> np.ndarray:
    """``N[a, a1..ar] = nabla_a phi_{a1..ar}``."""
    D, r = spec.dimension, field.rank
    comps = dual.as_array(field.fn(dual.seed(x, 0, D)))
    phi, dphi = dual.split(comps, D)
    # derivative axis first
    nab = np.moveaxis(dphi, -1, 0)
    gam = christoffel_at(spec, x)
    for ax in range(r):
        # - Gamma^k_{a a_i} phi_{..k..}
        t = np.tensordot(gam, phi, axes=([0], [ax]))  # (a, a_i, rest...)
        nab = nab - np.moveaxis(t, 1, ax + 1)
    return nab


def verify_ky(spec: MetricSpec, phi: KYField, x) -> float:
    """Max-abs of ``nabla_a phi_{a1..} - nabla_[a phi_{a1..]}``."""
    nab = covariant_derivative_of_form(spec, phi, x)
    return float(np.max(np.abs(nab - antisymmetrize(nab))))


def ccky_divergence_from(nab: np.ndarray, gi: np.ndarray, dim: int, rank: int) -> np.ndarray:
    return np.tensordot(gi, nab, axes=([0, 1], [0, 1])) / (dim - rank + 1)


def ccky_divergence(spec: MetricSpec, h: CCKYField, x) -> Form:
    """``xi_{a2..ar} = nabla_n h^n_{a2..ar} / (D - r + 1)``."""
    nab = covariant_derivative_of_form(spec, h, x)
    gi = inverse_metric_at(spec, x)
    D = spec.dimension
    return Form(h.rank - 1, D, ccky_divergence_from(nab, gi, D, h.rank))


def _trace_term(g: np.ndarray, xi: np.ndarray, rank: int) -> np.ndarray:
    """``r g_{a[a1} xi_{a2..ar]}`` as an array indexed ``(a, a1..ar)``."""
    t = np.multiply.outer(g, xi) if rank > 1 else g * xi
    if rank == 1:
        return t
    return rank * antisymmetrize(t, axes=range(1, rank + 1))


def verify_ccky(spec: MetricSpec, h: CCKYField, x) -> float:
    """Max-abs of ``nabla_a h_{a1..ar} - r g_{a[a1} xi_{a2..ar]}``."""
    nab = covariant_derivative_of_form(spec, h, x)
    g = metric_at(spec, x)
    gi = np.linalg.inv(g)
    xi = ccky_divergence_from(nab, gi, spec.dimension, h.rank)
    return float(np.max(np.abs(nab - _trace_term(g, xi, h.rank))))


# conserved forms --------------------------------------------------------------


def _ginv(spec, z):
    return inverse_metric_at(spec, z.x)


def kappa(phi: KYField, spec: MetricSpec, z: PhasePoint) -> Form:
    """``kappa = phi . p`` (last slot)."""
    return contract(phi.at(z.x, spec.dimension), z.p, _ginv(spec, z))


def mu(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> Form:
    """``mu = h ^ p``."""
    if h.rank + 1 > spec.dimension:
        raise ValueError(f"rank overflow: h ^ p has rank {h.rank + 1} > D={spec.dimension}")
    return wedge(h.at(z.x, spec.dimension), Form.one_form(z.p))


def phi_form(phi: KYField, spec: MetricSpec, z: PhasePoint) -> Form:
    """``Phi = kappa ^ p``."""
    return wedge(kappa(phi, spec, z), Form.one_form(z.p))


def f_form(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> Form:
    """``F = mu . p``."""
    return contract(mu(h, spec, z), z.p, _ginv(spec, z))


def momentum_square(spec: MetricSpec, z: PhasePoint):
    return z.p @ _ginv(spec, z) @ z.p


def projector(spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    """``P^a_b = delta^a_b - p^a p_b / p^2``; refuses null momenta."""
    gi = _ginv(spec, z)
    pu = gi @ z.p
    p2 = z.p @ pu
    scale = float(np.sum(np.abs(dual.value(pu) * dual.value(z.p))))
    if abs(float(dual.value(p2))) <= 1e-12 * max(scale, 1e-300):
        raise NullMomentumError(f"p^2 = {float(dual.value(p2)):.3g} is null to working precision")
    return np.eye(spec.dimension) - np.multiply.outer(pu, z.p) / p2


def f_form_projected(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> Form:
    """``F = p^2 h(P, ..., P)``, the projector form of ``(h ^ p) . p``."""
    P = projector(spec, z)
    t = h.at(z.x, spec.dimension).comps
    for ax in range(h.rank):
        t = np.moveaxis(np.tensordot(t, P, axes=([ax], [0])), -1, ax)
    return Form(h.rank, spec.dimension, t * momentum_square(spec, z))


def reconstruct_kappa(Phi: Form, spec: MetricSpec, z: PhasePoint) -> Form:
    """``kappa = (Phi . p) / p^2``."""
    projector(spec, z)  # null check
    return contract(Phi, z.p, _ginv(spec, z)) * (1.0 / momentum_square(spec, z))


def reconstruct_mu(F: Form, spec: MetricSpec, z: PhasePoint) -> Form:
    """``mu = (F ^ p) / p^2``."""
    projector(spec, z)
    return wedge(F, Form.one_form(z.p)) * (1.0 / momentum_square(spec, z))


def square_contract(t: np.ndarray, gi: np.ndarray) -> np.ndarray:
    """``k^a_b = t^{a k l ..} t_{b k l ..}`` for a covariant array ``t``."""
    r = t.ndim
    if r == 1:
        return np.multiply.outer(gi @ t, t)
    up = t
    for ax in range(r):
        up = np.moveaxis(np.tensordot(gi, up, axes=([1], [ax])), 0, ax)
    rest = list(range(1, r))
    return np.tensordot(up, t, axes=(rest, rest))


def killing_tensor_from_ky(spec: MetricSpec, phi: KYField, x) -> np.ndarray:
    """Mixed Killing tensor ``k^a_b = phi^{a k..} phi_{b k..}``."""
    gi = inverse_metric_at(spec, x)
    return square_contract(phi.at(x, spec.dimension).comps, gi)


def killing_tensor_upper(spec: MetricSpec, phi: KYField, x) -> np.ndarray:
    """``k^{ab}``, symmetric."""
    gi = inverse_metric_at(spec, x)
    return killing_tensor_from_ky(spec, phi, x) @ gi


def killing_vector_residual(spec: MetricSpec, xi: Callable, x) -> float:
    """Max-abs of ``nabla_(a xi_b)`` for a covector field ``xi(x)``."""
    nab = covariant_derivative_of_form(spec, _OneForm(xi), x)
    return float(np.max(np.abs(nab + nab.T)))


@dataclass(frozen=True)
class _OneForm:
    fn: Callable
    rank: int = 1


def flat_ky_2form(dim: int, omega: dict, cubic: dict):
    """Flat-space KY 2-form ``phi_ab = omega_ab + B_abc x^c`` with ``B`` a constant 3-form.

    ``omega`` and ``cubic`` map increasing index tuples to constants.
    """
    B = Form.from_independent(dim, 3, cubic).comps if cubic else np.zeros((dim,) * 3)
    W = Form.from_independent(dim, 2, omega).comps if omega else np.zeros((dim, dim))

    def fn(x):
        x = dual.as_array(x)
        return W + np.tensordot(B, x, axes=([2], [0]))

    return KYField(2, fn, "flat_ky")


__all__ = [
    "KYField",
    "CCKYField",
    "NullMomentumError",
    "verify_ky",
    "verify_ccky",
    "ccky_divergence",
    "kappa",
    "mu",
    "phi_form",
    "f_form",
    "f_form_projected",
    "projector",
    "killing_tensor_from_ky",
    "killing_tensor_upper",
    "reconstruct_kappa",
    "reconstruct_mu",
]
