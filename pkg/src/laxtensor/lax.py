"""Lax tensors ``L^a_b(x, p)`` and their ordinary Lax pairs.

A :class:`LaxOperator` is a catalog entry; :func:`lax_eval` evaluates it at a
phase point (dual-generic in both slots).  With ``p^a = g^{ab} p_b`` and
``p^2 = p_a p^a`` the kinds are

==================  ==========================================================
momentum_square     ``p^a p_b``
scaled              ``E(x, p) * inner``
cckv_rank1          ``h^a p_b - p^a h_b``
f_rank2             ``p^2 h^a_b - p^a p^n h_nb - h^{an} p_n p_b``
charged_f           ``f_rank2`` with ``p -> p + e xi``
ky_rank3            ``phi^a_{bn} p^n``
phi_rank2           ``phi^{an} p_n p_b + p^a p^n phi_nb``
ky_partial_square   ``kappa^{a k..} kappa_{b k..}`` with ``kappa = phi . p``
f_square            ``F^{a k..} F_{b k..}`` with ``F = (h ^ p) . p``
==================  ==========================================================
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import dual
from .manifold import MetricSpec, christoffel_at, frame_at, inverse_metric_at
from .phasespace import HamiltonianSpec, PhasePoint, covariant_time_derivative, hamiltonian_gradients, poisson_bracket
from .symmetry import CCKYField, KYField, NullMomentumError, f_form, kappa, square_contract

KINDS = (
    "momentum_square",
    "scaled",
    "cckv_rank1",
    "f_rank2",
    "charged_f",
    "ky_rank3",
    "phi_rank2",
    "ky_partial_square",
    "f_square",
)

_RANKS = {"cckv_rank1": 1, "f_rank2": 2, "charged_f": 2, "ky_rank3": 3, "phi_rank2": 2}
_NEEDS_KY = {"ky_rank3", "phi_rank2", "ky_partial_square"}
_NEEDS_CCKY = {"cckv_rank1", "f_rank2", "charged_f", "f_square"}


class InterpolationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LaxOperator:
    kind: str
    field: object = None
    inner: Optional["LaxOperator"] = None
    scalar: Optional[Callable] = None
    coupling: float = 0.0
    potential: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Lax kind {self.kind!r}")
        if self.kind == "scaled":
            if self.inner is None or self.scalar is None:
                raise ValueError("scaled kind needs inner operator and scalar E(spec, x, p)")
            return
        if self.kind in _NEEDS_KY and not isinstance(self.field, KYField):
            raise ValueError(f"{self.kind} needs a KYField")
        if self.kind in _NEEDS_CCKY and not isinstance(self.field, CCKYField):
            raise ValueError(f"{self.kind} needs a CCKYField")
        want = _RANKS.get(self.kind)
        if want is not None and self.field.rank != want:
            raise ValueError(f"{self.kind} needs rank {want}, got {self.field.rank}")
        if self.kind == "charged_f" and self.potential is None:
            raise ValueError("charged_f needs the Killing vector potential")

    @property
    def name(self) -> str:
        if self.kind == "scaled":
            return f"scaled({self.inner.name})"
        return self.kind

    # convenience constructors
    @classmethod
    def momentum_square(cls):
        return cls("momentum_square")

    @classmethod
    def scaled(cls, inner, scalar):
        return cls("scaled", inner=inner, scalar=scalar)

    @classmethod
    def charged_f(cls, h, coupling, potential):
        return cls("charged_f", h, coupling=coupling, potential=potential)


def _shifted(Lop, x, p):
    if Lop.kind == "charged_f":
        return p + Lop.coupling * dual.as_array(Lop.potential(x))
    return p


def lax_components(Lop: LaxOperator, spec: MetricSpec, x, p) -> np.ndarray:
    """``L^a_b`` at ``(x, p)``; dual-generic."""
    p = dual.as_array(p)
    if Lop.kind == "scaled":
        return Lop.scalar(spec, x, p) * lax_components(Lop.inner, spec, x, p)
    gi = inverse_metric_at(spec, x)
    p = _shifted(Lop, x, p)
    pu = gi @ p
    k = Lop.kind
    if k == "momentum_square":
        return np.multiply.outer(pu, p)
    fld = dual.as_array(Lop.field.fn(x))
    if k == "cckv_rank1":
        return np.multiply.outer(gi @ fld, p) - np.multiply.outer(pu, fld)
    if k in ("f_rank2", "charged_f"):
        p2 = p @ pu
        hm = gi @ fld
        return p2 * hm - np.multiply.outer(pu, pu @ fld) - np.multiply.outer(hm @ pu, p)
    if k == "ky_rank3":
        return np.einsum("ak,kbn,n->ab", gi, fld, pu)
    if k == "phi_rank2":
        return np.multiply.outer(gi @ fld @ pu, p) + np.multiply.outer(pu, pu @ fld)
    z = PhasePoint(x, p)
    if k == "ky_partial_square":
        return square_contract(kappa(Lop.field, spec, z).comps, gi)
    if k == "f_square":
        return square_contract(f_form(Lop.field, spec, z).comps, gi)
    raise AssertionError(k)


def lax_eval(Lop: LaxOperator, spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    return lax_components(Lop, spec, z.x, z.p)


@dataclass(frozen=True)
class LaxPairMatrices:
    L: np.ndarray
    M: np.ndarray


def m_matrix(H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    """``M^a_b = (dH/dp_n) Gamma^a_nb``."""
    _, u = hamiltonian_gradients(H, spec, z)
    return np.einsum("n,anb->ab", u, christoffel_at(spec, z.x))


def lax_pair_matrices(Lop: LaxOperator, H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint) -> LaxPairMatrices:
    return LaxPairMatrices(np.asarray(lax_eval(Lop, spec, z), dtype=float), m_matrix(H, spec, z))


def covariant_lax_residual(Lop: LaxOperator, H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint) -> float:
    """Max-abs of ``nabla L / dt``; zero iff ``L`` is a Lax tensor for ``H`` at ``z``."""
    d = covariant_time_derivative(lambda x, p: lax_components(Lop, spec, x, p), H, spec, z, (1, 1))
    return float(np.max(np.abs(d)))


def bracket_commutator_residual(Lop: LaxOperator, H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint) -> float:
    """Max-abs of ``{L^a_b, H} - [L, M]^a_b`` with the bracket taken componentwise."""
    D = spec.dimension

    def Hf(x, p):
        return H.value(spec, x, p)

    br = np.array([
        [poisson_bracket(lambda x, p, a=a, b=b: lax_components(Lop, spec, x, p)[a, b], Hf, z) for b in range(D)]
        for a in range(D)
    ])
    pm = lax_pair_matrices(Lop, H, spec, z)
    return float(np.max(np.abs(br - (pm.L @ pm.M - pm.M @ pm.L))))


def lax_pair_series(traj, Lop: LaxOperator, H: HamiltonianSpec, spec: MetricSpec):
    """``(L_i, M_i)`` stacked along a trajectory."""
    Ls, Ms = [], []
    for z in traj.states:
        pm = lax_pair_matrices(Lop, H, spec, z)
        Ls.append(pm.L)
        Ms.append(pm.M)
    return np.array(Ls), np.array(Ms)


def commutator_residual(Ls: np.ndarray, Ms: np.ndarray, step: float) -> float:
    """Max over interior samples of ``|(L_{i+1} - L_{i-1})/2 step - [L_i, M_i]|``."""
    if len(Ls) < 3:
        raise ValueError("need at least 3 samples")
    Ldot = (Ls[2:] - Ls[:-2]) / (2.0 * step)
    L, M = Ls[1:-1], Ms[1:-1]
    comm = L @ M - M @ L
    return float(np.max(np.abs(Ldot - comm)))


def lax_pair_residual(traj, Lop: LaxOperator, H: HamiltonianSpec, spec: MetricSpec) -> float:
    """Centered-difference check of ``dL/dt = [L, M]`` on a uniform trajectory grid."""
    Ls, Ms = lax_pair_series(traj, Lop, H, spec)
    return commutator_residual(Ls, Ms, traj.uniform_step())


def trace_invariants(Lop: LaxOperator, spec: MetricSpec, z: PhasePoint, jmax: int) -> list:
    """``[tr L, tr L^2, ..., tr L^jmax]``."""
    if jmax < 1:
        raise ValueError("jmax must be >= 1")
    L = np.asarray(lax_eval(Lop, spec, z), dtype=float)
    out, P = [], np.eye(L.shape[0])
    for _ in range(jmax):
        P = P @ L
        out.append(float(np.trace(P)))
    return out


# determinant identity ----------------------------------------------------------


def _f_mixed(h: CCKYField, spec: MetricSpec, x, p):
    """``(p^2, F^a_b)`` with ``F = (h ^ p) . p``."""
    z = PhasePoint(x, p)
    gi = inverse_metric_at(spec, x)
    p2 = float(p @ gi @ p)
    F = f_form(h, spec, z).comps
    return p2, gi @ F


def _null_guard(p2, p, gi):
    scale = float(np.sum(np.abs((gi @ p) * p)))
    if abs(p2) <= 1e-12 * max(scale, 1e-300):
        raise NullMomentumError(f"p^2 = {p2:.3g} is null to working precision")


def _chebyshev_nodes(n, hi):
    k = np.arange(n)
    return 0.5 * hi * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * n)))


def _nodes_and_values(h, spec, x, p, n_nodes, halfpowers=False):
    gi = inverse_metric_at(spec, x)
    p2, Fm = _f_mixed(h, spec, x, p)
    _null_guard(p2, p, gi)
    D = spec.dimension
    fnorm = float(np.max(np.abs(Fm)))
    beta_max = D / (fnorm * fnorm / (p2 * p2) + 1.0)
    beta = _chebyshev_nodes(n_nodes, beta_max)
    W = np.array([p2 * np.linalg.det(np.eye(D) + math.sqrt(b) * Fm / p2) for b in beta])
    return beta, W, beta_max, p2


def _solve_vandermonde(V, W, label):
    cond = np.linalg.cond(V)
    if cond > 1e10:
        warnings.warn(f"{label}: interpolation ill-conditioned (cond={cond:.3g})", InterpolationWarning, stacklevel=3)
    return np.linalg.solve(V, W) if V.shape[0] == V.shape[1] else np.linalg.lstsq(V, W, rcond=None)[0]


def genkt_coefficients(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    """Coefficients ``c_0..c_n`` of ``W(beta) = p^2 det(I + sqrt(beta) F / p^2)``, ``n = D // 2``."""
    if h.rank != 2:
        raise ValueError("genkt needs a rank-2 CCKY tensor")
    n = spec.dimension // 2
    p = np.asarray(z.p, dtype=float)
    beta, W, bmax, _ = _nodes_and_values(h, spec, z.x, p, n + 1)
    # scaled monomials keep the Vandermonde matrix O(1)
    s = beta / bmax
    V = np.vander(s, n + 1, increasing=True)
    c = _solve_vandermonde(V, W, "genkt")
    return c / bmax ** np.arange(n + 1)


def genkt_scales(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    """Natural magnitude of each ``c_j``: ``max |W| / beta_max^j`` over the nodes.

    Interpolation errors in ``c_j`` are relative to this, so coefficients that
    vanish identically are judged against it.
    """
    n = spec.dimension // 2
    p = np.asarray(z.p, dtype=float)
    _, W, bmax, _ = _nodes_and_values(h, spec, z.x, p, n + 1)
    return float(np.max(np.abs(W))) / bmax ** np.arange(n + 1)


def genkt_odd_coefficients(h: CCKYField, spec: MetricSpec, z: PhasePoint) -> np.ndarray:
    """Fit ``W`` in powers of ``sqrt(beta)``; returns the odd-power coefficients (should vanish).

    The fit is done in ``s = sqrt(beta / beta_max)`` and the coefficients are
    reported in that scaled variable, so they are directly comparable with
    the magnitude of ``W``.
    """
    n = spec.dimension // 2
    deg = 2 * n
    p = np.asarray(z.p, dtype=float)
    beta, W, bmax, _ = _nodes_and_values(h, spec, z.x, p, 2 * deg + 1)
    s = np.sqrt(beta / bmax)
    V = np.vander(s, deg + 1, increasing=True)
    coef = _solve_vandermonde(V, W, "genkt purity")
    return coef[1::2]


def _probe_momenta(spec: MetricSpec, x, count: int, seed: int) -> np.ndarray:
    """Covectors ``c_i e^i`` in the orthonormal coframe with ``|q^2| >= |c|^2 / 2``.

    Keeping the probes far from the light cone keeps every probe's
    coefficients on the same scale.
    """
    rng = np.random.default_rng(seed)
    eta = np.asarray(spec.signature, dtype=float)
    co = frame_at(spec, x).coframe
    out = []
    while len(out) < count:
        c = rng.normal(size=spec.dimension)
        c /= np.linalg.norm(c)
        if abs(eta @ (c * c)) >= 0.5:
            out.append(c @ co)
    return np.array(out)


def polarize(quadratic: Callable, probes: np.ndarray) -> np.ndarray:
    """Symmetric ``k^{ab}`` with ``quadratic(q) = k^{ab} q_a q_b`` by least squares over ``probes``.

    ``quadratic`` may return a vector of values; the result then carries a
    leading axis over them.
    """
    dim = probes.shape[1]
    pairs = [(a, b) for a in range(dim) for b in range(a, dim)]
    if len(probes) < len(pairs):
        raise ValueError(f"need at least {len(pairs)} probes")
    A = np.array([[q[a] * q[b] * (1.0 if a == b else 2.0) for a, b in pairs] for q in probes])
    vals = np.array([np.atleast_1d(quadratic(q)) for q in probes])
    sol = np.linalg.lstsq(A, vals, rcond=None)[0]
    k = np.zeros((vals.shape[1], dim, dim))
    for (a, b), v in zip(pairs, sol):
        k[:, a, b] = k[:, b, a] = v
    return k


def genkt_killing_tensors(h: CCKYField, spec: MetricSpec, x, seed: int = 7, extra: int = 6) -> np.ndarray:
    """Killing tensors ``k_(j)^{ab}`` at ``x``, stacked along ``j = 0..n``, by polarizing ``c_j``."""
    D = spec.dimension
    probes = _probe_momenta(spec, x, D * (D + 1) // 2 + extra, seed)
    ks = polarize(lambda q: genkt_coefficients(h, spec, PhasePoint(x, q)), probes)
    ks[0] = inverse_metric_at(spec, x)  # exact: the zeroth tensor is the metric
    return ks


@dataclass(frozen=True)
class ChargedConstants:
    """Charged constants per ``j`` with the magnitude scales their errors are measured against."""

    K_tilde: np.ndarray
    K: np.ndarray
    L: np.ndarray
    K_tilde_scale: np.ndarray
    K_scale: np.ndarray
    L_scale: np.ndarray


def charged_constants(h: CCKYField, spec: MetricSpec, z: PhasePoint, xi: Callable, coupling: float) -> ChargedConstants:
    """``K~_j = (p + e xi) k_j (p + e xi)``, ``K_j = (p - e xi) k_j (p - e xi)``, ``L_j = p k_j xi``."""
    ks = genkt_killing_tensors(h, spec, z.x)
    p = np.asarray(z.p, dtype=float)
    v = np.asarray(dual.value(xi(z.x)), dtype=float)
    plus, minus = p + coupling * v, p - coupling * v
    Kt = np.einsum("a,jab,b->j", plus, ks, plus)
    K = np.einsum("a,jab,b->j", minus, ks, minus)
    L = np.einsum("a,jab,b->j", p, ks, v)
    st = genkt_scales(h, spec, PhasePoint(z.x, plus))
    sk = genkt_scales(h, spec, PhasePoint(z.x, minus))
    # L = (K~ - K) / 4e
    sl = (st + sk) / (4 * abs(coupling)) if coupling else np.maximum(st, sk)
    return ChargedConstants(Kt, K, L, st, sk, sl)
