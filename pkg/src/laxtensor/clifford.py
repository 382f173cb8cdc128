"""Gamma matrices, spin connection and Clifford Lax tensors.

Euclidean generators are built by Pauli-block doubling,
``g_i -> sx (x) g_i`` plus ``sy (x) 1`` and ``sz (x) 1``; odd dimensions append
the (phase-fixed) product of the others.  A timelike leg multiplies its
generator by ``i``.  Every entry is then one of ``0, +-1, +-i``, so the
anticommutators can be checked in exact integer arithmetic.

Frame indices are hatted in the docstrings; ``gamma^a`` with a coordinate
index means ``e_i^a gamma^i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import dual
from .forms import Form, _signed_perms, contract, wedge
from .manifold import MetricSpec, christoffel_at, frame_at, frame_derivatives, inverse_metric_at, ricci_rotation_at
from .phasespace import HamiltonianSpec, PhasePoint, gradients, hamiltonian_gradients, poisson_bracket
from .symmetry import CCKYField, KYField

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class GammaBasis:
    dim: int
    signature: tuple
    gammas: tuple

    @property
    def size(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def eta(self) -> np.ndarray:
        return np.diag(np.asarray(self.signature, dtype=float))

    def identity(self) -> np.ndarray:
        return np.eye(self.size, dtype=complex)


def _euclidean(D):
    gam = [_SX, _SY]
    while len(gam) + 2 <= D:
        n = gam[0].shape[0]
        gam = [np.kron(_SX, g) for g in gam] + [np.kron(_SY, np.eye(n)), np.kron(_SZ, np.eye(n))]
    if D % 2:
        k = (D - 1) // 2
        prod = np.eye(gam[0].shape[0], dtype=complex)
        for g in gam:
            prod = prod @ g
        gam.append((1j) ** k * prod)
    return gam


def build_gamma_basis(dim: int, signature=None) -> GammaBasis:
    if not 2 <= dim <= 10:
        raise ValueError(f"dimension {dim} outside supported range 2..10")
    signature = tuple((1,) * dim if signature is None else signature)
    if len(signature) != dim or any(s not in (1, -1) for s in signature):
        raise ValueError("signature must be D entries of +-1")
    gam = _euclidean(dim)
    out = []
    for g, s in zip(gam, signature):
        g = g * (1j if s < 0 else 1)
        # products of Pauli blocks are exact; clean any signed zeros
        out.append(np.round(g.real) + 1j * np.round(g.imag))
    for g in out:
        g.setflags(write=False)
    return GammaBasis(dim, signature, tuple(out))


def _gauss_int(m):
    return np.rint(m.real).astype(np.int64), np.rint(m.imag).astype(np.int64)


def _gauss_mul(a, b):
    (ar, ai), (br, bi) = a, b
    return ar @ br - ai @ bi, ar @ bi + ai @ br


def anticommutator_defect(basis: GammaBasis) -> int:
    """Max-abs entry of ``{g^i, g^j} - 2 eta^ij 1`` in exact Gaussian-integer arithmetic."""
    ints = [_gauss_int(g) for g in basis.gammas]
    for g, (r, i) in zip(basis.gammas, ints):
        if not (np.array_equal(r, g.real) and np.array_equal(i, g.imag)):
            raise ValueError("gamma entries are not Gaussian integers")
    N = basis.size
    worst = 0
    for a in range(basis.dim):
        for b in range(a, basis.dim):
            r1, i1 = _gauss_mul(ints[a], ints[b])
            r2, i2 = _gauss_mul(ints[b], ints[a])
            target = 2 * basis.signature[a] * np.eye(N, dtype=np.int64) if a == b else 0
            worst = max(worst, int(np.max(np.abs(r1 + r2 - target))), int(np.max(np.abs(i1 + i2))))
    return worst


def gamma_antisym(basis: GammaBasis, indices) -> np.ndarray:
    """``gamma^{i1..ir} = (1/r!) sum_sigma sign(sigma) gamma^{i_sigma(1)}..gamma^{i_sigma(r)}``."""
    indices = tuple(int(i) for i in indices)
    if any(not 0 <= i < basis.dim for i in indices):
        raise IndexError(f"frame index out of range in {indices}")
    r = len(indices)
    if r == 0:
        return basis.identity()
    acc = np.zeros((basis.size, basis.size), dtype=complex)
    for perm, sign in _signed_perms(r):
        prod = basis.gammas[indices[perm[0]]]
        for k in perm[1:]:
            prod = prod @ basis.gammas[indices[k]]
        acc += sign * prod
    return acc / math.factorial(r)


def _ordered_product(basis, combo):
    prod = basis.identity()
    for i in combo:
        prod = prod @ basis.gammas[i]
    return prod


def frame_components(form: Form, coframe_inv) -> np.ndarray:
    """``w_{i..} = e_i^a .. w_{a..}`` using rows of the frame matrix; dual-generic."""
    t = form.comps
    for ax in range(form.rank):
        t = np.moveaxis(np.tensordot(coframe_inv, t, axes=([1], [ax])), 0, ax)
    return t


def clifford_from_frame(basis: GammaBasis, comps_by_rank: dict) -> np.ndarray:
    """``sum_r (1/r!) w_{i1..ir} gamma^{i1..ir}`` for real frame components (dense arrays)."""
    out = np.zeros((basis.size, basis.size), dtype=complex)
    for r, w in comps_by_rank.items():
        w = np.asarray(w, dtype=float)
        if r == 0:
            out += float(w) * basis.identity()
            continue
        # sum over ordered tuples / r! == sum over increasing combinations
        for combo in itertools.combinations(range(basis.dim), r):
            c = w[combo]
            if c != 0.0:
                out += c * _ordered_product(basis, combo)
    return out


def form_to_clifford(forms, basis: GammaBasis, frame) -> np.ndarray:
    """``Lambda = sum_r (1/r!) w_{i1..ir} gamma^{i1..ir}`` for a list of coordinate forms."""
    comps = {}
    for f in forms:
        if f.rank > basis.dim:
            raise ValueError(f"rank {f.rank} exceeds dimension {basis.dim}")
        w = dual.value(frame_components(f, frame.frame))
        comps[f.rank] = comps.get(f.rank, 0.0) + w
    return clifford_from_frame(basis, comps)


def spin_connection_at(spec: MetricSpec, x, basis: Optional[GammaBasis] = None) -> np.ndarray:
    """``Sigma_a = 1/4 R_{a m n} gamma^{mn}`` stacked along ``a``."""
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    R = ricci_rotation_at(spec, x)  # R[m, a, n]
    low = np.einsum("m,man->amn", np.asarray(spec.signature, dtype=float), R)
    D = spec.dimension
    pairs = {(m, n): gamma_antisym(basis, (m, n)) for m in range(D) for n in range(D) if m != n}
    out = np.zeros((D, basis.size, basis.size), dtype=complex)
    for a in range(D):
        for (m, n), g in pairs.items():
            out[a] += 0.25 * low[a, m, n] * g
    return out


def coordinate_gammas(basis: GammaBasis, frame: np.ndarray) -> np.ndarray:
    """``gamma^a = e_i^a gamma^i``."""
    return np.einsum("ia,ijk->ajk", frame, np.array(basis.gammas))


def spin_compatibility_residual(spec: MetricSpec, x, basis: Optional[GammaBasis] = None) -> float:
    """Max-abs of ``d_a gamma^b + Gamma^b_an gamma^n + [Sigma_a, gamma^b]``."""
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    e, _, de = frame_derivatives(spec, x)
    G = np.array(basis.gammas)
    gc = coordinate_gammas(basis, e)
    dg = np.einsum("iba,ijk->abjk", de, G)
    gam = christoffel_at(spec, x)
    conn = np.einsum("ban,njk->abjk", gam, gc)
    S = spin_connection_at(spec, x, basis)
    comm = np.einsum("ajk,bkl->abjl", S, gc) - np.einsum("bjk,akl->abjl", gc, S)
    return float(np.max(np.abs(dg + conn + comm)))


# Clifford Lax tensors -----------------------------------------------------------

CLIFFORD_KINDS = ("momentum", "ky", "ccky", "scaled")


@dataclass(frozen=True)
class CliffordLax:
    kind: str
    field: object = None
    inner: Optional["CliffordLax"] = None
    scalar: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in CLIFFORD_KINDS:
            raise ValueError(f"unknown Clifford kind {self.kind!r}")
        if self.kind == "ky" and not isinstance(self.field, KYField):
            raise ValueError("ky kind needs a KYField")
        if self.kind == "ccky" and not isinstance(self.field, CCKYField):
            raise ValueError("ccky kind needs a CCKYField")
        if self.kind == "scaled" and (self.inner is None or self.scalar is None):
            raise ValueError("scaled kind needs inner and scalar")

    @property
    def name(self) -> str:
        return f"scaled({self.inner.name})" if self.kind == "scaled" else self.kind


def clifford_forms(cl: CliffordLax, spec: MetricSpec, x, p) -> list:
    """Coordinate forms whose Clifford image is ``Lambda``; dual-generic."""
    p = dual.as_array(p)
    if cl.kind == "momentum":
        return [Form.one_form(p)]
    if cl.kind == "scaled":
        E = cl.scalar(spec, x, p)
        return [f * E for f in clifford_forms(cl.inner, spec, x, p)]
    fld = cl.field.at(x, spec.dimension)
    if cl.kind == "ky":
        return [contract(fld, p, inverse_metric_at(spec, x))]
    return [wedge(fld, Form.one_form(p))]


def _frame_coefficients(cl, spec, x, p):
    """``{rank: frame components}`` (dual-generic)."""
    fr = frame_at(spec, x)
    out = {}
    for f in clifford_forms(cl, spec, x, p):
        w = frame_components(f, fr.frame)
        out[f.rank] = out.get(f.rank, 0.0) + w
    return out


def clifford_lax_eval(cl: CliffordLax, spec: MetricSpec, z: PhasePoint, basis: Optional[GammaBasis] = None) -> np.ndarray:
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    comps = {r: dual.value(w) for r, w in _frame_coefficients(cl, spec, z.x, z.p).items()}
    return clifford_from_frame(basis, comps)


def spin_m_matrix(H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint, basis: GammaBasis) -> np.ndarray:
    _, u = hamiltonian_gradients(H, spec, z)
    return np.einsum("n,njk->jk", u, spin_connection_at(spec, z.x, basis))


def clifford_lax_pair(cl: CliffordLax, H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint,
                      basis: Optional[GammaBasis] = None):
    """``(Lambda, M)`` with ``M = (dH/dp_n) Sigma_n``."""
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    return clifford_lax_eval(cl, spec, z, basis), spin_m_matrix(H, spec, z, basis)


def clifford_covariant_residual(cl: CliffordLax, H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint,
                                basis: Optional[GammaBasis] = None) -> float:
    """Max-abs of ``dLambda/dt - [Lambda, M]`` with the exact flow derivative of the frame coefficients."""
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    D = spec.dimension
    hx, hp = hamiltonian_gradients(H, spec, z)
    xd, pd = dual.seed(z.x, 0, 2 * D), dual.seed(z.p, D, 2 * D)
    rates = {}
    for r, w in _frame_coefficients(cl, spec, xd, pd).items():
        _, d = dual.split(w, 2 * D)
        rates[r] = d[..., :D] @ hp - d[..., D:] @ hx
    Ldot = clifford_from_frame(basis, rates)
    L = clifford_lax_eval(cl, spec, z, basis)
    M = spin_m_matrix(H, spec, z, basis)
    return float(np.max(np.abs(Ldot - (L @ M - M @ L))))


def clifford_lax_pair_residual(traj, cl: CliffordLax, H: HamiltonianSpec, spec: MetricSpec,
                               basis: Optional[GammaBasis] = None) -> float:
    """Centered-difference check of ``dLambda/dt = [Lambda, M]`` on a uniform trajectory grid."""
    basis = basis or build_gamma_basis(spec.dimension, spec.signature)
    Ls, Ms = [], []
    for z in traj.states:
        L, M = clifford_lax_pair(cl, H, spec, z, basis)
        Ls.append(L)
        Ms.append(M)
    Ls, Ms = np.array(Ls), np.array(Ms)
    if len(Ls) < 3:
        raise ValueError("need at least 3 samples")
    step = traj.uniform_step()
    Ldot = (Ls[2:] - Ls[:-2]) / (2.0 * step)
    L, M = Ls[1:-1], Ms[1:-1]
    return float(np.max(np.abs(Ldot - (L @ M - M @ L))))


def eigen_invariants(L: np.ndarray, jmax: Optional[int] = None) -> np.ndarray:
    """``[tr L, tr L^2, ..., tr L^jmax]`` (real parts); conjugation invariants of ``L``."""
    jmax = jmax or L.shape[0]
    out, P = [], np.eye(L.shape[0], dtype=L.dtype)
    for _ in range(jmax):
        P = P @ L
        out.append(np.trace(P))
    return np.array(out)


def frame_momentum_bracket_residual(spec: MetricSpec, z: PhasePoint, mass: float = 1.0) -> float:
    """Max over legs of ``(1/m) p^m p_n R^n_{m i} - {p_i, p^2/2m}`` with ``p_i = e_i^a p_a``."""
    R = ricci_rotation_at(spec, z.x)  # R[n, m, i]
    gi = inverse_metric_at(spec, z.x)
    p = np.asarray(z.p, dtype=float)
    pu = gi @ p
    ph = frame_at(spec, z.x).frame @ p
    lhs = np.einsum("m,n,nmi->i", pu, ph, R) / mass
    H = HamiltonianSpec.geodesic(mass)

    def Hf(x, q):
        return H.value(spec, x, q)

    rhs = np.array([
        poisson_bracket(lambda x, q, i=i: frame_at(spec, x).frame[i] @ q, Hf, z)
        for i in range(spec.dimension)
    ])
    return float(np.max(np.abs(lhs - rhs)))


__all__ = [
    "GammaBasis",
    "build_gamma_basis",
    "anticommutator_defect",
    "gamma_antisym",
    "form_to_clifford",
    "spin_connection_at",
    "spin_compatibility_residual",
    "CliffordLax",
    "clifford_lax_eval",
    "clifford_lax_pair",
    "clifford_covariant_residual",
    "clifford_lax_pair_residual",
    "eigen_invariants",
    "frame_momentum_bracket_residual",
]
