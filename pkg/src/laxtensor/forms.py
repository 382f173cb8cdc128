"""Antisymmetric covariant forms stored densely over all index tuples.

Conventions used everywhere in the package:

* contraction with a vector uses the LAST slot,
  ``(a . v)_{i..j} = a_{i..j n} v^n``;
* a covector ``p`` enters a wedge as the 1-form ``p_a``;
* the Hodge dual places the free indices first in the permutation symbol,
  ``(*a)_{b..} = (1/r!) sqrt|g| eps_{b.. a1..ar} a^{a1..ar}``, with orientation
  given by coordinate order.  With these choices ``*(a ^ p) = (*a) . p`` for
  a rank-2 ``a`` in four dimensions.

Components may be floats or object arrays of duals; all operations are
written with generic numpy calls so both work.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dual


class RankOverflowWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Form:
    rank: int
    dim: int
    comps: np.ndarray

    def __post_init__(self):
        if not 0 <= self.rank <= self.dim:
            raise ValueError(f"rank {self.rank} not in [0, {self.dim}]")
        comps = np.asarray(self.comps)
        if comps.shape != (self.dim,) * self.rank:
            raise ValueError(f"components shape {comps.shape} != {(self.dim,) * self.rank}")
        object.__setattr__(self, "comps", comps)

    @classmethod
    def zero(cls, dim: int, rank: int) -> "Form":
        return cls(rank, dim, np.zeros((dim,) * rank))

    @classmethod
    def scalar(cls, dim: int, value) -> "Form":
        c = np.empty((), dtype=object if dual.is_dual(value) else float)
        c[()] = value
        return cls(0, dim, c)

    @classmethod
    def one_form(cls, p) -> "Form":
        p = dual.as_array(p)
        return cls(1, p.shape[0], p)

    @classmethod
    def from_independent(cls, dim: int, rank: int, values: dict) -> "Form":
        """Build from ``{(i, j, ...): value}`` given on any index order; the rest is filled by antisymmetry."""
        has_dual = any(dual.is_dual(v) for v in values.values())
        comps = np.zeros((dim,) * rank, dtype=object if has_dual else float)
        if has_dual:
            comps[...] = 0.0
        for idx, v in values.items():
            if len(set(idx)) != rank:
                raise ValueError(f"repeated index in {idx}")
            for perm in itertools.permutations(range(rank)):
                comps[tuple(idx[i] for i in perm)] = _perm_sign(perm) * v
        return cls(rank, dim, comps)

    def __add__(self, other: "Form") -> "Form":
        _check_same(self, other)
        return Form(self.rank, self.dim, self.comps + other.comps)

    def __sub__(self, other: "Form") -> "Form":
        _check_same(self, other)
        return Form(self.rank, self.dim, self.comps - other.comps)

    def __mul__(self, s) -> "Form":
        return Form(self.rank, self.dim, self.comps * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Form":
        return Form(self.rank, self.dim, -self.comps)

    def value(self) -> "Form":
        return Form(self.rank, self.dim, dual.value(self.comps))

    def max_abs(self) -> float:
        v = dual.value(self.comps)
        return float(np.max(np.abs(v))) if v.size else 0.0


def _check_same(a: Form, b: Form):
    if a.dim != b.dim or a.rank != b.rank:
        raise ValueError(f"form mismatch: rank {a.rank}/{b.rank}, dim {a.dim}/{b.dim}")


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _signed_perms(n: int):
    return tuple((p, _perm_sign(p)) for p in itertools.permutations(range(n)))


@lru_cache(maxsize=None)
def _shuffles(r: int, s: int):
    out = []
    for first in itertools.combinations(range(r + s), r):
        rest = tuple(i for i in range(r + s) if i not in first)
        perm = first + rest
        out.append((perm, _perm_sign(perm)))
    return tuple(out)


@lru_cache(maxsize=None)
def levi_civita(dim: int) -> np.ndarray:
    eps = np.zeros((dim,) * dim)
    for p, s in _signed_perms(dim):
        eps[p] = s
    return eps


def antisymmetrize(t: np.ndarray, axes=None) -> np.ndarray:
    """Normalized antisymmetrizer over ``axes`` (all axes by default)."""
    t = np.asarray(t)
    axes = tuple(range(t.ndim)) if axes is None else tuple(axes)
    n = len(axes)
    acc = None
    for p, s in _signed_perms(n):
        order = list(range(t.ndim))
        for i, a in enumerate(axes):
            order[a] = axes[p[i]]
        term = np.transpose(t, order) * s
        acc = term if acc is None else acc + term
    return acc / math.factorial(n)


def wedge(a: Form, b: Form) -> Form:
    """``(a ^ b) = (r+s)!/(r! s!) Alt(a (x) b)``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} != {b.dim}")
    r, s = a.rank, b.rank
    if r + s > a.dim:
        warnings.warn(f"wedge of ranks {r}+{s} exceeds dimension {a.dim}", RankOverflowWarning, stacklevel=2)
        return Form.zero(a.dim, a.dim)
    outer = np.multiply.outer(a.comps, b.comps)
    acc = None
    # a and b are already antisymmetric, so summing over shuffles suffices
    for perm, sign in _shuffles(r, s):
        inv = np.argsort(perm)
        term = np.transpose(outer, inv) * sign
        acc = term if acc is None else acc + term
    return Form(r + s, a.dim, acc)


def contract(a: Form, v, ginv=None) -> Form:
    """Contract the last slot of ``a`` with vector ``v``.

    If ``ginv`` is given, ``v`` is a covector and is raised first.
    """
    if a.rank < 1:
        raise ValueError("cannot contract a rank-0 form")
    v = dual.as_array(v)
    if ginv is not None:
        v = ginv @ v
    return Form(a.rank - 1, a.dim, np.tensordot(a.comps, v, axes=([a.rank - 1], [0])))


def raise_all(a: Form, ginv) -> np.ndarray:
    t = a.comps
    for ax in range(a.rank):
        t = np.moveaxis(np.tensordot(ginv, t, axes=([1], [ax])), 0, ax)
    return t


def hodge_from_metric(g, a: Form) -> Form:
    """Hodge dual with the metric matrix ``g`` at the point. Dual-generic."""
    D, r = a.dim, a.rank
    gi = dual.inv(g)
    vol = dual.sqrt(abs(dual.det(g)))
    up = raise_all(a, gi)
    eps = levi_civita(D)
    if r == 0:
        comps = eps * up[()]
    else:
        comps = np.tensordot(eps, up, axes=(list(range(D - r, D)), list(range(r))))
    return Form(D - r, D, comps * (vol / math.factorial(r)))


def hodge(spec, x, a: Form) -> Form:
    from .manifold import metric_at

    return hodge_from_metric(metric_at(spec, x), a)


def form_identity_residual(a: Form, p, ginv) -> float:
    """Max-abs of ``(a.p) ^ p + (a ^ p).p - p^2 a``."""
    p = dual.as_array(p)
    pf = Form.one_form(p)
    p2 = p @ ginv @ p
    if a.rank == 0:
        lhs = contract(wedge(a, pf), p, ginv)
    elif a.rank == a.dim:
        lhs = wedge(contract(a, p, ginv), pf)
    else:
        lhs = wedge(contract(a, p, ginv), pf) + contract(wedge(a, pf), p, ginv)
    return (lhs - a * p2).max_abs()
