"""Forward-mode dual numbers carrying a vector of first-order parts.

A :class:`Dual` holds a real value and a gradient with respect to ``k`` seed
directions, so one evaluation of a function of ``D`` coordinates yields all
``D`` partial derivatives at once.  Duals mix freely with floats, with numpy
scalars, and inside object-dtype arrays, which is how tensors of duals are
represented throughout the package.
"""

from __future__ import annotations

import math
import operator

import numpy as np


class Dual:
    """Real number plus an infinitesimal part ``der`` with ``eps**2 == 0``."""

    __slots__ = ("val", "der")

    def __init__(self, val, der):
        self.val = val
        self.der = der

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"

    # arithmetic -------------------------------------------------------------

    def __add__(self, o):
        if type(o) is Dual:
            return Dual(self.val + o.val, self.der + o.der)
        if isinstance(o, np.ndarray):
            return NotImplemented
        return Dual(self.val + o, self.der)

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is Dual:
            return Dual(self.val - o.val, self.der - o.der)
        if isinstance(o, np.ndarray):
            return NotImplemented
        return Dual(self.val - o, self.der)

    def __rsub__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        return Dual(o - self.val, -self.der)

    def __mul__(self, o):
        if type(o) is Dual:
            return Dual(self.val * o.val, self.der * o.val + o.der * self.val)
        if isinstance(o, np.ndarray):
            return NotImplemented
        return Dual(self.val * o, self.der * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if type(o) is Dual:
            v = self.val / o.val
            return Dual(v, (self.der - o.der * v) / o.val)
        if isinstance(o, np.ndarray):
            return NotImplemented
        return Dual(self.val / o, self.der / o)

    def __rtruediv__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        v = o / self.val
        return Dual(v, self.der * (-v / self.val))

    def __pow__(self, n):
        if type(n) is Dual:
            return (n * self.log()).exp()
        if isinstance(n, np.ndarray):
            return NotImplemented
        if n == 2:
            return Dual(self.val * self.val, self.der * (2.0 * self.val))
        return Dual(self.val**n, self.der * (n * self.val ** (n - 1)))

    def __rpow__(self, base):
        return (self * math.log(base)).exp()

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.val < 0 else self

    # comparisons act on the value so chart predicates accept duals
    def __lt__(self, o):
        return self.val < _v(o)

    def __le__(self, o):
        return self.val <= _v(o)

    def __gt__(self, o):
        return self.val > _v(o)

    def __ge__(self, o):
        return self.val >= _v(o)

    # elementary functions; numpy calls these by name on object arrays
    def sqrt(self):
        s = math.sqrt(self.val)
        return Dual(s, self.der * (0.5 / s))

    def exp(self):
        e = math.exp(self.val)
        return Dual(e, self.der * e)

    def log(self):
        return Dual(math.log(self.val), self.der / self.val)

    def sin(self):
        return Dual(math.sin(self.val), self.der * math.cos(self.val))

    def cos(self):
        return Dual(math.cos(self.val), self.der * -math.sin(self.val))

    def tan(self):
        t = math.tan(self.val)
        return Dual(t, self.der * (1.0 + t * t))

    def arctan(self):
        return Dual(math.atan(self.val), self.der / (1.0 + self.val * self.val))

    def arcsin(self):
        return Dual(math.asin(self.val), self.der / math.sqrt(1.0 - self.val**2))

    def arccos(self):
        return Dual(math.acos(self.val), self.der / -math.sqrt(1.0 - self.val**2))

    def sinh(self):
        return Dual(math.sinh(self.val), self.der * math.cosh(self.val))

    def cosh(self):
        return Dual(math.cosh(self.val), self.der * math.sinh(self.val))

    def tanh(self):
        t = math.tanh(self.val)
        return Dual(t, self.der * (1.0 - t * t))

    def square(self):
        return self * self

    def absolute(self):
        return abs(self)

    def negative(self):
        return -self

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if any(isinstance(i, np.ndarray) for i in inputs):
            conv = [_object_scalar(i) if type(i) is Dual else i for i in inputs]
            return ufunc(*conv)
        if len(inputs) == 2 and ufunc in _BINARY:
            a, b = (i if type(i) is Dual else float(i) for i in inputs)
            return _BINARY[ufunc](a, b)
        if len(inputs) == 1 and ufunc.__name__ in _UNARY:
            return getattr(inputs[0], ufunc.__name__)()
        return NotImplemented


_BINARY = {
    np.add: operator.add,
    np.subtract: operator.sub,
    np.multiply: operator.mul,
    np.true_divide: operator.truediv,
    np.power: operator.pow,
}
_UNARY = frozenset(
    "sqrt exp log sin cos tan arctan arcsin arccos sinh cosh tanh square absolute negative".split()
)


def _v(o):
    return o.val if type(o) is Dual else o


def _object_scalar(d):
    out = np.empty((), dtype=object)
    out[()] = d
    return out


# tensors of duals ------------------------------------------------------------


def seed(values, offset: int, total: int) -> np.ndarray:
    """Object array of duals whose ``i``-th entry has unit part at ``offset + i``."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape[0], dtype=object)
    eye = np.eye(total)
    for i, v in enumerate(values):
        out[i] = Dual(float(v), eye[offset + i].copy())
    return out


def is_dual(a) -> bool:
    if type(a) is Dual:
        return True
    a = np.asarray(a)
    return a.dtype == object and any(type(e) is Dual for e in a.flat)


def as_array(a) -> np.ndarray:
    """Array of floats, or an object array when any entry is a dual."""
    obj = np.asarray(a, dtype=object)
    if any(type(e) is Dual for e in obj.flat):
        return obj
    return np.asarray(a, dtype=float)


def value(a):
    """Strip infinitesimal parts."""
    if type(a) is Dual:
        return a.val
    a = np.asarray(a)
    if a.dtype != object:
        return a
    return np.array([_v(e) for e in a.flat], dtype=float).reshape(a.shape)


def split(a, k: int):
    """Return ``(values, derivatives)`` with derivatives on a trailing axis of length ``k``."""
    a = np.asarray(a, dtype=object) if type(a) is Dual else np.asarray(a)
    if a.dtype != object:
        return a.astype(float), np.zeros(a.shape + (k,))
    flat = a.ravel()
    vals = np.empty(flat.shape[0])
    ders = np.zeros((flat.shape[0], k))
    for i, e in enumerate(flat):
        if type(e) is Dual:
            vals[i] = e.val
            ders[i] = e.der
        else:
            vals[i] = e
    return vals.reshape(a.shape), ders.reshape(a.shape + (k,))


def join(vals, ders) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    out = np.empty(vals.shape, dtype=object)
    flat_d = ders.reshape((-1, ders.shape[-1]))
    for i, v in enumerate(vals.flat):
        out.flat[i] = Dual(float(v), flat_d[i].copy())
    return out


def _nseeds(a) -> int:
    for e in np.asarray(a, dtype=object).flat:
        if type(e) is Dual:
            return e.der.shape[0]
    return 0


def inv(m):
    """Matrix inverse; propagates duals through ``d(A^-1) = -A^-1 dA A^-1``."""
    m = np.asarray(m)
    if m.dtype != object:
        return np.linalg.inv(m)
    k = _nseeds(m)
    a, da = split(m, k)
    ai = np.linalg.inv(a)
    dai = -np.einsum("ij,jkc,kl->ilc", ai, da, ai)
    return join(ai, dai)


def det(m):
    """Determinant; ``d det A = det A tr(A^-1 dA)`` for duals."""
    m = np.asarray(m)
    if m.dtype != object:
        return float(np.linalg.det(m))
    k = _nseeds(m)
    a, da = split(m, k)
    d = float(np.linalg.det(a))
    return Dual(d, d * np.einsum("ij,jic->c", np.linalg.inv(a), da))


def sqrt(x):
    return x.sqrt() if type(x) is Dual else math.sqrt(x)
