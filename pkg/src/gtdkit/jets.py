"""
Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` stores the Taylor coefficients of a smooth function of
``nvars`` variables around a point, up to total degree ``order`` (at most 4).
Coefficients live in a dense vector indexed by multi-index; multi-indices
are sorted by total degree so that truncating to a lower order is a prefix
slice.

Evaluating any arithmetic expression on seed jets yields every partial
derivative of that expression up to ``order`` in a single pass::

    >>> u, v = seed([2.0, 3.0], order=2)
    >>> (u * v).partial((1, 1))
    1.0

The module-level functions :func:`ln`, :func:`exp`, :func:`sqrt`,
:func:`pow_int` and :func:`pow_real` accept either plain floats or jets, so
code written against them is generic over both rings.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product
from numbers import Real

import numpy as np

from .errors import DomainError

MAX_ORDER = 4


class _Basis:
    """Multi-index bookkeeping for one (nvars, order) pair."""

    def __init__(self, nvars, order):
        self.nvars = nvars
        self.order = order
        indices = [a for a in product(range(order + 1), repeat=nvars) if sum(a) <= order]
        # degree first, then reverse-lexicographic so e_0 precedes e_1
        indices.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
        self.indices = indices
        self.lookup = {a: k for k, a in enumerate(indices)}
        self.size = len(indices)
        self.factorials = np.array(
            [math.prod(math.factorial(x) for x in a) for a in indices], dtype=float
        )
        self.degree_end = [
            sum(1 for a in indices if sum(a) <= d) for d in range(order + 1)
        ]
        li, ri, out = [], [], []
        for i, a in enumerate(indices):
            da = sum(a)
            for j, b in enumerate(indices):
                if da + sum(b) > order:
                    continue
                li.append(i)
                ri.append(j)
                out.append(self.lookup[tuple(x + y for x, y in zip(a, b))])
        self.mul_left = np.array(li, dtype=np.intp)
        self.mul_right = np.array(ri, dtype=np.intp)
        self.mul_out = np.array(out, dtype=np.intp)

    def unit(self, var):
        return self.lookup[tuple(1 if k == var else 0 for k in range(self.nvars))]


@lru_cache(maxsize=None)
def _basis(nvars, order):
    return _Basis(nvars, order)


@lru_cache(maxsize=None)
def _derivative_table(nvars, order, var):
    # coefficient of x^b in d/dx_var equals (b_var + 1) * c[b + e_var]
    hi = _basis(nvars, order)
    lo = _basis(nvars, order - 1)
    src = np.empty(lo.size, dtype=np.intp)
    fac = np.empty(lo.size)
    for k, b in enumerate(lo.indices):
        up = list(b)
        up[var] += 1
        src[k] = hi.lookup[tuple(up)]
        fac[k] = up[var]
    return src, fac


class Jet:
    """Truncated Taylor expansion of a scalar function.

    Parameters
    ----------
    coeffs : array_like
        Taylor coefficients in the canonical multi-index order of
        ``(nvars, order)``; see :meth:`multi_indices`.
    nvars : int
    order : int
    """

    __slots__ = ("coeffs", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvars, order):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (_basis(nvars, order).size,):
            raise ValueError("coefficient vector does not match (nvars, order)")
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    @classmethod
    def constant(cls, value, nvars, order):
        c = np.zeros(_basis(nvars, order).size)
        c[0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, value, var, nvars, order):
        basis = _basis(nvars, order)
        c = np.zeros(basis.size)
        c[0] = value
        if order >= 1:
            c[basis.unit(var)] = 1.0
        return cls(c, nvars, order)

    def multi_indices(self):
        return list(_basis(self.nvars, self.order).indices)

    @property
    def value(self):
        return float(self.coeffs[0])

    def partial(self, index):
        """Partial derivative for multi-index ``index`` (coefficient times index factorial)."""
        index = tuple(int(x) for x in index)
        if len(index) != self.nvars or min(index, default=0) < 0:
            raise IndexError(f"multi-index {index} invalid for {self.nvars} variables")
        if sum(index) > self.order:
            raise IndexError(f"multi-index {index} exceeds jet order {self.order}")
        basis = _basis(self.nvars, self.order)
        k = basis.lookup[index]
        return float(self.coeffs[k] * basis.factorials[k])

    def gradient(self):
        basis = _basis(self.nvars, self.order)
        if self.order < 1:
            raise IndexError("order-0 jet carries no gradient")
        return np.array([self.coeffs[basis.unit(v)] for v in range(self.nvars)])

    def hessian(self):
        if self.order < 2:
            raise IndexError("jet order < 2 carries no Hessian")
        n = self.nvars
        h = np.empty((n, n))
        for a in range(n):
            for b in range(a, n):
                idx = [0] * n
                idx[a] += 1
                idx[b] += 1
                h[a, b] = h[b, a] = self.partial(idx)
        return h

    def derivative(self, var):
        """Jet of ``d/dx_var`` of this function; one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _derivative_table(self.nvars, self.order, var)
        return Jet(self.coeffs[src] * fac, self.nvars, self.order - 1)

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise jet order by truncation")
        if order == self.order:
            return self
        end = _basis(self.nvars, self.order).degree_end[order]
        return Jet(self.coeffs[:end].copy(), self.nvars, order)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable counts")
            return other
        if isinstance(other, (Real, np.floating, np.integer)):
            return None
        return NotImplemented

    def _align(self, other):
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            c = self.coeffs.copy()
            c[0] += float(other)
            return Jet(c, self.nvars, self.order)
        a, b = self._align(o)
        return Jet(a.coeffs + b.coeffs, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.nvars, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return Jet(self.coeffs * float(other), self.nvars, self.order)
        a, b = self._align(o)
        basis = _basis(a.nvars, a.order)
        w = a.coeffs[basis.mul_left] * b.coeffs[basis.mul_right]
        return Jet(np.bincount(basis.mul_out, weights=w, minlength=basis.size), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            if float(other) == 0.0:
                raise DomainError("division by zero")
            return Jet(self.coeffs / float(other), self.nvars, self.order)
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * float(other)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * ln(self))
        if float(p).is_integer():
            return pow_int(self, int(p))
        return pow_real(self, float(p))

    def __rpow__(self, base):
        return exp(self * ln(float(base)))

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"Jet(value={self.value!r}, nvars={self.nvars}, order={self.order})"


def seed(point, order):
    """One independent-variable jet per coordinate of ``point``."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"seed order must be 1..{MAX_ORDER}, got {order}")
    point = [float(x) for x in point]
    n = len(point)
    return [Jet.variable(x, k, n, order) for k, x in enumerate(point)]


def _compose(x, taylor):
    """Evaluate sum_m taylor[m] * (x - x0)^m on the nilpotent part of ``x``."""
    h = Jet(x.coeffs.copy(), x.nvars, x.order)
    h.coeffs[0] = 0.0
    out = Jet.constant(taylor[x.order], x.nvars, x.order)
    for m in range(x.order - 1, -1, -1):
        out = out * h + taylor[m]
    return out


def reciprocal(x):
    if not isinstance(x, Jet):
        if float(x) == 0.0:
            raise DomainError("division by zero")
        return 1.0 / float(x)
    a = x.value
    if a == 0.0:
        raise DomainError("division by zero")
    return _compose(x, [(-1.0) ** m / a ** (m + 1) for m in range(x.order + 1)])


def ln(x):
    if not isinstance(x, Jet):
        x = float(x)
        if x <= 0.0:
            raise DomainError(f"ln of non-positive value {x!r}")
        return math.log(x)
    a = x.value
    if a <= 0.0:
        raise DomainError(f"ln of non-positive value {a!r}")
    coeffs = [math.log(a)] + [(-1.0) ** (m - 1) / (m * a**m) for m in range(1, x.order + 1)]
    return _compose(x, coeffs)


def exp(x):
    if not isinstance(x, Jet):
        return math.exp(float(x))
    ea = math.exp(x.value)
    return _compose(x, [ea / math.factorial(m) for m in range(x.order + 1)])


def sin(x):
    if not isinstance(x, Jet):
        return math.sin(float(x))
    a = x.value
    cycle = [math.sin(a), math.cos(a), -math.sin(a), -math.cos(a)]
    return _compose(x, [cycle[m % 4] / math.factorial(m) for m in range(x.order + 1)])


def cos(x):
    if not isinstance(x, Jet):
        return math.cos(float(x))
    a = x.value
    cycle = [math.cos(a), -math.sin(a), -math.cos(a), math.sin(a)]
    return _compose(x, [cycle[m % 4] / math.factorial(m) for m in range(x.order + 1)])


def sqrt(x):
    if not isinstance(x, Jet):
        x = float(x)
        if x <= 0.0:
            raise DomainError(f"sqrt of non-positive value {x!r}")
        return math.sqrt(x)
    a = x.value
    if a <= 0.0:
        raise DomainError(f"sqrt of non-positive value {a!r}")
    coeffs = []
    binom = 1.0
    for m in range(x.order + 1):
        coeffs.append(binom * a ** (0.5 - m))
        binom *= (0.5 - m) / (m + 1)
    return _compose(x, coeffs)


def pow_int(x, p):
    """``x**p`` by repeated truncated multiplication; any sign of base allowed."""
    p = int(p)
    if p < 0:
        return reciprocal(pow_int(x, -p))
    if not isinstance(x, Jet):
        return float(x) ** p
    result = Jet.constant(1.0, x.nvars, x.order)
    base = x
    while p:
        if p & 1:
            result = result * base
        p >>= 1
        if p:
            base = base * base
    return result


def pow_real(x, p):
    """``x**p`` as ``exp(p ln x)``; base must be positive."""
    if not isinstance(x, Jet) and not isinstance(p, Jet):
        x = float(x)
        if x <= 0.0:
            raise DomainError(f"non-integer power of non-positive base {x!r}")
        return x ** float(p)
    return exp(p * ln(x))


def value_of(x):
    return x.value if isinstance(x, Jet) else float(x)
