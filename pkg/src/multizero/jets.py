"""Truncated multivariate power series ("jets").

A :class:`JetSpace` is a downward-closed set of multi-indices.  A :class:`Jet`
stores one complex coefficient per index; products drop every term whose
index leaves the set.  Evaluating an :class:`~multizero.expr.Expression` with
jet-valued variables ``x_i = xhat_i + t_i`` yields the Taylor coefficients

    coef[j] = (1 / j!) * d^|j| f / dx^j  (xhat),    j! = j_1! ... j_s!

which are the normalized derivatives used throughout the package.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expr import DomainError, Expression, System, eval_system, evaluate


def graded_indices(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of length ``n`` with ``|j| <= order``.

    Sorted by total degree, then lexicographically *decreasing* within a
    degree, so for n=2: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
    """
    if n < 1 or order < 0:
        raise ValueError("need n >= 1 and order >= 0")
    out: list[tuple[int, ...]] = []
    for d in range(order + 1):
        out.extend(_compositions(n, d))
    return out


def _compositions(n: int, d: int) -> list[tuple[int, ...]]:
    if n == 1:
        return [(d,)]
    res = []
    for first in range(d, -1, -1):
        res.extend((first,) + rest for rest in _compositions(n - 1, d - first))
    return res


def multi_factorial(j) -> int:
    return math.prod(math.factorial(int(k)) for k in j)


class JetSpace:
    """A downward-closed index set with precomputed product tables."""

    def __init__(self, indices: Sequence[Sequence[int]]):
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 2 or len(idx) == 0:
            raise ValueError("indices must be a nonempty 2-d array")
        deg = idx.sum(axis=1)
        # degree first, then lexicographically decreasing
        keys = [-idx[:, k] for k in range(idx.shape[1] - 1, -1, -1)] + [deg]
        order = np.lexsort(keys)
        self.indices = idx[order]
        self.degree = deg[order]
        self.n = idx.shape[1]
        self.size = len(idx)
        if self.degree[0] != 0:
            raise ValueError("index set must contain the zero index")
        self.position = {tuple(int(v) for v in row): k for k, row in enumerate(self.indices)}
        self.max_degree = int(self.degree.max())
        self._build_products()

    def _build_products(self):
        idx = self.indices
        bound = idx.max(axis=0)
        radix = bound + 1
        weights = np.ones(self.n, dtype=np.int64)
        for k in range(self.n - 2, -1, -1):
            weights[k] = weights[k + 1] * radix[k + 1]
        codes = idx @ weights
        sorter = np.argsort(codes)
        sorted_codes = codes[sorter]
        ia, ib, ic = [], [], []
        for a in range(self.size):
            s = idx[a] + idx
            ok = np.all(s <= bound, axis=1)
            cand = np.nonzero(ok)[0]
            if len(cand) == 0:
                continue
            c = s[cand] @ weights
            pos = np.searchsorted(sorted_codes, c)
            pos = np.minimum(pos, self.size - 1)
            hit = sorted_codes[pos] == c
            ia.append(np.full(hit.sum(), a))
            ib.append(cand[hit])
            ic.append(sorter[pos[hit]])
        ia = np.concatenate(ia)
        ib = np.concatenate(ib)
        ic = np.concatenate(ic)
        # fixed summation order per output coefficient
        perm = np.lexsort((ib, ia, ic))
        self._ia, self._ib, self._ic = ia[perm], ib[perm], ic[perm]

    @staticmethod
    @lru_cache(maxsize=None)
    def total(n: int, order: int) -> "JetSpace":
        """All indices of total degree ``<= order`` in ``n`` variables."""
        return JetSpace(graded_indices(n, order))

    @staticmethod
    @lru_cache(maxsize=None)
    def box(dims: tuple[int, ...]) -> "JetSpace":
        """Indices with ``j_k <= dims[k]`` for every k."""
        grids = np.meshgrid(*[np.arange(d + 1) for d in dims], indexing="ij")
        return JetSpace(np.stack([g.ravel() for g in grids], axis=1))

    @staticmethod
    @lru_cache(maxsize=None)
    def flags_with_linear(n_flags: int, n_linear: int) -> "JetSpace":
        """Square-free in the first ``n_flags`` variables, degree <= 1 in the rest."""
        flags = np.array(np.meshgrid(*[[0, 1]] * n_flags, indexing="ij")).reshape(n_flags, -1).T \
            if n_flags else np.zeros((1, 0), dtype=np.int64)
        lin = np.vstack([np.zeros((1, n_linear), dtype=np.int64), np.eye(n_linear, dtype=np.int64)])
        rows = [np.concatenate([f, l]) for f in flags for l in lin]
        return JetSpace(rows)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[self._ia] * b[self._ib]
        return (np.bincount(self._ic, prod.real, self.size)
                + 1j * np.bincount(self._ic, prod.imag, self.size))

    def constant(self, z) -> "Jet":
        c = np.zeros(self.size, dtype=complex)
        c[0] = z
        return Jet(self, c)

    def variable(self, k: int, value=0.0) -> "Jet":
        """The jet ``value + t_k``."""
        e = [0] * self.n
        e[k] = 1
        c = np.zeros(self.size, dtype=complex)
        c[0] = value
        pos = self.position.get(tuple(e))
        if pos is not None:  # absent in an order-0 space
            c[pos] = 1.0
        return Jet(self, c)

    def linear(self, value, coeffs: Sequence) -> "Jet":
        """The jet ``value + sum_k coeffs[k] * t_k``."""
        c = np.zeros(self.size, dtype=complex)
        c[0] = value
        for k, a in enumerate(coeffs):
            if a != 0:
                e = [0] * self.n
                e[k] = 1
                c[self.position[tuple(e)]] += a
        return Jet(self, c)

    def coefficient(self, jet: "Jet", index) -> complex:
        return complex(jet.c[self.position[tuple(index)]])


class Jet:
    __slots__ = ("space", "c")
    __array_priority__ = 100

    def __init__(self, space: JetSpace, c: np.ndarray):
        self.space = space
        self.c = c

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            return other.c
        c = np.zeros(self.space.size, dtype=complex)
        c[0] = other
        return c

    @property
    def value(self) -> complex:
        return complex(self.c[0])

    def __add__(self, other):
        return Jet(self.space, self.c + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.space, self.c - self._lift(other))

    def __rsub__(self, other):
        return Jet(self.space, self._lift(other) - self.c)

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.space, self.space.mul(self.c, self._lift(other)))
        return Jet(self.space, self.c * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise ZeroDivisionError("division by zero")
        return Jet(self.space, self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("jets support nonnegative integer powers only")
        result = self.space.constant(1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if a0 == 0:
            raise ZeroDivisionError("division by a series with zero constant term")
        d = self.space.max_degree
        return _compose(self, [(-1) ** n / a0 ** (n + 1) for n in range(d + 1)])


def _compose(a: Jet, g: Sequence[complex]) -> Jet:
    """sum_n g[n] * (a - a0)^n, evaluated by Horner's rule."""
    h = Jet(a.space, a.c.copy())
    h.c[0] = 0
    out = a.space.constant(g[-1])
    for coef in reversed(g[:-1]):
        out = out * h
        out.c[0] += coef
    return out


def _sin_cos_derivs(a0: complex, d: int, start: int) -> list[complex]:
    # derivative cycle sin -> cos -> -sin -> -cos, starting at `start`
    cyc = [cmath.sin(a0), cmath.cos(a0), -cmath.sin(a0), -cmath.cos(a0)]
    return [cyc[(start + n) % 4] / math.factorial(n) for n in range(d + 1)]


def jet_sin(a: Jet) -> Jet:
    return _compose(a, _sin_cos_derivs(a.value, a.space.max_degree, 0))


def jet_cos(a: Jet) -> Jet:
    return _compose(a, _sin_cos_derivs(a.value, a.space.max_degree, 1))


def jet_tan(a: Jet) -> Jet:
    c = jet_cos(a)
    if c.value == 0:
        raise DomainError("tan at a pole")
    return jet_sin(a) * c.reciprocal()


def jet_exp(a: Jet) -> Jet:
    e = cmath.exp(a.value)
    return _compose(a, [e / math.factorial(n) for n in range(a.space.max_degree + 1)])


def jet_log(a: Jet) -> Jet:
    a0 = a.value
    if a0 == 0:
        raise DomainError("log of a series with zero constant term")
    d = a.space.max_degree
    g = [cmath.log(a0)] + [(-1) ** (n + 1) / (n * a0 ** n) for n in range(1, d + 1)]
    return _compose(a, g)


def jet_sqrt(a: Jet) -> Jet:
    a0 = a.value
    if a0 == 0:
        raise DomainError("sqrt of a series with zero constant term")
    d = a.space.max_degree
    r = cmath.sqrt(a0)
    g, binom = [], 1.0
    for n in range(d + 1):
        g.append(r * binom / a0 ** n)
        binom *= (0.5 - n) / (n + 1)
    return _compose(a, g)


JET_FUNCTIONS = {
    "sin": jet_sin,
    "cos": jet_cos,
    "tan": jet_tan,
    "exp": jet_exp,
    "log": jet_log,
    "sqrt": jet_sqrt,
}


def eval_jet(f: Expression, values: Sequence[Jet]) -> Jet:
    space = values[0].space
    try:
        out = evaluate(f, values, JET_FUNCTIONS, const=space.constant)
    except ZeroDivisionError as exc:
        raise DomainError(str(exc)) from None
    if not isinstance(out, Jet):
        out = space.constant(out)
    return out


# ---------------------------------------------------------------------------
# Taylor tables


@dataclass(frozen=True)
class TaylorTable:
    """Normalized Taylor coefficients of one function, in graded order."""

    point: tuple[complex, ...]
    order: int
    coefficients: np.ndarray

    def __getitem__(self, j) -> complex:
        j = tuple(int(v) for v in j)
        if min(j) < 0:
            return 0j
        if sum(j) > self.order:
            raise KeyError(f"index {j} exceeds table order {self.order}")
        return complex(self.coefficients[JetSpace.total(len(j), self.order).position[j]])


def taylor_table(f: Expression, point, order: int) -> TaylorTable:
    """All ``(1/j!) d^j f (point)`` with ``|j| <= order``."""
    x = np.asarray(point, dtype=complex).ravel()
    if order < 0:
        raise ValueError("order must be nonnegative")
    space = JetSpace.total(len(x), order)
    vals = [space.variable(i, x[i]) for i in range(len(x))]
    jet = eval_jet(f, vals)
    return TaylorTable(tuple(complex(v) for v in x), order, jet.c.copy())


def system_tables(sys: System, point, order: int) -> list[TaylorTable]:
    out = []
    for i, eq in enumerate(sys.equations):
        try:
            out.append(taylor_table(eq, point, order))
        except DomainError as exc:
            raise DomainError(str(exc), equation=i) from None
    return out


def value_and_jacobian(sys: System, point) -> tuple[np.ndarray, np.ndarray]:
    """``f(point)`` and the ``t x s`` Jacobian, from first-order jets."""
    x = np.asarray(point, dtype=complex).ravel()
    space = JetSpace.total(len(x), 1)
    vals = [space.variable(i, x[i]) for i in range(len(x))]
    f = np.empty(sys.t, dtype=complex)
    jac = np.empty((sys.t, sys.s), dtype=complex)
    for i, eq in enumerate(sys.equations):
        try:
            jet = eval_jet(eq, vals)
        except DomainError as exc:
            raise DomainError(str(exc), equation=i) from None
        f[i] = jet.c[0]
        jac[i] = jet.c[1:]
    return f, jac


def _direction_jets(point, dirs: Sequence):
    """Box-jet variables for ``point + sum_k t_k u_k`` over the distinct directions."""
    x = np.asarray(point, dtype=complex).ravel()
    distinct: list[np.ndarray] = []
    mult: list[int] = []
    for v in dirs:
        v = np.asarray(v, dtype=complex).ravel()
        if len(v) != len(x):
            raise ValueError("direction length must match the point")
        for k, u in enumerate(distinct):
            if np.array_equal(u, v):
                mult[k] += 1
                break
        else:
            distinct.append(v)
            mult.append(1)
    space = JetSpace.box(tuple(mult))
    vals = [space.linear(x[i], [u[i] for u in distinct]) for i in range(len(x))]
    return space, vals, tuple(mult)


def directional_derivative(f: Expression, point, dirs: Sequence) -> complex:
    """``(grad_{v1} ... grad_{vk} f)(point)`` (unnormalized).

    Repeated directions share one jet variable, truncated at their
    multiplicity, so long words with few distinct letters stay cheap.
    """
    x = np.asarray(point, dtype=complex).ravel()
    if len(dirs) == 0:
        return complex(evaluate(f, [complex(v) for v in x]))
    space, vals, mult = _direction_jets(x, dirs)
    return space.coefficient(eval_jet(f, vals), mult) * multi_factorial(mult)


def directional_derivatives(sys: System, point, dirs: Sequence) -> np.ndarray:
    """:func:`directional_derivative` for every equation, sharing the jet setup."""
    x = np.asarray(point, dtype=complex).ravel()
    if len(dirs) == 0:
        return eval_system(sys, x)
    space, vals, mult = _direction_jets(x, dirs)
    pos = space.position[mult]
    scale = multi_factorial(mult)
    out = np.empty(sys.t, dtype=complex)
    for i, eq in enumerate(sys.equations):
        try:
            out[i] = eval_jet(eq, vals).c[pos] * scale
        except DomainError as exc:
            raise DomainError(str(exc), equation=i) from None
    return out


def jet_truncate(sys: System, point, k: int) -> System:
    """The polynomial system ``sum_{|j|<=k} coef_j * (x - point)^j``."""
    from .expr import Binary, Const, Pow, Var, add_all

    x = np.asarray(point, dtype=complex).ravel()
    idx = graded_indices(sys.s, k)
    shifted = [Var(i) if x[i] == 0 else Binary("-", Var(i), Const(complex(x[i])))
               for i in range(sys.s)]
    eqs = []
    for table in system_tables(sys, x, k):
        terms = []
        for j, c in zip(idx, table.coefficients):
            if c == 0:
                continue
            factors = [shifted[i] if e == 1 else Pow(shifted[i], e)
                       for i, e in enumerate(j) if e > 0]
            term = factors[0] if c == 1 and factors else Const(complex(c))
            for fac in factors[1:] if c == 1 and factors else factors:
                term = Binary("*", term, fac)
            terms.append(term)
        eqs.append(add_all(terms))
    return System(tuple(eqs), sys.names)
