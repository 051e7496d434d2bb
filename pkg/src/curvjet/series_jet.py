"""Truncated multivariate power series over exact rationals.

A :class:`TruncatedSeries` in ``m`` variables with order ``N`` stores the
coefficients of every monomial of total degree ``<= N``; it is the jet of an
analytic function at the origin.  ``order`` is the *reliable* order: a
derivative consumes one degree, so ``derive`` returns a series of order
``N - 1`` and callers never see coefficients they cannot trust.

Binary arithmetic requires identical ``(m, N)``; use :meth:`truncate` to bring
operands to a common order explicitly.

Monomials are packed into Python ints, ``sum(alpha_i << (SHIFT * i))``, so
that monomial multiplication is integer addition.  Exponents stay below
``2**SHIFT`` because orders are capped at :data:`MAX_ORDER`.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

from .errors import DegenerateFormError, DimensionError, PreconditionError
from .rational import ONE, ZERO, Q, Scalar, fmt
from . import rational as rl

SHIFT = 6
MASK = (1 << SHIFT) - 1
MAX_ORDER = MASK


def pack(alpha: Sequence[int]) -> int:
    key = 0
    for i, a in enumerate(alpha):
        if a < 0 or a > MASK:
            raise ValueError(f"exponent {a} out of range")
        key |= a << (SHIFT * i)
    return key


def unpack(key: int, m: int) -> tuple[int, ...]:
    return tuple((key >> (SHIFT * i)) & MASK for i in range(m))


@lru_cache(maxsize=None)
def _degree(key: int) -> int:
    d = 0
    while key:
        d += key & MASK
        key >>= SHIFT
    return d


def monomial_order_key(alpha: Sequence[int]) -> tuple:
    """Graded order, then by last-variable exponent, then lexicographic."""
    return (sum(alpha), alpha[-1] if alpha else 0, tuple(alpha))


@lru_cache(maxsize=None)
def monomials(m: int, max_degree: int, min_degree: int = 0) -> tuple[tuple[int, ...], ...]:
    """All exponent vectors with ``min_degree <= |alpha| <= max_degree``, sorted."""
    out = []
    for d in range(min_degree, max_degree + 1):
        for combo in combinations_with_replacement(range(m), d):
            alpha = [0] * m
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    out.sort(key=monomial_order_key)
    return tuple(out)


class TruncatedSeries:
    """Immutable jet ``sum c_alpha x^alpha`` with ``|alpha| <= order``."""

    __slots__ = ("nvars", "order", "_terms", "_sorted")

    def __init__(self, nvars: int, order: int, terms: Mapping | None = None):
        if nvars < 1:
            raise DimensionError("a series needs at least one variable")
        if order < 0 or order > MAX_ORDER:
            raise DimensionError(f"order {order} outside 0..{MAX_ORDER}")
        self.nvars = nvars
        self.order = order
        clean: dict[int, mpq] = {}
        if terms:
            for alpha, c in terms.items():
                if isinstance(alpha, int):
                    key = alpha
                else:
                    if len(alpha) != nvars:
                        raise DimensionError(f"exponent {alpha} has wrong length for {nvars} variables")
                    key = pack(alpha)
                if _degree(key) > order:
                    continue
                c = Q(c)
                if c:
                    clean[key] = clean.get(key, ZERO) + c
                    if not clean[key]:
                        del clean[key]
        self._terms = clean
        self._sorted = None

    @classmethod
    def _raw(cls, nvars: int, order: int, terms: dict) -> "TruncatedSeries":
        # trusted constructor: keys packed, degrees <= order, no zeros
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.order = order
        obj._terms = terms
        obj._sorted = None
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int, order: int) -> "TruncatedSeries":
        return cls._raw(nvars, order, {})

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "TruncatedSeries":
        value = Q(value)
        return cls._raw(nvars, order, {0: value} if value else {})

    @classmethod
    def variable(cls, i: int, nvars: int, order: int) -> "TruncatedSeries":
        """The coordinate function ``x_i`` (0-based ``i``)."""
        if not 0 <= i < nvars:
            raise DimensionError(f"variable index {i} out of range")
        return cls._raw(nvars, order, {1 << (SHIFT * i): ONE} if order >= 1 else {})

    @classmethod
    def monomial(cls, alpha: Sequence[int], nvars: int, order: int, coeff=1) -> "TruncatedSeries":
        return cls(nvars, order, {tuple(alpha): coeff})

    # -- inspection ---------------------------------------------------------
    def _items_by_degree(self) -> list:
        if self._sorted is None:
            self._sorted = sorted(((_degree(k), k, c) for k, c in self._terms.items()), key=lambda t: t[0])
        return self._sorted

    def terms(self) -> Iterator[tuple[tuple[int, ...], mpq]]:
        """Yield ``(alpha, coeff)`` pairs in graded monomial order."""
        items = [(unpack(k, self.nvars), c) for k, c in self._terms.items()]
        items.sort(key=lambda t: monomial_order_key(t[0]))
        return iter(items)

    def coeff(self, alpha: Sequence[int]) -> mpq:
        return self._terms.get(pack(alpha), ZERO)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(k == 0 for k in self._terms)

    def valuation(self) -> int:
        """Lowest degree carrying a nonzero coefficient (``order + 1`` for 0)."""
        if not self._terms:
            return self.order + 1
        return min(_degree(k) for k in self._terms)

    def eval_at_origin(self) -> mpq:
        return self._terms.get(0, ZERO)

    def jet_extract(self, d: int) -> "TruncatedSeries":
        """Homogeneous part of degree ``d``."""
        return TruncatedSeries._raw(self.nvars, self.order,
                                    {k: c for k, c in self._terms.items() if _degree(k) == d})

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise DimensionError(f"cannot raise reliable order {self.order} to {order}")
        if order == self.order:
            return self
        return TruncatedSeries._raw(self.nvars, order,
                                    {k: c for k, c in self._terms.items() if _degree(k) <= order})

    def x_slice(self, var: int, exponent: int) -> dict[tuple[int, ...], mpq]:
        """Coefficients of the monomials whose ``var`` exponent equals ``exponent``."""
        shift = SHIFT * var
        return {unpack(k, self.nvars): c for k, c in self._terms.items()
                if (k >> shift) & MASK == exponent}

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "TruncatedSeries") -> None:
        if self.nvars != other.nvars or self.order != other.order:
            raise DimensionError(
                f"series mismatch: (m={self.nvars}, N={self.order}) vs (m={other.nvars}, N={other.order})")

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.constant(other, self.nvars, self.order)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k, ZERO) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return TruncatedSeries._raw(self.nvars, self.order, out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._raw(self.nvars, self.order, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        c = Q(c)
        if not c:
            return TruncatedSeries._raw(self.nvars, self.order, {})
        return TruncatedSeries._raw(self.nvars, self.order, {k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        self._check(other)
        a, b = self._terms, other._terms
        if not a or not b:
            return TruncatedSeries._raw(self.nvars, self.order, {})
        if len(a) == 1 and 0 in a:
            return other.scale(a[0])
        if len(b) == 1 and 0 in b:
            return self.scale(b[0])
        n = self.order
        out: dict[int, mpq] = {}
        get = out.get
        bl = other._items_by_degree()
        for da, ka, ca in self._items_by_degree():
            lim = n - da
            for db, kb, cb in bl:
                if db > lim:
                    break
                k = ka + kb
                out[k] = get(k, ZERO) + ca * cb
        return TruncatedSeries._raw(self.nvars, n, {k: c for k, c in out.items() if c})

    def __rmul__(self, other):
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * invert(other)
        return self.scale(ONE / Q(other))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = TruncatedSeries.constant(1, self.nvars, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def derive(self, i: int) -> "TruncatedSeries":
        """Formal partial derivative in ``x_i`` (0-based); order drops by one."""
        if not 0 <= i < self.nvars:
            raise DimensionError(f"variable index {i} out of range for {self.nvars} variables")
        if self.order == 0:
            raise PreconditionError("cannot differentiate an order-0 jet")
        shift = SHIFT * i
        step = 1 << shift
        out = {}
        for k, c in self._terms.items():
            e = (k >> shift) & MASK
            if e:
                out[k - step] = c * e
        return TruncatedSeries._raw(self.nvars, self.order - 1,
                                    {k: c for k, c in out.items() if _degree(k) <= self.order - 1})

    # -- comparison / display ----------------------------------------------
    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            return (self.nvars, self.order) == (other.nvars, other.order) and self._terms == other._terms
        try:
            return self._terms == TruncatedSeries.constant(other, self.nvars, self.order)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.nvars, self.order, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            body = "0"
        else:
            parts = []
            for alpha, c in self.terms():
                mono = "*".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a)
                parts.append(fmt(c) + ("*" + mono if mono else ""))
            body = " + ".join(parts)
        return f"TruncatedSeries(m={self.nvars}, N={self.order}: {body})"

    def map_coefficients(self, f: Callable[[mpq], mpq]) -> "TruncatedSeries":
        return TruncatedSeries(self.nvars, self.order, {k: f(c) for k, c in self._terms.items()})

    def to_dict(self) -> dict[tuple[int, ...], mpq]:
        return {unpack(k, self.nvars): c for k, c in self._terms.items()}


# -- free functions on series ----------------------------------------------

def derive(a: TruncatedSeries, i: int) -> TruncatedSeries:
    return a.derive(i)


def eval_at_origin(a: TruncatedSeries) -> mpq:
    return a.eval_at_origin()


def jet_extract(a: TruncatedSeries, d: int) -> TruncatedSeries:
    return a.jet_extract(d)


def invert(a: TruncatedSeries) -> TruncatedSeries:
    """Multiplicative inverse through the order of ``a``.

    Writes ``a = c (1 + e)`` with ``e(0) = 0`` and sums the geometric series,
    stopping once the powers of ``e`` fall past the truncation order.
    """
    c = a.eval_at_origin()
    if not c:
        raise DegenerateFormError("series with zero constant term is not invertible")
    inv_c = ONE / c
    e = (a - c).scale(inv_c)
    result = TruncatedSeries.constant(1, a.nvars, a.order)
    power = result
    while True:
        power = -(power * e)
        if power.is_zero():
            break
        result = result + power
    return result.scale(inv_c)


def sum_series(items: Iterable[TruncatedSeries], nvars: int, order: int) -> TruncatedSeries:
    """Sum with an in-place accumulator (much faster than repeated ``+``)."""
    out: dict[int, mpq] = {}
    get = out.get
    for s in items:
        if s.nvars != nvars or s.order != order:
            raise DimensionError("series mismatch in sum")
        for k, c in s._terms.items():
            out[k] = get(k, ZERO) + c
    return TruncatedSeries._raw(nvars, order, {k: c for k, c in out.items() if c})


def dot(xs: Sequence[TruncatedSeries], ys: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """``sum_i xs[i] * ys[i]``, accumulating products without intermediate series."""
    if not xs:
        raise DimensionError("empty dot product")
    nvars, n = xs[0].nvars, xs[0].order
    out: dict[int, mpq] = {}
    get = out.get
    for x, y in zip(xs, ys):
        if x.nvars != nvars or y.nvars != nvars or x.order != n or y.order != n:
            raise DimensionError("series mismatch in dot product")
        if not x._terms or not y._terms:
            continue
        bl = y._items_by_degree()
        for da, ka, ca in x._items_by_degree():
            lim = n - da
            for db, kb, cb in bl:
                if db > lim:
                    break
                k = ka + kb
                out[k] = get(k, ZERO) + ca * cb
    return TruncatedSeries._raw(nvars, n, {k: c for k, c in out.items() if c})


def linear_substitute(a: TruncatedSeries, L: rl.Matrix) -> TruncatedSeries:
    """The jet of ``x' -> a(L x')`` for a constant square matrix ``L``."""
    m, n = a.nvars, a.order
    if rl.shape(L) != (m, m):
        raise DimensionError("substitution matrix must be m x m")
    forms = [TruncatedSeries(m, n, {tuple(1 if t == j else 0 for t in range(m)): L[i][j]
                                    for j in range(m) if L[i][j]})
             for i in range(m)]
    powers = [[TruncatedSeries.constant(1, m, n)] for _ in range(m)]
    for i in range(m):
        for _ in range(n):
            powers[i].append(powers[i][-1] * forms[i])
    out = TruncatedSeries.zero(m, n)
    for alpha, c in a.terms():
        term = TruncatedSeries.constant(c, m, n)
        for i, e in enumerate(alpha):
            if e:
                term = term * powers[i][e]
        out = out + term
    return out


# -- matrices of series -----------------------------------------------------

class SeriesMatrix:
    """Dense r x c matrix of series sharing ``(nvars, order)``."""

    __slots__ = ("rows", "nvars", "order")

    def __init__(self, rows: Sequence[Sequence[TruncatedSeries]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise DimensionError("empty series matrix")
        first = rows[0][0]
        for r in rows:
            if len(r) != len(rows[0]):
                raise DimensionError("ragged series matrix")
            for s in r:
                if not isinstance(s, TruncatedSeries):
                    raise TypeError("entries must be TruncatedSeries")
                if (s.nvars, s.order) != (first.nvars, first.order):
                    raise DimensionError("entries disagree in (m, N)")
        self.rows = rows
        self.nvars = first.nvars
        self.order = first.order

    @classmethod
    def constant(cls, mat: rl.Matrix, nvars: int, order: int) -> "SeriesMatrix":
        return cls([[TruncatedSeries.constant(x, nvars, order) for x in row] for row in mat])

    @classmethod
    def identity(cls, n: int, nvars: int, order: int) -> "SeriesMatrix":
        return cls.constant(rl.identity(n), nvars, order)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def at_origin(self) -> rl.Matrix:
        return tuple(tuple(s.eval_at_origin() for s in r) for r in self.rows)

    def truncate(self, order: int) -> "SeriesMatrix":
        return SeriesMatrix([[s.truncate(order) for s in r] for r in self.rows])

    def transpose(self) -> "SeriesMatrix":
        return SeriesMatrix(list(zip(*self.rows)))

    def map(self, f) -> "SeriesMatrix":
        return SeriesMatrix([[f(s) for s in r] for r in self.rows])

    def _same_shape(self, other: "SeriesMatrix"):
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        self._same_shape(other)
        return SeriesMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        self._same_shape(other)
        return SeriesMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self):
        return self.map(lambda s: -s)

    def scale(self, c) -> "SeriesMatrix":
        if isinstance(c, TruncatedSeries):
            return self.map(lambda s: s * c)
        return self.map(lambda s: s.scale(c))

    def __matmul__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return matrix_mul(self, other)

    def is_zero(self) -> bool:
        return all(s.is_zero() for r in self.rows for s in r)

    def valuation(self) -> int:
        return min(s.valuation() for r in self.rows for s in r)

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"SeriesMatrix({self.shape[0]}x{self.shape[1]}, m={self.nvars}, N={self.order})"


def matrix_mul(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    (r, k), (k2, c) = a.shape, b.shape
    if k != k2:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    cols = list(zip(*b.rows))
    return SeriesMatrix([[dot(row, col) for col in cols] for row in a.rows])


def constant_times(c: rl.Matrix, a: SeriesMatrix) -> SeriesMatrix:
    """Product of a constant rational matrix with a series matrix (cheap)."""
    n, k = rl.shape(c)
    if k != a.shape[0]:
        raise DimensionError("shape mismatch")
    out = []
    for i in range(n):
        row = []
        for j in range(a.shape[1]):
            row.append(sum_series((a.rows[t][j].scale(c[i][t]) for t in range(k) if c[i][t]),
                                  a.nvars, a.order))
        out.append(row)
    return SeriesMatrix(out)


def matrix_inverse(a: SeriesMatrix) -> SeriesMatrix:
    """Inverse through the order of ``a``; needs an invertible constant term.

    With ``a = C (I + E)``, ``E(0) = 0``, the Neumann series
    ``sum (-E)^k C^{-1}`` terminates once powers of ``E`` vanish at this order.
    """
    n, c = a.shape
    if n != c:
        raise DimensionError("square matrix required")
    c0 = a.at_origin()
    try:
        c0_inv = rl.inverse(c0)
    except DegenerateFormError:
        raise DegenerateFormError("constant term of series matrix is singular") from None
    e = constant_times(c0_inv, a - SeriesMatrix.constant(c0, a.nvars, a.order))
    ident = SeriesMatrix.identity(n, a.nvars, a.order)
    total = ident
    power = ident
    while True:
        power = -(power @ e)
        if power.is_zero():
            break
        total = total + power
    return total @ SeriesMatrix.constant(c0_inv, a.nvars, a.order)


def matrix_sqrt(a: SeriesMatrix, max_iter: int | None = None) -> SeriesMatrix:
    """Principal square root of ``a`` when ``a(0)`` is the identity.

    Newton's iteration ``Y <- (Y + Y^{-1} a) / 2`` from ``Y = I``; every iterate
    is a polynomial in ``a`` so the iteration is exact and doubles the number
    of correct degrees per step.
    """
    n, c = a.shape
    if n != c:
        raise DimensionError("square matrix required")
    if a.at_origin() != rl.identity(n):
        raise PreconditionError("matrix_sqrt needs constant term equal to the identity")
    if max_iter is None:
        max_iter = a.order.bit_length() + 2
    y = SeriesMatrix.identity(n, a.nvars, a.order)
    for _ in range(max_iter + 1):
        nxt = (y + matrix_inverse(y) @ a).scale(mpq(1, 2))
        if nxt == y:
            return y
        y = nxt
    raise PreconditionError("Newton iteration for the matrix square root did not reach its fixed point")
