"""Exact rational scalars and small dense matrices over them.

Matrices are tuples of row tuples holding ``gmpy2.mpq`` values.  Everything
here is exact; there is no floating point anywhere in the package.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

from .errors import DegenerateFormError, DimensionError

Scalar = type(mpq(0))
Matrix = tuple  # tuple[tuple[mpq, ...], ...]

ZERO = mpq(0)
ONE = mpq(1)


def Q(value) -> mpq:
    """Coerce ints, ``Fraction``s, mpq and ``"p/q"`` strings to an exact rational."""
    if isinstance(value, Scalar):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                if int(den) == 0:
                    raise ZeroDivisionError
                return mpq(int(num), int(den))
            return mpq(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    if type(value).__name__ == "mpz":
        return mpq(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def fmt(q) -> str:
    """Canonical string form: ``"p/q"`` with q > 0, or ``"p"`` for integers."""
    q = Q(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def is_rational_square(q) -> bool:
    q = Q(q)
    return q >= 0 and gmpy2.is_square(q.numerator) and gmpy2.is_square(q.denominator)


def rational_sqrt(q) -> mpq:
    q = Q(q)
    if not is_rational_square(q):
        raise ValueError(f"{fmt(q)} is not the square of a rational")
    return mpq(gmpy2.isqrt(q.numerator), gmpy2.isqrt(q.denominator))


# -- matrices ---------------------------------------------------------------

def matrix(rows: Iterable[Iterable]) -> Matrix:
    out = tuple(tuple(Q(x) for x in row) for row in rows)
    if out and any(len(r) != len(out[0]) for r in out):
        raise DimensionError("ragged matrix")
    return out


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def zeros(r: int, c: int | None = None) -> Matrix:
    c = r if c is None else c
    return tuple((ZERO,) * c for _ in range(r))


def diag(values: Sequence) -> Matrix:
    n = len(values)
    return tuple(tuple(Q(values[i]) if i == j else ZERO for j in range(n)) for i in range(n))


def shape(a: Matrix) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if shape(a)[1] != shape(b)[0]:
        raise DimensionError(f"cannot multiply {shape(a)} by {shape(b)}")
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), ZERO) for col in bt) for row in a)


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    if shape(a) != shape(b):
        raise DimensionError("shape mismatch")
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    if shape(a) != shape(b):
        raise DimensionError("shape mismatch")
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def mat_scale(c, a: Matrix) -> Matrix:
    c = Q(c)
    return tuple(tuple(c * x for x in r) for r in a)


def mat_vec(a: Matrix, v: Sequence) -> tuple:
    return tuple(sum((x * y for x, y in zip(row, v)), ZERO) for row in a)


def is_symmetric(a: Matrix) -> bool:
    n = len(a)
    return all(a[i][j] == a[j][i] for i in range(n) for j in range(i + 1, n))


def _eliminate(a: Matrix, rhs: Matrix | None):
    """Gauss-Jordan elimination; returns (det, reduced rhs) or raises on singularity."""
    n = len(a)
    if any(len(r) != n for r in a):
        raise DimensionError("square matrix required")
    work = [list(r) + (list(rhs[i]) if rhs is not None else []) for i, r in enumerate(a)]
    det = ONE
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            return ZERO, None
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        p = work[col][col]
        det *= p
        inv = ONE / p
        work[col] = [x * inv for x in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    if rhs is None:
        return det, None
    return det, tuple(tuple(row[n:]) for row in work)


def det(a: Matrix) -> mpq:
    return _eliminate(a, None)[0]


def inverse(a: Matrix) -> Matrix:
    d, inv = _eliminate(a, identity(len(a)))
    if d == 0:
        raise DegenerateFormError("matrix is singular")
    return inv


def solve(a: Matrix, b: Sequence) -> tuple:
    """Solve ``a x = b`` for a square nonsingular ``a``."""
    d, x = _eliminate(a, tuple((Q(v),) for v in b))
    if d == 0:
        raise DegenerateFormError("matrix is singular")
    return tuple(row[0] for row in x)


def inertia(a: Matrix) -> tuple[int, int, int]:
    """(negative, positive, zero) counts of a symmetric rational matrix (Sylvester).

    Symmetric elimination with the usual e_i -> e_i + e_j trick when the
    remaining diagonal vanishes but an off-diagonal entry does not.
    """
    work = [list(r) for r in a]
    n = len(work)
    neg = pos = 0
    active = list(range(n))
    while active:
        piv = next((i for i in active if work[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i < j and work[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # replace basis vector i by e_i + e_j: congruence on row/column i
            for k in range(n):
                work[i][k] += work[j][k]
            for k in range(n):
                work[k][i] += work[k][j]
            piv = i
        p = work[piv][piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for r in active:
            f = work[r][piv] / p
            if f != 0:
                for k in range(n):
                    work[r][k] -= f * work[piv][k]
        for r in active:
            work[piv][r] = work[r][piv] = ZERO
    zero = n - neg - pos
    return neg, pos, zero
