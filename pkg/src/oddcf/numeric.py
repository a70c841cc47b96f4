"""Exact scalars and 2x2 integer Moebius matrices.

A *scalar* in this package is one of

* ``int`` or :class:`fractions.Fraction` (exact rationals),
* :class:`QuadExt`, an exact quadratic surd ``(a + b*sqrt(d))/c`` with
  ``d`` in {5, 13},
* ``gmpy2.mpfr``, a binary float that carries its own precision.

Floats are exact dyadic rationals, so comparing a float with an exact value
is done exactly.  Only comparisons between surds of *different* radicands
(which are never equal unless both are rational) need precision escalation.
"""

from __future__ import annotations

import contextlib
import math
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import gmpy2
from gmpy2 import mpfr

from .errors import (
    IndistinguishableError,
    MixedFieldError,
    PoleError,
    UncertainFloor,
)

DEFAULT_PRECISION = 256
MAX_PRECISION = 8192
RADICANDS = (5, 13)

MPFR = type(mpfr(0))
Scalar = Union[int, Fraction, "QuadExt", MPFR]


def default_precision() -> int:
    """Default float precision, overridable by ``OCF_PRECISION_BITS``."""
    raw = os.environ.get("OCF_PRECISION_BITS")
    if raw:
        bits = int(raw)
        if bits <= 0:
            raise ValueError("OCF_PRECISION_BITS must be positive")
        return bits
    return DEFAULT_PRECISION


def precision(bits: int):
    """Context manager setting the gmpy2 working precision."""
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def float_context(*values):
    """Working-precision context for the widest float among ``values``."""
    bits = [v.precision for v in values if isinstance(v, MPFR)]
    if not bits:
        return contextlib.nullcontext()
    return precision(max(bits))


def make_float(value, bits: int | None = None) -> MPFR:
    """Round ``value`` (any scalar or decimal string) to a ``bits``-bit float."""
    bits = bits or default_precision()
    with precision(bits):
        if isinstance(value, QuadExt):
            return value.to_mpfr(bits)
        if isinstance(value, str):
            return mpfr(value)
        if isinstance(value, Fraction):
            return mpfr(value.numerator) / value.denominator
        return mpfr(value)


def is_float(z) -> bool:
    return isinstance(z, (MPFR, float))


def to_fraction(z) -> Fraction:
    """Exact rational value of an int, Fraction or float."""
    if isinstance(z, Fraction):
        return z
    if isinstance(z, int):
        return Fraction(z)
    if isinstance(z, (MPFR, float)):
        if not gmpy2.is_finite(mpfr(z) if isinstance(z, float) else z):
            raise ValueError(f"non-finite float {z}")
        p, q = z.as_integer_ratio()
        return Fraction(int(p), int(q))
    if isinstance(z, QuadExt) and z.b == 0:
        return Fraction(z.a, z.c)
    raise TypeError(f"{type(z).__name__} is not rational")


class QuadExt:
    """Exact quadratic surd ``(a + b*sqrt(d))/c`` in canonical form.

    ``c > 0`` and ``gcd(a, b, c) == 1``.  Arithmetic with ints, Fractions and
    surds of the same radicand is exact; results with ``b == 0`` come back as
    :class:`~fractions.Fraction`.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int = 1, d: int = 5):
        if d not in RADICANDS:
            raise ValueError(f"radicand must be one of {RADICANDS}, got {d}")
        if c == 0:
            raise PoleError("zero denominator")
        if c < 0:
            a, b, c = -a, -b, -c
        k = math.gcd(math.gcd(a, b), c)
        self.a, self.b, self.c, self.d = a // k, b // k, c // k, d

    def __setattr__(self, name, value):
        if hasattr(self, "d"):
            raise AttributeError("QuadExt is immutable")
        object.__setattr__(self, name, value)

    @staticmethod
    def make(a: int, b: int, c: int = 1, d: int = 5) -> Scalar:
        """Build a surd, collapsing to a Fraction when ``b == 0``."""
        if b == 0:
            return Fraction(a, c)
        return QuadExt(a, b, c, d)

    # -- conversion -------------------------------------------------------
    def conjugate(self) -> QuadExt:
        return QuadExt(self.a, -self.b, self.c, self.d)

    def to_mpfr(self, bits: int | None = None) -> MPFR:
        bits = bits or default_precision()
        with precision(bits + 16):
            v = (self.a + self.b * gmpy2.sqrt(mpfr(self.d))) / self.c
        with precision(bits):
            return +v

    def approx_error(self, bits: int) -> MPFR:
        """Upper bound on ``|to_mpfr(bits) - self|`` (generous)."""
        with precision(64):
            return mpfr(abs(self.a) + 4 * abs(self.b) + 1) / self.c * gmpy2.exp2(-bits + 4)

    def __float__(self) -> float:
        return float(self.to_mpfr(64))

    def __repr__(self) -> str:
        return f"QuadExt({self.a}, {self.b}, {self.c}, d={self.d})"

    def __str__(self) -> str:
        return format_scalar(self)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        """Return ``other`` as (a, b, c) over this radicand, or None."""
        if isinstance(other, QuadExt):
            if other.b == 0:
                return other.a, 0, other.c
            if other.d != self.d:
                raise MixedFieldError(f"cannot mix sqrt({self.d}) and sqrt({other.d})")
            return other.a, other.b, other.c
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            f = Fraction(other)
            return f.numerator, 0, f.denominator
        return None

    def __add__(self, other):
        if isinstance(other, MPFR):
            with float_context(other):
                return self.to_mpfr(other.precision) + other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c = o
        return QuadExt.make(self.a * c + a * self.c, self.b * c + b * self.c, self.c * c, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.c, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, MPFR):
            with float_context(other):
                return self.to_mpfr(other.precision) - other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c = o
        return QuadExt.make(self.a * c - a * self.c, self.b * c - b * self.c, self.c * c, self.d)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, MPFR):
            with float_context(other):
                return self.to_mpfr(other.precision) * other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c = o
        d = self.d
        return QuadExt.make(self.a * a + self.b * b * d, self.a * b + self.b * a, self.c * c, d)

    __rmul__ = __mul__

    def inverse(self):
        norm = self.a * self.a - self.b * self.b * self.d
        if norm == 0:
            raise PoleError("division by zero")
        # c / (a + b sqrt d) = c (a - b sqrt d) / norm
        return QuadExt.make(self.c * self.a, -self.c * self.b, norm, self.d)

    def __truediv__(self, other):
        if isinstance(other, MPFR):
            with float_context(other):
                return self.to_mpfr(other.precision) / other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c = o
        if a == 0 and b == 0:
            raise PoleError("division by zero")
        if b == 0:
            return self * Fraction(c, a)
        return self * QuadExt(a, b, c, self.d).inverse()

    def __rtruediv__(self, other):
        if isinstance(other, MPFR):
            with float_context(other):
                return other / self.to_mpfr(other.precision)
        if self._coerce(other) is None:
            return NotImplemented
        return self.inverse() * other

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- order ------------------------------------------------------------
    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0 or (a > 0) == (b > 0):
            return 1 if b > 0 else -1
        # opposite signs: compare a^2 with b^2 d (never equal, d squarefree)
        if a * a > b * b * self.d:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def floor(self) -> int:
        a, b, c, d = self.a, self.b, self.c, self.d
        r = math.isqrt(b * b * d)
        if b == 0:
            m = 0
        elif b > 0:
            m = r
        else:
            m = -r - 1
        # a + b sqrt d lies in (a + m, a + m + 1), and c > 0
        return (a + m) // c if b != 0 else a // c

    def __floor__(self):
        return self.floor()

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            if self.b == 0 and other.b == 0:
                return Fraction(self.a, self.c) == Fraction(other.a, other.c)
            return (self.a, self.b, self.c, self.d) == (other.a, other.b, other.c, other.d)
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and Fraction(self.a, self.c) == other
        if isinstance(other, MPFR):
            return compare(self, other) == 0
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(Fraction(self.a, self.c))
        return hash((self.a, self.b, self.c, self.d))

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0


SQRT5 = QuadExt(0, 1, 1, 5)
GOLDEN_SMALL = QuadExt(-1, 1, 2, 5)  # g = (sqrt5 - 1)/2
GOLDEN_BIG = QuadExt(1, 1, 2, 5)  # G = (sqrt5 + 1)/2 = 1/g
GOLDEN_SMALL_SQ = QuadExt(3, -1, 2, 5)  # g^2 = 1 - g
ALPHA_13 = QuadExt(-1, 1, 6, 13)  # (sqrt13 - 1)/6, lower end of the supported range

g = GOLDEN_SMALL
G = GOLDEN_BIG


# ---------------------------------------------------------------------------
# comparisons and floors
# ---------------------------------------------------------------------------

def _exactify(z):
    if isinstance(z, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(z, (MPFR, float)):
        return to_fraction(z)
    if isinstance(z, int):
        return Fraction(z)
    if isinstance(z, QuadExt) and z.b == 0:
        return Fraction(z.a, z.c)
    if isinstance(z, (Fraction, QuadExt)):
        return z
    if isinstance(z, Rational):
        return Fraction(z.numerator, z.denominator)
    raise TypeError(f"not a scalar: {z!r}")


def sign(z) -> int:
    if isinstance(z, MPFR):
        return gmpy2.sign(z)
    z = _exactify(z)
    if isinstance(z, QuadExt):
        return z.sign()
    return (z > 0) - (z < 0)


def _enclosure(z, bits):
    """(midpoint, radius) mpfr enclosure of an exact scalar at ``bits``."""
    if isinstance(z, QuadExt):
        return z.to_mpfr(bits), z.approx_error(bits)
    with precision(bits):
        mid = mpfr(z.numerator) / z.denominator
    with precision(64):
        rad = abs(mid) * gmpy2.exp2(-bits + 1)
    return mid, rad


def _escalate_sign(terms, bits=None) -> int:
    """Sign of ``sum(terms)`` known to be nonzero, by precision escalation."""
    bits = bits or default_precision()
    while bits <= MAX_PRECISION:
        with precision(bits + 8):
            total = mpfr(0)
            err = mpfr(0)
            for t in terms:
                mid, rad = _enclosure(t, bits + 8)
                total += mid
                err += rad
            err += abs(total) * gmpy2.exp2(-bits)
            if total > err:
                return 1
            if total < -err:
                return -1
        bits *= 2
    raise IndistinguishableError("values indistinguishable at maximum precision")


def _exact_sum(terms):
    """Exact sum if all terms share a field, else None."""
    total = Fraction(0)
    try:
        for t in terms:
            total = total + t
    except MixedFieldError:
        return None
    return total


def compare(a, b) -> int:
    """Total order on scalars: -1, 0 or 1 as ``a <, ==, > b``."""
    if isinstance(a, (MPFR, int)) and isinstance(b, (MPFR, int)) and not (
        isinstance(a, bool) or isinstance(b, bool)
    ):
        # mpfr comparisons are exact
        return (a > b) - (a < b)
    a, b = _exactify(a), _exactify(b)
    diff = _exact_sum([a, -b])
    if diff is None:
        # distinct irrational fields: never equal
        return _escalate_sign([a, -b])
    return sign(diff)


def floor_exact(z) -> int:
    """The integer ``n`` with ``n <= z < n + 1``.

    Floats are read as the enclosure ``z +- ulp(z)``; if that enclosure
    contains an integer the floor is uncertain and :class:`UncertainFloor`
    is raised.
    """
    if isinstance(z, (MPFR, float)):
        x = mpfr(z) if isinstance(z, float) else z
        bits = x.precision if isinstance(z, MPFR) else 53
        n = int(gmpy2.floor(x))
        exact = to_fraction(x)
        if x == 0:
            return 0
        ulp = Fraction(2) ** (gmpy2.get_exp(x) - bits)
        if exact - ulp < n or exact + ulp >= n + 1:
            raise UncertainFloor(f"float {x} within one ulp of an integer")
        return n
    z = _exactify(z)
    if isinstance(z, QuadExt):
        return z.floor()
    return math.floor(z)


def floor_sum(*terms) -> int:
    """Floor of a sum of exact scalars, possibly from different fields."""
    terms = [_exactify(t) for t in terms]
    total = _exact_sum(terms)
    if total is not None:
        return floor_exact(total)
    # the sum is irrational, so it is never an integer: bracket it
    bits = default_precision()
    while bits <= MAX_PRECISION:
        with precision(bits + 8):
            mid = mpfr(0)
            err = mpfr(0)
            for t in terms:
                m, r = _enclosure(t, bits + 8)
                mid += m
                err += r
            err += abs(mid) * gmpy2.exp2(-bits)
            lo = int(gmpy2.floor(mid - err))
            hi = int(gmpy2.floor(mid + err))
        if lo == hi:
            return lo
        bits *= 2
    raise IndistinguishableError("floor undecidable at maximum precision")


def to_mpfr(z, bits: int | None = None) -> MPFR:
    """Approximate any scalar as a ``bits``-bit float."""
    if isinstance(z, MPFR):
        if bits is None or z.precision == bits:
            return z
    return make_float(_exactify(z) if not isinstance(z, MPFR) else z, bits)


def to_float(z) -> float:
    """Nearest double of any scalar."""
    if isinstance(z, float):
        return z
    if isinstance(z, QuadExt):
        return float(z)
    if isinstance(z, MPFR):
        return float(z)
    return float(Fraction(z))


# ---------------------------------------------------------------------------
# 2x2 integer matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mat2:
    """Integer matrix ``[[e1, e2], [e3, e4]]`` acting as a Moebius map."""

    e1: int
    e2: int
    e3: int
    e4: int

    @property
    def det(self) -> int:
        return self.e1 * self.e4 - self.e2 * self.e3

    def __matmul__(self, other: Mat2) -> Mat2:
        return Mat2(
            self.e1 * other.e1 + self.e2 * other.e3,
            self.e1 * other.e2 + self.e2 * other.e4,
            self.e3 * other.e1 + self.e4 * other.e3,
            self.e3 * other.e2 + self.e4 * other.e4,
        )

    def __neg__(self) -> Mat2:
        return Mat2(-self.e1, -self.e2, -self.e3, -self.e4)

    def __pow__(self, k: int) -> Mat2:
        if k < 0:
            raise ValueError("negative powers are not supported")
        out = IDENTITY
        for _ in range(k):
            out = out @ self
        return out

    def equal_up_to_sign(self, other: Mat2) -> bool:
        return self == other or self == -other

    def rows(self) -> list[list[int]]:
        return [[self.e1, self.e2], [self.e3, self.e4]]

    def __call__(self, z):
        return mobius_apply(self, z)


IDENTITY = Mat2(1, 0, 0, 1)
R = Mat2(1, 1, 0, 1)
S = Mat2(0, 1, 1, 0)
VMat = Mat2(-1, 0, 0, 1)


def digit_matrix(eps: int, d: int) -> Mat2:
    """``B_{eps,d} = [[0, eps], [1, d]]``; maps ``t`` to ``eps/(d + t)``."""
    return Mat2(0, eps, 1, d)


def mat_mul(a: Mat2, b: Mat2) -> Mat2:
    return a @ b


def mobius_apply(m: Mat2, z):
    """``(e1 z + e2)/(e3 z + e4)``, exact for exact ``z``."""
    with float_context(z):
        den = m.e3 * z + m.e4
        if sign(den) == 0:
            raise PoleError(f"{m} has a pole at {z}")
        num = m.e1 * z + m.e2
        if isinstance(num, int) and isinstance(den, int):
            return Fraction(num, den)
        return num / den


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------

_QUAD_RE = re.compile(
    r"^\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)(?:\s*/\s*(\d+))?$"
)
_FLOAT_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)@(\d+)$")

NAMED = {
    "g": GOLDEN_SMALL,
    "G": GOLDEN_BIG,
    "g2": GOLDEN_SMALL_SQ,
    "alpha13": ALPHA_13,
}


def parse_scalar(text: str) -> Scalar:
    """Parse ``p/q``, decimals (exact), ``(a+b*sqrt(d))/c``, ``1.5@256`` or a name.

    Decimal literals such as ``1.3`` are read as exact rationals; a float
    requires an explicit ``@bits`` precision annotation.
    """
    s = text.strip()
    if s in NAMED:
        return NAMED[s]
    m = _QUAD_RE.match(s)
    if m:
        a, op, b, d, c = m.groups()
        b = int(b) if op == "+" else -int(b)
        return QuadExt.make(int(a), b, int(c or 1), int(d))
    m = _FLOAT_RE.match(s)
    if m:
        return make_float(m.group(1), int(m.group(2)))
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse scalar {text!r}") from exc


def format_scalar(z) -> str:
    if isinstance(z, QuadExt):
        if z.b == 0:
            return format_scalar(Fraction(z.a, z.c))
        op = "+" if z.b > 0 else "-"
        return f"({z.a}{op}{abs(z.b)}*sqrt({z.d}))/{z.c}"
    if isinstance(z, MPFR):
        # enough digits for the text to read back to the same float
        digits = math.ceil(z.precision * math.log10(2)) + 1
        return f"{z:.{digits}g}@{z.precision}"
    if isinstance(z, float):
        return repr(z)
    f = Fraction(z)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"
