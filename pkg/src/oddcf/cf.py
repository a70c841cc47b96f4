"""The odd alpha-continued fraction map, expansions and convergents.

For ``alpha`` in ``(0, G]`` the map acts on ``I_alpha = [alpha - 2, alpha)`` by

    T(x) = sign(x)/x - d(x),   d(x) = 2*floor(1/(2|x|) + (1 - alpha)/2) + 1,

with ``T(0) = 0``.  Each step emits the signed digit ``(sign(x), d(x))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cmp_to_key
from fractions import Fraction
from typing import NamedTuple, Sequence

import gmpy2

from .errors import DomainError, PrecisionExhausted, UnsupportedAlpha, ZeroInput
from .numeric import (
    IDENTITY,
    MPFR,
    GOLDEN_BIG,
    Mat2,
    compare,
    digit_matrix,
    float_context,
    floor_sum,
    format_scalar,
    mobius_apply,
    parse_scalar,
    precision,
    sign,
    to_fraction,
    to_mpfr,
)

DEFAULT_EXACT_NMAX = 10_000
DEFAULT_FLOAT_NMAX = 100_000_000


@dataclass(frozen=True)
class AlphaParam:
    """Parameter of the map; ``0 < value <= G``."""

    value: object

    def __post_init__(self):
        v = self.value
        if isinstance(v, AlphaParam):
            object.__setattr__(self, "value", v.value)
            v = v.value
        if isinstance(v, str):
            v = parse_scalar(v)
            object.__setattr__(self, "value", v)
        if isinstance(v, int):
            object.__setattr__(self, "value", Fraction(v))
        if sign(v) <= 0 or compare(v, GOLDEN_BIG) > 0:
            raise UnsupportedAlpha(f"alpha must lie in (0, G], got {format_scalar(v)}")

    @property
    def lower(self):
        """Left end ``alpha - 2`` of the fundamental interval."""
        v = self.value
        with float_context(v):
            return v - 2

    def contains(self, x, closed: bool = False) -> bool:
        """Membership in ``[alpha - 2, alpha)``, or ``[alpha - 2, alpha]`` if closed."""
        top = compare(x, self.value)
        return compare(x, self.lower) >= 0 and (top < 0 or (closed and top == 0))

    def __str__(self):
        return format_scalar(self.value)


def as_alpha(alpha) -> AlphaParam:
    return alpha if isinstance(alpha, AlphaParam) else AlphaParam(alpha)


class SignedDigit(NamedTuple):
    eps: int
    a: int

    def __str__(self):
        return f"{'+' if self.eps > 0 else '-'}{self.a}"


class ConvergentPair(NamedTuple):
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class CFWord:
    """A finite continued-fraction word ``head + [0; eps1/a1, eps2/a2, ...]``."""

    head: int = 0
    digits: tuple = field(default_factory=tuple)
    terminated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(SignedDigit(*d) for d in self.digits))

    def __len__(self):
        return len(self.digits)

    def __str__(self):
        return f"[{self.head}; {','.join(str(d) for d in self.digits)}]"

    def to_json(self) -> dict:
        return {
            "head": self.head,
            "digits": [[d.eps, d.a] for d in self.digits],
            "terminated": self.terminated,
        }

    @classmethod
    def from_json(cls, obj) -> CFWord:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["head"]), tuple(tuple(d) for d in obj["digits"]), bool(obj["terminated"]))

    @classmethod
    def parse(cls, text: str, terminated: bool = True) -> CFWord:
        """Parse ``"[0; -1,-3,-3,-1]"``; every digit carries its sign."""
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"bad word {text!r}")
        head, _, rest = body[1:-1].partition(";")
        digits = []
        for tok in filter(None, (t.strip() for t in rest.split(","))):
            if tok[0] not in "+-":
                raise ValueError(f"digit {tok!r} lacks a sign")
            digits.append((1 if tok[0] == "+" else -1, int(tok[1:])))
        return cls(int(head or 0), tuple(digits), terminated)


# ---------------------------------------------------------------------------
# the map
# ---------------------------------------------------------------------------

def _check_domain(alpha: AlphaParam, x):
    # alpha itself is admitted: matching iterates T_alpha on the endpoint
    if not alpha.contains(x, closed=True) and not _within_rounding(alpha, x):
        raise DomainError(f"{format_scalar(x)} is outside [{format_scalar(alpha.lower)}, {alpha}]")


def _within_rounding(alpha: AlphaParam, x) -> bool:
    # a float a few ulps past an endpoint is a rounding artefact, not an error
    if not isinstance(x, MPFR):
        return False
    slack = Fraction(2) ** (gmpy2.get_exp(x) - x.precision + 4)
    xe = to_fraction(x)
    return compare(xe + slack, alpha.lower) >= 0 and compare(xe - slack, alpha.value) <= 0


def _digit_value(alpha, x) -> int:
    """``d_alpha(x)`` for ``x != 0``; floats are read as exact dyadics."""
    if isinstance(x, MPFR):
        fast = _digit_value_float(alpha, x)
        if fast is not None:
            return fast
        x = to_fraction(x)
    inv = 1 / (2 * abs(x))
    return 2 * floor_sum(inv, (1 - alpha.value) / 2) + 1


def _digit_value_float(alpha, x):
    """Digit of a float from a wider float evaluation; None when too close to call."""
    bits = x.precision + 64
    with precision(bits):
        val = 1 / (2 * abs(x)) + (1 - to_mpfr(alpha.value, bits)) / 2
        n = gmpy2.floor(val)
        err = abs(val) * gmpy2.exp2(-(x.precision + 32))
        if val - n <= err or n + 1 - val <= err:
            return None
    return 2 * int(n) + 1


def digit(alpha, x) -> SignedDigit:
    """The signed digit ``(sign(x), d_alpha(x))`` emitted at ``x``."""
    alpha = as_alpha(alpha)
    _check_domain(alpha, x)
    s = sign(x)
    if s == 0:
        raise ZeroInput("digit of 0 is undefined")
    return SignedDigit(s, _digit_value(alpha, x))


def step(alpha, x):
    """One application of ``T_alpha``; exact on exact input."""
    alpha = as_alpha(alpha)
    _check_domain(alpha, x)
    s = sign(x)
    if s == 0:
        return x
    if isinstance(x, MPFR) and gmpy2.get_exp(x) <= -(x.precision // 2):
        raise PrecisionExhausted(f"|x| < 2^-{x.precision // 2}; digits would be corrupted")
    d = _digit_value(alpha, x)
    with float_context(x):
        return s / x - d


def orbit(alpha, x0, n_max: int = DEFAULT_EXACT_NMAX) -> list:
    """``[x0, T x0, ...]`` stopping at the first zero; at most ``n_max + 1`` points."""
    alpha = as_alpha(alpha)
    _check_domain(alpha, x0)
    pts = [x0]
    x = x0
    for _ in range(n_max):
        if sign(x) == 0:
            break
        x = step(alpha, x)
        pts.append(x)
    return pts


def expand(alpha, x, n_max: int = DEFAULT_EXACT_NMAX) -> CFWord:
    """The alpha-expansion of ``x`` in ``I_alpha`` (head 0), up to ``n_max`` digits."""
    alpha = as_alpha(alpha)
    _check_domain(alpha, x)
    digits = []
    for _ in range(n_max):
        if sign(x) == 0:
            break
        digits.append(digit(alpha, x))
        x = step(alpha, x)
    return CFWord(0, tuple(digits), sign(x) == 0)


def convergents(word: CFWord) -> list[ConvergentPair]:
    """``[(p_0, q_0), (p_1, q_1), ..., (p_n, q_n)]`` by the two-term recurrence.

    Index ``k`` holds the k-th convergent; a nonzero head shifts every ``p``.
    """
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = [ConvergentPair(p + word.head * q, q)]
    for eps, a in word.digits:
        p_prev, p = p, a * p + eps * p_prev
        q_prev, q = q, a * q + eps * q_prev
        out.append(ConvergentPair(p + word.head * q, q))
    return out


def word_matrix(word) -> Mat2:
    """Product of digit matrices, left-multiplied by the head translation."""
    m = Mat2(1, word.head, 0, 1) if word.head else IDENTITY
    for eps, a in _terms(word):
        m = m @ digit_matrix(eps, a)
    return m


def _terms(word):
    return getattr(word, "digits", None) or getattr(word, "terms", ())


def evaluate(word, tail=0):
    """Value of ``word`` with the future ``tail`` substituted after the last digit."""
    return mobius_apply(word_matrix(word), tail)


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

def digit_cylinder(alpha, d: SignedDigit):
    """Interval ``(lo, hi)`` of points in ``I_alpha`` emitting digit ``d``.

    Endpoint openness is ignored (boundaries are measure zero); returns None
    when the cylinder is empty.
    """
    alpha = as_alpha(alpha)
    eps, a = d
    if a < 1 or a % 2 == 0:
        return None
    k = (a - 1) // 2
    # d = a  <=>  |x| in (1/(2k+1+alpha), 1/(2k-1+alpha)]
    lo_abs = 1 / (2 * k + 1 + alpha.value)
    hi_abs = 1 / (2 * k - 1 + alpha.value) if k > 0 else None
    if eps > 0:
        lo, hi = lo_abs, alpha.value if hi_abs is None or compare(hi_abs, alpha.value) > 0 else hi_abs
    else:
        lo = alpha.lower if hi_abs is None or compare(-hi_abs, alpha.lower) < 0 else -hi_abs
        hi = -lo_abs
    if compare(lo, hi) >= 0:
        return None
    return lo, hi


def _pull_back(d: SignedDigit, interval):
    """Image of a future interval under ``t -> eps/(a + t)``.

    Futures with ``a + t <= 0`` would flip the sign of the preimage, so the
    interval is first cut to ``t > -a``.
    """
    eps, a = d
    lo, hi = interval
    if compare(hi, -a) <= 0:
        return None
    if compare(lo, -a) <= 0:
        # image is unbounded, hence larger than any digit cylinder
        lo = -a + Fraction(1, 10**12)
    ends = sorted((eps / (a + lo), eps / (a + hi)), key=cmp_to_key(compare))
    return ends[0], ends[1]


def _intersect(u, v):
    if u is None or v is None:
        return None
    lo = u[0] if compare(u[0], v[0]) >= 0 else v[0]
    hi = u[1] if compare(u[1], v[1]) <= 0 else v[1]
    if compare(lo, hi) >= 0:
        return None
    return lo, hi


def word_cylinder(alpha, digits: Sequence[SignedDigit]):
    """Interval of ``x`` whose alpha-expansion starts with ``digits`` (or None)."""
    alpha = as_alpha(alpha)
    current = (alpha.lower, alpha.value)
    for d in reversed(digits):
        current = _intersect(_pull_back(d, current), digit_cylinder(alpha, d))
        if current is None:
            return None
    return current


def validate_word(alpha, word: CFWord) -> bool:
    """Whether ``word`` is an admissible alpha-expansion.

    A terminated word must re-expand exactly from its value.  An open word
    must have a non-empty cylinder, and a point inside that cylinder must
    re-expand to the word.
    """
    alpha = as_alpha(alpha)
    if word.head != 0:
        return False
    if any(a < 1 or a % 2 == 0 or eps not in (-1, 1) for eps, a in word.digits):
        return False
    if word.terminated:
        try:
            x = evaluate(word, 0)
        except ZeroDivisionError:
            return False
        if not alpha.contains(x):
            return False
        return expand(alpha, x, len(word) + 1) == word
    cyl = word_cylinder(alpha, word.digits)
    if cyl is None:
        return False
    mid = (cyl[0] + cyl[1]) / 2
    try:
        again = expand(alpha, mid, len(word))
    except DomainError:
        return False
    return again.digits == word.digits
