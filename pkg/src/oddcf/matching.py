"""Matching of the orbits of ``alpha`` and ``alpha - 2``.

Matching holds at ``alpha`` when ``T^N(alpha) = T^M(alpha - 2)`` for some
``(N, M)``; the sign of ``N - M`` decides whether the entropy increases,
stays constant or decreases across the matching interval.  This module
checks the four rational families below exactly, transfers matching to
their neighbourhoods, and scans parameter grids.

    a_n = 1/n,  b_n = (2n+1)/(2n^2+2n+1),  c_n = (5n-1)/(n(5n-1)+5),  d_n = n/(n^2+1)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2

from .cf import as_alpha, digit, expand, orbit, step
from .errors import NeighborhoodTooWide, OddCFError, NonTerminatingGuard, PrecisionExhausted, UncertainFloor
from .numeric import (
    GOLDEN_SMALL,
    IDENTITY,
    MPFR,
    Mat2,
    R,
    S,
    VMat,
    digit_matrix,
    format_scalar,
    make_float,
    precision,
    to_mpfr,
)

FAMILIES = ("a", "b", "c", "d")
ROLE = {"a": "Increasing", "b": "Constant", "c": "Decreasing", "d": "Constant"}
ORBIT_GUARD = 1_000_000
CERTIFICATE_DIGITS = 10


def classify(delta: int) -> str:
    """Monotonicity of the entropy on a matching interval with ``N - M = delta``."""
    if delta < 0:
        return "Increasing"
    if delta > 0:
        return "Decreasing"
    return "Constant"


@dataclass
class MatchReport:
    alpha: object
    N: int | None
    M: int | None
    kind: str
    certificates: dict = field(default_factory=dict)

    @property
    def matched(self) -> bool:
        return self.N is not None

    @property
    def delta(self) -> int | None:
        return None if self.N is None else self.N - self.M

    @property
    def classification(self) -> str | None:
        return None if self.N is None else classify(self.delta)

    def to_json(self) -> dict:
        return {
            "alpha": format_scalar(self.alpha),
            "N": self.N,
            "M": self.M,
            "delta": self.delta,
            "kind": self.kind,
            "classification": self.classification,
            "certificates": dict(self.certificates),
        }


# ---------------------------------------------------------------------------
# the four families
# ---------------------------------------------------------------------------

def seq_abcd(family: str, n: int) -> Fraction:
    if n < 3:
        raise ValueError("the families start at n = 3")
    if family == "a":
        return Fraction(1, n)
    if family == "b":
        return Fraction(2 * n + 1, 2 * n * n + 2 * n + 1)
    if family == "c":
        return Fraction(5 * n - 1, n * (5 * n - 1) + 5)
    if family == "d":
        return Fraction(n, n * n + 1)
    raise ValueError(f"unknown family {family!r}")


def expected_exponents(family: str, n: int) -> tuple[int, int]:
    """Closed-form matching exponents of the families."""
    odd = n % 2 == 1
    if family == "a":
        return (1, 3 * (n - 1) // 2 + 1) if odd else (2, 3 * (n - 2) // 2 + 2)
    if family == "b":
        k = 3 * (n + 1) // 2 + 1 if odd else 3 * n // 2 + 1
        return k, k
    if family == "c":
        return (3 * (n - 1) // 2 + 6, 3 * (n - 1) // 2 + 3) if odd else (3 * n // 2 + 4, 3 * n // 2 + 1)
    if family == "d":
        k = 3 * (n - 1) // 2 + 2 if odd else 3 * n // 2
        return k, k
    raise ValueError(f"unknown family {family!r}")


def expected_digits(family: str, n: int) -> tuple[list[int], list[int]]:
    """Partial quotients of ``alpha`` and of ``alpha - 2`` for a family member.

    Signs are implied: ``alpha`` starts with ``+1`` and continues with ``-1``;
    every sign of ``alpha - 2`` is ``-1``.
    """
    odd = n % 2 == 1
    h = (n - 1) // 2 if odd else (n - 2) // 2
    blk = [1, 3, 3] * h
    if family == "a":
        return ([n], blk + [1]) if odd else ([n + 1, 1], blk + [1, 3])
    if family == "b":
        if odd:
            return [n + 2, 1, 5] + blk + [1], blk + [1, 5, 1, n + 2]
        return [n + 1] + [3, 3, 1] * (n // 2), [1, 3, 3] * (n // 2) + [n + 1]
    if family == "c":
        tail = [3, 1, 3, 3, 1]
        return ([n + 2] + blk + tail, blk + [1, n + 2, 5]) if odd else \
            ([n + 1, 3] + blk + tail, blk + [1, 3, n + 1, 5])
    if family == "d":
        return ([n + 2] + blk + [1], blk + [1, n + 2]) if odd else \
            ([n + 1, 3] + blk + [1], blk + [1, 3, n + 1])
    raise ValueError(f"unknown family {family!r}")


def expected_matrices(family: str, n: int) -> tuple[Mat2, Mat2]:
    """Parametrised ``M_{alpha,alpha,N}`` and ``M_{alpha,alpha-2,M}``."""
    if family == "a":
        if n % 2:
            return Mat2(0, 1, 1, n), Mat2(4 - 4 * n, 1 - 2 * n, 2 * n - 1, n)
        return Mat2(1, 1, n + 1, n), Mat2(3 - 2 * n, 1 - 2 * n, n - 1, n)
    if family == "b":
        return (Mat2(4 * n, 2 * n + 1, 4 * n * n + 2 * n + 1, 2 * n * n + 2 * n + 1),
                Mat2(-4 * n, -4 * n * n - 2 * n - 1, 2 * n + 1, 2 * n * n + 2 * n + 1))
    if family == "c":
        q = n * (5 * n - 1) + 5
        return (Mat2(9 * n - 2, 5 * n - 1, 9 * n * n - 2 * n + 9, q),
                Mat2(-2 * n * n + n - 2, 7 * n - 10 * n * n - 11, n * n + 1, q))
    if family == "d":
        return (Mat2(2 * n - 1, n, 2 * n * n - n + 2, n * n + 1),
                Mat2(1 - 2 * n, n - 2 * n * n - 2, n, n * n + 1))
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# exact matching
# ---------------------------------------------------------------------------

def _first_collision(orb_a: Sequence, orb_b: Sequence) -> tuple[int, int] | None:
    """Smallest ``N``, then smallest ``M``, with ``orb_a[N] == orb_b[M]``."""
    first_b = {}
    for m, v in enumerate(orb_b):
        first_b.setdefault(v, m)
    for n, v in enumerate(orb_a):
        if v in first_b:
            return n, first_b[v]
    return None


def find_matching_exact(alpha) -> MatchReport:
    """Exact matching exponents of a rational ``alpha`` in ``(0, 1)``."""
    a = Fraction(alpha)
    if not 0 < a < 1:
        raise ValueError("find_matching_exact needs a rational alpha in (0, 1)")
    orb_a = orbit(a, a, ORBIT_GUARD)
    orb_b = orbit(a, a - 2, ORBIT_GUARD)
    if orb_a[-1] != 0 or orb_b[-1] != 0:
        raise NonTerminatingGuard(f"orbit of {a} exceeded {ORBIT_GUARD} steps")
    n, m = _first_collision(orb_a, orb_b)
    zero_hit = orb_a[n] == 0
    return MatchReport(a, n, m, "exact_zero_hit" if zero_hit else "exact_collision")


def build_M_matrix(alpha, x, n: int) -> Mat2:
    """``M_{alpha,x,n}``: the product of the first ``n`` digit matrices of ``x``."""
    alpha = as_alpha(alpha)
    m = IDENTITY
    for _ in range(n):
        eps, a = digit(alpha, x)
        m = m @ digit_matrix(eps, a)
        x = step(alpha, x)
    return m


def alg2_rhs(m_lower: Mat2) -> Mat2:
    """``R^2 M V S R^2 S`` for the lower-endpoint matrix ``M``."""
    r2 = R @ R
    return r2 @ m_lower @ VMat @ S @ r2 @ S


def verify_alg2(alpha, N: int | None = None, M: int | None = None) -> bool:
    """Exact check of ``M_{alpha,alpha,N} = R^2 M_{alpha,alpha-2,M} V S R^2 S``."""
    a = Fraction(alpha)
    if N is None or M is None:
        rep = find_matching_exact(a)
        N, M = rep.N, rep.M
    return build_M_matrix(a, a, N) == alg2_rhs(build_M_matrix(a, a - 2, M))


@dataclass
class FamilyRow:
    family: str
    n: int
    alpha: Fraction
    expected: tuple
    computed: tuple
    passed: bool


def verify_prop41(n_min: int = 3, n_max: int = 20, families: Iterable[str] = FAMILIES) -> list[FamilyRow]:
    if not 3 <= n_min <= n_max:
        raise ValueError("need 3 <= n_min <= n_max")
    rows = []
    for fam in families:
        for n in range(n_min, n_max + 1):
            a = seq_abcd(fam, n)
            rep = find_matching_exact(a)
            exp = expected_exponents(fam, n)
            got = (rep.N, rep.M)
            rows.append(FamilyRow(fam, n, a, exp, got, exp == got))
    return rows


@dataclass
class Table1Check:
    family: str
    n: int
    passed: bool
    diff: list


def _signed(digits: list[int], first_plus: bool) -> list[tuple[int, int]]:
    return [(1 if (first_plus and i == 0) else -1, d) for i, d in enumerate(digits)]


def verify_table1(family: str, n: int) -> Table1Check:
    """Compare both expansions of a family member with the closed-form digit strings."""
    a = seq_abcd(family, n)
    up, low = expected_digits(family, n)
    got_up = [tuple(d) for d in expand(a, a).digits]
    got_low = [tuple(d) for d in expand(a, a - 2).digits]
    diff = []
    for name, want, got in (("alpha", _signed(up, True), got_up), ("alpha-2", _signed(low, False), got_low)):
        if want != got:
            diff.append({"expansion": name, "expected": want, "computed": got})
    return Table1Check(family, n, not diff, diff)


def verify_table2(family: str, n: int) -> dict:
    """Computed matrices against the parametrised table entries."""
    a = seq_abcd(family, n)
    N, M = expected_exponents(family, n)
    up, low = build_M_matrix(a, a, N), build_M_matrix(a, a - 2, M)
    want_up, want_low = expected_matrices(family, n)
    return {
        "upper": up == want_up,
        "lower": low == want_low,
        "computed": (up.rows(), low.rows()),
        "expected": (want_up.rows(), want_low.rows()),
    }


def family_report(family: str, n: int) -> MatchReport:
    a = seq_abcd(family, n)
    rep = find_matching_exact(a)
    t2 = verify_table2(family, n)
    rep.certificates = {
        "alg2": verify_alg2(a, rep.N, rep.M),
        "table1": verify_table1(family, n).passed,
        "table2": t2["upper"] and t2["lower"],
    }
    return rep


# ---------------------------------------------------------------------------
# neighbourhoods
# ---------------------------------------------------------------------------

def _prefix(alpha, x, n: int) -> list:
    """First ``n`` signed digits of ``x`` under ``T_alpha`` (shorter if the orbit ends)."""
    return list(expand(alpha, x, n).digits)


@dataclass
class Alg1Report:
    alpha: Fraction
    N: int
    M: int
    delta_used: object
    shrinks: int
    samples: int
    passed: bool
    failures: list = field(default_factory=list)


def _check_sample(x, N, M, up_prefix, low_prefix, bits):
    """Return None if ``x`` passes, else a reason string; raise on prefix mismatch."""
    exact = not isinstance(x, MPFR)
    if _prefix(x, x, N) != up_prefix or _prefix(x, x - 2 if exact else _sub2(x), M) != low_prefix:
        raise _PrefixMismatch
    lower = x - 2 if exact else _sub2(x)
    orb_u = orbit(x, x, N + 1)
    orb_l = orbit(x, lower, M + 1)
    if len(orb_u) < N + 2 or len(orb_l) < M + 2:
        return "orbit ended early"
    tu, tl = orb_u[N + 1], orb_l[M + 1]
    if exact:
        if tu != tl:
            return f"T^(N+1)(x) = {tu} differs from T^(M+1)(x-2) = {tl}"
        m_up = build_M_matrix(x, x, N + 1)
        m_low = build_M_matrix(x, lower, M + 1)
        if m_up != R @ R @ m_low:
            return "matrix identity fails"
        return None
    with precision(bits):
        gap = abs(tu - tl)
    if gap > gmpy2.exp2(-(bits // 2)):
        return f"float gap {float(gap):.3g}"
    return None


def _sub2(x: MPFR) -> MPFR:
    with precision(x.precision):
        return x - 2


class _PrefixMismatch(Exception):
    pass


def verify_alg1_neighborhood(alpha, delta=Fraction(1, 10**9), samples: int = 8,
                             precision_bits: int = 256, max_shrinks: int = 20) -> Alg1Report:
    """Matching with exponents ``(N + 1, M + 1)`` at points near ``alpha``.

    Samples are exact rationals ``alpha +- k delta/h`` and high-precision
    floats; ``alpha`` itself is excluded.  ``delta`` is divided by 10
    whenever a sample leaves the digit cylinders of ``alpha``.
    """
    a = Fraction(alpha)
    rep = find_matching_exact(a)
    N, M = rep.N, rep.M
    up_prefix = _prefix(a, a, N)
    low_prefix = _prefix(a, a - 2, M)
    delta = Fraction(delta)
    half = max(1, samples // 2)
    for shrink in range(max_shrinks + 1):
        failures = []
        try:
            pts = []
            for k in range(1, half + 1):
                off = delta * k / half
                pts += [a - off, a + off]
            with precision(precision_bits):
                pts += [make_float(a - delta / 3, precision_bits), make_float(a + delta / 7, precision_bits)]
            for x in pts:
                reason = _check_sample(x, N, M, up_prefix, low_prefix, precision_bits)
                if reason:
                    failures.append((format_scalar(x), reason))
        except (_PrefixMismatch, UncertainFloor, PrecisionExhausted):
            delta /= 10
            continue
        return Alg1Report(a, N + 1, M + 1, delta, shrink, len(pts), not failures, failures)
    raise NeighborhoodTooWide(f"digit prefixes of {a} not shared after {max_shrinks} shrinks")


def _stable(x: Fraction, N, M, up_prefix, low_prefix) -> bool:
    """Whether ``x`` shares the digit prefixes and matches with ``(N + 1, M + 1)``."""
    try:
        return _check_sample(x, N, M, up_prefix, low_prefix, 0) is None
    except (_PrefixMismatch, OddCFError):
        return False


def matching_interval(alpha, reach=Fraction(1, 10), iterations: int = 60) -> tuple[Fraction, Fraction]:
    """Experimental: the stability interval around a rational ``alpha``.

    On each side, bisects for the boundary of the set of ``x`` whose first
    ``N`` and ``M`` digits agree with those of ``alpha`` and which match with
    exponents ``(N + 1, M + 1)``.  The result is an inner approximation,
    accurate to ``reach / 2^iterations`` when the set is an interval.
    """
    a = Fraction(alpha)
    rep = find_matching_exact(a)
    N, M = rep.N, rep.M
    up_prefix = _prefix(a, a, N)
    low_prefix = _prefix(a, a - 2, M)
    ends = []
    for side in (-1, 1):
        bad = Fraction(reach)
        good = bad
        while not _stable(a + side * good, N, M, up_prefix, low_prefix):
            bad, good = good, good / 2
            if good < Fraction(1, 10**40):
                raise NeighborhoodTooWide(f"no stable point found near {a}")
        if good != bad:
            for _ in range(iterations):
                mid = (good + bad) / 2
                if _stable(a + side * mid, N, M, up_prefix, low_prefix):
                    good = mid
                else:
                    bad = mid
        ends.append(a + side * good)
    return ends[0], ends[1]


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

def _float_orbit(alpha_f: MPFR, x: MPFR, n: int) -> tuple[list, list]:
    """Points and digits of a float orbit; stops early only at an exact zero."""
    pts, digs = [], []
    alpha_f = as_alpha(alpha_f)
    for _ in range(n):
        if x == 0:
            raise PrecisionExhausted("float orbit hit 0")
        digs.append(tuple(digit(alpha_f, x)))
        pts.append(x)
        x = step(alpha_f, x)
    return pts, digs


def _collision_candidates(orb_a, orb_b, tol) -> list[tuple[int, int]]:
    tagged = [(v, 0, i) for i, v in enumerate(orb_a)] + [(v, 1, i) for i, v in enumerate(orb_b)]
    tagged.sort(key=lambda t: t[0])
    out = set()
    j = 0
    for i in range(len(tagged)):
        while tagged[i][0] - tagged[j][0] >= tol:
            j += 1
        for k in range(j, i):
            u, w = tagged[k], tagged[i]
            if u[1] != w[1]:
                n, m = (u[2], w[2]) if u[1] == 0 else (w[2], u[2])
                out.add((n, m))
    return sorted(out)


def find_matching_numeric(alpha, max_iter: int = 200, tol: float = 1e-20,
                          precision_bits: int = 512) -> MatchReport:
    """First ``(N, M)`` whose orbit points agree within ``tol`` and whose next ten digits coincide."""
    with precision(precision_bits):
        a = to_mpfr(alpha, precision_bits)
        lower = a - 2
    with precision(precision_bits):
        tol_f = gmpy2.mpfr(tol)
    span = max_iter + 1 + CERTIFICATE_DIGITS
    pts_a, dig_a = _float_orbit(a, a, span)
    pts_b, dig_b = _float_orbit(a, lower, span)
    for n, m in _collision_candidates(pts_a[:max_iter + 1], pts_b[:max_iter + 1], tol_f):
        if dig_a[n:n + CERTIFICATE_DIGITS] == dig_b[m:m + CERTIFICATE_DIGITS]:
            return MatchReport(alpha, n, m, "numeric_collision")
    return MatchReport(alpha, None, None, "no_match")


def scan_grid(lo, hi, steps: int, generic: bool = False) -> list:
    """Exact rational grid; ``generic`` shifts each point by an irrational offset."""
    lo, hi = Fraction(lo), Fraction(hi)
    pts = [lo + (hi - lo) * k / (steps - 1) for k in range(steps)] if steps > 1 else [lo]
    if not generic:
        return pts
    # a shift by a multiple of g keeps points off the rationals
    offset = (hi - lo) / (max(steps, 2) * 1000)
    return [p + offset * GOLDEN_SMALL for p in pts]


def scan_matching(lo, hi, steps: int, max_iter: int = 200, tol: float = 1e-20,
                  precision_bits: int = 512, generic: bool = False) -> list[MatchReport]:
    """Matching search on a grid.

    Each point runs the float collision search.  When its float orbit comes
    within ``2^(-precision/2)`` of 0 (the signature of a rational whose orbit
    terminates) the exact search takes over.
    """
    out = []
    for a in scan_grid(lo, hi, steps, generic):
        try:
            out.append(find_matching_numeric(a, max_iter, tol, precision_bits))
        except (PrecisionExhausted, UncertainFloor):
            if isinstance(a, Fraction) and 0 < a < 1:
                out.append(find_matching_exact(a))
            else:
                out.append(MatchReport(a, None, None, "no_match"))
    return out


def reports_to_json(reports: Sequence[MatchReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)
