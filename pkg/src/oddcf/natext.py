"""Natural extensions of the odd alpha-continued fraction maps.

The planar map is

    T(x, y) = (T_alpha(x), 1/(d_alpha(x) + sign(x) y)),

and the invariant density is proportional to ``(1 + xy)^-2`` with total mass
``3 log G`` on every domain built here.  Domains are finite unions of
rectangles with exact endpoints; the infinite families needed for
``alpha < g`` are truncated and the dropped mass is bounded.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Callable, Iterator, NamedTuple, Sequence

import gmpy2
import numpy as np

from .cf import AlphaParam, as_alpha, step
from .errors import DensitySingular, DomainError, PoleError, UnsupportedAlpha, ZeroFuture
from .numeric import (
    ALPHA_13,
    GOLDEN_BIG,
    GOLDEN_SMALL,
    GOLDEN_SMALL_SQ,
    MPFR,
    compare,
    float_context,
    format_scalar,
    is_float,
    precision,
    sign,
    to_float,
    to_mpfr,
)
from .cf import _digit_value

DEFAULT_TRUNCATION = 40
DEFAULT_TOL = 1e-12
MASS_BITS = 256

g, G, g2 = GOLDEN_SMALL, GOLDEN_BIG, GOLDEN_SMALL_SQ


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

class PlanarPoint(NamedTuple):
    """A point ``(t, v)``: ``t`` is the future, ``v`` the past."""

    t: object
    v: object


def _lt(a, b) -> bool:
    return compare(a, b) < 0


def _min(a, b):
    return a if compare(a, b) <= 0 else b


def _max(a, b):
    return a if compare(a, b) >= 0 else b


@dataclass(frozen=True)
class Rect:
    """``[x_lo, x_hi) x [y_lo, y_hi]`` with exact endpoints."""

    x_lo: object
    x_hi: object
    y_lo: object
    y_hi: object

    def __post_init__(self):
        if not (_lt(self.x_lo, self.x_hi) and _lt(self.y_lo, self.y_hi)):
            raise ValueError(f"empty rectangle {self}")

    @classmethod
    def maybe(cls, x_lo, x_hi, y_lo, y_hi) -> Rect | None:
        """The rectangle, or None when it is empty."""
        if _lt(x_lo, x_hi) and _lt(y_lo, y_hi):
            return cls(x_lo, x_hi, y_lo, y_hi)
        return None

    def bounds(self) -> tuple[float, float, float, float]:
        return tuple(to_float(z) for z in (self.x_lo, self.x_hi, self.y_lo, self.y_hi))

    def contains(self, p: PlanarPoint, tol: float = 0.0) -> bool:
        t, v = p
        if tol == 0:
            return (compare(self.x_lo, t) <= 0 and compare(t, self.x_hi) < 0
                    and compare(self.y_lo, v) <= 0 and compare(v, self.y_hi) <= 0)
        x0, x1, y0, y1 = self.bounds()
        t, v = to_float(t), to_float(v)
        return x0 - tol <= t < x1 + tol and y0 - tol <= v <= y1 + tol

    def to_json(self) -> dict:
        return {k: format_scalar(getattr(self, k)) for k in ("x_lo", "x_hi", "y_lo", "y_hi")}

    def __str__(self):
        x0, x1, y0, y1 = (format_scalar(z) for z in (self.x_lo, self.x_hi, self.y_lo, self.y_hi))
        return f"[{x0}, {x1}) x [{y0}, {y1}]"


@dataclass(frozen=True)
class Domain:
    """A finite union of interior-disjoint rectangles."""

    rects: tuple
    truncation_level: int = 0
    tail_mass_bound: float = 0.0
    alpha: object = None
    regime: str = ""

    def __len__(self):
        return len(self.rects)

    def bounds_array(self) -> np.ndarray:
        """``(n, 4)`` float array of ``x_lo, x_hi, y_lo, y_hi``."""
        return np.array([r.bounds() for r in self.rects], dtype=float).reshape(-1, 4)

    def to_json(self) -> dict:
        return {
            "alpha": None if self.alpha is None else format_scalar(self.alpha),
            "regime": self.regime,
            "truncation": self.truncation_level,
            "tail_mass_bound": self.tail_mass_bound,
            "rects": [r.to_json() for r in self.rects],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_lo", "x_hi", "y_lo", "y_hi"])
        for row in self.bounds_array():
            w.writerow([repr(float(z)) for z in row])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

def natext_step(alpha, p: PlanarPoint) -> PlanarPoint:
    """One step of the planar map; exact on exact input."""
    alpha = as_alpha(alpha)
    t, v = p
    s = sign(t)
    if s == 0:
        raise ZeroFuture("the planar map is undefined at t = 0")
    d = _digit_value(alpha, t)
    with float_context(t, v):
        den = d + s * v
    if sign(den) <= 0:
        raise PoleError(f"d + eps*v = {format_scalar(den)} is not positive")
    with float_context(den):
        v_new = 1 / den
    return PlanarPoint(step(alpha, t), v_new)


def map_M(alpha, p: PlanarPoint, branch: str) -> PlanarPoint:
    """The branches of the rearranging map.

    ``shift``: ``(t - 2, v/(1 + 2v))``, moving a block left by two.
    ``flip``: ``(-1/t - 1, 1/(1 - v))``, the planar map on the shifted block.
    """
    as_alpha(alpha)
    t, v = p
    with float_context(t, v):
        if branch == "shift":
            den = 1 + 2 * v
            if sign(den) == 0:
                raise PoleError("1 + 2v = 0")
            return PlanarPoint(t - 2, v / den)
        if branch == "flip":
            if sign(t) == 0 or compare(v, 1) == 0:
                raise PoleError("flip has a pole at t = 0 or v = 1")
            if sign(t) > 0 or compare(v, 1) > 0:
                raise DomainError("flip needs t < 0 and v < 1")
            return PlanarPoint(-1 / t - 1, 1 / (1 - v))
    raise ValueError(f"unknown branch {branch!r}")


def aux_A(p: PlanarPoint) -> PlanarPoint:
    """``(xi, eta) -> (-1/xi - 3, 1/(3 - eta))``."""
    xi, eta = p
    if sign(xi) == 0 or compare(eta, 3) == 0:
        raise PoleError("aux_A has a pole at xi = 0 or eta = 3")
    with float_context(xi, eta):
        return PlanarPoint(-1 / xi - 3, 1 / (3 - eta))


def image_rect(rect: Rect, fx: Callable, fy: Callable) -> Rect:
    """Image of a rectangle under a product of monotone maps."""
    xs = fx(rect.x_lo), fx(rect.x_hi)
    ys = fy(rect.y_lo), fy(rect.y_hi)
    return Rect(_min(*xs), _max(*xs), _min(*ys), _max(*ys))


def _shift_rect(r: Rect) -> Rect:
    return image_rect(r, lambda t: t - 2, lambda v: v / (1 + 2 * v))


def _flip_rect(r: Rect) -> Rect:
    return image_rect(r, lambda t: -1 / t - 1, lambda v: 1 / (1 - v))


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------

def m_map(v):
    """``m(v) = (2v + 1)/(v + 1)``, whose iterates from 0 climb to G."""
    return (2 * v + 1) / (v + 1)


def VFun(x):
    """``V(x) = (1 + x)/(2 + x)``; distinct from the matrix ``VMat``."""
    return (1 + x) / (2 + x)


@lru_cache(maxsize=None)
def _iterate(fn_name: str, start_key: str, n: int):
    fn = {"m": m_map, "V": VFun}[fn_name]
    start = {"0": Fraction(0), "1": Fraction(1), "g2": g2, "G": G}[start_key]
    x = start if n == 0 else fn(_iterate(fn_name, start_key, n - 1))
    return x


def _check_n(n: int, least: int = 0):
    if n < least:
        raise ValueError(f"index must be >= {least}, got {n}")


def _seq(fn_name, start_key, n):
    # iterate upward so the recursion depth of the cache stays small
    for k in range(0, n, 256):
        _iterate(fn_name, start_key, k)
    return _iterate(fn_name, start_key, n)


def seq_m(n: int):
    """``m_n = m^n(0)`` with ``m(v) = (2v + 1)/(v + 1)``; increases to G."""
    _check_n(n)
    return _seq("m", "0", n)


def seq_ell(n: int):
    """``l_n = V^n(0)``, the continued fraction ``[0; 1^(2n)]``; increases to g."""
    _check_n(n)
    return _seq("V", "0", n)


def seq_u(n: int):
    """``u_n = V^n(g^2)``; ``l_n < u_n < l_(n+1)``."""
    _check_n(n)
    return _seq("V", "g2", n)


def seq_L(n: int):
    """``L_n = V^n(1)``, the continued fraction ``[0; 1^(2n+1)]``; decreases to g."""
    _check_n(n)
    return _seq("V", "1", n)


def seq_U(n: int):
    """``U_n = V^n(G)``; ``L_(n+1) < U_(n+1) < L_n``."""
    _check_n(n)
    return _seq("V", "G", n)


# ---------------------------------------------------------------------------
# masses
# ---------------------------------------------------------------------------

def rect_mass(r: Rect, bits: int = MASS_BITS) -> MPFR:
    """Mass of ``r`` under the density ``(1 + xy)^-2`` (not normalised)."""
    with precision(bits + 32):
        x0, x1, y0, y1 = (to_mpfr(z, bits + 32) for z in (r.x_lo, r.x_hi, r.y_lo, r.y_hi))
        corners = (1 + x1 * y1, 1 + x0 * y0, 1 + x1 * y0, 1 + x0 * y1)
        if any(c <= 0 for c in corners):
            raise DensitySingular(f"1 + xy vanishes on {r}")
        m = gmpy2.log((corners[0] * corners[1]) / (corners[2] * corners[3]))
    with precision(bits):
        return +m


def domain_mass(d: Domain, bits: int = MASS_BITS) -> MPFR:
    with precision(bits + 16):
        total = gmpy2.fsum([rect_mass(r, bits + 16) for r in d.rects]) if d.rects else gmpy2.mpfr(0)
    with precision(bits):
        return +total


def total_mass(bits: int = MASS_BITS) -> MPFR:
    """``3 log G``, the mass of every natural-extension domain."""
    with precision(bits):
        return 3 * gmpy2.log(to_mpfr(G, bits))


# ---------------------------------------------------------------------------
# region algebra (exact)
# ---------------------------------------------------------------------------

def subtract_rect(r: Rect, cut: Rect) -> list[Rect]:
    """``r`` minus ``cut`` as at most four rectangles (boundaries ignored)."""
    ix0, ix1 = _max(r.x_lo, cut.x_lo), _min(r.x_hi, cut.x_hi)
    iy0, iy1 = _max(r.y_lo, cut.y_lo), _min(r.y_hi, cut.y_hi)
    if not (_lt(ix0, ix1) and _lt(iy0, iy1)):
        return [r]
    pieces = [
        Rect.maybe(r.x_lo, ix0, r.y_lo, r.y_hi),
        Rect.maybe(ix1, r.x_hi, r.y_lo, r.y_hi),
        Rect.maybe(ix0, ix1, r.y_lo, iy0),
        Rect.maybe(ix0, ix1, iy1, r.y_hi),
    ]
    return [p for p in pieces if p is not None]


def subtract_region(rects: Sequence[Rect], cut: Rect) -> list[Rect]:
    return [p for r in rects for p in subtract_rect(r, cut)]


def _breaks(values) -> list:
    out = []
    for v in sorted(values, key=cmp_to_key(compare)):
        if not out or compare(out[-1], v) != 0:
            out.append(v)
    return out


def same_region(a: Sequence[Rect], b: Sequence[Rect]) -> bool:
    """Whether two rectangle unions agree up to boundaries (exact)."""
    xs = _breaks([z for r in (*a, *b) for z in (r.x_lo, r.x_hi)])
    ys = _breaks([z for r in (*a, *b) for z in (r.y_lo, r.y_hi)])
    for x0, x1 in zip(xs, xs[1:]):
        for y0, y1 in zip(ys, ys[1:]):
            mid = PlanarPoint(_mid(x0, x1), _mid(y0, y1))
            if any(r.contains(mid) for r in a) != any(r.contains(mid) for r in b):
                return False
    return True


def _mid(a, b):
    try:
        return (a + b) / 2
    except TypeError:
        # mixed fields: any point strictly between will do
        with precision(MASS_BITS):
            return (to_mpfr(a) + to_mpfr(b)) / 2


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

def regime_of(alpha) -> str:
    """``lt_g``, ``ge_g``, ``one``, ``gt_one`` or ``G``; UnsupportedAlpha below (sqrt13 - 1)/6."""
    a = as_alpha(alpha).value
    if compare(a, ALPHA_13) < 0:
        raise UnsupportedAlpha(
            f"no natural extension is constructed for alpha = {format_scalar(a)} < (sqrt13-1)/6"
        )
    if compare(a, g) < 0:
        return "lt_g"
    c1 = compare(a, 1)
    if c1 < 0:
        return "ge_g"
    if c1 == 0:
        return "one"
    if compare(a, G) < 0:
        return "gt_one"
    return "G"


def _T_left(alpha: AlphaParam):
    """``T_alpha(alpha - 2) = (alpha - 1)/(2 - alpha)``."""
    return step(alpha, alpha.lower)


def build_domain(alpha, truncation: int = DEFAULT_TRUNCATION) -> Domain:
    """The natural-extension domain for ``alpha`` in ``[(sqrt13 - 1)/6, G]``."""
    alpha = as_alpha(alpha)
    regime = regime_of(alpha)
    a = alpha.value
    builder = {
        "one": _omega_one,
        "ge_g": _omega_ge_g,
        "gt_one": _omega_gt_one,
        "G": _omega_G,
    }.get(regime)
    if builder is not None:
        rects = builder(alpha)
        return Domain(tuple(rects), 0, 0.0, a, regime)
    rects, tail = _omega_lt_g(alpha, truncation)
    return Domain(tuple(rects), truncation, tail, a, regime)


def _keep(*rects) -> list[Rect]:
    return [r for r in (Rect.maybe(*b) for b in rects) if r is not None]


def _omega_one(alpha):
    return _keep((-1, 0, 0, g2), (0, 1, 0, G))


def _omega_G(alpha):
    return _keep((-g2, G, 0, 1))


def _omega_ge_g(alpha):
    a = alpha.value
    with float_context(a):
        lo, mid = a - 2, (1 - a) / a
    return _keep((lo, a, 0, g2), (mid, a, g2, 1), (_T_left(alpha), a, 1, G))


def _omega_gt_one(alpha):
    a = alpha.value
    with float_context(a):
        lo, split = a - 2, 1 / a - 1
    tl = _T_left(alpha)
    return _keep((lo, split, 0, g2), (split, tl, 0, 1), (tl, a, 0, G))


@lru_cache(maxsize=8)
def _bands(truncation: int) -> tuple:
    """Past-coordinate bands ``[l_n, u_n]`` and ``[L_n, U_n]`` for ``n < truncation``."""
    out = []
    for n in range(truncation):
        out.append((seq_ell(n), seq_u(n)))
        out.append((seq_L(n), seq_U(n)))
    return tuple(out)


def _omega_lt_g(alpha, truncation: int):
    """Domain for ``(sqrt13 - 1)/6 <= alpha < g``.

    Starting from the domain at ``g``, every band ``[alpha, g) x B`` is moved
    by the shift branch to ``[alpha - 2, g - 2)``; its image under the planar
    map sits over ``[T_alpha(alpha - 2), -1/(G + 2))``, and one further step
    (which agrees with the auxiliary map there) lands on an island over
    ``[(2alpha - 1)/(1 - alpha), alpha)``.  The vacated images of the bands
    leave holes in the two strips left of ``(1 - 3alpha)/alpha`` and
    ``(1 - 2alpha)/(3alpha - 1)``.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    a = alpha.value
    with float_context(a):
        x_low_cut = (1 - 3 * a) / a
        x_up_cut = (1 - 2 * a) / (3 * a - 1)
        x_island = (2 * a - 1) / (1 - a)
    tl = _T_left(alpha)
    left_edge = -1 / (G + 2)
    bands = _bands(truncation)

    rects: list[Rect] = []
    for lo, hi in bands:
        ml, mu = lo / (1 + 2 * lo), hi / (1 + 2 * hi)
        yl, yu = 1 / (1 - ml), 1 / (1 - mu)
        rects += _keep(
            (a - 2, g - 2, ml, mu),
            (tl, left_edge, yl, yu),
            (x_island, a, 1 / (3 - yl), 1 / (3 - yu)),
        )

    rects += _keep((x_low_cut, a, 0, g2))
    holes = sorted(((1 / (3 + hi), 1 / (3 + lo)) for lo, hi in bands), key=_first_key)
    rects += _strip(g - 2, x_low_cut, 0, g2, holes)

    rects += _keep((x_up_cut, a, 1, G))
    holes = [(_min(*h), _max(*h)) for h in (((3 + lo) / (2 + lo), (3 + hi) / (2 + hi)) for lo, hi in bands)]
    holes.sort(key=_first_key)
    rects += _strip(left_edge, x_up_cut, 1, G, holes)

    with precision(MASS_BITS):
        band = Rect.maybe(a, g, seq_ell(truncation), seq_L(truncation))
        tail = 5 * float(rect_mass(band)) if band is not None else 0.0
    return rects, tail


_first_key = cmp_to_key(lambda h, k: compare(h[0], k[0]))


def _strip(x_lo, x_hi, y_lo, y_hi, holes) -> list[Rect]:
    """``[x_lo, x_hi) x ([y_lo, y_hi]`` minus sorted disjoint ``holes``)."""
    if not _lt(x_lo, x_hi):
        return []
    out, y = [], y_lo
    for h_lo, h_hi in holes:
        if _lt(y, h_lo):
            out += _keep((x_lo, x_hi, y, _min(h_lo, y_hi)))
        y = _max(y, h_hi)
    out += _keep((x_lo, x_hi, y, y_hi))
    return out


def contains(d: Domain, p: PlanarPoint, tol: float = DEFAULT_TOL) -> bool:
    """Membership with ``tol``-thickened boundaries (exact when ``tol == 0``)."""
    return any(r.contains(p, tol) for r in d.rects)


# ---------------------------------------------------------------------------
# constructive paths
# ---------------------------------------------------------------------------

def constructive_ge_g(alpha) -> list[Rect]:
    """Domain for ``alpha`` in ``[g, 1)`` built from the ``alpha = 1`` domain.

    Removes ``D = [alpha, 1) x [0, G]`` and its image ``H`` under the planar
    map, then adds the shift of ``D`` and the flip of that shift.
    """
    alpha = as_alpha(alpha)
    if regime_of(alpha) != "ge_g":
        raise ValueError("constructive_ge_g needs g <= alpha < 1")
    a = alpha.value
    D = Rect(a, 1, 0, G)
    H = image_rect(D, lambda t: 1 / t - 1, lambda v: 1 / (1 + v))
    region = subtract_region(subtract_region(_omega_one(alpha), D), H)
    MD = _shift_rect(D)
    return region + [MD, _flip_rect(MD)]


def omega_stages(alpha, n_stages: int) -> Iterator[list[Rect]]:
    """Finite-stage regions for ``alpha`` in ``(1, G)``, starting from the ``alpha = G`` domain.

    Stage ``k`` removes ``D_k = [alpha, G) x [m_k, m_(k+1)]`` and its image
    under the planar map, and adds the shift and shift-then-flip images of
    ``D_k``.  The stages converge to :func:`build_domain`.
    """
    alpha = as_alpha(alpha)
    if regime_of(alpha) != "gt_one":
        raise ValueError("omega_stages needs 1 < alpha < G")
    region = _omega_G(alpha)
    yield list(region)
    for k in range(n_stages):
        D = stage_block(alpha, k)
        H = image_rect(D, lambda t: 1 / t - 1, lambda v: 1 / (1 + v))
        region = subtract_region(subtract_region(region, D), H)
        MD = _shift_rect(D)
        region = region + [MD, _flip_rect(MD)]
        yield list(region)


def stage_block(alpha, k: int) -> Rect:
    """``D_k = [alpha, G) x [m_k, m_(k+1)]``."""
    a = as_alpha(alpha).value
    return Rect(a, G, seq_m(k), seq_m(k + 1))


def double_image(alpha, rect: Rect) -> Rect:
    """Shift followed by flip."""
    return _flip_rect(_shift_rect(rect))


def rect_contains_rect(outer: Rect, inner: Rect) -> bool:
    return (compare(outer.x_lo, inner.x_lo) <= 0 and compare(inner.x_hi, outer.x_hi) <= 0
            and compare(outer.y_lo, inner.y_lo) <= 0 and compare(inner.y_hi, outer.y_hi) <= 0)


# ---------------------------------------------------------------------------
# membership simulation
# ---------------------------------------------------------------------------

class MembershipReport(NamedTuple):
    violations: int
    total: int
    worst: list


def _planar_orbit_py(alpha: float, x0: float, n: int, burn_in: int):
    ts = np.empty(n)
    vs = np.empty(n)
    x, y, k = x0, 0.0, 0
    for i in range(burn_in + n):
        if x == 0.0:
            break
        e = 1.0 if x > 0 else -1.0
        d = 2.0 * math.floor(1.0 / (2.0 * abs(x)) + (1.0 - alpha) / 2.0) + 1.0
        x = e / x - d
        y = 1.0 / (d + e * y)
        if i >= burn_in:
            ts[k] = x
            vs[k] = y
            k += 1
    return ts[:k], vs[:k]


try:
    from numba import njit

    _planar_orbit = njit(cache=True, nogil=True)(_planar_orbit_py)
except ImportError:  # pragma: no cover
    _planar_orbit = _planar_orbit_py


def planar_orbit_float(alpha, x0, n: int, burn_in: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Double-precision orbit of ``(x0, 0)``; points after ``burn_in`` steps."""
    return _planar_orbit(to_float(as_alpha(alpha).value), to_float(x0), int(n), int(burn_in))


def membership_mask(d: Domain, ts: np.ndarray, vs: np.ndarray, tol: float) -> np.ndarray:
    b = d.bounds_array()
    inside = np.zeros(len(ts), dtype=bool)
    for x0, x1, y0, y1 in b:
        inside |= (ts >= x0 - tol) & (ts < x1 + tol) & (vs >= y0 - tol) & (vs <= y1 + tol)
    return inside


def simulate_membership(
    alpha,
    x0,
    n: int = 100_000,
    burn_in: int = 1000,
    tol: float = 1e-10,
    truncation: int = DEFAULT_TRUNCATION,
) -> MembershipReport:
    """Count orbit points of ``(x0, 0)`` outside the domain.

    Exact seeds (rationals, surds) are iterated exactly and tested without
    thickening; float seeds run in double precision against ``tol``.
    """
    alpha = as_alpha(alpha)
    d = build_domain(alpha, truncation)
    if not is_float(x0) and not isinstance(x0, float) and not is_float(alpha.value):
        p = PlanarPoint(x0, Fraction(0))
        bad, total = [], 0
        for i in range(burn_in + n):
            if sign(p.t) == 0:
                break
            p = natext_step(alpha, p)
            if i >= burn_in:
                total += 1
                if not contains(d, p, 0):
                    bad.append((to_float(p.t), to_float(p.v)))
        return MembershipReport(len(bad), total, bad[:10])
    ts, vs = planar_orbit_float(alpha, x0, n, burn_in)
    inside = membership_mask(d, ts, vs, tol)
    out = np.flatnonzero(~inside)
    worst = [(float(ts[i]), float(vs[i])) for i in out[:10]]
    return MembershipReport(int(out.size), int(ts.size), worst)


def domain_to_json(d: Domain) -> str:
    return json.dumps(d.to_json(), indent=2)
