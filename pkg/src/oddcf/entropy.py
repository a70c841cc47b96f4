"""Monte-Carlo entropy estimates for the odd alpha-continued fraction maps.

Two estimators are offered.  ``rokhlin`` averages ``log |T'(x)| = -2 log|x|``
along an orbit.  ``levy`` tracks ``(2/n) log q_n`` through the ratios
``q_(k-1)/q_k = 1/(a_k + eps_k q_(k-2)/q_(k-1))``, so the denominators
themselves are never formed.  Both run in double precision and report a
batch-means standard error.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cf import as_alpha, orbit
from .errors import OrbitDegenerate, UnsupportedAlpha
from .numeric import ALPHA_13, GOLDEN_BIG, compare, format_scalar, is_float, to_float

DEFAULT_BURN_IN = 1000
DEFAULT_BATCHES = 100
MIN_ITERS = 10_000
SCAN_FLOOR = 0.05
# the proven plateau value pi^2/(9 log G)
PLATEAU = math.pi ** 2 / (9 * math.log((1 + math.sqrt(5)) / 2))

METHODS = ("rokhlin", "levy")


@dataclass(frozen=True)
class EntropyEstimate:
    alpha: object
    h: float
    stderr: float
    n_iters: int
    burn_in: int
    seed: int | None
    method: str
    unproven_regime: bool = False

    def row(self) -> dict:
        out = asdict(self)
        out["alpha"] = format_scalar(self.alpha) if not isinstance(self.alpha, float) else repr(self.alpha)
        out["h"] = repr(self.h)
        out["stderr"] = repr(self.stderr)
        out["unproven_regime"] = str(self.unproven_regime).lower()
        return out


def _kernel_py(alpha, x0, n_batches, batch_len, burn_in, levy):
    """Batch sums of the estimator; returns ``(sums, steps_done)``.

    ``steps_done`` falls short of ``n_batches * batch_len`` only when the
    orbit reaches 0 (counting burn-in steps).
    """
    sums = np.zeros(n_batches)
    x = x0
    y = 0.0
    done = 0
    for _ in range(burn_in):
        if x == 0.0:
            return sums, done
        e = 1.0 if x > 0 else -1.0
        d = 2.0 * math.floor(1.0 / (2.0 * abs(x)) + (1.0 - alpha) / 2.0) + 1.0
        y = 1.0 / (d + e * y)
        x = e / x - d
        done += 1
    for b in range(n_batches):
        s = 0.0
        for _ in range(batch_len):
            if x == 0.0:
                sums[b] = s
                return sums, done
            e = 1.0 if x > 0 else -1.0
            d = 2.0 * math.floor(1.0 / (2.0 * abs(x)) + (1.0 - alpha) / 2.0) + 1.0
            y = 1.0 / (d + e * y)
            if levy:
                s -= 2.0 * math.log(y)
            else:
                s -= 2.0 * math.log(abs(x))
            x = e / x - d
            done += 1
        sums[b] = s
    return sums, done


try:
    from numba import njit

    _kernel = njit(cache=True, nogil=True)(_kernel_py)
except ImportError:  # pragma: no cover
    _kernel = _kernel_py


def default_seed_point(alpha, rng: np.random.Generator) -> float:
    """Uniform point of ``I_alpha`` away from 0 and from small-denominator rationals."""
    a = to_float(as_alpha(alpha).value)
    while True:
        x = float(rng.uniform(a - 2, a))
        if abs(x) < 1e-6:
            continue
        near = Fraction(x).limit_denominator(1000)
        if abs(x - float(near)) < 1e-6:
            continue
        return x


def _check_rational_seed(alpha, x0, n_iters):
    # an exact seed must not terminate inside the first tenth of the run
    if isinstance(x0, (int, Fraction)) and not is_float(x0):
        limit = max(1, n_iters // 10)
        pts = orbit(alpha, Fraction(x0), min(limit, 10_000))
        if pts[-1] == 0 and len(pts) - 1 < limit:
            raise OrbitDegenerate(f"orbit of {format_scalar(x0)} reaches 0 after {len(pts) - 1} steps")


def _estimate(alpha, x0, n_iters, burn_in, seed, method, batches) -> EntropyEstimate:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if n_iters < MIN_ITERS:
        raise ValueError(f"n_iters must be at least {MIN_ITERS}")
    alpha = as_alpha(alpha)
    a = alpha.value
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = default_seed_point(alpha, rng)
    elif not alpha.contains(x0):
        raise UnsupportedAlpha(f"seed {format_scalar(x0)} is outside I_alpha")
    _check_rational_seed(alpha, x0, n_iters)
    batches = max(2, min(batches, n_iters))
    batch_len = n_iters // batches
    sums, done = _kernel(to_float(a), to_float(x0), batches, batch_len, burn_in, method == "levy")
    used = done - burn_in
    if used < batch_len * batches:
        if used < n_iters // 10:
            raise OrbitDegenerate(f"orbit reached 0 after {done} steps")
        full = max(used // batch_len, 2)
        sums = sums[:full]
        used = full * batch_len
    means = sums / batch_len
    h = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(len(means)))
    return EntropyEstimate(a, h, stderr, used, burn_in, seed, method, compare(a, ALPHA_13) < 0)


def entropy_rokhlin(alpha, x0=None, n_iters: int = 10**7, burn_in: int = DEFAULT_BURN_IN,
                    seed: int | None = 0, batches: int = DEFAULT_BATCHES) -> EntropyEstimate:
    """Birkhoff average of ``-2 log|x|``; a random seed point is drawn when ``x0`` is None."""
    return _estimate(alpha, x0, n_iters, burn_in, seed, "rokhlin", batches)


def entropy_levy(alpha, x0=None, n_iters: int = 10**7, seed: int | None = 0,
                 burn_in: int = 0, batches: int = DEFAULT_BATCHES) -> EntropyEstimate:
    """Growth rate ``(2/n) log q_n`` of the convergent denominators."""
    return _estimate(alpha, x0, n_iters, burn_in, seed, "levy", batches)


def scan_grid(alpha_lo, alpha_hi, steps: int) -> list:
    """``steps`` evenly spaced exact rationals from ``alpha_lo`` to ``alpha_hi``."""
    lo, hi = Fraction(alpha_lo), Fraction(alpha_hi)
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]


def entropy_scan(alpha_lo, alpha_hi, steps: int, n_iters: int = 10**6, seed: int = 0,
                 method: str = "rokhlin", burn_in: int = DEFAULT_BURN_IN,
                 alphas: Sequence | None = None) -> list[EntropyEstimate]:
    """Independent estimates on a grid; point ``k`` uses the RNG stream ``(seed, k)``."""
    grid = list(alphas) if alphas is not None else scan_grid(alpha_lo, alpha_hi, steps)
    for a in grid:
        if compare(a, SCAN_FLOOR) < 0 or compare(a, GOLDEN_BIG) > 0:
            raise UnsupportedAlpha(f"scan points must lie in [{SCAN_FLOOR}, G], got {format_scalar(a)}")
    if any(compare(a, ALPHA_13) < 0 for a in grid):
        warnings.warn("scan reaches below (sqrt13-1)/6, where the plateau is not proven", stacklevel=2)
    out = []
    for k, a in enumerate(grid):
        stream = np.random.SeedSequence([seed, k])
        sub_seed = int(stream.generate_state(1, dtype=np.uint64)[0])
        est = _estimate(a, None, n_iters, burn_in if method == "rokhlin" else 0, sub_seed, method,
                        DEFAULT_BATCHES)
        out.append(est)
    return out


CSV_COLUMNS = ("alpha", "h", "stderr", "n_iters", "burn_in", "seed", "method", "unproven_regime")


def estimates_to_csv(estimates: Sequence[EntropyEstimate]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for e in estimates:
        w.writerow(e.row())
    return buf.getvalue()
