"""Standard normal distribution function, quantile, and tail sandwich."""

import math
from dataclasses import dataclass

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_SQRTPI = math.sqrt(math.pi)


@dataclass(frozen=True)
class TailBoundPair:
    lower: float
    upper: float


def normal_pdf(x):
    return math.exp(-0.5 * x * x) / _SQRT2PI


def normal_cdf(x):
    # erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation."""
    return 0.5 * math.erfc(x / _SQRT2)


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` by Newton's method inside a shrinking bracket.

    Works on the lower tail (``p <= 0.5``) and reflects, so the residual is
    always computed from a small probability.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs 0 < p < 1, got {p!r}")
    if p > 0.5:
        return -normal_quantile(1.0 - p)
    if p == 0.5:
        return 0.0
    lo, hi = -40.0, 0.0
    x = -math.sqrt(-2.0 * math.log(p))  # crude start, always left of the root
    for _ in range(200):
        f = normal_cdf(x) - p
        if f > 0:
            hi = x
        else:
            lo = x
        if f == 0:
            return x
        dens = normal_pdf(x)
        step = f / dens if dens > 0 else math.inf
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-15 * max(1.0, abs(x)):
            return nxt
        x = nxt
    return x


def gaussian_tail_bounds(x):
    """Lower and upper bounds on ``1 - Phi(x)`` for ``x >= 0``.

    ``exp(-x^2/2) / (sqrt(2 pi)(1 + x)) <= 1 - Phi(x) <= exp(-x^2/2) / (sqrt(pi)(1 + x))``
    """
    if x < 0:
        raise DomainError(f"tail bounds need x >= 0, got {x}")
    e = math.exp(-0.5 * x * x)
    return TailBoundPair(lower=e / (_SQRT2PI * (1.0 + x)), upper=e / (_SQRTPI * (1.0 + x)))
