"""P-values and confidence intervals for the offspring mean.

Interval constructions:

``TimeTypeQuadratic``
    the set of ``x`` with ``|M(x)| <= q``, bounded by the two roots of
    ``a x^2 + b x + c = 0`` where ``q = Phi^{-1}(1 - kappa/2)`` and

    ``a = (sum sqrt Z_k)^2 - q^2 sum Z_k``,
    ``b = 2 q^2 sum Z_{k+1} - 2 (sum Z_{k+1}/sqrt Z_k)(sum sqrt Z_k)``,
    ``c = (sum Z_{k+1}/sqrt Z_k)^2 - q^2 sum Z_{k+1}^2 / Z_k``.
``SpaceType`` / ``SpaceTypeLargeDev``
    ``Z_{n+1}/Z_n -+ f * sqrt(sum (X_i - Xbar)^2) / Z_n`` with ``f = q`` or
    ``f = sqrt(2 |ln(kappa/2)|)``.
``KnownVariance``
    ``(sum Z_{k+1}/sqrt Z_k -+ sqrt(n) v q) / sum sqrt Z_k``.
``Infectious``
    the time-type interval shifted down by one (``m = 1 + r``).
"""

import math
from dataclasses import dataclass

from . import gaussian
from .errors import DegenerateDenominator, DomainError, NoRealInterval, ValidationError
from .stats import _window, centered_sum_of_squares, harris_estimator, statistic_M

METHODS = ("TimeTypeQuadratic", "SpaceType", "SpaceTypeLargeDev", "KnownVariance", "Infectious")


@dataclass(frozen=True)
class ConfidenceInterval:
    a: float
    b: float
    level: float
    method: str
    degenerate: bool = False

    def contains(self, value):
        return self.a <= value <= self.b

    @property
    def width(self):
        return self.b - self.a

    def to_dict(self):
        return {"a": self.a, "b": self.b, "level": self.level, "method": self.method,
                "degenerate": self.degenerate}


@dataclass(frozen=True)
class QuadraticCoefficients:
    a_c: float
    b_c: float
    c_c: float

    @property
    def discriminant(self):
        return self.b_c**2 - 4.0 * self.a_c * self.c_c

    def to_dict(self):
        return {"a_c": self.a_c, "b_c": self.b_c, "c_c": self.c_c}


@dataclass(frozen=True)
class PValueResult:
    m_tilde: float
    p: float
    m_hat: float

    def to_dict(self):
        return {"m_hat": self.m_hat, "m_tilde": self.m_tilde, "p": self.p}


def _check_kappa(kappa):
    if not 0.0 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa!r}", flag="--kappa")


def critical_value(kappa):
    """Two-sided Gaussian critical value ``Phi^{-1}(1 - kappa/2)``."""
    _check_kappa(kappa)
    return gaussian.normal_quantile(1.0 - kappa / 2.0)


def large_dev_factor(kappa):
    _check_kappa(kappa)
    return math.sqrt(2.0 * abs(math.log(kappa / 2.0)))


def kappa_for_quantile(q):
    """The ``kappa`` whose two-sided critical value is ``q``."""
    return 2.0 * gaussian.normal_sf(q)


def comfort_zone_exceeded(q, n, rho=1.0):
    """True when ``q`` exceeds ``n^(rho/(4+2 rho))``, outside the asymptotic regime."""
    return q > n ** (rho / (4.0 + 2.0 * rho))


def p_value_time_type(traj):
    m_hat = harris_estimator(traj)
    m_tilde = statistic_M(traj, m_hat).value
    return PValueResult(m_tilde=m_tilde, p=2.0 * gaussian.normal_cdf(-abs(m_tilde)), m_hat=m_hat)


def _time_sums(traj):
    zk, zk1 = _window(traj)
    sq = [math.sqrt(a) for a in zk]
    return {
        "s_sqrt": math.fsum(sq),
        "s_ratio": math.fsum(b / r for b, r in zip(zk1, sq)),
        "s_z": math.fsum(zk),
        "s_z1": math.fsum(zk1),
        "s_z1sq": math.fsum(b * (b / a) for a, b in zip(zk, zk1)),
        "zk": zk,
        "zk1": zk1,
        "sq": sq,
    }


def quadratic_coefficients(traj, q):
    s = _time_sums(traj)
    q2 = q * q
    return QuadraticCoefficients(
        a_c=s["s_sqrt"] ** 2 - q2 * s["s_z"],
        b_c=2.0 * q2 * s["s_z1"] - 2.0 * s["s_ratio"] * s["s_sqrt"],
        c_c=s["s_ratio"] ** 2 - q2 * s["s_z1sq"],
    )


def _time_type_roots(traj, q):
    """Roots of the quadratic, solved about the zero of M to avoid cancellation.

    With ``x = x0 + y`` and ``x0 = sum(Z_{k+1}/sqrt Z_k) / sum sqrt Z_k`` the
    equation becomes ``a y^2 + 2 q^2 E y - q^2 D = 0`` with
    ``E = sum Z_k (r_k - x0)`` and ``D = sum Z_k (r_k - x0)^2``; its
    discriminant is a sum of non-negative terms whenever ``a > 0``.
    """
    s = _time_sums(traj)
    a = s["s_sqrt"] ** 2 - q * q * s["s_z"]
    if not a > 0.0:
        raise NoRealInterval(
            f"leading coefficient {a:.6g} <= 0: q={q:.6g} too large for this window (n={traj.n})")
    z0, z1 = s["zk"][0], s["zk1"][0]
    # equal ratios (exact integer test): |M| is constant off the single point x = r
    if all(b * z0 == z1 * a_ for a_, b in zip(s["zk"], s["zk1"])):
        raise DegenerateDenominator("all ratios Z_{k+1}/Z_k are equal; no interval beyond a point")
    x0 = s["s_ratio"] / s["s_sqrt"]
    res = [(b - x0 * z) / r for z, b, r in zip(s["zk"], s["zk1"], s["sq"])]
    e = math.fsum(r * e_ for r, e_ in zip(s["sq"], res))
    d = math.fsum(e_ * e_ for e_ in res)
    if d == 0.0:
        raise DegenerateDenominator("all residuals vanish at the root of M")
    q2 = q * q
    root = q * math.sqrt(q2 * e * e + a * d)
    if e >= 0:
        y1 = (-q2 * e - root) / a
    else:
        y1 = (-q2 * e + root) / a
    y2 = -q2 * d / (a * y1) if y1 != 0.0 else -y1
    lo, hi = sorted((y1, y2))
    return x0 + lo, x0 + hi


def ci_time_type(traj, kappa):
    """Quadratic interval from the time-type statistic; returns ``(coefficients, interval)``."""
    q = critical_value(kappa)
    coeffs = quadratic_coefficients(traj, q)
    lo, hi = _time_type_roots(traj, q)
    return coeffs, ConfidenceInterval(lo, hi, 1.0 - kappa, "TimeTypeQuadratic")


def _space_interval(obs, factor, kappa, method):
    if obs.zn < 1:
        raise ValidationError("observation needs Z_n >= 1")
    center = obs.zn1 / obs.zn
    ss = centered_sum_of_squares(obs)
    if ss <= 0.0:
        return ConfidenceInterval(center, center, 1.0 - kappa, method, degenerate=True)
    delta = factor * math.sqrt(ss) / obs.zn
    return ConfidenceInterval(center - delta, center + delta, 1.0 - kappa, method)


def ci_space_type(obs, kappa):
    return _space_interval(obs, critical_value(kappa), kappa, "SpaceType")


def ci_space_type_large_dev(obs, kappa):
    return _space_interval(obs, large_dev_factor(kappa), kappa, "SpaceTypeLargeDev")


def ci_known_variance(traj, v, kappa):
    if not v > 0:
        raise ValidationError(f"v must be positive, got {v}", flag="--v")
    q = critical_value(kappa)
    s = _time_sums(traj)
    half = math.sqrt(traj.n) * v * q
    return ConfidenceInterval((s["s_ratio"] - half) / s["s_sqrt"], (s["s_ratio"] + half) / s["s_sqrt"],
                              1.0 - kappa, "KnownVariance")


def ci_infectious(traj, kappa):
    """Interval for the per-case infection rate ``r = m - 1``."""
    _, ci = ci_time_type(traj, kappa)
    return ConfidenceInterval(ci.a - 1.0, ci.b - 1.0, ci.level, "Infectious")


def confidence_interval(method, data, kappa, v=None):
    """Dispatch by method name; time-type returns only the interval."""
    if method == "TimeTypeQuadratic":
        return ci_time_type(data, kappa)[1]
    if method == "SpaceType":
        return ci_space_type(data, kappa)
    if method == "SpaceTypeLargeDev":
        return ci_space_type_large_dev(data, kappa)
    if method == "KnownVariance":
        return ci_known_variance(data, v, kappa)
    if method == "Infectious":
        return ci_infectious(data, kappa)
    raise ValidationError(f"unknown CI method {method!r}", flag="--method")
