"""Offspring-mean estimators and the normalized / self-normalized statistics.

For a trajectory window ``Z_{n0}, ..., Z_{n0+n}`` every sum runs over the
``n`` transitions ``k = n0, ..., n0+n-1``.  With ``r_k = Z_{k+1} / Z_k``:

* ``M = sum sqrt(Z_k)(r_k - m) / sqrt(sum Z_k (r_k - m)^2)``   (time type)
* ``H = sum sqrt(Z_k)(r_k - m) / (sqrt(n) v)``                 (v known)

For one generation observed at individual level:

* ``T  = (Z_{n+1} - m Z_n) / sqrt(sum (X_i - Xbar)^2)``       (space type)
* ``T~ = (Z_{n+1} - m Z_n) / sqrt(sum (X_i - m)^2)``

Sums use ``math.fsum`` since ``Z_k`` spans many orders of magnitude in one
window.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateDenominator, ValidationError, ZeroPopulation


@dataclass(frozen=True)
class StatisticValue:
    kind: str  # "M", "H", "T" or "Ttilde"
    value: float
    window: tuple  # (n0, n) for M/H, (n,) for T/Ttilde
    m_used: float
    v_used: Optional[float] = None

    def to_dict(self):
        return {"kind": self.kind, "value": self.value, "window": list(self.window),
                "m_used": self.m_used, "v_used": self.v_used}


def lotka_nagaev(zk, zk1):
    if zk == 0:
        raise ZeroPopulation("Lotka-Nagaev ratio undefined for Z_k = 0")
    return zk1 / zk


def _window(traj):
    z = traj.z
    if any(v < 1 for v in z[:-1]):
        raise ZeroPopulation("every Z_k in the window must be >= 1")
    return z[:-1], z[1:]


def harris_estimator(traj):
    """Pooled ratio ``sum Z_{k+1} / sum Z_k`` over the window."""
    zk, zk1 = _window(traj)
    return sum(zk1) / sum(zk)


def _scaled_residuals(traj, m):
    # sqrt(Z_k)(r_k - m) == (Z_{k+1} - m Z_k) / sqrt(Z_k)
    zk, zk1 = _window(traj)
    return [(b - m * a) / math.sqrt(a) for a, b in zip(zk, zk1)]


def statistic_M(traj, m):
    """Time-type self-normalized statistic; ``|M| <= sqrt(n)`` by Cauchy-Schwarz."""
    res = _scaled_residuals(traj, m)
    denom = math.fsum(e * e for e in res)
    if denom == 0.0:
        raise DegenerateDenominator("all residuals Z_{k+1}/Z_k - m are zero")
    value = math.fsum(res) / math.sqrt(denom)
    return StatisticValue("M", value, (traj.n0, traj.n), float(m))


def statistic_H(traj, m, v):
    if not v > 0:
        raise ValidationError(f"v must be positive, got {v}", flag="--v")
    res = _scaled_residuals(traj, m)
    value = math.fsum(res) / (math.sqrt(traj.n) * v)
    return StatisticValue("H", value, (traj.n0, traj.n), float(m), float(v))


def _offspring_sums(obs):
    x = obs.x
    return int(x.sum()), int(np.dot(x, x))


def centered_sum_of_squares(obs):
    """``sum (X_i - Xbar)^2`` computed from exact integer moments."""
    s1, s2 = _offspring_sums(obs)
    return (obs.zn * s2 - s1 * s1) / obs.zn


def sum_sq_about(obs, m):
    """``sum (X_i - m)^2`` via the decomposition ``sum (X_i - Xbar)^2 + Z_n (Xbar - m)^2``."""
    xbar = obs.zn1 / obs.zn
    return centered_sum_of_squares(obs) + obs.zn * (xbar - m) ** 2


def statistic_T(obs, m):
    if obs.zn < 2:
        raise DegenerateDenominator("space-type statistic needs Z_n >= 2")
    denom = centered_sum_of_squares(obs)
    if denom <= 0.0:
        raise DegenerateDenominator("all offspring counts X_{n,i} are identical")
    value = (obs.zn1 - m * obs.zn) / math.sqrt(denom)
    return StatisticValue("T", value, (obs.n,), float(m))


def statistic_T_tilde(obs, m):
    denom = sum_sq_about(obs, m)
    if denom <= 0.0:
        raise DegenerateDenominator("every offspring count equals m")
    value = (obs.zn1 - m * obs.zn) / math.sqrt(denom)
    return StatisticValue("Ttilde", value, (obs.n,), float(m))


def compute_statistic(kind, data, m, v=None):
    """Dispatch on ``kind``; ``data`` is a Trajectory for M/H, an observation for T/Ttilde."""
    if kind == "M":
        return statistic_M(data, m)
    if kind == "H":
        return statistic_H(data, m, v)
    if kind == "T":
        return statistic_T(data, m)
    if kind == "Ttilde":
        return statistic_T_tilde(data, m)
    raise ValidationError(f"unknown statistic kind {kind!r}", flag="--kind")
