"""Offspring laws, their exact moments, and exact samplers.

Four families are supported:

* ``ShiftedGeometric(s)``: ``P(X = k) = s (1 - s)**(k - 1)`` for ``k >= 1``.
* ``ShiftedPoisson(lam)``: ``X = 1 + Poisson(lam)``.
* ``BinarySplit(p2)``: ``X = 2`` with probability ``p2``, otherwise ``X = 1``.
* ``TablePmf(probs)``: ``P(X = k) = probs[k]`` for a finite table.

The sum of ``z`` iid offspring counts is drawn in one shot for the three
parametric families using convolution identities:

* geometric:  ``z + NegBin(z, s)``, where ``NegBin(z, s)`` counts the failures
  before the ``z``-th success of Bernoulli(``s``) trials (numpy's convention);
* Poisson:    ``z + Poisson(z * lam)``;
* binary:     ``z + Binomial(z, p2)``.

Table laws are sampled one individual at a time, subject to a population cap.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidLaw, NonfiniteMoment, PopulationCapExceeded, PopulationOverflow
from .rng import as_generator

INDIVIDUAL_CAP = 10**7
MAX_POPULATION = 2**63 - 1
_PMF_TOL = 1e-12
_TAIL_TOL = 1e-15


@dataclass(frozen=True)
class MomentSummary:
    m: float
    v2: float
    rho: float
    abs_moment_2_rho: float  # E|X - m|^(2+rho)
    raw_moment_2_rho: float  # E X^(2+rho)


class OffspringLaw:
    """Base class for offspring distributions on the non-negative integers.

    Subclasses are frozen dataclasses; ``m`` and ``v`` are cached on first use.
    """

    family = None
    rho = 1.0

    def _check_rho(self):
        if not 0.0 < self.rho <= 1.0:
            raise InvalidLaw(f"rho must lie in (0, 1], got {self.rho}")

    def pmf(self, k):
        raise NotImplementedError

    @property
    def p0(self):
        return self.pmf(0)

    @cached_property
    def m(self):
        return self._mean()

    @cached_property
    def v2(self):
        return self._variance()

    @property
    def v(self):
        return math.sqrt(self.v2)

    @property
    def params(self):
        raise NotImplementedError

    @property
    def law_id(self):
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}({inner})"

    def support_iter(self):
        """Yield ``(k, p_k)`` until the remaining mass is negligible."""
        cum = 0.0
        k = 0
        while True:
            p = self.pmf(k)
            cum += p
            yield k, p
            if k > self.m and 1.0 - cum < _TAIL_TOL and p * (k + 1) ** 3 < _TAIL_TOL:
                return
            k += 1

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params), "rho": self.rho}

    # sampling hooks, generator already unwrapped
    def _draw(self, gen, size):
        raise NotImplementedError

    def _draw_sum(self, gen, z, cap):
        raise NotImplementedError


@dataclass(frozen=True)
class ShiftedGeometric(OffspringLaw):
    s: float
    rho: float = 1.0
    family = "ShiftedGeometric"

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise InvalidLaw(f"ShiftedGeometric needs 0 < s <= 1, got {self.s}")
        self._check_rho()

    @property
    def params(self):
        return {"s": self.s}

    def pmf(self, k):
        if k < 1:
            return 0.0
        if self.s == 1.0:
            return 1.0 if k == 1 else 0.0
        return self.s * (1.0 - self.s) ** (k - 1)

    def _mean(self):
        return 1.0 / self.s

    def _variance(self):
        return (1.0 - self.s) / self.s**2

    def _draw(self, gen, size):
        return gen.geometric(self.s, size=size)

    def _draw_sum(self, gen, z, cap):
        return z + int(gen.negative_binomial(z, self.s))


@dataclass(frozen=True)
class ShiftedPoisson(OffspringLaw):
    lam: float
    rho: float = 1.0
    family = "ShiftedPoisson"

    def __post_init__(self):
        if not self.lam > 0.0:
            raise InvalidLaw(f"ShiftedPoisson needs lam > 0, got {self.lam}")
        self._check_rho()

    @property
    def params(self):
        return {"lam": self.lam}

    def pmf(self, k):
        if k < 1:
            return 0.0
        j = k - 1
        return math.exp(-self.lam + j * math.log(self.lam) - math.lgamma(j + 1))

    def _mean(self):
        return 1.0 + self.lam

    def _variance(self):
        return self.lam

    def _draw(self, gen, size):
        return 1 + gen.poisson(self.lam, size=size)

    def _draw_sum(self, gen, z, cap):
        return z + int(gen.poisson(z * self.lam))


@dataclass(frozen=True)
class BinarySplit(OffspringLaw):
    p2: float
    rho: float = 1.0
    family = "BinarySplit"

    def __post_init__(self):
        if not 0.0 <= self.p2 <= 1.0:
            raise InvalidLaw(f"BinarySplit needs 0 <= p2 <= 1, got {self.p2}")
        self._check_rho()

    @property
    def params(self):
        return {"p2": self.p2}

    def pmf(self, k):
        return {1: 1.0 - self.p2, 2: self.p2}.get(k, 0.0)

    def _mean(self):
        return 1.0 + self.p2

    def _variance(self):
        return self.p2 * (1.0 - self.p2)

    def _draw(self, gen, size):
        return 1 + gen.binomial(1, self.p2, size=size)

    def _draw_sum(self, gen, z, cap):
        return z + int(gen.binomial(z, self.p2))


@dataclass(frozen=True)
class TablePmf(OffspringLaw):
    probs: tuple
    rho: float = 1.0
    family = "TablePmf"

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs or any(not math.isfinite(p) or p < 0 for p in probs):
            raise InvalidLaw("TablePmf probabilities must be finite and non-negative")
        if abs(math.fsum(probs) - 1.0) > _PMF_TOL:
            raise InvalidLaw(f"TablePmf probabilities sum to {math.fsum(probs)!r}, not 1")
        self._check_rho()

    @classmethod
    def from_mapping(cls, mapping, rho=1.0):
        """Build from ``{k: p_k}``, e.g. ``TablePmf.from_mapping({2: 1.0})``."""
        top = max(int(k) for k in mapping)
        probs = [0.0] * (top + 1)
        for k, p in mapping.items():
            probs[int(k)] = float(p)
        return cls(tuple(probs), rho=rho)

    @property
    def params(self):
        return {"probs": list(self.probs)}

    def pmf(self, k):
        return self.probs[k] if 0 <= k < len(self.probs) else 0.0

    def support_iter(self):
        yield from enumerate(self.probs)

    def _mean(self):
        return math.fsum(k * p for k, p in enumerate(self.probs))

    def _variance(self):
        m = self.m
        return math.fsum((k - m) ** 2 * p for k, p in enumerate(self.probs))

    def _draw(self, gen, size):
        return gen.choice(len(self.probs), size=size, p=self._normalized())

    def _draw_sum(self, gen, z, cap):
        if z > cap:
            raise PopulationCapExceeded(
                f"TablePmf sums are drawn per individual; z={z} exceeds the cap {cap}")
        return int(self._draw(gen, z).sum())

    def _normalized(self):
        # numpy's choice() checks the sum at ~1e-8; renormalize away fsum rounding
        p = np.asarray(self.probs)
        return p / p.sum()


PRESETS = {
    "geom2": ShiftedGeometric(0.5),
    "poisson1.2": ShiftedPoisson(0.2),
    "binary1.5": BinarySplit(0.5),
}

_FAMILIES = {
    "ShiftedGeometric": (ShiftedGeometric, "s"),
    "ShiftedPoisson": (ShiftedPoisson, "lam"),
    "BinarySplit": (BinarySplit, "p2"),
    "TablePmf": (TablePmf, "probs"),
}


def law_from_dict(obj):
    """Inverse of ``OffspringLaw.to_dict``."""
    if not isinstance(obj, dict):
        raise InvalidLaw("law must be a JSON object")
    unknown = set(obj) - {"family", "params", "rho"}
    if unknown:
        raise InvalidLaw(f"unknown law keys: {sorted(unknown)}")
    try:
        cls, pname = _FAMILIES[obj["family"]]
    except KeyError:
        raise InvalidLaw(f"unknown or missing law family: {obj.get('family')!r}") from None
    params = obj.get("params") or {}
    if set(params) != {pname}:
        raise InvalidLaw(f"{obj['family']} takes exactly one parameter {pname!r}")
    value = params[pname]
    if pname == "probs":
        if isinstance(value, dict):
            return TablePmf.from_mapping(value, rho=float(obj.get("rho", 1.0)))
        value = tuple(value)
    else:
        value = float(value)
    return cls(value, rho=float(obj.get("rho", 1.0)))


def resolve_law(spec):
    """Turn a preset name, a JSON file path, or a dict into an OffspringLaw."""
    if isinstance(spec, OffspringLaw):
        return spec
    if isinstance(spec, dict):
        return law_from_dict(spec)
    if spec in PRESETS:
        return PRESETS[spec]
    try:
        with open(spec) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise InvalidLaw(f"{spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file") from None
    except json.JSONDecodeError as exc:
        raise InvalidLaw(f"law file {spec!r} is not valid JSON: {exc}") from None
    return law_from_dict(obj)


def law_label(law):
    for name, preset in PRESETS.items():
        if preset == law:
            return name
    return law.law_id


def pmf(law, k):
    if k < 0:
        raise ValueError("k must be non-negative")
    return law.pmf(k)


def moments(law, rho=None):
    """Exact mean and variance plus the (2+rho)-th absolute and raw moments.

    Mean and variance are closed-form for the parametric families; the
    fractional moments are computed by summing the pmf until the remaining
    tail is below 1e-15.
    """
    rho = law.rho if rho is None else rho
    if not 0.0 < rho <= 1.0:
        raise InvalidLaw(f"rho must lie in (0, 1], got {rho}")
    m = law.m
    q = 2.0 + rho
    abs_terms, raw_terms = [], []
    for k, p in law.support_iter():
        if p:
            abs_terms.append(p * abs(k - m) ** q)
            raw_terms.append(p * float(k) ** q)
    abs_mom = math.fsum(abs_terms)
    raw_mom = math.fsum(raw_terms)
    if not (math.isfinite(abs_mom) and math.isfinite(raw_mom)):
        raise NonfiniteMoment(f"E|X|^{q} is not finite for {law.law_id}")
    return MomentSummary(m=m, v2=law.v2, rho=rho, abs_moment_2_rho=abs_mom, raw_moment_2_rho=raw_mom)


def sample_offspring(law, rng, size=None):
    """One draw from the offspring law (or an int64 array if ``size`` is given)."""
    out = law._draw(as_generator(rng), size)
    return int(out) if size is None else np.asarray(out, dtype=np.int64)


def sample_generation_sum(law, z, rng, cap=INDIVIDUAL_CAP):
    """Draw ``X_1 + ... + X_z`` for ``z`` iid offspring counts."""
    z = int(z)
    if z < 1:
        raise ValueError("z must be >= 1")
    if z * max(law.m, 1.0) > 2**62:
        raise PopulationOverflow(f"next generation from z={z} would overflow 64 bits")
    total = law._draw_sum(as_generator(rng), z, cap)
    if total > MAX_POPULATION or total < 0:
        raise PopulationOverflow(f"generation size {total} exceeds 2**63 - 1")
    return total
