"""Galton-Watson trajectories and single-generation observations."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLaw, PopulationCapExceeded, SurvivalRejectionLimit, ValidationError
from .offspring import INDIVIDUAL_CAP, law_label, sample_generation_sum, sample_offspring
from .rng import as_generator, derive_stream  # noqa: F401  (re-exported)

SURVIVAL_REJECTION_LIMIT = 10**4


@dataclass
class Trajectory:
    """Observed sizes ``Z_{n0}, ..., Z_{n0+n}``; ``n = len(z) - 1`` transitions."""

    n0: int
    z: list
    law_id: str = ""
    rejections: int = 0

    def __post_init__(self):
        self.z = [int(v) for v in self.z]
        if self.n0 < 0:
            raise ValidationError("n0 must be non-negative", flag="--n0")
        if len(self.z) < 2:
            raise ValidationError("a trajectory needs at least two generation sizes")
        if any(v < 0 for v in self.z):
            raise ValidationError("generation sizes must be non-negative")

    @property
    def n(self):
        return len(self.z) - 1

    def to_dict(self):
        return {"n0": self.n0, "z": list(self.z), "law_id": self.law_id}

    @classmethod
    def from_dict(cls, obj):
        if "z" not in obj:
            raise ValidationError("trajectory JSON needs a 'z' array", flag="--input")
        return cls(n0=int(obj.get("n0", 0)), z=obj["z"], law_id=obj.get("law_id", ""))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "size"])
        for i, v in enumerate(self.z):
            w.writerow([self.n0 + i, v])
        return buf.getvalue()


@dataclass
class GenerationObservation:
    """Generation ``n`` observed at individual level: ``Z_n``, ``X_{n,1..Z_n}``, ``Z_{n+1}``."""

    n: int
    zn: int
    x: np.ndarray = field(repr=False)
    zn1: int
    law_id: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.zn = int(self.zn)
        self.zn1 = int(self.zn1)
        if self.zn < 1 or self.x.ndim != 1 or len(self.x) != self.zn:
            raise ValidationError("observation needs zn >= 1 and exactly zn offspring counts")
        if (self.x < 0).any():
            raise ValidationError("offspring counts must be non-negative")
        if int(self.x.sum()) != self.zn1:
            raise ValidationError(f"zn1={self.zn1} differs from sum(x)={int(self.x.sum())}")

    def to_dict(self):
        return {"n": self.n, "zn": self.zn, "x": self.x.tolist(), "zn1": self.zn1, "law_id": self.law_id}

    @classmethod
    def from_dict(cls, obj):
        if "x" not in obj:
            raise ValidationError("observation JSON needs an 'x' array", flag="--input")
        x = obj["x"]
        return cls(n=int(obj.get("n", 0)), zn=int(obj.get("zn", len(x))), x=x,
                   zn1=int(obj.get("zn1", sum(x))), law_id=obj.get("law_id", ""))


def _grow(law, z0, steps, gen, cap):
    sizes = [z0]
    z = z0
    for _ in range(steps):
        z = sample_generation_sum(law, z, gen, cap=cap) if z > 0 else 0
        sizes.append(z)
    return sizes


def simulate_trajectory(law, n0, n, rng, cap=INDIVIDUAL_CAP):
    """Simulate from ``Z_0 = 1`` and keep the window ``Z_{n0..n0+n}``.

    Laws with ``p_0 > 0`` are conditioned on survival to ``n0 + n`` by
    rejecting whole trajectories.
    """
    if n < 1:
        raise ValidationError("n must be >= 1", flag="--n")
    if n0 < 0:
        raise ValidationError("n0 must be >= 0", flag="--n0")
    gen = as_generator(rng)
    rejections = 0
    while True:
        sizes = _grow(law, 1, n0 + n, gen, cap)
        if sizes[-1] >= 1:
            break
        rejections += 1
        if rejections > SURVIVAL_REJECTION_LIMIT:
            raise SurvivalRejectionLimit(
                f"more than {SURVIVAL_REJECTION_LIMIT} consecutive extinct trajectories")
    return Trajectory(n0=n0, z=sizes[n0:], law_id=law_label(law), rejections=rejections)


def simulate_generation_observation(law, n, rng, cap=INDIVIDUAL_CAP):
    """Grow to generation ``n`` in aggregate, then draw each individual's offspring."""
    if law.p0 > 0:
        raise InvalidLaw("individual-level observation requires p_0 = 0")
    if n < 0:
        raise ValidationError("generation must be >= 0", flag="--observe-generation")
    gen = as_generator(rng)
    zn = _grow(law, 1, n, gen, cap)[-1]
    if zn > cap:
        raise PopulationCapExceeded(f"Z_{n}={zn} exceeds the individual cap {cap}")
    x = sample_offspring(law, gen, size=zn)
    return GenerationObservation(n=n, zn=zn, x=x, zn1=int(x.sum()), law_id=law_label(law))


def load_data(path):
    """Read a trajectory or observation JSON file (bare or wrapped in CLI output)."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", flag="--input") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}", flag="--input") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path} must contain a JSON object", flag="--input")
    for key, cls in (("trajectory", Trajectory), ("observation", GenerationObservation)):
        if isinstance(obj.get(key), dict):
            return cls.from_dict(obj[key])
    if "x" in obj:
        return GenerationObservation.from_dict(obj)
    return Trajectory.from_dict(obj)
