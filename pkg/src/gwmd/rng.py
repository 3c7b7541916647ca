"""Counter-based random streams keyed by (master_seed, stream_index).

Each stream is a Philox-4x64 generator whose 128-bit key packs the master
seed into the low 64 bits and the stream index into the high 64 bits.  The
key mapping is a bijection, so distinct pairs never share a key, and a given
replicate index always sees the same stream no matter how work is scheduled.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_U64 = 1 << 64


@dataclass
class RngStream:
    master_seed: int
    stream_index: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or not 0 <= int(val) < _U64:
                raise ValidationError(f"{name} must be an integer in [0, 2**64), got {val!r}",
                                      flag="--seed" if name == "master_seed" else None)
        key = int(self.master_seed) | (int(self.stream_index) << 64)
        self.generator = np.random.Generator(np.random.Philox(key=key))


def derive_stream(master_seed, replicate_index):
    """Stream for replicate ``replicate_index`` of a run seeded with ``master_seed``."""
    return RngStream(int(master_seed), int(replicate_index))


def as_generator(rng):
    """Accept an RngStream or a bare numpy Generator."""
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
