"""Reproducible random streams.

Each replicate i draws from its own bit generator seeded by
SeedSequence([master_seed, i]), so per-replicate paths depend only on
(master_seed, i) and never on scheduling, blocking, or shard layout.
One uniform is consumed per process step.
"""

from __future__ import annotations

import numpy as np

BIT_GENERATORS = {
    "sfc64": np.random.SFC64,
    "pcg64": np.random.PCG64,
    "philox": np.random.Philox,
}

DEFAULT_RNG = "sfc64"


def make_stream(master_seed: int, index: int, name: str = DEFAULT_RNG) -> np.random.Generator:
    """Generator for sub-stream `index` of the given master seed."""
    try:
        bitgen = BIT_GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown rng {name!r}; choose from {sorted(BIT_GENERATORS)}")
    return np.random.Generator(bitgen(np.random.SeedSequence([master_seed, index])))


def derive_seed(master_seed: int, tag: int) -> int:
    """Independent sub-master seed for a named subsystem.

    Keeps e.g. single-path checks decorrelated from the replicate engine,
    which consumes sub-streams [master_seed, 0], [master_seed, 1], ...
    """
    ss = np.random.SeedSequence([master_seed, 0x5EED, tag])
    return int(ss.generate_state(1, np.uint64)[0])
