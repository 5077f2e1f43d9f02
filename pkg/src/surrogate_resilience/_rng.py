"""Keyed random streams.

Every random draw in the package comes from a generator keyed by the user seed
plus a tuple of integers naming the consumer (purpose, group, replicate, ...).
Streams therefore do not depend on call order or on how work is scheduled.
"""

import numpy as np

# purpose tags
SYNTHETIC = 1
RESTART = 2
BOOT_STUDIES = 3
BOOT_SURROGATES = 4
BOOT_DELTA = 5
PAB_SURROGATES = 6
PAB_DELTA = 7
PAB_GRADIENT = 8
SIM_ITERATION = 9
SIM_TRUTH = 10
GENERATE = 11
PLOT = 12


def stream(seed, *key):
    """Return a Philox generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key):
    """A child 64-bit seed, for handing to another seeded entry point."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
