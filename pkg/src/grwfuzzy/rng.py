"""Seeded random streams.

Trial ``k`` of a run seeded with ``s`` always draws from the ``k``-th child
of ``SeedSequence(s)``, so results do not depend on how trials are scheduled
across workers.
"""

import numpy as np

RNG_ID = "numpy.random.PCG64"


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed_sequence(seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(trial,))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trial_seed_sequence(seed, trial)))
