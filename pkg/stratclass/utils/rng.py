"""Seed splitting

Every random stream in an experiment is a Philox generator seeded by a
``SeedSequence(seed, spawn_key=...)``. The spawn keys are:

- realized agent stream of a sweep cell: ``(cell, 0)``
- learner perturbations of a replicate:  ``(cell, 1, replicate)``

so that replicates of one cell face the same agents and differ only in the
learner's own randomness.
"""

import numpy as np

STREAM_KEY = 0
LEARNER_KEY = 1


def make_generator(seed: int, *spawn_key: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(sequence))


def stream_generator(seed: int, cell: int = 0) -> np.random.Generator:
    return make_generator(seed, cell, STREAM_KEY)


def learner_generator(seed: int, cell: int = 0, replicate: int = 0) -> np.random.Generator:
    return make_generator(seed, cell, LEARNER_KEY, replicate)
