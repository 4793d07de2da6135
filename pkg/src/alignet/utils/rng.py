from __future__ import annotations

import numpy as np

from ..errors import InputError


def _entropy(seed: int, keys: tuple[int, ...]) -> list[int]:
    entropy = [int(seed), *(int(key) for key in keys)]
    if any(value < 0 for value in entropy):
        raise InputError(f"Seeds and stream keys must be non-negative, got {entropy}.")
    return entropy


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for (seed, keys); the same keys always give the same stream."""
    return np.random.default_rng(_entropy(seed, keys))


def derive_seed(seed: int, *keys: int) -> int:
    state = np.random.SeedSequence(_entropy(seed, keys)).generate_state(1)
    return int(state[0])
