import numpy as np


def derive_seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Child seed sequence for (master_seed, key...).

    The child depends only on the master seed and the key, never on the order
    in which children are requested, so work can be split across any number
    of workers and still reproduce exactly."""
    return np.random.SeedSequence(
        entropy=int(master_seed) & (2**64 - 1),
        spawn_key=tuple(int(k) for k in key),
    )


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit integer seed for (master_seed, key...)."""
    state = derive_seed_sequence(master_seed, *key).generate_state(
        1, dtype=np.uint64
    )
    return int(state[0])


def make_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(derive_seed_sequence(master_seed, *key))
    )
