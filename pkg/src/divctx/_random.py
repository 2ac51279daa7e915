"""Seed derivation shared by every randomized operation.

All randomness goes through numpy's PCG64 generator. Sub-seeds are derived by
hashing ``(master seed, label, index...)`` so that adding runs or rates never
perturbs the streams of existing ones.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    key = ":".join([str(int(seed))] + [str(x) for x in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
