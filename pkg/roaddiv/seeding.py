"""
Seeded random generators.

Every random choice in roaddiv comes from ``derive_rng(seed, *keys)``: the
run seed plus a path of keys (strings or ints) naming the consumer, e.g.
``derive_rng(7, "sample", "shortest", 20)``. Keys are mapped to integers
(strings through SHA-256) and fed to numpy's ``SeedSequence``, so sibling
streams are independent and adding a consumer never shifts another one.
"""

import hashlib
from typing import List, Union

import numpy as np

Key = Union[str, int]


def _key_entropy(key: Key) -> int:
    if isinstance(key, bool):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_entropy(seed: int, *keys: Key) -> List[int]:
    return [_key_entropy(seed)] + [_key_entropy(key) for key in keys]


def derive_rng(seed: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed_entropy(seed, *keys)))
