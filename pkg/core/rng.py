"""
Counter-based random streams for reproducible Monte-Carlo estimates.

All randomness goes through numpy's Philox bit generator keyed by the
scenario seed. Sharded estimators derive one independent child stream per
shard from a SeedSequence, so results do not depend on how many workers
execute the shards.
"""

from typing import List

import numpy as np


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    """
    Build a Philox generator for a seed and an optional key path.

    The key path lets separate consumers (a check, a start point, a shard)
    own disjoint streams derived from one recorded seed.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def spawn_streams(seed: int, count: int, *keys: int) -> List[np.random.Generator]:
    """Return `count` independent child streams of (seed, *keys)."""
    parent = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return [np.random.Generator(np.random.Philox(child)) for child in parent.spawn(count)]


def shard_sizes(total: int, shards: int) -> List[int]:
    """Split `total` samples into `shards` near-equal parts, larger parts first."""
    shards = max(1, min(int(shards), int(total))) if total > 0 else 1
    base, extra = divmod(int(total), shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]
