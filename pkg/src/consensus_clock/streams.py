"""Reproducible random-stream plumbing.

Every ensemble derives one independent generator per replica from
(master_seed, replica_index) via numpy's SeedSequence spawn keys, so results
are bit-identical for a fixed master seed no matter how replicas are
distributed over workers.
"""

from __future__ import annotations

import numpy as np

# Replica simulators consume randomness in fixed-size chunks; the chunk size
# is part of the stream contract (changing it changes the draws).
CHUNK = 512


def replica_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for replica `index` under `master_seed`."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _apply_block(arg):
    fn, idxs = arg
    return [fn(i) for i in idxs]


def ordered_map(fn, n: int, jobs: int = 1, blocksize: int = 512) -> list:
    """Evaluate fn(0..n-1), optionally on a process pool, in index order.

    Each replica owns its stream, so scheduling cannot change any result;
    collecting in index order makes every reduction deterministic as well.
    `fn` must be picklable (a top-level function or a partial of one) when
    jobs > 1.
    """
    if jobs <= 1 or n <= blocksize:
        return [fn(i) for i in range(n)]
    from concurrent.futures import ProcessPoolExecutor

    blocks = [list(range(k, min(k + blocksize, n))) for k in range(0, n, blocksize)]
    out: list = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for block_result in pool.map(_apply_block, [(fn, b) for b in blocks]):
            out.extend(block_result)
    return out
