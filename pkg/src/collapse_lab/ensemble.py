"""Deterministic random streams and index-keyed ensemble execution.

Every trajectory draws from its own generator, derived from
``(master_seed, experiment name, trajectory index)``.  Work is cut into
fixed-size chunks whose boundaries do not depend on the worker count, and
results are concatenated in index order, so an ensemble is bit-identical
whether it runs serially or on K processes.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 500


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, name: str, index: int) -> np.random.Generator:
    """Generator for trajectory ``index`` of experiment ``name``."""
    ss = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=(_name_key(name), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def normal_increments(seed: int, name: str, indices: Sequence[int], n_steps: int,
                      dt: float) -> np.ndarray:
    """Wiener increments, shape (len(indices), n_steps), one stream per index."""
    out = np.empty((len(indices), n_steps))
    sq = np.sqrt(dt)
    for row, i in enumerate(indices):
        out[row] = stream(seed, name, i).standard_normal(n_steps) * sq
    return out


def chunks(n: int, size: int = DEFAULT_CHUNK) -> list[range]:
    return [range(s, min(s + size, n)) for s in range(0, n, size)]


def run_chunked(fn: Callable[..., np.ndarray], n: int, args: tuple = (),
                workers: int = 1, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Evaluate ``fn(indices, *args)`` over index chunks and concatenate in order.

    ``fn`` must be a module-level function returning an array whose first
    axis matches ``len(indices)``.
    """
    parts = chunks(n, chunk)
    if workers <= 1 or len(parts) == 1:
        results = [fn(r, *args) for r in parts]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, r, *args) for r in parts]
            results = [f.result() for f in futures]
    return np.concatenate(results, axis=0)
