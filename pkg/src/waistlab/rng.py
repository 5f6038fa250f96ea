"""Deterministic random-stream plumbing.

Every Monte Carlo routine in the package draws from generators produced
here. Streams are split with ``numpy.random.SeedSequence.spawn`` so that
a run is fully determined by ``(seed, worker_count)``: worker i always
receives the same child stream, and merged estimates are bit-identical
no matter how the chunks were actually scheduled.
"""

from __future__ import annotations

import os

import numpy as np

# Environment knob for the worker count used by chunked estimators.
WORKERS_ENV = "WAISTLAB_WORKERS"

DEFAULT_WORKERS = 4


def worker_count() -> int:
    """Worker count from the environment, defaulting to DEFAULT_WORKERS."""
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return DEFAULT_WORKERS
    return n if n >= 1 else DEFAULT_WORKERS


def split_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Spawn ``count`` independent child generators from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in children]


def spawn_rng(seed: int) -> np.random.Generator:
    """Single generator for non-chunked draws."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def chunk_sizes(total: int, workers: int) -> list[int]:
    """Split ``total`` samples into per-worker chunk sizes (stable)."""
    base, extra = divmod(total, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]
