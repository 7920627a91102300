"""Deterministic per-replicate random streams.

Every replicate of every experiment derives its generators from the master
seed and its own index through ``SeedSequence`` spawn keys, never from a
shared sequential stream, so results are independent of worker count and
scheduling order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["replicate_rng"]


def replicate_rng(master_seed, index, stream=0):
    """Generator for (replicate ``index``, ``stream``) under ``master_seed``.

    Distinct (index, stream) pairs give statistically independent streams;
    the same pair always gives the same stream.  ``stream`` separates draw
    purposes inside one replicate (0 = data, 1 = noise, 2 = auxiliary) so
    that changing how much randomness one purpose consumes cannot shift
    another's draws — that keeps dose-response grids coupled to common
    random numbers.
    """
    index = int(index)
    if index < 0:
        raise ValueError("replicate index must be non-negative")
    key = (index >> 32, index & 0xFFFFFFFF, int(stream))
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))
