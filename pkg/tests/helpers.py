"""Shared instance generators for the test suite."""

import math

import numpy as np

from cbi.model import validate_partition


def random_partition(rng: np.random.Generator, n: int, min_gap: float = 1e-3):
    while True:
        cuts = np.sort(rng.uniform(0, 1, n - 1))
        y = np.concatenate([[0.0], cuts, [1.0]])
        if n == 1 or np.min(np.diff(y)) >= min_gap:
            break
    w = rng.uniform(0.05, 1.0, n)
    p = list(w[:-1] / w.sum())
    p.append(1.0 - math.fsum(p))
    return validate_partition(list(y), p)
