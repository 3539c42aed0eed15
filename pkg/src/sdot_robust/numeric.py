"""Small numeric helpers shared by several modules."""

from __future__ import annotations

import math

import numpy as np

# tolerance of every "sum of weights >= threshold" comparison
THRESHOLD_TOL = 1e-12

# rows per block in Monte-Carlo reductions; fixed so that sums are reproducible
CHUNK = 1 << 16


def modified_ceil(x: float, tol: float = 1e-9) -> int:
    """Ceiling with ceil(0) = 1.  Values at most ``tol`` above an integer round down."""
    return max(math.ceil(x - tol), 1)


def ceil_fraction(n: int, t: float) -> float:
    """Smallest k/n (k >= 1) with k/n >= t, using the subset-comparison tolerance."""
    return modified_ceil(n * t, tol=n * THRESHOLD_TOL) / n


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox-4x64 generator keyed by ``seed``; ``stream`` jumps to an independent block."""
    bitgen = np.random.Philox(seed)
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)
