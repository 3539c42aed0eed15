"""OT trimmed means: keep the atoms whose OT ranks are most central, then average them.

Two notions of centrality are available: the Chebyshev distance of the rank
to the cube center (the smallest centred cube containing the rank) and the
halfspace depth of the rank under the reference.  The kept count is
``ceil(n (1 - beta))`` with ``ceil(0) = 1``; ties go to the smaller atom index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import depth
from .errors import InvalidMeasure, WrongReferenceKind
from .measures import Kind, ReferenceMeasure
from .numeric import THRESHOLD_TOL, modified_ceil
from .sdot import TransportMap, ranks as solve_ranks

MODES = ("cube", "depth")


@dataclass(frozen=True)
class TrimResult:
    kept_indices: tuple[int, ...]
    trimmed_mean: np.ndarray
    h_value: float
    beta: float
    mode: str

    def to_dict(self) -> dict:
        return {"kept_indices": list(self.kept_indices),
                "trimmed_mean": [float(x) for x in self.trimmed_mean],
                "h_value": self.h_value, "beta": self.beta, "mode": self.mode}


def kept_count(n: int, beta: float) -> int:
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    return min(modified_ceil(n * (1.0 - beta), tol=n * THRESHOLD_TOL), n)


def chebyshev_scores(rank_points, center) -> np.ndarray:
    return np.max(np.abs(np.asarray(rank_points, dtype=float) - center), axis=1)


def depth_scores(reference: ReferenceMeasure, rank_points) -> np.ndarray:
    return np.array([depth(reference, r).value for r in np.asarray(rank_points, dtype=float)])


def trim_by_scores(atoms, scores, beta: float, larger_is_central: bool, mode: str) -> TrimResult:
    """Keep the ``ceil(n (1 - beta))`` most central atoms given one score per atom."""
    atoms = np.asarray(atoms, dtype=float)
    scores = np.asarray(scores, dtype=float)
    n = atoms.shape[0]
    m = kept_count(n, beta)
    key = -scores if larger_is_central else scores
    order = np.lexsort((np.arange(n), key))
    kept = np.sort(order[:m])
    h = float(scores[order[m - 1]])
    return TrimResult(tuple(int(i) for i in kept), atoms[kept].mean(axis=0), h, float(beta), mode)


def trim_ranks(reference: ReferenceMeasure, atoms, rank_points, beta: float, mode: str) -> TrimResult:
    """Trimmed mean from precomputed ranks (one rank per atom)."""
    if mode == "cube":
        if reference.kind is not Kind.CUBE:
            raise WrongReferenceKind("cube trimming needs a uniform cube reference")
        return trim_by_scores(atoms, chebyshev_scores(rank_points, reference.center), beta, False, mode)
    if mode == "depth":
        return trim_by_scores(atoms, depth_scores(reference, rank_points), beta, True, mode)
    raise ValueError(f"mode must be one of {MODES}")


def _trim(tmap: TransportMap, beta, mode, rank_points, budget, seed):
    if not tmap.target.is_empirical:
        raise InvalidMeasure("trimmed means are defined for equally weighted targets")
    if mode == "cube" and tmap.reference.kind is not Kind.CUBE:
        raise WrongReferenceKind("cube trimming needs a uniform cube reference")
    if rank_points is None:
        rank_points = solve_ranks(tmap, budget, seed)
    return trim_ranks(tmap.reference, tmap.target.atoms, rank_points, beta, mode)


def trim_cube(tmap: TransportMap, beta: float, rank_points=None, budget: int = 1_000_000,
              seed: int = 1) -> TrimResult:
    """Keep atoms whose ranks lie in the smallest centred cube holding ``ceil(n (1 - beta))`` ranks.

    ``h_value`` is the Chebyshev distance of the last kept rank, i.e. the cube half-width.
    """
    return _trim(tmap, beta, "cube", rank_points, budget, seed)


def trim_depth(tmap: TransportMap, beta: float, rank_points=None, budget: int = 1_000_000,
               seed: int = 1) -> TrimResult:
    """Keep the atoms whose ranks are deepest; ``h_value`` is the depth of the last kept rank."""
    return _trim(tmap, beta, "depth", rank_points, budget, seed)
