"""Empirical breakdown: move contaminated atoms far away and watch the local transport error.

The local error near ``u`` is the integral

    int_{B_delta(u)} || Q_nu(x) - Q_nu~(x) || dmu(x),

estimated by Monte Carlo.  Moving a set ``I`` of atoms to ``u + R v0`` makes it
grow linearly in ``R`` when ``sum_{i in I} lambda_i >= HD(u)`` and stay bounded
otherwise.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .depth import depth
from .errors import AtomCollision, InsufficientContaminationMass, NotInterior
from .measures import UNIT_TOL, DiscreteMeasure, ReferenceMeasure
from .sdot import SolveConfig, TransportMap, solve

log = logging.getLogger(__name__)

# stream of the reference sample behind local integrals
INTEGRAL_STREAM = 3
COLLISION_TOL = 1e-12
DEFAULT_RADII = (10.0, 20.0, 40.0, 80.0)


def _indices(target: DiscreteMeasure, I) -> list[int]:
    idx = sorted({int(i) for i in I})
    if not idx:
        raise ValueError("the contaminated set must be nonempty")
    if idx[0] < 0 or idx[-1] >= target.n:
        raise IndexError(f"contaminated indices must lie in [0, {target.n})")
    return idx


def _check_distinct(new: np.ndarray, others: np.ndarray) -> None:
    if others.size and np.min(np.linalg.norm(others - new, axis=1)) <= COLLISION_TOL:
        raise AtomCollision(f"contaminating atom {new.tolist()} collides with a kept atom")


def contaminate_ray(target: DiscreteMeasure, u, I, R: float, v0) -> DiscreteMeasure:
    """Move the atoms in ``I`` to the single point ``u + R v0``.

    The merged atom takes the position of ``min(I)`` in the atom list; every
    other atom keeps its position and weight.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    v0 = np.asarray(v0, dtype=float)
    if abs(np.linalg.norm(v0) - 1.0) > UNIT_TOL:
        raise ValueError("v0 must be a unit vector")
    idx = _indices(target, I)
    y = np.asarray(u, dtype=float) + R * v0
    keep = np.setdiff1d(np.arange(target.n), idx)
    _check_distinct(y, target.atoms[keep])
    atoms, weights = [], []
    for i in range(target.n):
        if i == idx[0]:
            atoms.append(y)
            weights.append(math.fsum(target.weights[idx]))
        elif i not in idx:
            atoms.append(target.atoms[i])
            weights.append(target.weights[i])
    return DiscreteMeasure(np.array(atoms), np.array(weights))


def contaminate_symmetric(target: DiscreteMeasure, I, t) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """The pair ``(nu~(t), nu~(-t))`` that keeps the atoms outside ``I`` and mirrors them by ``t``.

    ``nu~(t)`` puts ``lambda_i`` at ``x_i`` and at ``x_i + t`` for ``i`` outside
    ``I`` and the remaining ``1 - 2 sum lambda_i`` at ``t / 2`` (dropped when it
    is zero).  ``nu~(-t)`` is ``nu~(t)`` with every atom shifted by ``-t``.
    """
    idx = _indices(target, I)
    t = np.asarray(t, dtype=float).reshape(-1)
    keep = np.setdiff1d(np.arange(target.n), idx)
    kept = math.fsum(target.weights[keep])
    if math.fsum(target.weights[idx]) < 0.5 - 1e-12:
        raise InsufficientContaminationMass("the contaminated atoms must carry at least half the mass")
    rest = 1.0 - 2.0 * kept
    x = target.atoms[keep]
    atoms = [x, x + t]
    weights = [target.weights[keep], target.weights[keep]]
    if rest > 1e-12:
        atoms.append((t / 2.0)[None, :])
        weights.append(np.array([rest]))
    atoms = np.concatenate(atoms)
    weights = np.concatenate(weights)
    for k in range(1, atoms.shape[0]):
        _check_distinct(atoms[k], atoms[:k])
    weights = weights / math.fsum(weights)
    return DiscreteMeasure(atoms, weights), DiscreteMeasure(atoms - t, weights)


def _ball_sample(reference: ReferenceMeasure, u, delta, budget, seed):
    if not delta > 0:
        raise ValueError("delta must be positive")
    x = reference.sample(budget, seed, stream=INTEGRAL_STREAM)
    inside = np.linalg.norm(x - np.asarray(u, dtype=float), axis=1) <= delta
    return x, inside


def ball_mass(reference: ReferenceMeasure, u, delta: float, budget: int = 100_000,
              seed: int = 1) -> float:
    """Monte-Carlo mass of ``B_delta(u)`` on the sample used by ``local_integral``."""
    _, inside = _ball_sample(reference, u, delta, budget, seed)
    return float(np.count_nonzero(inside)) / budget


def local_integral(reference: ReferenceMeasure, map_clean: TransportMap, map_dirty: TransportMap,
                   u, delta: float, budget: int = 100_000, seed: int = 1) -> float:
    """Mean over a reference sample of ``||Q_clean(x) - Q_dirty(x)|| 1[x in B_delta(u)]``."""
    x, inside = _ball_sample(reference, u, delta, budget, seed)
    pts = x[inside]
    if pts.shape[0] == 0:
        return 0.0
    diff = map_clean.transport(pts, check_support=False) - map_dirty.transport(pts, check_support=False)
    return float(np.linalg.norm(diff, axis=1).sum()) / budget


@dataclass(frozen=True)
class ExperimentConfig:
    solve: SolveConfig = field(default_factory=lambda: SolveConfig(mc_budget=100_000))
    integral_budget: int = 100_000
    seed: int = 1
    slope_factor: float = 0.25
    bounded_factor: float = 1.1
    threads: int = 1


@dataclass(frozen=True)
class DivergenceProfile:
    radii: tuple
    integrals: tuple
    delta: float
    slope: float
    slope_threshold: float
    ball_mass: float
    contaminated_mass: float
    depth: float

    @property
    def diverges(self) -> bool:
        return self.slope > self.slope_threshold

    @property
    def mid_value(self) -> float:
        # upper median of the grid
        return self.integrals[len(self.integrals) // 2]

    def bounded(self, factor: float = 1.1) -> bool:
        """Whether the largest integral stays within ``factor`` times the mid-grid value."""
        return max(self.integrals) <= factor * self.mid_value

    @property
    def predicted_diverges(self) -> bool:
        return self.contaminated_mass >= self.depth - 1e-12

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "integrals": list(self.integrals), "delta": self.delta,
                "slope": self.slope, "slope_threshold": self.slope_threshold,
                "ball_mass": self.ball_mass, "contaminated_mass": self.contaminated_mass,
                "depth": self.depth, "diverges": self.diverges, "bounded": self.bounded(),
                "predicted_diverges": self.predicted_diverges}


def default_radii(target: DiscreteMeasure, factors=DEFAULT_RADII) -> tuple:
    """Radii as multiples of the atom-cloud diameter (1 for a single atom)."""
    a = target.atoms
    diff = a[:, None, :] - a[None, :, :]
    diam = float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).max())
    if diam == 0.0:
        diam = 1.0
    return tuple(f * diam for f in factors)


def divergence_experiment(reference: ReferenceMeasure, target: DiscreteMeasure, u, I,
                          delta: float = 0.1, radii=None, config: ExperimentConfig | None = None,
                          v0=None, clean: TransportMap | None = None) -> DivergenceProfile:
    """Solve the ray contamination at every radius and fit the growth of the local integral.

    ``clean`` may pass an already solved map of ``target`` to skip that solve.
    """
    config = config or ExperimentConfig()
    u = np.asarray(u, dtype=float)
    if not reference.interior_contains(u):
        raise NotInterior("u must lie in the interior of the support")
    radii = tuple(float(r) for r in (radii if radii is not None else default_radii(target)))
    if len(radii) < 4 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be at least 4 increasing positive values")
    hd = depth(reference, u)
    v0 = hd.direction if v0 is None else np.asarray(v0, dtype=float)
    idx = _indices(target, I)
    if clean is None:
        clean = solve(reference, target, config.solve)

    def one(R):
        dirty = solve(reference, contaminate_ray(target, u, idx, R, v0), config.solve)
        value = local_integral(reference, clean, dirty, u, delta, config.integral_budget, config.seed)
        log.debug("R=%g integral=%.6g", R, value)
        return value

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            integrals = tuple(pool.map(one, radii))
    else:
        integrals = tuple(one(R) for R in radii)
    slope = float(np.polyfit(radii, integrals, 1)[0])
    mass = ball_mass(reference, u, delta, config.integral_budget, config.seed)
    return DivergenceProfile(radii, integrals, float(delta), slope, config.slope_factor * mass, mass,
                             math.fsum(target.weights[idx]), hd.value)
