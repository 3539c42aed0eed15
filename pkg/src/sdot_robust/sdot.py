"""Semi-discrete optimal transport: adapted weights, the transport map and OT ranks.

The adapted weight vector maximizes the concave Kantorovich dual

    F(w) = sum_i lambda_i w_i + E_mu[ min_i ||U - x_i||^2 - w_i ],

whose gradient is ``lambda_i - mu(cell_i)``.  The expectation is replaced by an
average over one reference sample drawn per solve, so F is a deterministic
piecewise linear function of w, maximized by damped Newton ascent.

Internally the solver works with ``h_i = w_i - ||x_i - c||^2 - 2 <c, x_i - c>``
(``c`` the atom centroid), for which the cell of ``u`` is
``argmax_i 2 <u, x_i - c> + h_i``.  Shifting every atom by the same vector leaves
``x_i - c`` and therefore the whole iteration unchanged, which is what makes the
solved map translation-equivariant.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyCellRank, EmptyCellWarning, NotConverged
from .geometry import PowerDiagram, power_scores
from .measures import DiscreteMeasure, Kind, ReferenceMeasure
from .numeric import CHUNK

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    mass_tolerance: float = 1e-3
    max_iterations: int = 500
    mc_budget: int = 1_000_000
    seed: int = 1
    validate: bool = True

    def __post_init__(self):
        if not self.mass_tolerance > 0:
            raise ValueError("mass_tolerance must be positive")
        if self.mc_budget < 1000:
            raise ValueError("mc_budget must be at least 1000")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True, eq=False)
class TransportMap:
    diagram: PowerDiagram
    target: DiscreteMeasure
    residual: float
    validation_residual: float = 0.0
    iterations: int = 0
    config: SolveConfig = field(default_factory=SolveConfig)

    @property
    def reference(self) -> ReferenceMeasure:
        return self.diagram.reference

    @property
    def weight_vector(self) -> np.ndarray:
        return self.diagram.weight_vector

    def classify(self, points, check_support: bool = True):
        return self.diagram.classify(points, check_support=check_support)

    def transport(self, points, check_support: bool = True):
        """Image of each point under the OT map: the atom of its power cell."""
        idx = self.classify(points, check_support=check_support)
        return self.target.atoms[idx]

    def ranks(self, budget: int = 1_000_000, seed: int = 1) -> np.ndarray:
        return ranks(self, budget, seed)


class SampleDual:
    """Fixed-sample dual objective in the centred parametrization ``h``."""

    def __init__(self, points: np.ndarray, atoms: np.ndarray, weights: np.ndarray,
                 band_fraction: float = 0.01):
        self.points = points
        self.weights = weights
        self.center = atoms.mean(axis=0)
        self.y = atoms - self.center
        self.n = atoms.shape[0]
        self.size = points.shape[0]
        self.band_fraction = band_fraction
        diff = self.y[:, None, :] - self.y[None, :, :]
        self._pair_distance = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(self._pair_distance, 1.0)
        # cache 2<u, y_i> when it fits comfortably in memory
        self._lin = 2.0 * points @ self.y.T if self.size * self.n <= 16_000_000 else None

    def _linear(self, lo, hi):
        if self._lin is not None:
            return self._lin[lo:hi]
        return 2.0 * self.points[lo:hi] @ self.y.T

    def __call__(self, h: np.ndarray, hessian: bool = False):
        """Return ``(F, grad, masses, H)`` at ``h``; F is defined up to an additive constant.

        With ``hessian=True``, ``H`` estimates the Jacobian of the cell masses
        (a graph Laplacian) by counting sample points within a thin band around
        each facet: a shift ``e`` of ``h_j`` moves exactly the points of cell
        ``i`` whose runner-up is ``j`` and whose score gap is below ``e``.
        Otherwise ``H`` is None.
        """
        n = self.n
        counts = np.zeros(n, dtype=np.int64)
        total = 0.0
        if hessian:
            gaps = np.empty(self.size)
            pair = np.empty(self.size, dtype=np.int64)
        for lo in range(0, self.size, CHUNK):
            s = self._linear(lo, lo + CHUNK) + h
            rows = np.arange(s.shape[0])
            i1 = np.argmax(s, axis=1)
            s1 = s[rows, i1]
            total += float(s1.sum())
            counts += np.bincount(i1, minlength=n)
            if hessian:
                s[rows, i1] = -np.inf
                i2 = np.argmax(s, axis=1)
                gaps[lo:lo + s.shape[0]] = s1 - s[rows, i2]
                pair[lo:lo + s.shape[0]] = i1 * n + i2
        masses = counts / self.size
        value = float(self.weights @ h) - total / self.size
        H = None
        if hessian:
            # distance to the facet is gap / (2 |y_i - y_j|); a distance band of
            # half-width eps catches 2 eps * facet mass, and dmass_i/dh_j is
            # -facet mass / (2 |y_i - y_j|)
            dist = self._pair_distance.reshape(-1)[pair]
            gaps /= 2.0 * dist
            k = max(int(self.band_fraction * self.size), 1)
            eps = float(np.partition(gaps, k - 1)[k - 1])
            if eps > 0:
                band = gaps <= eps
                c = np.bincount(pair[band], minlength=n * n).reshape(n, n).astype(float)
                off = (c + c.T) / (4.0 * eps * self.size * self._pair_distance)
                H = np.diag(off.sum(axis=1)) - off
            else:
                H = np.zeros((n, n))
        return value, self.weights - masses, masses, H

    def fill_empty(self, h: np.ndarray) -> np.ndarray:
        """Raise ``h_i`` of every empty cell until it holds about half its target mass.

        Each move is a coordinate step along which the dual strictly increases.
        """
        h = h.copy()
        for _ in range(4 * self.n):
            _, _, masses, _ = self(h)
            empty = np.flatnonzero((masses == 0) & (self.weights > 0))
            if empty.size == 0:
                break
            i = empty[0]
            need = np.empty(self.size)
            for lo in range(0, self.size, CHUNK):
                s = self._linear(lo, lo + CHUNK) + h
                own = s[:, i].copy()
                s[:, i] = -np.inf
                need[lo:lo + s.shape[0]] = s.max(axis=1) - own
            k = max(int(0.5 * self.weights[i] * self.size), 1)
            h[i] += float(np.partition(need, k - 1)[k - 1]) + 1e-12 * (1.0 + abs(h[i]))
        return h

    def to_w(self, h: np.ndarray) -> np.ndarray:
        w = h + np.einsum("ij,ij->i", self.y, self.y) + 2.0 * self.y @ self.center
        return w - w[0]

    def from_w(self, w: np.ndarray) -> np.ndarray:
        return w - np.einsum("ij,ij->i", self.y, self.y) - 2.0 * self.y @ self.center


def dual_value(points, atoms, weights, w) -> float:
    """Fixed-sample dual ``sum lambda_i w_i + mean_u min_i(||u - x_i||^2 - w_i)``."""
    points = np.asarray(points, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    c = atoms.mean(axis=0)
    total = 0.0
    for lo in range(0, points.shape[0], CHUNK):
        p = points[lo:lo + CHUNK]
        s = power_scores(p, atoms, np.asarray(w, dtype=float))
        r = p - c
        total += float((np.einsum("ij,ij->i", r, r) - s.max(axis=1)).sum())
    return float(np.asarray(weights) @ np.asarray(w)) + total / points.shape[0]


def _initial_h(dual: SampleDual, reference: ReferenceMeasure) -> np.ndarray:
    """Voronoi diagram of the points ``center + kappa * (x_i - c)``.

    ``kappa`` shrinks the recentred atoms into the inner half of the support,
    so every initial cell contains a neighbourhood of its own site.
    """
    radius = float(np.max(np.linalg.norm(dual.y, axis=1)))
    inner = 0.5 if reference.kind is Kind.CUBE else 1.0
    kappa = min(1.0, 0.5 * inner / radius) if radius > 0 else 1.0
    return -2.0 * dual.y @ reference.center - kappa * np.einsum("ij,ij->i", dual.y, dual.y)


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    # H is a Laplacian (constants in its kernel); solve in the zero-sum gauge
    d, *_ = np.linalg.lstsq(H, g, rcond=None)
    return d - d.mean()


def solve(reference: ReferenceMeasure, target: DiscreteMeasure,
          config: SolveConfig | None = None, trace: list | None = None) -> TransportMap:
    """Compute the adapted weight vector of ``(reference, target)``.

    Damped Newton ascent on the fixed-sample dual.  ``trace``, when given,
    receives the dual value of every accepted iterate.  Raises NotConverged if
    the mass residual on the solve sample stays above
    ``config.mass_tolerance``, or if an independent sample disagrees by more
    than the tolerance plus Monte-Carlo slack.
    """
    config = config or SolveConfig()
    if target.dim != reference.dim:
        raise ValueError("target and reference differ in dimension")
    lam = target.weights
    n = target.n
    if n == 1:
        diagram = PowerDiagram(target.atoms, np.zeros(1), reference)
        return TransportMap(diagram, target, 0.0, 0.0, 0, config)

    points = reference.sample(config.mc_budget, config.seed)
    dual = SampleDual(points, target.atoms, lam)
    h = _initial_h(dual, reference)
    F, g, masses, H = dual(h, hessian=True)
    if np.any((masses == 0) & (lam > 0)):
        warnings.warn("empty cell at the initial iterate; refilling", EmptyCellWarning, stacklevel=2)
        h = dual.fill_empty(h)
        F, g, masses, H = dual(h, hessian=True)
    if trace is not None:
        trace.append(F)
    it = 0
    residual = float(np.max(np.abs(g)))
    while residual > config.mass_tolerance:
        if it >= config.max_iterations:
            raise NotConverged(residual, it)
        it += 1
        step = _line_search(dual, h, F, g, masses, _newton_direction(H, g))
        if step is None:
            # fall back to gradient ascent, scaled by the largest cell stiffness
            scale = float(np.max(np.diag(H))) if H is not None else 0.0
            step = _line_search(dual, h, F, g, masses, g / scale if scale > 0 else g,
                                max_halvings=60)
            if step is None:
                raise NotConverged(residual, it, "line search failed to make progress")
        h, F, g, masses, H = step
        if np.any((masses == 0) & (lam > 0)):
            warnings.warn("empty cell at an iterate of the dual ascent", EmptyCellWarning,
                          stacklevel=2)
        if trace is not None:
            trace.append(F)
        residual = float(np.max(np.abs(g)))
        log.debug("iter %d  F=%.12g  residual=%.3e", it, F, residual)

    w = dual.to_w(h)
    diagram = PowerDiagram(target.atoms, w, reference)
    validation = 0.0
    if config.validate:
        fresh = diagram.cell_masses(config.mc_budget, config.seed, stream=1)
        validation = float(np.max(np.abs(fresh - lam)))
        p = float(np.max(lam * (1.0 - lam)))
        slack = 5.0 * math.sqrt(2.0 * p / config.mc_budget)
        if validation > config.mass_tolerance + slack:
            raise NotConverged(validation, it, f"independent-sample residual {validation:.3e} "
                               f"exceeds {config.mass_tolerance + slack:.3e}")
    return TransportMap(diagram, target, residual, validation, it, config)


def _line_search(dual, h, F, g, masses, d, max_halvings=30, c1=1e-4):
    """Backtrack from the full step until the dual rises enough and no nonempty cell empties."""
    slope = float(g @ d)
    if not slope > 0:
        return None
    nonempty = masses > 0
    t = 1.0
    for k in range(max_halvings + 1):
        h_new = h + t * d
        # the full step is usually accepted, so only it carries the Hessian pass
        F_new, g_new, m_new, H_new = dual(h_new, hessian=k == 0)
        if F_new >= F + c1 * t * slope and not np.any(nonempty & (m_new == 0)):
            if H_new is None:
                H_new = dual(h_new, hessian=True)[3]
            return h_new, F_new, g_new, m_new, H_new
        t *= 0.5
    return None


def transport(tmap: TransportMap, points):
    return tmap.transport(points)


def ranks(tmap: TransportMap, budget: int = 1_000_000, seed: int = 1) -> np.ndarray:
    """Barycentre of each power cell under the reference, estimated by Monte Carlo."""
    ref = tmap.reference
    x = ref.sample(budget, seed, stream=2)
    idx = tmap.classify(x, check_support=False)
    n = tmap.target.n
    counts = np.bincount(idx, minlength=n)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyCellRank(empty[0])
    sums = np.stack([np.bincount(idx, weights=x[:, k], minlength=n) for k in range(ref.dim)], axis=1)
    return sums / counts[:, None]


def config_dict(config: SolveConfig) -> dict:
    return asdict(config)


__all__ = ["SolveConfig", "TransportMap", "SampleDual", "solve", "transport", "ranks", "dual_value"]
