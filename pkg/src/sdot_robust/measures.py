"""Reference measures (absolutely continuous, convex support) and discrete targets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from . import curves
from .errors import DimensionMismatch, InvalidMeasure, NonUnitDirection
from .numeric import make_rng

UNIT_TOL = 1e-9
# sample size behind cube halfspace masses in general position for d >= 3
CUBE_MC_BUDGET = 200_000


class Kind(enum.Enum):
    CUBE = "cube"
    BALL = "ball"
    SPHUNIF = "sphunif"
    GAUSS = "gauss"


@dataclass(frozen=True)
class ReferenceMeasure:
    """One of the built-in reference measures.

    cube     uniform on [0, 1]^d
    ball     uniform on the closed unit ball
    sphunif  spherical uniform on the closed unit ball (uniform radius, uniform direction)
    gauss    standard normal on R^d
    """

    kind: Kind
    dim: int

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dim) < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def parse(cls, text: str) -> "ReferenceMeasure":
        """Parse ``kind:d``, e.g. ``cube:2`` or ``gauss:5``."""
        try:
            kind, dim = text.split(":")
            return cls(Kind(kind.strip()), int(dim))
        except ValueError as exc:
            raise ValueError(f"bad reference {text!r}; expected one of "
                             "cube:d, ball:d, sphunif:d, gauss:d") from exc

    def __str__(self):
        return f"{self.kind.value}:{self.dim}"

    @property
    def compact(self) -> bool:
        return self.kind is not Kind.GAUSS

    @property
    def center(self) -> np.ndarray:
        """Symmetry center, which is also the mean and the Tukey median."""
        if self.kind is Kind.CUBE:
            return np.full(self.dim, 0.5)
        return np.zeros(self.dim)

    def sample(self, count: int, seed: int, stream: int = 0) -> np.ndarray:
        """Draw ``count`` i.i.d. points, shape (count, dim); a pure function of its arguments."""
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = make_rng(seed, stream)
        d = self.dim
        if self.kind is Kind.CUBE:
            return rng.random((count, d))
        if self.kind is Kind.GAUSS:
            return rng.standard_normal((count, d))
        direction = rng.standard_normal((count, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.random(count)
        if self.kind is Kind.BALL:
            radius = radius ** (1.0 / d)
        return direction * radius[:, None]

    def _check_point(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.shape[-1:] != (self.dim,):
            raise DimensionMismatch(f"expected points of dimension {self.dim}, got shape {p.shape}")
        return p

    def support_contains(self, point) -> np.ndarray | bool:
        p = self._check_point(point)
        if self.kind is Kind.CUBE:
            out = np.all((p >= 0.0) & (p <= 1.0), axis=-1)
        elif self.kind is Kind.GAUSS:
            out = np.ones(p.shape[:-1], dtype=bool)
        else:
            out = np.einsum("...i,...i->...", p, p) <= 1.0
        return bool(out) if np.ndim(out) == 0 else out

    def interior_contains(self, point) -> np.ndarray | bool:
        p = self._check_point(point)
        if self.kind is Kind.CUBE:
            out = np.all((p > 0.0) & (p < 1.0), axis=-1)
        elif self.kind is Kind.GAUSS:
            out = np.ones(p.shape[:-1], dtype=bool)
        else:
            out = np.einsum("...i,...i->...", p, p) < 1.0
        return bool(out) if np.ndim(out) == 0 else out

    def support_extent(self, direction) -> tuple[float, float]:
        """Range of <v, z> over the support (infinite for the Gaussian)."""
        v = np.asarray(direction, dtype=float)
        if self.kind is Kind.GAUSS:
            return -math.inf, math.inf
        if self.kind is Kind.CUBE:
            return float(np.minimum(v, 0).sum()), float(np.maximum(v, 0).sum())
        return -float(np.linalg.norm(v)), float(np.linalg.norm(v))

    def halfspace_mass(self, direction, offset: float) -> float:
        """Mass of ``{z : <v, z> >= offset}`` for a unit vector ``v``."""
        v = self._check_point(direction)
        if v.ndim != 1:
            raise DimensionMismatch("direction must be a single vector")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_TOL:
            raise NonUnitDirection(f"direction has norm {norm!r}")
        s = float(offset)
        if self.kind is Kind.GAUSS:
            return float(special.ndtr(-s))
        if self.kind in (Kind.BALL, Kind.SPHUNIF):
            if s == 0.0:
                return 0.5
            return curves.tail_mass(self.kind.value, self.dim, s)
        return _cube_halfspace_mass(v, s)


def _cube_halfspace_mass(v: np.ndarray, s: float) -> float:
    d = v.size
    nz = np.flatnonzero(v != 0.0)
    if nz.size == 1:
        # axis-aligned after normalization: v_k = +-1
        k = nz[0]
        if v[k] > 0:
            return float(np.clip(1.0 - s / v[k], 0.0, 1.0))
        return float(np.clip(s / v[k], 0.0, 1.0))
    if d == 2:
        return _square_clip_area(v, s)
    x = _cube_mc_sample(d)
    return float(np.count_nonzero(x @ v >= s)) / x.shape[0]


@lru_cache(maxsize=16)
def _cube_mc_sample(d: int) -> np.ndarray:
    x = ReferenceMeasure(Kind.CUBE, d).sample(CUBE_MC_BUDGET, seed=0)
    x.flags.writeable = False
    return x


def _square_clip_area(v: np.ndarray, s: float) -> float:
    """Area of [0,1]^2 intersected with {<v,z> >= s}, by clipping the square polygon."""
    poly = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    val = [v[0] * x + v[1] * y - s for x, y in poly]
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        fp, fq = val[i], val[(i + 1) % m]
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    if len(out) < 3:
        return 0.0
    area = 0.0
    for i in range(len(out)):
        x0, y0 = out[i]
        x1, y1 = out[(i + 1) % len(out)]
        area += x0 * y1 - x1 * y0
    return float(min(max(abs(area) / 2.0, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported target ``sum_i weights[i] * delta(atoms[i])``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise InvalidMeasure("atoms must be a non-empty (n, d) array")
        if weights.shape[0] != atoms.shape[0]:
            raise InvalidMeasure(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise InvalidMeasure("atoms and weights must be finite")
        if np.any(weights <= 0):
            raise InvalidMeasure("weights must be positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise InvalidMeasure(f"weights sum to {math.fsum(weights)!r}, not 1")
        if atoms.shape[0] > 1:
            _check_distinct(atoms)
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_points(cls, atoms, weights=None) -> "DiscreteMeasure":
        """Build from raw atoms; missing weights mean 1/n each, given weights are renormalized."""
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        n = atoms.shape[0]
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, dtype=float)
            if np.any(w <= 0):
                raise InvalidMeasure("weights must be positive")
            total = math.fsum(w)
            if abs(total - 1.0) > 1e-15:
                w = w / total
        return cls(atoms, w)

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def is_empirical(self) -> bool:
        """True when all weights are equal (to floating precision)."""
        return bool(np.ptp(self.weights) <= 1e-15)

    def shifted(self, t) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms + np.asarray(t, dtype=float), self.weights)


def _check_distinct(atoms: np.ndarray, tol: float = 1e-12) -> None:
    n = atoms.shape[0]
    if n <= 2048:
        diff = atoms[:, None, :] - atoms[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        dist[np.diag_indices(n)] = np.inf
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[i, j] <= tol:
            raise InvalidMeasure(f"atoms {min(i, j)} and {max(i, j)} coincide")
        return
    from scipy.spatial import cKDTree

    pairs = cKDTree(atoms).query_pairs(tol)
    if pairs:
        i, j = sorted(pairs)[0]
        raise InvalidMeasure(f"atoms {i} and {j} coincide")
