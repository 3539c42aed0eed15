"""Tukey halfspace depth of the built-in reference measures.

``HD(u, mu)`` is the smallest mass of a closed halfspace containing ``u``.
Halfspaces are written ``{z : <v, z - u> >= s}`` with ``v`` the inner normal;
the minimizing normal at ``s = 0`` is reported as ``direction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.stats import qmc

from . import curves
from .errors import DimensionMismatch, NotInterior
from .measures import CUBE_MC_BUDGET, Kind, ReferenceMeasure
from .numeric import THRESHOLD_TOL

N_DIRECTIONS = 4096
REFINE_STEPS = 50
OFFSET_TOL = 1e-10


@dataclass(frozen=True)
class DepthResult:
    value: float
    direction: np.ndarray
    exact: bool = True

    def to_dict(self) -> dict:
        return {"value": self.value, "direction": [float(x) for x in self.direction],
                "exact": self.exact}


def _point(measure: ReferenceMeasure, u) -> np.ndarray:
    p = np.asarray(u, dtype=float).reshape(-1)
    if p.shape != (measure.dim,):
        raise DimensionMismatch(f"expected a point of dimension {measure.dim}, got {np.shape(u)}")
    return p


def _unit(d: int, k: int = 0) -> np.ndarray:
    e = np.zeros(d)
    e[k] = 1.0
    return e


def depth(measure: ReferenceMeasure, u) -> DepthResult:
    """Halfspace depth of ``u``; closed form where one is known, directional search otherwise."""
    u = _point(measure, u)
    d = measure.dim
    kind = measure.kind
    if kind in (Kind.GAUSS, Kind.BALL, Kind.SPHUNIF):
        r = float(np.linalg.norm(u))
        v = u / r if r > 0 else _unit(d)
        if kind is Kind.GAUSS:
            return DepthResult(float(special.ndtr(-r)), v)
        return DepthResult(0.5 if r == 0 else curves.tail_mass(kind.value, d, r), v)
    if d == 1:
        x = float(u[0])
        return DepthResult(max(min(x, 1.0 - x), 0.0), np.array([-1.0 if x <= 0.5 else 1.0]))
    if d == 2:
        return _square_depth(u)
    res = directional_depth(measure, u)
    return DepthResult(res.value, res.direction, exact=False)


def _square_depth(u: np.ndarray) -> DepthResult:
    # the minimal halfspace cuts off the triangle at the nearest corner
    a = 2.0 * min(u[0], 1.0 - u[0])
    b = 2.0 * min(u[1], 1.0 - u[1])
    sign = np.where(u < 0.5, -1.0, 1.0)
    if a <= 0.0 or b <= 0.0:
        k = 0 if a <= b else 1
        v = np.zeros(2)
        v[k] = sign[k]
        return DepthResult(0.0, v)
    v = sign * np.array([1.0 / a, 1.0 / b])
    return DepthResult(float(a * b / 2.0), v / np.linalg.norm(v))


def sphere_directions(d: int, count: int = N_DIRECTIONS) -> np.ndarray:
    """Quasi-uniform unit vectors: equispaced angles in 2-D, normalized Sobol-Gaussian points above."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    return _sobol_directions(d, count).copy()


@lru_cache(maxsize=32)
def _sobol_directions(d: int, count: int) -> np.ndarray:
    pts = qmc.Sobol(d, scramble=True, seed=0).random(count)
    z = special.ndtri(np.clip(pts, 1e-12, 1.0 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z.flags.writeable = False
    return z


class _Masses:
    """Masses of ``{z : <v, z - u> >= 0}`` for batches of directions ``v``."""

    def __init__(self, measure: ReferenceMeasure, u: np.ndarray, sample: np.ndarray | None):
        self.measure = measure
        self.u = u
        if sample is None and not (measure.kind in (Kind.GAUSS, Kind.BALL, Kind.SPHUNIF)
                                   or (measure.kind is Kind.CUBE and measure.dim <= 2)):
            sample = measure.sample(CUBE_MC_BUDGET, seed=0)
        self.sample = sample

    def __call__(self, V: np.ndarray) -> np.ndarray:
        V = np.atleast_2d(V)
        offs = V @ self.u
        if self.sample is None:
            if self.measure.kind is Kind.GAUSS:
                return special.ndtr(-offs)
            if self.measure.kind is Kind.BALL:
                return _ball_cap(self.measure.dim, offs)
            if self.measure.kind is Kind.SPHUNIF:
                return _sphunif_cap(self.measure.dim, offs)
            return np.array([self.measure.halfspace_mass(v, s) for v, s in zip(V, offs)])
        out = np.empty(V.shape[0])
        for lo in range(0, V.shape[0], 256):
            proj = self.sample @ V[lo:lo + 256].T
            out[lo:lo + 256] = np.count_nonzero(proj >= offs[lo:lo + 256], axis=0)
        return out / self.sample.shape[0]


def _ball_cap(d: int, s: np.ndarray) -> np.ndarray:
    # mass of {x_1 >= s} under the uniform ball law, as a regularized incomplete beta
    a = np.clip(np.abs(s), 0.0, 1.0)
    tail = 0.5 * special.betainc((d + 1) / 2.0, 0.5, 1.0 - a * a)
    return np.where(s >= 0, tail, 1.0 - tail)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_GL_NODES = (_GL_NODES + 1.0) / 2.0
_GL_WEIGHTS = _GL_WEIGHTS / 2.0


def _sphunif_cap(d: int, s: np.ndarray) -> np.ndarray:
    # average over r ~ U[|s|, 1] of the sphere cap at |s| / r; r = |s| + (1 - |s|) q^2
    # smooths the (r - |s|)^((d-1)/2) onset, so 64 Gauss-Legendre nodes reach rounding level
    a = np.clip(np.abs(s), 0.0, 1.0)[:, None]
    q = _GL_NODES[None, :]
    r = a + (1.0 - a) * q * q
    if d == 1:
        caps = np.full(r.shape, 0.5)
    else:
        ratio = a / np.maximum(r, 1e-300)
        caps = 0.5 * special.betainc((d - 1) / 2.0, 0.5, np.clip(1.0 - ratio * ratio, 0.0, 1.0))
    tail = (caps * 2.0 * (1.0 - a) * q) @ _GL_WEIGHTS
    return np.where(s >= 0, tail, 1.0 - tail)


def directional_depth(measure: ReferenceMeasure, u, n_directions: int = N_DIRECTIONS,
                      refine_steps: int = REFINE_STEPS, sample=None) -> DepthResult:
    """Minimum halfspace mass over quasi-uniform directions, then a local pattern search.

    The result is an upper bound of the exact depth.  Masses are exact where
    the measure has a vectorizable closed form (Gaussian, uniform ball,
    spherical uniform, cube in d <= 2) and otherwise counted on ``sample`` (default: a fixed 2e5-point
    sample), in which case the minimum is biased low by the sampling noise.
    """
    u = _point(measure, u)
    d = measure.dim
    masses = _Masses(measure, u, None if sample is None else np.asarray(sample, dtype=float))
    V = sphere_directions(d, n_directions)
    m = masses(V)
    k = int(np.argmin(m))  # first minimum, i.e. lowest direction ordinal
    best_v, best = V[k], float(m[k])
    if d == 1:
        return DepthResult(best, best_v, exact=False)
    step = 2.0 * math.pi / n_directions ** (1.0 / (d - 1))
    for _ in range(refine_steps):
        basis = _tangent_basis(best_v)
        cand = np.concatenate([best_v + step * basis, best_v - step * basis])
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        cm = masses(cand)
        j = int(np.argmin(cm))
        if cm[j] < best:
            best_v, best = cand[j], float(cm[j])
        else:
            step *= 0.5
    return DepthResult(best, best_v, exact=False)


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    # rows span the orthogonal complement of v
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(v.size)]))
    return q[:, 1:v.size].T


def offset_map(measure: ReferenceMeasure, u, v) -> float:
    """``s(v) = sup{s : mu({z : <v, z - u> >= s}) >= HD(u)}`` by bisection.

    The comparison with the depth allows a relative slack of 1e-12 so that the
    minimizing direction maps to 0 despite rounding in the two mass formulas.
    """
    u = _point(measure, u)
    if not measure.interior_contains(u):
        raise NotInterior("offset map needs a point in the interior of the support")
    v = np.asarray(v, dtype=float)
    base = float(v @ u)
    target = depth(measure, u).value
    floor = target - THRESHOLD_TOL * target

    def ok(s):
        return measure.halfspace_mass(v, base + s) >= floor

    lo = 0.0
    if not ok(lo):
        # numerically flat minimizer: fall back to the largest feasible s below 0
        hi, lo = 0.0, -1.0
        while not ok(lo):
            lo *= 2.0
    else:
        hi = 1.0
        while ok(hi):
            lo, hi = hi, 2.0 * hi
    while hi - lo > OFFSET_TOL:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def depth_region_contains(measure: ReferenceMeasure, h: float, point) -> bool:
    """Membership in ``R(h) = {u in support : HD(u) >= h}`` (comparison tolerance 1e-12)."""
    if not 0.0 <= h <= 1.0:
        raise ValueError("h must lie in [0, 1]")
    p = _point(measure, point)
    if not measure.support_contains(p):
        return False
    return depth(measure, p).value >= h - THRESHOLD_TOL


def region_radius(measure: ReferenceMeasure, h: float) -> float:
    """Radius of the depth region ``R(h)`` of an orthogonal-invariant reference."""
    if measure.kind not in (Kind.BALL, Kind.SPHUNIF, Kind.GAUSS):
        raise ValueError("depth regions are centred balls only for orthogonal-invariant kinds")
    if not 0.0 <= h <= 0.5:
        raise ValueError("h must lie in [0, 1/2]")
    if measure.kind is Kind.GAUSS:
        return math.inf if h == 0 else float(-special.ndtri(h))
    lo, hi = 0.0, 1.0
    while hi - lo > OFFSET_TOL:
        mid = 0.5 * (lo + hi)
        if curves.tail_mass(measure.kind.value, measure.dim, mid) >= h:
            lo = mid
        else:
            hi = mid
    return lo


def tukey_median(measure: ReferenceMeasure) -> np.ndarray:
    """The symmetry center, which has depth 1/2 for every built-in kind."""
    return measure.center
