"""Halfspaces and power (Laguerre) diagrams, handled purely through classification.

Cells are never built as polytopes.  A point belongs to the cell of the atom
minimizing the power distance ``||u - x_i||^2 - w_i``; cell masses are Monte
Carlo counts of reference samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUnitDirection, NotOneDimensional, OutsideSupport, UnsortedAtoms
from .measures import UNIT_TOL, ReferenceMeasure
from .numeric import CHUNK


@dataclass(frozen=True)
class Halfspace:
    """``{z : <normal, z - anchor> >= offset}``."""

    normal: np.ndarray
    anchor: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise NonUnitDirection(f"normal has norm {np.linalg.norm(v)!r}")
        object.__setattr__(self, "normal", v)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return (p - self.anchor) @ self.normal >= self.offset

    def mass(self, reference: ReferenceMeasure) -> float:
        return reference.halfspace_mass(self.normal, float(self.normal @ self.anchor) + self.offset)


def power_scores(points: np.ndarray, atoms: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``w_i - ||u - x_i||^2`` up to a per-point constant, evaluated around the atom mean.

    Expanding around the centroid ``c`` keeps the arithmetic well conditioned
    for atoms far from the origin.
    """
    c = atoms.mean(axis=0)
    y = atoms - c
    bias = weights - np.einsum("ij,ij->i", y, y)
    return 2.0 * (points - c) @ y.T + bias


def argmax_rows(scores: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the smallest index on ties
    return np.argmax(scores, axis=1)


@dataclass(frozen=True, eq=False)
class PowerDiagram:
    atoms: np.ndarray
    weight_vector: np.ndarray
    reference: ReferenceMeasure

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        w = np.array(self.weight_vector, dtype=float).reshape(-1)
        if w.shape[0] != atoms.shape[0]:
            raise ValueError("one weight per atom required")
        if atoms.shape[1] != self.reference.dim:
            raise ValueError("atoms and reference differ in dimension")
        atoms.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weight_vector", w)

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    def classify(self, points, check_support: bool = True):
        """Index of the power cell containing each point (smallest index on ties)."""
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        if check_support and not np.all(self.reference.support_contains(p)):
            raise OutsideSupport("point outside the support of the reference measure")
        out = np.empty(p.shape[0], dtype=np.intp)
        for lo in range(0, p.shape[0], CHUNK):
            blk = p[lo:lo + CHUNK]
            out[lo:lo + CHUNK] = argmax_rows(power_scores(blk, self.atoms, self.weight_vector))
        return int(out[0]) if single else out

    def cell_masses(self, budget: int, seed: int, stream: int = 0) -> np.ndarray:
        """Monte-Carlo cell masses; the counts partition the sample so they sum to one."""
        if budget < 1:
            raise ValueError("budget must be >= 1")
        x = self.reference.sample(budget, seed, stream)
        counts = np.bincount(self.classify(x, check_support=False), minlength=self.n)
        return counts / budget

    def cell_boundary_1d(self) -> np.ndarray:
        """Breakpoints between consecutive cells of a 1-D diagram, clamped to the support."""
        if self.reference.dim != 1:
            raise NotOneDimensional("cell_boundary_1d needs a one-dimensional reference")
        x = self.atoms[:, 0]
        if np.any(np.diff(x) <= 0):
            raise UnsortedAtoms("atoms must be strictly increasing")
        w = self.weight_vector
        b = (x[:-1] + x[1:]) / 2.0 + (w[:-1] - w[1:]) / (2.0 * (x[1:] - x[:-1]))
        lo, hi = self.reference.support_extent(np.ones(1))
        b = np.clip(b, lo, hi)
        return np.maximum.accumulate(b) if b.size else b
