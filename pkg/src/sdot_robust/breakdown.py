"""Breakdown points of OT quantiles from the weights of the target.

The breakdown point of ``Q_nu(u)`` is the smallest total weight of a nonempty
subset of atoms that reaches the depth ``HD(u, mu)``.  It depends on the atoms
only through their weights.

Subset comparisons ``sum >= t`` use the tolerance ``THRESHOLD_TOL`` because
test thresholds sit exactly on jump points (t = 1/2 with an even number of
equal weights).  Subsets whose sums agree within ``TIE_TOL`` are ties and are
resolved toward the lexicographically smallest sorted index tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .depth import depth, tukey_median
from .errors import DimensionMismatch, InfeasibleThreshold, OutsideSupport
from .measures import DiscreteMeasure, ReferenceMeasure
from .numeric import THRESHOLD_TOL, ceil_fraction

EXHAUSTIVE_MAX_N = 22
TIE_TOL = 1e-13


def _check(weights, t) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w <= 0):
        raise ValueError("weights must be a nonempty vector of positive numbers")
    if t < 0 or not math.isfinite(t):
        raise ValueError(f"threshold must be a non-negative number, got {t!r}")
    if t > math.fsum(w) + THRESHOLD_TOL:
        raise InfeasibleThreshold(f"threshold {t!r} exceeds the total weight")
    return w


def _lex_smallest(masks: np.ndarray) -> int:
    """Mask whose sorted index tuple is lexicographically smallest."""
    masks = np.unique(masks)
    prefix = 0
    last = -1
    while True:
        if np.any(masks == prefix):
            return int(prefix)
        rest = masks & ~np.int64((1 << (last + 1)) - 1)
        low = rest & -rest
        m = low.min()
        masks = masks[low == m]
        prefix |= int(m)
        last = int(m).bit_length() - 1


def _result(w: np.ndarray, subset) -> tuple[float, tuple[int, ...]]:
    subset = tuple(int(i) for i in subset)
    return math.fsum(w[list(subset)]), subset


def min_subset_exhaustive(weights, t: float) -> tuple[float, tuple[int, ...]]:
    """Enumerate all ``2^n - 1`` nonempty subsets (n <= 22)."""
    w = _check(weights, t)
    n = w.size
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive search is limited to n <= {EXHAUSTIVE_MAX_N}")
    sums = np.zeros(1)
    for x in w:
        sums = np.concatenate([sums, sums + x])
    masks = np.arange(sums.size, dtype=np.int64)
    ok = (sums >= t - THRESHOLD_TOL) & (masks > 0)
    best = sums[ok].min()
    tied = masks[ok & (sums <= best + TIE_TOL)]
    mask = _lex_smallest(tied)
    return _result(w, [i for i in range(n) if mask >> i & 1])


def min_subset_bnb(weights, t: float) -> tuple[float, tuple[int, ...]]:
    """Branch and bound over weights sorted in decreasing order.

    A first pass finds the optimal sum (a branch stops as soon as it reaches
    ``t``, and is cut when its suffix cannot reach ``t`` or it cannot beat the
    incumbent).  A second depth-first pass in lexicographic index order
    returns the first subset attaining that sum.
    """
    w = _check(weights, t)
    n = w.size
    goal = t - THRESHOLD_TOL
    order = np.argsort(-w, kind="stable")
    ws = w[order]
    suffix = np.concatenate([np.cumsum(ws[::-1])[::-1], [0.0]])
    # leaving out an item also leaves out its equal successors, so groups of
    # equal weights are enumerated by count instead of by subset
    next_diff = np.empty(n, dtype=np.intp)
    nxt = n
    for k in range(n - 1, -1, -1):
        if k + 1 < n and ws[k] != ws[k + 1]:
            nxt = k + 1
        next_diff[k] = nxt
    best = math.inf
    stack = [(0, 0.0)]
    while stack and not best < goal + TIE_TOL:
        k, s = stack.pop()
        if k == n or s + suffix[k] < goal:
            continue
        if s + ws[k] >= goal:
            # the cheapest single item that completes the subset ends this branch;
            # larger items complete it too, but at a higher sum
            j = k + int(np.searchsorted(-ws[k:], -(goal - s), side="right")) - 1
            best = min(best, s + ws[j])
            if j + 1 < n:
                stack.append((j + 1, s))
            continue
        stack.append((next_diff[k], s))
        s2 = s + ws[k]
        if s2 < best - TIE_TOL:
            stack.append((k + 1, s2))

    # lexicographic search for a subset with sum in [goal, best + TIE_TOL]
    isuffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    top = best + TIE_TOL

    def first(prefix, s, nxt):
        if prefix and s >= goal:
            return prefix
        for j in range(nxt, n):
            sj = s + w[j]
            if sj > top:
                continue
            if s + isuffix[j] < goal:
                break
            found = first(prefix + (j,), sj, j + 1)
            if found is not None:
                return found
        return None

    subset = first((), 0.0, 0)
    return _result(w, subset)


def min_subset_at_least(weights, t: float) -> tuple[float, tuple[int, ...]]:
    """Smallest ``sum(weights[I])`` over nonempty ``I`` with ``sum >= t``; returns (sum, I)."""
    if np.asarray(weights).size <= EXHAUSTIVE_MAX_N:
        return min_subset_exhaustive(weights, t)
    return min_subset_bnb(weights, t)


@dataclass(frozen=True)
class BreakdownReport:
    bdp: float
    achieving_subset: tuple[int, ...]
    depth_used: float
    empirical_form: float | None = None
    depth_exact: bool = True
    lower_bound: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def bound_holds(self) -> bool | None:
        if self.lower_bound is None:
            return None
        return self.bdp >= self.lower_bound - THRESHOLD_TOL

    def to_dict(self) -> dict:
        out = {"bdp": self.bdp, "achieving_subset": list(self.achieving_subset),
               "depth_used": self.depth_used, "empirical_form": self.empirical_form,
               "depth_exact": self.depth_exact}
        if self.lower_bound is not None:
            out["lower_bound"] = self.lower_bound
            out["bound_holds"] = self.bound_holds
        out.update(self.extra)
        return out


def breakdown_point(reference: ReferenceMeasure, target: DiscreteMeasure, u) -> BreakdownReport:
    """Breakdown point of the OT quantile at ``u``.

    For equal weights ``bdp`` is reported as ``|I| / n``, which is the exact
    value ``ceil(n HD) / n`` rather than a float sum of ``|I|`` copies of 1/n.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != reference.dim or target.dim != reference.dim:
        raise DimensionMismatch("point, target and reference must share the dimension")
    if not reference.support_contains(u):
        raise OutsideSupport("u lies outside the support of the reference measure")
    hd = depth(reference, u)
    total, subset = min_subset_at_least(target.weights, hd.value)
    empirical = None
    if target.is_empirical:
        total = len(subset) / target.n
        empirical = ceil_fraction(target.n, hd.value)
    return BreakdownReport(total, subset, hd.value, empirical, hd.exact)


def median_breakdown(reference: ReferenceMeasure, target: DiscreteMeasure) -> BreakdownReport:
    """Breakdown point at the Tukey median, with the ``1/(d+1)`` subset lower bound attached."""
    report = breakdown_point(reference, target, tukey_median(reference))
    bound, _ = min_subset_at_least(target.weights, 1.0 / (reference.dim + 1))
    report = BreakdownReport(report.bdp, report.achieving_subset, report.depth_used,
                             report.empirical_form, report.depth_exact, bound)
    if not report.bound_holds:
        raise AssertionError(f"median breakdown {report.bdp} below the lower bound {bound}")
    return report
