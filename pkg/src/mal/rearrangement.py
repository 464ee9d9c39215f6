"""Decreasing rearrangements of weighted value sets.

The decreasing rearrangement of a field xi against a measure mu is the
left-continuous decreasing step function xi* on (0, M], M the total mass, with
xi*(s) = the smallest level t such that mu(xi >= t) >= s.  For a finite
weighted set this is: sort values descending, accumulate weights, merge ties.
Equality of rearrangements is exactly equidistribution (equality of weighted
distributions), which is what the invariant Lagrangians see.

The theta map realizes the classical transfer: order the cells, lay their
masses end to end on (0, M], and pull a step function back through interval
membership.  Pulling xi* back through xi's own value-descending theta map
reproduces the distribution of xi exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import MassMismatch
from .grid import WeightedValues, _frozen


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Left-continuous decreasing step function on (0, M].

    bounds: 0 = s_0 < s_1 < ... < s_k = M
    levels: v_1 > v_2 > ... > v_k, with value v_j on (s_{j-1}, s_j].
    """

    bounds: NDArray[np.float64]
    levels: NDArray[np.float64]

    def __post_init__(self):
        if self.bounds.ndim != 1 or self.levels.ndim != 1:
            raise ValueError("bounds and levels must be 1-d")
        if self.bounds.size != self.levels.size + 1:
            raise ValueError("need exactly one more bound than levels")
        if self.bounds[0] != 0.0:
            raise ValueError("first bound must be 0")
        if not np.all(np.diff(self.bounds) > 0):
            raise ValueError("bounds must be strictly increasing")
        if not np.all(np.diff(self.levels) < 0):
            raise ValueError("levels must be strictly decreasing")

    @property
    def total_mass(self) -> float:
        return float(self.bounds[-1])

    def value(self, s):
        """Evaluate at s in (0, M]; arrays accepted.  Left-continuous."""
        idx = np.searchsorted(self.bounds, s, side="left") - 1
        idx = np.clip(idx, 0, self.levels.size - 1)
        return self.levels[idx]

    def integral(self) -> float:
        """Integral over (0, M]."""
        return float(np.dot(self.levels, np.diff(self.bounds)))

    def prefix_integrals(self) -> NDArray[np.float64]:
        """Cumulative integral at each bound; starts at 0, length k + 1."""
        out = np.empty(self.bounds.size)
        out[0] = 0.0
        np.cumsum(self.levels * np.diff(self.bounds), out=out[1:])
        return out


def rearrange_values(values, weights) -> StepFunction:
    """Decreasing rearrangement of an arbitrary positive-mass weighted set.

    Sort-based; ties between equal values merge into a single step so the
    levels are strictly decreasing.
    """
    values = np.ravel(np.asarray(values, dtype=float))
    weights = np.ravel(np.asarray(weights, dtype=float))
    if values.shape != weights.shape or values.size == 0:
        raise ValueError("values and weights must be non-empty and of equal length")
    if float(weights.min()) <= 0.0:
        raise ValueError("weights must be strictly positive")
    order = np.argsort(-values, kind="stable")
    v = values[order]
    w = weights[order]
    # last index of each run of equal values
    last = np.flatnonzero(np.diff(v) != 0.0)
    ends = np.concatenate([last, [v.size - 1]])
    cum = np.cumsum(w)
    bounds = np.concatenate([[0.0], cum[ends]])
    return StepFunction(_frozen(bounds), _frozen(v[ends]))


def decreasing_rearrangement(wv: WeightedValues) -> StepFunction:
    """Decreasing rearrangement of a weighted value set (mass 1)."""
    return rearrange_values(wv.values, wv.weights)


def equidistributed(a: WeightedValues, b: WeightedValues, tol: float = 1e-9) -> bool:
    """Whether two weighted sets share their distribution within tol.

    Compares the decreasing rearrangements on the union of their breakpoints;
    level discrepancies above tol on pieces of mass above tol fail.  Pieces
    narrower than tol are slivers from breakpoint misalignment and are ignored.

    Raises:
        MassMismatch: if the total masses differ by more than tol.
    """
    if abs(a.total_mass - b.total_mass) > tol:
        raise MassMismatch(
            f"total masses {a.total_mass!r} and {b.total_mass!r} differ by more than {tol}"
        )
    ra = decreasing_rearrangement(a)
    rb = decreasing_rearrangement(b)
    grid = np.union1d(ra.bounds, rb.bounds)
    lengths = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    gap = np.abs(ra.value(mids) - rb.value(mids))
    bad = (gap > tol) & (lengths > tol)
    return not bool(bad.any())


def step_l1_distance(a: StepFunction, b: StepFunction) -> float:
    """Integral of |a - b| over the common domain (masses assumed comparable)."""
    grid = np.union1d(a.bounds, b.bounds)
    grid = grid[grid <= min(a.total_mass, b.total_mass)]
    lengths = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    return float(np.sum(lengths * np.abs(a.value(mids) - b.value(mids))))


@dataclass(frozen=True, eq=False)
class ThetaMap:
    """Measure-preserving identification of cells with subintervals of (0, M].

    ordering: permutation of cell indices; cell ordering[j] owns the interval
    (interval_bounds[j], interval_bounds[j+1]] whose length is its weight.
    """

    ordering: NDArray[np.intp]
    interval_bounds: NDArray[np.float64]

    def __post_init__(self):
        if self.interval_bounds.size != self.ordering.size + 1:
            raise ValueError("need one more interval bound than cells")
        if self.interval_bounds[0] != 0.0 or not np.all(np.diff(self.interval_bounds) > 0):
            raise ValueError("interval bounds must increase strictly from 0")

    def pullback(self, step: StepFunction) -> WeightedValues:
        """Pull a step function back through interval membership.

        Cells whose interval straddles a breakpoint of the step function are
        split on the common refinement, so the result has exactly the weighted
        distribution of the step function (up to rounding).
        """
        grid = np.union1d(self.interval_bounds, step.bounds)
        grid = grid[(grid >= 0.0) & (grid <= self.interval_bounds[-1])]
        lengths = np.diff(grid)
        mids = 0.5 * (grid[:-1] + grid[1:])
        keep = lengths > 0
        return WeightedValues.from_arrays(step.value(mids[keep]), lengths[keep])


def theta_map(wv: WeightedValues, tie_break=None) -> ThetaMap:
    """Theta map of a weighted set: cells sorted by value descending.

    Ties are broken by tie_break (per-cell sort keys, ascending) or by cell
    index (row-major) when omitted.  Pulling decreasing_rearrangement(wv) back
    through this map reproduces the distribution of wv exactly.
    """
    if tie_break is None:
        order = np.argsort(-wv.values, kind="stable")
    else:
        keys = np.ravel(np.asarray(tie_break))
        if keys.shape != wv.values.shape:
            raise ValueError("tie_break must assign one key per cell")
        order = np.lexsort((keys, -wv.values))
    bounds = np.concatenate([[0.0], np.cumsum(wv.weights[order])])
    order = np.array(order, dtype=np.intp)
    order.setflags(write=False)
    return ThetaMap(order, _frozen(bounds))


def _as_values(x) -> NDArray[np.float64]:
    if isinstance(x, WeightedValues):
        return x.values
    return np.ravel(np.asarray(x, dtype=float))


def similarly_ordered(g, h) -> bool:
    """Whether (g(x) - g(y)) (h(x) - h(y)) >= 0 for all cell pairs x, y.

    Accepts WeightedValues or plain fields on the same cell set.  Sort-based,
    O(k log k): after sorting by g, every h-value in a lower g-group must not
    exceed any h-value in a higher g-group.
    """
    g = _as_values(g)
    h = _as_values(h)
    if g.shape != h.shape:
        raise ValueError("fields must have equal size")
    order = np.argsort(g, kind="stable")
    gs = g[order]
    hs = h[order]
    ends = np.concatenate([np.flatnonzero(np.diff(gs) != 0.0), [gs.size - 1]])
    starts = np.concatenate([[0], ends[:-1] + 1])
    hmax = np.array([hs[a : b + 1].max() for a, b in zip(starts, ends)])
    hmin = np.array([hs[a : b + 1].min() for a, b in zip(starts, ends)])
    return bool(np.all(hmax[:-1] <= hmin[1:]))


def hardy_littlewood_sup(f0: StepFunction, eta: WeightedValues, tol: float = 1e-9) -> float:
    """Largest integral of f eta d mu over f equidistributed with f0.

    Equals the similarly-ordered pairing of the two decreasing rearrangements,
    integrated exactly on the common refinement of their breakpoints.

    Raises:
        MassMismatch: if the masses of f0 and eta differ by more than tol.
    """
    eta_star = decreasing_rearrangement(eta)
    if abs(f0.total_mass - eta_star.total_mass) > tol:
        raise MassMismatch(
            f"masses {f0.total_mass!r} and {eta_star.total_mass!r} differ by more than {tol}"
        )
    grid = np.union1d(f0.bounds, eta_star.bounds)
    grid = grid[grid <= min(f0.total_mass, eta_star.total_mass)]
    lengths = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    return float(np.sum(lengths * f0.value(mids) * eta_star.value(mids)))
