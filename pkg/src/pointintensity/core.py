"""Observations, bin grids and piecewise-constant intensities.

Bins are left-closed/right-open except the last one, which is closed, so an
event exactly at the horizon ``T`` is counted in bin ``N``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError

# 10-point Gauss-Legendre rule on [-1, 1]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _as_times(times):
    arr = np.array(times, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventSeries:
    """``n`` independent realisations of a point process observed on ``[0, T]``."""

    horizon: float
    replicates: tuple

    def __init__(self, horizon, replicates):
        horizon = float(horizon)
        if not horizon > 0 or not math.isfinite(horizon):
            raise ConfigurationError(f"horizon T must be positive and finite, got {horizon}")
        reps = tuple(_as_times(r) for r in replicates)
        if len(reps) == 0:
            raise ConfigurationError("an EventSeries needs at least one replicate")
        for j, r in enumerate(reps):
            bad = ~((r >= 0.0) & (r <= horizon))
            if bad.any():
                t = r[np.argmax(bad)]
                raise DataError(
                    f"replicate {j + 1}: event time {t!r} lies outside [0, {horizon}]"
                )
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "replicates", reps)

    @classmethod
    def empty(cls, horizon, n=1):
        return cls(horizon, [[] for _ in range(n)])

    @property
    def n(self):
        return len(self.replicates)

    def total_events(self):
        return int(sum(r.size for r in self.replicates))

    def all_times(self):
        if not self.replicates:
            return np.empty(0)
        return np.concatenate(self.replicates)

    def __eq__(self, other):
        if not isinstance(other, EventSeries):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.n == other.n
            and all(np.array_equal(a, b) for a, b in zip(self.replicates, other.replicates))
        )

    def __repr__(self):
        return f"EventSeries(T={self.horizon}, n={self.n}, events={self.total_events()})"


@dataclass(frozen=True, eq=False)
class BinGrid:
    """Strictly increasing edges ``0 = b_0 < ... < b_N = T``."""

    edges: np.ndarray

    def __init__(self, edges):
        e = np.array(edges, dtype=float).ravel()
        if e.size < 2:
            raise ConfigurationError("a grid needs at least two edges")
        if e[0] != 0.0:
            raise ConfigurationError(f"first edge must be 0, got {e[0]}")
        if not np.all(np.diff(e) > 0):
            raise ConfigurationError("grid edges must be strictly increasing")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, horizon, n_bins):
        n_bins = int(n_bins)
        if n_bins < 1:
            raise ConfigurationError(f"number of bins must be >= 1, got {n_bins}")
        edges = np.linspace(0.0, float(horizon), n_bins + 1)
        edges[-1] = float(horizon)
        return cls(edges)

    @property
    def N(self):
        return self.edges.size - 1

    @property
    def horizon(self):
        return float(self.edges[-1])

    @property
    def widths(self):
        return np.diff(self.edges)

    def locate(self, x):
        """Index (0-based) of the bin containing each point of ``x``."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(idx, 0, self.N - 1)

    def __eq__(self, other):
        if not isinstance(other, BinGrid):
            return NotImplemented
        return np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash(self.edges.tobytes())

    def __repr__(self):
        return f"BinGrid(N={self.N}, T={self.horizon})"


@dataclass(frozen=True, eq=False)
class BinnedCounts:
    """Per-bin event counts ``H_k`` pooled over the ``n`` replicates.

    ``n = 0`` (all counts zero) stands for no observation at all, which turns
    every posterior computation into its prior counterpart.
    """

    grid: BinGrid
    counts: np.ndarray
    n: int

    def __init__(self, grid, counts, n):
        c = np.array(counts, dtype=np.int64).ravel()
        if c.size != grid.N:
            raise ConfigurationError(f"{c.size} counts for a grid with {grid.N} bins")
        if np.any(c < 0):
            raise DataError("bin counts must be nonnegative")
        if int(n) < 0 or (int(n) == 0 and np.any(c)):
            raise ConfigurationError(f"replicate count must be >= 1 (or 0 without events), got {n}")
        c.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "n", int(n))

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def exposure(self):
        """``n * Delta_k`` for every bin."""
        return self.n * self.grid.widths

    def __eq__(self, other):
        if not isinstance(other, BinnedCounts):
            return NotImplemented
        return self.grid == other.grid and self.n == other.n and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class PiecewiseIntensity:
    """Step function ``sum_k psi_k 1{B_k}``."""

    grid: BinGrid
    heights: np.ndarray

    def __init__(self, grid, heights):
        h = np.array(heights, dtype=float).ravel()
        if h.size != grid.N:
            raise ConfigurationError(f"{h.size} heights for a grid with {grid.N} bins")
        if np.any(h < 0) or np.any(np.isnan(h)):
            raise DataError("intensity heights must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "heights", h)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = self.heights[self.grid.locate(x)]
        outside = (x < 0) | (x > self.grid.horizon)
        if np.any(outside):
            out = np.where(outside, 0.0, out)
        return out

    def integral(self):
        return float(np.dot(self.heights, self.grid.widths))

    def __eq__(self, other):
        if not isinstance(other, PiecewiseIntensity):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.heights, other.heights)


def bin_events(data: EventSeries, grid: BinGrid) -> BinnedCounts:
    if not math.isclose(data.horizon, grid.horizon, rel_tol=1e-12, abs_tol=0.0):
        raise ConfigurationError(
            f"data horizon {data.horizon} does not match grid horizon {grid.horizon}"
        )
    times = data.all_times()
    counts = np.bincount(grid.locate(times), minlength=grid.N)
    return BinnedCounts(grid, counts, data.n)


def log_likelihood(counts: BinnedCounts, intensity: PiecewiseIntensity) -> float:
    """Poisson process log-likelihood of a step intensity, up to the data-only constant.

    Returns ``sum_k H_k log(psi_k) - n Delta_k psi_k``; ``-inf`` if some bin with
    events has zero height.
    """
    if counts.grid != intensity.grid:
        raise ConfigurationError("counts and intensity are defined on different grids")
    H = counts.counts
    psi = intensity.heights
    if np.any((psi == 0) & (H > 0)):
        return -math.inf
    pos = H > 0
    ll = np.sum(H[pos] * np.log(psi[pos]))
    return float(ll - np.dot(counts.exposure, psi))


def _refined_edges(a_edges, b_edges):
    return np.union1d(a_edges, b_edges)


def l2_distance(a: PiecewiseIntensity, b, min_panels=200) -> float:
    """L2 distance on ``[0, T]`` between a step function and ``b``.

    ``b`` may be another :class:`PiecewiseIntensity` (exact, via the common
    refinement of both grids) or any vectorised callable, integrated with a
    10-point Gauss-Legendre rule on every bin of ``a``. Wide bins are split
    into panels so the whole interval has at least ``min_panels`` of them.
    """
    T = a.grid.horizon
    if isinstance(b, PiecewiseIntensity):
        if not math.isclose(b.grid.horizon, T, rel_tol=1e-12):
            raise ConfigurationError("step functions live on different horizons")
        edges = _refined_edges(a.grid.edges, b.grid.edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        diff = a.evaluate(mids) - b.evaluate(mids)
        return float(math.sqrt(np.dot(diff * diff, np.diff(edges))))

    target = T / max(int(min_panels), 1)
    lo_parts, hi_parts, h_parts = [], [], []
    for lo, hi, h in zip(a.grid.edges[:-1], a.grid.edges[1:], a.heights):
        m = max(1, math.ceil((hi - lo) / target - 1e-9))
        sub = np.linspace(lo, hi, m + 1)
        lo_parts.append(sub[:-1])
        hi_parts.append(sub[1:])
        h_parts.append(np.full(m, h))
    lo = np.concatenate(lo_parts)
    hi = np.concatenate(hi_parts)
    h = np.concatenate(h_parts)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(b(x), dtype=float)
    sq = (h[:, None] - vals) ** 2
    return float(math.sqrt(np.sum(half * (sq @ _GL_WEIGHTS))))


def fold_periodic(data: EventSeries, period: float) -> EventSeries:
    """Fold a series onto one period; every period of every replicate becomes a replicate.

    An event falling exactly on the horizon of its replicate, when the horizon
    is a whole number of periods, is kept at time ``period`` of the last
    period rather than starting a new one.
    """
    period = float(period)
    if not period > 0:
        raise ConfigurationError(f"period must be positive, got {period}")
    n_per = max(1, math.ceil(data.horizon / period - 1e-12))
    out = []
    for times in data.replicates:
        idx = np.floor(times / period).astype(np.int64)
        folded = times - idx * period
        last = idx >= n_per
        idx[last] = n_per - 1
        folded[last] = times[last] - (n_per - 1) * period
        folded = np.clip(folded, 0.0, period)
        for p in range(n_per):
            out.append(folded[idx == p])
    return EventSeries(period, out)
