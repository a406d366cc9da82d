"""Fixation-intensity grids, cluster statistics and adaptive thresholding.

Each gaze point contributes a unit-peak Gaussian ``exp(-d**2 / (2 sigma**2))``
to every grid cell whose centre lies within ``3 sigma`` of it; overlapping
kernels add. Clusters are the 8-connected components of the positive
support. The per-image threshold is

    tau = n * mean_i(theta_i) / m

where ``theta_i`` is the mean cell value of cluster ``i`` and ``m`` is the
largest cell value over all clusters. ``tau`` is a fraction of the peak, so
it is applied to the grid after dividing by ``m``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DimensionError, ValidationError
from .session import GazeTrace

__all__ = [
    "TRUNCATION",
    "GridSpec",
    "DensityGrid",
    "Cluster",
    "ThresholdStats",
    "BinaryMask",
    "build_density_grid",
    "extract_clusters",
    "compute_threshold",
    "threshold_to_mask",
    "merge_masks",
    "KDEStage",
    "kde_stage",
    "run_kde_pipeline",
]

# kernel support radius in units of sigma
TRUNCATION = 3.0

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class GridSpec:
    """Binning of a slide into square cells of ``downsample`` slide px."""

    downsample: int
    width_cells: int
    height_cells: int

    def __post_init__(self):
        if int(self.downsample) != self.downsample or self.downsample < 1:
            raise ValidationError(f"downsample must be a positive integer, got {self.downsample!r}")
        if self.width_cells < 1 or self.height_cells < 1:
            raise ValidationError("grid must have at least one cell in each direction")

    @classmethod
    def for_slide(cls, slide_width, slide_height, downsample=16):
        if int(downsample) != downsample or downsample < 1:
            raise ValidationError(f"downsample must be a positive integer, got {downsample!r}")
        downsample = int(downsample)
        return cls(downsample, -(-int(slide_width) // downsample), -(-int(slide_height) // downsample))

    @property
    def shape(self):
        return (self.height_cells, self.width_cells)

    def cell_centers_x(self):
        return (np.arange(self.width_cells) + 0.5) * self.downsample

    def cell_centers_y(self):
        return (np.arange(self.height_cells) + 0.5) * self.downsample


@dataclass(frozen=True, eq=False)
class DensityGrid:
    spec: GridSpec
    values: np.ndarray  # (height_cells, width_cells) float64
    sigma: float

    def max(self):
        return float(self.values.max()) if self.values.size else 0.0

    def scaled(self, k):
        return DensityGrid(self.spec, self.values * k, self.sigma)

    def normalized(self, m=None):
        """Values divided by ``m`` (default: the grid maximum); zero grids stay zero."""
        m = self.max() if m is None else m
        if m <= 0:
            return DensityGrid(self.spec, np.zeros_like(self.values), self.sigma)
        return DensityGrid(self.spec, self.values / m, self.sigma)


@dataclass(frozen=True, eq=False)
class Cluster:
    cell_indices: np.ndarray  # sorted flat (row-major) indices
    b: int
    theta_bar: float

    @property
    def first_cell(self):
        return int(self.cell_indices[0])


@dataclass(frozen=True)
class ThresholdStats:
    theta_bar_global: float
    m: float
    n: float
    tau: float
    c: int


@dataclass(frozen=True, eq=False)
class BinaryMask:
    spec: GridSpec
    bits: np.ndarray  # (height_cells, width_cells) bool

    def __post_init__(self):
        if self.bits.shape != self.spec.shape:
            raise DimensionError(f"mask shape {self.bits.shape} does not match grid {self.spec.shape}")

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.bits, other.bits)

    def __or__(self, other):
        return merge_masks(self, other)

    @classmethod
    def empty(cls, spec):
        return cls(spec, np.zeros(spec.shape, dtype=bool))

    def count(self):
        return int(np.count_nonzero(self.bits))


def _cell_range(lo, hi, downsample, ncells):
    """Indices of cells whose centres fall in ``[lo, hi]``."""
    first = max(0, math.ceil(lo / downsample - 0.5))
    last = min(ncells - 1, math.floor(hi / downsample - 0.5))
    return first, last


def _accumulate(values, row0, row1, xs, ys, sigma, spec):
    """Add every point's kernel into rows ``[row0, row1)`` of ``values`` in point order."""
    ds = spec.downsample
    radius = TRUNCATION * sigma
    r2 = radius * radius
    two_var = 2.0 * sigma * sigma
    for x, y in zip(xs, ys):
        c0, c1 = _cell_range(x - radius, x + radius, ds, spec.width_cells)
        r_lo, r_hi = _cell_range(y - radius, y + radius, ds, spec.height_cells)
        r_lo, r_hi = max(r_lo, row0), min(r_hi, row1 - 1)
        if c0 > c1 or r_lo > r_hi:
            continue
        dx = (np.arange(c0, c1 + 1) + 0.5) * ds - x
        dy = (np.arange(r_lo, r_hi + 1) + 0.5) * ds - y
        d2 = dx[None, :] ** 2 + dy[:, None] ** 2
        contrib = np.exp(-d2 / two_var)
        contrib[d2 > r2] = 0.0
        values[r_lo : r_hi + 1, c0 : c1 + 1] += contrib


def build_density_grid(trace: GazeTrace, sigma: float, spec: GridSpec, workers: int = 1) -> DensityGrid:
    """Sum truncated unit-peak Gaussians centred on the trace points.

    ``workers > 1`` splits the grid into horizontal bands built in parallel.
    Each cell still sums its contributions in trace order, so the result is
    bitwise identical for any worker count.
    """
    if not sigma > 0 or not math.isfinite(sigma):
        raise ValidationError(f"sigma must be a positive finite number, got {sigma!r}")
    values = np.zeros(spec.shape, dtype=np.float64)
    xs = np.asarray(trace.x, dtype=np.float64)
    ys = np.asarray(trace.y, dtype=np.float64)
    if len(xs) == 0:
        return DensityGrid(spec, values, float(sigma))

    workers = max(1, min(int(workers), spec.height_cells))
    if workers == 1:
        _accumulate(values, 0, spec.height_cells, xs, ys, sigma, spec)
    else:
        bounds = np.linspace(0, spec.height_cells, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            jobs = [
                pool.submit(_accumulate, values, lo, hi, xs, ys, sigma, spec)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for job in jobs:
                job.result()
    return DensityGrid(spec, values, float(sigma))


def extract_clusters(grid: DensityGrid) -> list[Cluster]:
    """8-connected components of the positive-density cells.

    Sorted by descending cell count, ties by the smallest row-major index.
    """
    support = grid.values > 0
    labels, count = ndimage.label(support, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sizes = np.bincount(flat, minlength=count + 1)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    vals = grid.values.ravel()

    clusters = []
    for lab in range(1, count + 1):
        cells = order[starts[lab] : starts[lab + 1]]
        clusters.append(Cluster(cells, int(len(cells)), float(vals[cells].mean())))
    clusters.sort(key=lambda c: (-c.b, c.first_cell))
    return clusters


def compute_threshold(clusters: list[Cluster], grid: DensityGrid, n: float) -> ThresholdStats:
    if not n > 0:
        raise ValidationError(f"scaling factor n must be > 0, got {n!r}")
    if not clusters:
        raise ValidationError("no gaze clusters")
    theta_bar = float(np.mean([c.theta_bar for c in clusters]))
    vals = grid.values.ravel()
    m = max(float(vals[c.cell_indices].max()) for c in clusters)
    return ThresholdStats(theta_bar, m, float(n), n * theta_bar / m, len(clusters))


def threshold_to_mask(grid: DensityGrid, tau: float) -> BinaryMask:
    """Cells with positive density at or above ``tau``."""
    if tau < 0:
        raise ValidationError(f"threshold must be >= 0, got {tau!r}")
    v = grid.values
    return BinaryMask(grid.spec, (v >= tau) & (v > 0))


def merge_masks(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    if a.spec != b.spec:
        raise DimensionError(f"cannot merge masks on different grids: {a.spec} vs {b.spec}")
    return BinaryMask(a.spec, a.bits | b.bits)


class KDEStage(NamedTuple):
    grid: DensityGrid
    clusters: list
    stats: ThresholdStats | None
    mask: BinaryMask


def kde_stage(trace, sigma, n, spec, workers=1, grid=None, clusters=None) -> KDEStage:
    """Single-sigma pass: grid, clusters, threshold, mask.

    A precomputed ``grid``/``clusters`` pair may be passed to re-threshold
    at a different ``n`` without rebuilding.
    """
    if grid is None:
        grid = build_density_grid(trace, sigma, spec, workers=workers)
    if clusters is None:
        clusters = extract_clusters(grid)
    if not clusters:
        if not n > 0:
            raise ValidationError(f"scaling factor n must be > 0, got {n!r}")
        return KDEStage(grid, clusters, None, BinaryMask.empty(spec))
    stats = compute_threshold(clusters, grid, n)
    mask = threshold_to_mask(grid.normalized(stats.m), stats.tau)
    return KDEStage(grid, clusters, stats, mask)


def run_kde_pipeline(trace, sigmas, n, spec, workers=1) -> BinaryMask:
    """OR-merge of the single-sigma masks; each sigma gets its own threshold."""
    sigmas = list(sigmas)
    if not sigmas:
        raise ValidationError("at least one sigma is required")
    mask = BinaryMask.empty(spec)
    for sigma in sigmas:
        mask = merge_masks(mask, kde_stage(trace, sigma, n, spec, workers=workers).mask)
    return mask
