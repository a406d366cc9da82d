"""Synthetic ROI scenes and gaze sessions recorded over them.

Everything random is drawn from one ``numpy.random.Generator`` (PCG64)
seeded by the caller, so a seed fully determines a scene or a session.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import PlacementError, ValidationError
from .kde import BinaryMask, GridSpec
from .masks import BBox
from .session import GazeSample, GazeSession, SlideGeometry, ViewportEvent

__all__ = [
    "Ellipse",
    "GTScene",
    "SimParams",
    "generate_scene",
    "render_mask",
    "simulate_trace",
    "scene_to_dict",
    "scene_from_dict",
]


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse in slide px."""

    cx: float
    cy: float
    ax: float  # semi-axis along x
    ay: float  # semi-axis along y

    @property
    def radius(self):
        """Geometric-mean radius; sets the fixation scatter scale."""
        return math.sqrt(self.ax * self.ay)

    def bbox(self):
        return BBox(
            math.floor(self.cx - self.ax),
            math.floor(self.cy - self.ay),
            math.ceil(self.cx + self.ax),
            math.ceil(self.cy + self.ay),
        )

    def contains(self, x, y):
        return ((x - self.cx) / self.ax) ** 2 + ((y - self.cy) / self.ay) ** 2 <= 1.0


@dataclass(frozen=True, eq=False)
class GTScene:
    geometry: SlideGeometry
    rois: tuple[Ellipse, ...]
    gt_mask: BinaryMask
    gt_boxes: tuple[BBox, ...]
    seed: int | None = None


@dataclass(frozen=True)
class SimParams:
    sample_rate_hz: float = 60.0
    dwell_range_s: tuple[float, float] = (1.0, 2.0)
    fixation_jitter: float = 0.35
    saccade_samples_per_transition: int = 5
    distractor_fixations: int = 2
    distractor_dwell_s: float = 0.5
    seed: int = 0
    # "identity": one identity viewport at t=0; "panzoom": re-centre and zoom at every stop
    viewport_mode: str = "identity"

    def __post_init__(self):
        lo, hi = self.dwell_range_s
        if not self.sample_rate_hz > 0:
            raise ValidationError("sample_rate_hz must be > 0")
        if not 0 < lo <= hi:
            raise ValidationError("dwell_range_s must satisfy 0 < min <= max")
        if self.fixation_jitter < 0:
            raise ValidationError("fixation_jitter must be >= 0")
        if self.saccade_samples_per_transition < 0 or self.distractor_fixations < 0:
            raise ValidationError("sample counts must be >= 0")
        if self.distractor_dwell_s < 0:
            raise ValidationError("distractor_dwell_s must be >= 0")
        if self.viewport_mode not in ("identity", "panzoom"):
            raise ValidationError(f"unknown viewport_mode {self.viewport_mode!r}")


def render_mask(rois, spec: GridSpec) -> BinaryMask:
    """Cells whose centre lies inside any ellipse."""
    bits = np.zeros(spec.shape, dtype=bool)
    ds = spec.downsample
    for e in rois:
        c0 = max(0, math.floor((e.cx - e.ax) / ds))
        c1 = min(spec.width_cells, math.ceil((e.cx + e.ax) / ds) + 1)
        r0 = max(0, math.floor((e.cy - e.ay) / ds))
        r1 = min(spec.height_cells, math.ceil((e.cy + e.ay) / ds) + 1)
        xs = (np.arange(c0, c1) + 0.5) * ds
        ys = (np.arange(r0, r1) + 0.5) * ds
        bits[r0:r1, c0:c1] |= e.contains(xs[None, :], ys[:, None])
    return BinaryMask(spec, bits)


def _boxes_disjoint(a: BBox, b: BBox, gap):
    return (
        a.x_max + gap <= b.x_min
        or b.x_max + gap <= a.x_min
        or a.y_max + gap <= b.y_min
        or b.y_max + gap <= a.y_min
    )


def generate_scene(
    roi_count,
    radius_range,
    geometry: SlideGeometry,
    seed,
    downsample=16,
    max_attempts=10_000,
    gap=0,
    aspect_range=(0.75, 1.25),
) -> GTScene:
    """Rejection-sample ``roi_count`` non-overlapping ellipses inside the slide.

    The x semi-axis is uniform in ``radius_range``; the y semi-axis is that
    times a factor from ``aspect_range``, clipped back into ``radius_range``.
    Bounding boxes of accepted ellipses are at least ``gap`` px apart.
    """
    if roi_count < 0:
        raise ValidationError("roi_count must be >= 0")
    r_lo, r_hi = radius_range
    if not 0 < r_lo <= r_hi:
        raise ValidationError("radius_range must satisfy 0 < min <= max")
    rng = _rng(seed)
    W, H = geometry.slide_width, geometry.slide_height
    if 2 * r_hi >= min(W, H):
        raise PlacementError("ROIs do not fit inside the slide")

    rois, boxes = [], []
    attempts = 0
    while len(rois) < roi_count:
        attempts += 1
        if attempts > max_attempts:
            raise PlacementError(f"placed {len(rois)} of {roi_count} ROIs after {max_attempts} attempts")
        ax = rng.uniform(r_lo, r_hi)
        ay = float(np.clip(ax * rng.uniform(*aspect_range), r_lo, r_hi))
        cx = rng.uniform(ax, W - ax)
        cy = rng.uniform(ay, H - ay)
        e = Ellipse(float(cx), float(cy), float(ax), float(ay))
        box = e.bbox()
        if box.x_min < 0 or box.y_min < 0 or box.x_max > W or box.y_max > H:
            continue
        if all(_boxes_disjoint(box, other, gap) for other in boxes):
            rois.append(e)
            boxes.append(box)

    spec = GridSpec.for_slide(W, H, downsample)
    return GTScene(geometry, tuple(rois), render_mask(rois, spec), tuple(boxes), seed)


def simulate_trace(scene: GTScene, params: SimParams = SimParams()) -> GazeSession:
    """Record a synthetic reader visiting every ROI once.

    The reader fixates each ROI (random order) for a dwell drawn from
    ``dwell_range_s``, scattering isotropic Gaussian samples of std
    ``fixation_jitter * radius`` about the centroid. Distractor bursts at
    uniform random slide locations are spliced between stops. Consecutive
    stops are joined by evenly spaced saccade samples on the straight line.
    """
    rng = _rng(params.seed)
    geo = scene.geometry
    rois = list(scene.rois)

    stops = []  # (cx, cy, sample count, scatter std)
    for k in rng.permutation(len(rois)):
        e = rois[k]
        dwell = rng.uniform(*params.dwell_range_s)
        stops.append((e.cx, e.cy, int(round(dwell * params.sample_rate_hz)), params.fixation_jitter * e.radius))

    if rois:
        typical_radius = float(np.mean([e.radius for e in rois]))
    else:
        typical_radius = 0.01 * min(geo.slide_width, geo.slide_height)
    n_distractor = int(round(params.distractor_dwell_s * params.sample_rate_hz))
    for _ in range(params.distractor_fixations):
        x = rng.uniform(0, geo.slide_width)
        y = rng.uniform(0, geo.slide_height)
        slot = int(rng.integers(0, len(stops) + 1))
        stops.insert(slot, (x, y, n_distractor, params.fixation_jitter * typical_radius))

    xs, ys = [], []
    s = params.saccade_samples_per_transition
    prev = None
    for cx, cy, count, std in stops:
        if prev is not None and s:
            frac = np.arange(1, s + 1) / (s + 1)
            xs.append(prev[0] + (cx - prev[0]) * frac)
            ys.append(prev[1] + (cy - prev[1]) * frac)
        scatter = rng.normal(0.0, 1.0, size=(count, 2)) * std
        xs.append(cx + scatter[:, 0])
        ys.append(cy + scatter[:, 1])
        prev = (cx, cy)

    x = np.concatenate(xs) if xs else np.empty(0)
    y = np.concatenate(ys) if ys else np.empty(0)
    t = np.arange(len(x)) * (1000.0 / params.sample_rate_hz)

    if params.viewport_mode == "identity":
        events = [ViewportEvent(0.0, 0.0, 0.0, 1.0)]
        samples = [GazeSample(float(ti), float(xi), float(yi), True) for ti, xi, yi in zip(t, x, y)]
    else:
        events, samples = _panzoom_samples(stops, x, y, t, s, geo, rng)
    return GazeSession(geo, tuple(samples), tuple(events))


def _panzoom_samples(stops, x, y, t, saccade_count, geo, rng):
    """Express slide-space samples in screen px under a viewport that
    re-centres (and picks a new power-of-two scale) at the start of each stop."""
    events, samples = [], []
    i = 0
    for k, (cx, cy, count, _) in enumerate(stops):
        n = count + (saccade_count if k > 0 else 0)
        scale = float(2 ** int(rng.integers(0, 4)))
        vp = ViewportEvent(
            float(t[i]) if n else 0.0,
            cx - scale * geo.screen_width / 2,
            cy - scale * geo.screen_height / 2,
            scale,
        )
        if n:
            events.append(vp)
        for j in range(i, i + n):
            samples.append(
                GazeSample(float(t[j]), (x[j] - vp.offset_x) / scale, (y[j] - vp.offset_y) / scale, True)
            )
        i += n
    if not events:
        events.append(ViewportEvent(0.0, 0.0, 0.0, 1.0))
    return events, samples


def scene_to_dict(scene: GTScene) -> dict:
    spec = scene.gt_mask.spec
    return {
        "geometry": asdict(scene.geometry),
        "downsample": spec.downsample,
        "seed": scene.seed,
        "rois": [asdict(e) for e in scene.rois],
        "gt_boxes": [list(b.as_tuple()) for b in scene.gt_boxes],
    }


def scene_from_dict(d: dict) -> GTScene:
    geo = SlideGeometry(**d["geometry"])
    rois = tuple(Ellipse(**e) for e in d["rois"])
    spec = GridSpec.for_slide(geo.slide_width, geo.slide_height, d["downsample"])
    boxes = tuple(BBox(*b) for b in d["gt_boxes"])
    return GTScene(geo, rois, render_mask(rois, spec), boxes, d.get("seed"))
