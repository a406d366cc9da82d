"""Mask geometry: components, tight boxes and mask overlap scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DimensionError, ValidationError
from .kde import BinaryMask

logger = logging.getLogger(__name__)

__all__ = [
    "BBox",
    "MaskPairScore",
    "MIOUSummary",
    "connected_components",
    "mask_to_bboxes",
    "mask_iou",
    "masks_miou",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned integer box, half-open: ``[x_min, x_max) x [y_min, y_max)``."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValidationError(f"degenerate box {self!r}")

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return self.width * self.height

    def shifted(self, dx, dy):
        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def intersection(self, other):
        """Overlapping box, or ``None`` when the boxes do not overlap."""
        x0, y0 = max(self.x_min, other.x_min), max(self.y_min, other.y_min)
        x1, y1 = min(self.x_max, other.x_max), min(self.y_max, other.y_max)
        if x1 <= x0 or y1 <= y0:
            return None
        return BBox(x0, y0, x1, y1)

    def as_tuple(self):
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class MaskPairScore:
    iou: float
    hand_id: str = ""
    gaze_id: str = ""


@dataclass(frozen=True)
class MIOUSummary:
    mean: float
    std_dev: float
    count: int
    ious: tuple = field(default=(), compare=False, repr=False)


def connected_components(mask: BinaryMask) -> list[np.ndarray]:
    """8-connected components of set cells as sorted flat-index arrays.

    Ordered by descending size, then by the smallest row-major index.
    """
    labels, count = ndimage.label(mask.bits, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    starts = np.concatenate([[0], np.cumsum(np.bincount(flat, minlength=count + 1))])
    comps = [order[starts[k] : starts[k + 1]] for k in range(1, count + 1)]
    comps.sort(key=lambda c: (-len(c), int(c[0])))
    return comps


def mask_to_bboxes(mask: BinaryMask, min_area_px=None, clip_to=None, with_discarded=False):
    """One tight slide-px box per component of ``mask``.

    Boxes smaller than ``min_area_px`` (default: one grid cell) are dropped.
    ``clip_to=(width, height)`` trims boxes to the slide, since edge cells
    may extend past it.
    """
    ds = mask.spec.downsample
    if min_area_px is None:
        min_area_px = ds * ds
    width = mask.spec.width_cells
    boxes, discarded = [], 0
    for comp in connected_components(mask):
        rows, cols = np.divmod(comp, width)
        x0, x1 = int(cols.min()) * ds, (int(cols.max()) + 1) * ds
        y0, y1 = int(rows.min()) * ds, (int(rows.max()) + 1) * ds
        if clip_to is not None:
            x1, y1 = min(x1, int(clip_to[0])), min(y1, int(clip_to[1]))
            if x1 <= x0 or y1 <= y0:
                discarded += 1
                continue
        if (x1 - x0) * (y1 - y0) < min_area_px:
            discarded += 1
            continue
        boxes.append(BBox(x0, y0, x1, y1))
    if discarded:
        logger.info("discarded %d boxes below %s px", discarded, min_area_px)
    return (boxes, discarded) if with_discarded else boxes


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """|a & b| / |a | b|; 1.0 when both are empty."""
    if a.spec != b.spec:
        raise DimensionError(f"masks are on different grids: {a.spec} vs {b.spec}")
    union = np.count_nonzero(a.bits | b.bits)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.bits & b.bits) / union


def masks_miou(pairs) -> MIOUSummary:
    """Mean and population standard deviation of IOU over (hand, gaze) pairs."""
    ious = np.array([mask_iou(h, g) for h, g in pairs], dtype=np.float64)
    if ious.size == 0:
        raise ValidationError("mIOU needs at least one mask pair")
    return MIOUSummary(float(ious.mean()), float(ious.std()), int(ious.size), tuple(ious.tolist()))
