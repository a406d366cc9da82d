"""Fixed-size patch tiling of slide-space labels, and merging back."""

from __future__ import annotations

from dataclasses import dataclass

from .detection import Detection, box_iou
from .errors import ValidationError
from .masks import BBox

__all__ = [
    "TileSpec",
    "tile_origins",
    "tile_layout",
    "tile_labels",
    "merge_tile_detections",
    "MIN_VISIBLE_FRACTION",
    "DUPLICATE_IOU",
]

MIN_VISIBLE_FRACTION = 0.25
DUPLICATE_IOU = 0.5


@dataclass(frozen=True)
class TileSpec:
    slide_width: int
    slide_height: int
    tile_size: int = 4000
    overlap: int = 0

    def __post_init__(self):
        if not self.tile_size > self.overlap >= 0:
            raise ValidationError(f"need tile_size > overlap >= 0, got {self.tile_size}, {self.overlap}")
        if self.slide_width <= 0 or self.slide_height <= 0:
            raise ValidationError("slide dimensions must be > 0")

    @property
    def stride(self):
        return self.tile_size - self.overlap


def tile_origins(length, tile_size, stride):
    """Tile start offsets along one axis; the last tile is pulled back inside the slide."""
    if length <= tile_size:
        return [0]
    origins = list(range(0, length - tile_size, stride))
    origins.append(length - tile_size)
    return origins


def tile_layout(spec: TileSpec) -> dict:
    """``tile_id -> (origin_x, origin_y)`` for ids ``r{row}_c{col}``."""
    xs = tile_origins(spec.slide_width, spec.tile_size, spec.stride)
    ys = tile_origins(spec.slide_height, spec.tile_size, spec.stride)
    return {f"r{r}_c{c}": (x, y) for r, y in enumerate(ys) for c, x in enumerate(xs)}


def tile_labels(boxes, spec: TileSpec, require_label=False, whole_only=False) -> dict:
    """Assign boxes to every tile they intersect, in tile-local coordinates.

    A clipped piece is kept when it is the whole box or covers at least
    ``MIN_VISIBLE_FRACTION`` of the box area; ``whole_only=True`` keeps
    only boxes the tile contains entirely. ``require_label=True`` drops
    tiles that end up with no labels (dataset curation, not geometry).
    """
    W, H = spec.slide_width, spec.slide_height
    for b in boxes:
        if b.x_min < 0 or b.y_min < 0 or b.x_max > W or b.y_max > H:
            raise ValidationError(f"box {b.as_tuple()} lies outside the slide")

    out = {}
    T = spec.tile_size
    for tile_id, (ox, oy) in tile_layout(spec).items():
        frame = BBox(ox, oy, ox + T, oy + T)
        local = []
        for b in boxes:
            piece = b.intersection(frame)
            if piece is None:
                continue
            if piece == b or (not whole_only and piece.area >= MIN_VISIBLE_FRACTION * b.area):
                local.append(piece.shifted(-ox, -oy))
        if local or not require_label:
            out[tile_id] = local
    return out


def merge_tile_detections(per_tile: dict, spec: TileSpec, iou_threshold=DUPLICATE_IOU) -> list[Detection]:
    """Shift tile-local detections to slide space and drop duplicates.

    Detections are visited by descending confidence (then slide box, then
    tile id); one is suppressed when it overlaps an already kept detection
    at ``box_iou >= iou_threshold``. ``image_id`` of the results is the
    slide-space source tile id of the kept detection.
    """
    layout = tile_layout(spec)
    shifted = []
    for tile_id in sorted(per_tile):
        if tile_id not in layout:
            raise ValidationError(f"unknown tile id {tile_id!r}")
        ox, oy = layout[tile_id]
        for d in per_tile[tile_id]:
            shifted.append(Detection(tile_id, d.bbox.shifted(ox, oy), d.confidence))
    shifted.sort(key=lambda d: (-d.confidence, d.bbox.as_tuple(), d.image_id))

    kept = []
    for d in shifted:
        if all(box_iou(d.bbox, k.bbox) < iou_threshold for k in kept):
            kept.append(d)
    return kept
