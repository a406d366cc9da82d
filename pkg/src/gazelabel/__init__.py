"""Gaze-derived ROI labels for whole-slide images.

Gaze sessions are projected into slide space, smoothed into a
fixation-intensity grid, thresholded into ROI masks, converted to boxes,
and scored against reference masks and boxes.
"""

from .detection import Detection, EvalReport, box_iou, match_detections, miss_rate_fppi_and_lamr, ot_sweep, pr_curve_and_ap
from .errors import DimensionError, FormatError, GazeLabelError, ParseError, PlacementError, ValidationError
from .kde import (
    BinaryMask,
    Cluster,
    DensityGrid,
    GridSpec,
    ThresholdStats,
    build_density_grid,
    compute_threshold,
    extract_clusters,
    merge_masks,
    run_kde_pipeline,
    threshold_to_mask,
)
from .masks import BBox, MIOUSummary, connected_components, mask_iou, mask_to_bboxes, masks_miou
from .session import (
    GazeSample,
    GazeSession,
    GazeTrace,
    SlideGeometry,
    ViewportEvent,
    parse_session,
    project_trace,
    screen_to_slide,
    serialize_session,
)
from .simulate import GTScene, SimParams, generate_scene, simulate_trace
from .sweep import SweepResult, param_sweep
from .tiling import TileSpec, merge_tile_detections, tile_labels
from .timing import TimingRecord, timing_report

__version__ = "0.1.0"
