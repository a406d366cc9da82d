"""
From a gaze session to bounding-box labels
==========================================

A synthetic slide with five elliptical regions is "viewed" by a simulated
annotator. The gaze trace is turned into a density grid, thresholded into a
mask, and the mask is cut into tight boxes. The boxes are then compared with
the regions that produced the gaze.
"""

import numpy as np

from gazelabel import formats
from gazelabel.detection import box_iou
from gazelabel.kde import GridSpec, kde_stage
from gazelabel.masks import mask_iou, mask_to_bboxes
from gazelabel.session import SlideGeometry, parse_session, project_trace, serialize_session
from gazelabel.simulate import SimParams, generate_scene, simulate_trace

# A 40000 x 40000 px slide with five regions of radius 200-600 px.
geo = SlideGeometry(40000, 40000)
scene = generate_scene(5, (200, 600), geo, seed=3)
for e in scene.rois:
    print(f"roi at ({e.cx:8.1f}, {e.cy:8.1f})  semi-axes {e.ax:5.1f} x {e.ay:5.1f}")

# The simulator writes a session in the same line-oriented JSON format a
# real tracker export would use. Round-tripping it shows nothing is lost.
session = simulate_trace(scene, SimParams(seed=3, viewport_mode="panzoom"))
text = serialize_session(session)
assert parse_session(text) == session
print(f"\n{len(session.samples)} gaze samples, {len(session.viewport_events)} viewport changes")

# Screen coordinates become slide coordinates using the viewport that was
# active at each sample; samples outside the slide are counted, not kept.
trace = project_trace(session)
print(f"{len(trace)} points in slide space, dropped: {trace.dropped}")

# One kernel size. The threshold adapts to how intense the gaze clusters
# are, so n is the only knob besides sigma.
spec = GridSpec.for_slide(geo.slide_width, geo.slide_height)
stage = kde_stage(trace, sigma=100.0, n=3.0, spec=spec)
s = stage.stats
print(f"\n{len(stage.clusters)} clusters, mean cluster value {s.theta_bar_global:.3f}, peak {s.m:.3f}, tau {s.tau:.4f}")
print(f"mask IOU against ground truth: {mask_iou(stage.mask, scene.gt_mask):.3f}")

# Each connected blob of the mask becomes one box in slide pixels.
boxes = mask_to_bboxes(stage.mask, clip_to=(geo.slide_width, geo.slide_height))
# Pair each true region with its best-overlapping box; leftovers come from
# distractor fixations.
print(f"\n{len(boxes)} boxes for {len(scene.gt_boxes)} regions")
print("ground truth                    best box                        IOU")
for g in sorted(scene.gt_boxes):
    best = max(boxes, key=lambda b: box_iou(b, g))
    print(f"{str(g.as_tuple()):32s}{str(best.as_tuple()):32s}{box_iou(best, g):.2f}")

# The label file uses normalised centre/size columns, one object per line.
print("\n" + formats.labels_to_text(boxes, geo.slide_width, geo.slide_height))
print("density at the brightest cell:", np.round(stage.grid.max(), 3))
