"""
Tiling slide labels and scoring a detector
==========================================

Slide-level boxes are cut into 4000 px training tiles. A fake detector then
returns noisy copies of the tile labels plus a few false alarms, and the
evaluation reports average precision and log-average miss rate across a
sweep of overlap thresholds.
"""

import numpy as np

from gazelabel.detection import Detection, ot_sweep
from gazelabel.masks import BBox
from gazelabel.session import SlideGeometry
from gazelabel.simulate import generate_scene
from gazelabel.tiling import TileSpec, merge_tile_detections, tile_labels

geo = SlideGeometry(16000, 12000)
scene = generate_scene(8, (200, 600), geo, seed=11)
boxes = list(scene.gt_boxes)

# With an overlap at least as large as the biggest box, every object sits
# whole inside some tile.
diameter = max(max(b.width, b.height) for b in boxes)
spec = TileSpec(geo.slide_width, geo.slide_height, tile_size=4000, overlap=diameter)
tiles = tile_labels(boxes, spec)
print(f"{len(tiles)} tiles, stride {spec.stride}px, labels per tile:")
print({t: len(b) for t, b in tiles.items() if b})

# Whole copies map back to the original boxes once duplicates are merged.
whole = tile_labels(boxes, spec, whole_only=True)
merged = merge_tile_detections({t: [Detection(t, b, 1.0) for b in bs] for t, bs in whole.items()}, spec)
print("round trip exact:", sorted(d.bbox for d in merged) == sorted(boxes))

# A noisy detector: jittered true boxes with high scores, random boxes with low ones.
rng = np.random.default_rng(0)
gts = {t: bs for t, bs in tiles.items()}
dets = []
for t, bs in gts.items():
    for b in bs:
        j = rng.integers(-40, 41, size=4)
        jittered = BBox(max(0, b.x_min + j[0]), max(0, b.y_min + j[1]), b.x_max + j[2], b.y_max + j[3])
        if jittered.width > 0 and jittered.height > 0:
            dets.append(Detection(t, jittered, float(rng.uniform(0.5, 1.0))))
    for _ in range(rng.integers(0, 2)):
        x, y = rng.integers(0, 3500, size=2)
        dets.append(Detection(t, BBox(int(x), int(y), int(x) + 300, int(y) + 300), float(rng.uniform(0, 0.6))))

print(f"\n{len(dets)} detections against {sum(len(b) for b in gts.values())} objects in {len(gts)} tiles")
print("   OT      AP    LAMR  TP  FP")
for r in ot_sweep(dets, gts, len(gts)):
    print(f"{r.ot:5.2f}  {r.ap:6.3f}  {r.lamr:6.3f}  {r.tp:2d}  {r.fp:2d}")
