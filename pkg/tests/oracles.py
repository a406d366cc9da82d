"""Slow, obviously-correct reference implementations used only by the tests."""

import math
from collections import deque

import numpy as np


def brute_density(points, sigma, width_cells, height_cells, downsample):
    """Every point against every cell, truncated at 3 sigma, points summed in order."""
    cx = (np.arange(width_cells) + 0.5) * downsample
    cy = (np.arange(height_cells) + 0.5) * downsample
    out = np.zeros((height_cells, width_cells))
    for x, y in points:
        d2 = (cx[None, :] - x) ** 2 + (cy[:, None] - y) ** 2
        out += np.where(d2 <= 9 * sigma * sigma, np.exp(-d2 / (2 * sigma * sigma)), 0.0)
    return out


def flood_components(bits):
    """8-connected components by BFS, as sets of (row, col)."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    comps = []
    for r in range(h):
        for c in range(w):
            if not bits[r, c] or seen[r, c]:
                continue
            comp, queue = set(), deque([(r, c)])
            seen[r, c] = True
            while queue:
                i, j = queue.popleft()
                comp.add((i, j))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        a, b = i + di, j + dj
                        if 0 <= a < h and 0 <= b < w and bits[a, b] and not seen[a, b]:
                            seen[a, b] = True
                            queue.append((a, b))
            comps.append(comp)
    return comps


def naive_iou(a, b):
    inter = union = 0
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
        inter += x and y
        union += x or y
    return 1.0 if union == 0 else inter / union


def naive_box_iou(a, b):
    """Pixel-set IOU for small integer boxes given as (x0, y0, x1, y1)."""
    pa = {(x, y) for x in range(a[0], a[2]) for y in range(a[1], a[3])}
    pb = {(x, y) for x in range(b[0], b[2]) for y in range(b[1], b[3])}
    return len(pa & pb) / len(pa | pb)


def greedy_reference(dets, gts, ot):
    """Plain-loop greedy matcher; ``dets`` are (image, box, conf) tuples."""
    order = sorted(range(len(dets)), key=lambda k: (-dets[k][2], dets[k][0], k))
    used = {img: [False] * len(b) for img, b in gts.items()}
    flags = []
    for k in order:
        img, box, _ = dets[k]
        best, best_iou = None, -1.0
        for j, g in enumerate(gts.get(img, [])):
            if used[img][j]:
                continue
            iou = naive_box_iou(box, g)
            if iou > best_iou:
                best, best_iou = j, iou
        if best is not None and best_iou >= ot:
            used[img][best] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def cumulative_ap(flags, gt_count):
    """All-point AP from TP/FP flags with explicit loops."""
    tp = 0
    precision, recall = [], []
    for i, f in enumerate(flags, start=1):
        tp += f
        precision.append(tp / i)
        recall.append(tp / gt_count)
    ap, prev_r = 0.0, 0.0
    for i in range(len(flags)):
        ap += (recall[i] - prev_r) * max(precision[i:])
        prev_r = recall[i]
    return ap


def reference_lamr(flags, confidences, gt_count, image_count):
    refs = [10 ** (-2 + 0.25 * k) for k in range(9)]
    points = []
    for c in sorted(set(confidences), reverse=True):
        tp = sum(f for f, cc in zip(flags, confidences) if cc >= c)
        fp = sum(not f for f, cc in zip(flags, confidences) if cc >= c)
        points.append((fp / image_count, 1 - tp / gt_count))
    logs = []
    for ref in refs:
        ok = [mr for fppi, mr in points if fppi <= ref]
        logs.append(math.log(max(min(ok) if ok else 1.0, 1e-10)))
    return math.exp(sum(logs) / len(logs))
