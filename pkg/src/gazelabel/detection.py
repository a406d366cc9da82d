"""Box matching and detection metrics (precision/recall, AP, miss rate vs FPPI, LAMR)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .masks import BBox

__all__ = [
    "Detection",
    "MatchResult",
    "EvalReport",
    "DEFAULT_OT_VALUES",
    "LAMR_REFERENCES",
    "box_iou",
    "match_detections",
    "pr_curve_and_ap",
    "miss_rate_fppi_and_lamr",
    "evaluate",
    "ot_sweep",
]

DEFAULT_OT_VALUES = tuple(round(0.10 + 0.05 * k, 2) for k in range(18))  # 0.10 ... 0.95
LAMR_REFERENCES = np.logspace(-2.0, 0.0, 9)
MISS_RATE_FLOOR = 1e-10


@dataclass(frozen=True)
class Detection:
    image_id: str
    bbox: BBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must lie in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Outcome of greedy matching, in descending-confidence order."""

    order: np.ndarray  # indices into the input detection list
    tp: np.ndarray  # bool flag per ranked detection
    confidences: np.ndarray
    matched_gt: np.ndarray  # GT index within its image, -1 for FP
    gt_count: int
    fp_per_image: dict = field(default_factory=dict)

    @property
    def tp_count(self):
        return int(np.count_nonzero(self.tp))

    @property
    def fp_count(self):
        return int(self.tp.size - self.tp_count)

    @property
    def miss_count(self):
        return self.gt_count - self.tp_count


@dataclass(frozen=True, eq=False)
class EvalReport:
    ot: float
    pr_curve: np.ndarray  # rows (confidence, precision, recall)
    ap: float
    mr_fppi_curve: np.ndarray  # rows (confidence, fppi, miss_rate)
    lamr: float
    tp: int
    fp: int
    gt: int

    @property
    def map(self):
        # single-class task: mAP is AP
        return self.ap


def box_iou(a: BBox, b: BBox) -> float:
    inter = a.intersection(b)
    if inter is None:
        return 0.0
    i = inter.area
    return i / (a.area + b.area - i)


def _ranked(dets):
    return sorted(range(len(dets)), key=lambda k: (-dets[k].confidence, dets[k].image_id, k))


def match_detections(dets, gts, ot: float) -> MatchResult:
    """Greedy confidence-ordered matching at overlap threshold ``ot``.

    ``gts`` maps image id to that image's ground-truth boxes. Each detection
    takes the unmatched same-image GT of highest IOU (lowest index on ties);
    it is a TP when that IOU is ``>= ot``.
    """
    if not 0.0 < ot <= 1.0:
        raise ValidationError(f"overlap threshold must lie in (0, 1], got {ot!r}")
    for d in dets:
        if not 0.0 <= d.confidence <= 1.0:
            raise ValidationError(f"confidence must lie in [0, 1], got {d.confidence!r}")

    order = np.array(_ranked(dets), dtype=np.int64)
    taken = {img: np.zeros(len(boxes), dtype=bool) for img, boxes in gts.items()}
    tp = np.zeros(len(order), dtype=bool)
    matched = np.full(len(order), -1, dtype=np.int64)
    fp_per_image = Counter()

    for rank, k in enumerate(order):
        det = dets[k]
        boxes = gts.get(det.image_id, ())
        best, best_iou = -1, -1.0
        for j, gt in enumerate(boxes):
            if taken[det.image_id][j]:
                continue
            iou = box_iou(det.bbox, gt)
            if iou > best_iou:
                best, best_iou = j, iou
        if best >= 0 and best_iou >= ot:
            taken[det.image_id][best] = True
            tp[rank] = True
            matched[rank] = best
        else:
            fp_per_image[det.image_id] += 1

    conf = np.array([dets[k].confidence for k in order], dtype=np.float64)
    gt_count = sum(len(b) for b in gts.values())
    return MatchResult(order, tp, conf, matched, gt_count, dict(fp_per_image))


def pr_curve_and_ap(match: MatchResult):
    """Cumulative precision/recall down the ranked list and all-point AP.

    Returns ``(curve, ap)``; ``curve`` rows are ``(confidence, precision, recall)``.
    """
    if match.gt_count <= 0:
        raise ValidationError("no ground truth")
    if match.tp.size == 0:
        return np.empty((0, 3)), 0.0
    ctp = np.cumsum(match.tp)
    ranks = np.arange(1, match.tp.size + 1)
    precision = ctp / ranks
    recall = ctp / match.gt_count
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.diff(np.concatenate([[0.0], recall]))
    ap = float(np.sum(steps * envelope))
    return np.column_stack([match.confidences, precision, recall]), ap


def miss_rate_fppi_and_lamr(match: MatchResult, image_count: int):
    """Miss rate against false positives per image, and the log-average miss rate.

    One curve point per distinct confidence cutoff; rows are
    ``(confidence, fppi, miss_rate)``. LAMR is the geometric mean of the
    lowest miss rate at FPPI <= each of 9 log-spaced references in
    [1e-2, 1], with 1.0 where no cutoff qualifies.
    """
    if image_count <= 0:
        raise ValidationError("image_count must be > 0")
    if match.gt_count <= 0:
        raise ValidationError("no ground truth")

    conf = match.confidences
    if conf.size:
        ctp = np.cumsum(match.tp)
        cfp = np.cumsum(~match.tp)
        # last index of each run of equal confidences (list is sorted descending)
        ends = np.flatnonzero(np.append(conf[1:] != conf[:-1], True))
        fppi = cfp[ends] / image_count
        miss = 1.0 - ctp[ends] / match.gt_count
        curve = np.column_stack([conf[ends], fppi, miss])
    else:
        fppi = miss = np.empty(0)
        curve = np.empty((0, 3))

    samples = np.ones(LAMR_REFERENCES.size)
    for i, ref in enumerate(LAMR_REFERENCES):
        ok = fppi <= ref
        if ok.any():
            samples[i] = miss[ok].min()
    samples = np.maximum(samples, MISS_RATE_FLOOR)
    lamr = float(np.exp(np.mean(np.log(samples))))
    return curve, lamr


def evaluate(dets, gts, image_count, ot) -> EvalReport:
    match = match_detections(dets, gts, ot)
    pr, ap = pr_curve_and_ap(match)
    mr, lamr = miss_rate_fppi_and_lamr(match, image_count)
    return EvalReport(float(ot), pr, ap, mr, lamr, match.tp_count, match.fp_count, match.gt_count)


def ot_sweep(dets, gts, image_count, ot_values=DEFAULT_OT_VALUES) -> list[EvalReport]:
    ot_values = list(ot_values)
    if not ot_values:
        raise ValidationError("at least one overlap threshold is required")
    return [evaluate(dets, gts, image_count, ot) for ot in ot_values]
