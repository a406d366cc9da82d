"""Readers and writers for label, mask and evaluation files.

Label text (one object per line, coordinates normalised to the image)::

    class_id cx cy w h [confidence]

Masks are binary PGM (P5, 255 = set) at grid resolution with a JSON sidecar
holding the grid layout; a run-length JSON form is also supported::

    {"dims": [W, H], "runs": [[start, length], ...]}
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .detection import Detection
from .errors import FormatError, ParseError, ValidationError
from .kde import BinaryMask, GridSpec
from .masks import BBox

__all__ = [
    "KP_CLASS_ID",
    "format_label_line",
    "labels_to_text",
    "parse_labels",
    "write_labels",
    "read_labels",
    "mask_to_pgm",
    "mask_from_pgm",
    "write_mask",
    "read_mask",
    "mask_to_rle",
    "mask_from_rle",
    "eval_table_csv",
    "curve_csv",
    "eval_summary",
]

KP_CLASS_ID = 0


def _check_image_size(width, height):
    if width <= 0 or height <= 0:
        raise ValidationError("image dimensions must be > 0")


def format_label_line(box: BBox, width, height, confidence=None, class_id=KP_CLASS_ID) -> str:
    _check_image_size(width, height)
    cx = (box.x_min + box.x_max) / 2 / width
    cy = (box.y_min + box.y_max) / 2 / height
    fields = [str(class_id), f"{cx:.6f}", f"{cy:.6f}", f"{box.width / width:.6f}", f"{box.height / height:.6f}"]
    if confidence is not None:
        fields.append(f"{confidence:.6f}")
    return " ".join(fields)


def labels_to_text(items, width, height) -> str:
    """Boxes or :class:`Detection` objects as label text (empty string for none)."""
    lines = []
    for item in items:
        if isinstance(item, Detection):
            lines.append(format_label_line(item.bbox, width, height, item.confidence))
        else:
            lines.append(format_label_line(item, width, height))
    return "".join(line + "\n" for line in lines)


def parse_labels(text, width, height, image_id=""):
    """Parse label text into boxes, or detections when a confidence column is present."""
    _check_image_size(width, height)
    out = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) not in (5, 6):
            raise ParseError(f"expected 5 or 6 fields, got {len(parts)}", line_number)
        try:
            int(parts[0])
            cx, cy, w, h = (float(p) for p in parts[1:5])
            conf = float(parts[5]) if len(parts) == 6 else None
        except ValueError as exc:
            raise ParseError(str(exc), line_number) from None
        box = BBox(
            round((cx - w / 2) * width),
            round((cy - h / 2) * height),
            round((cx + w / 2) * width),
            round((cy + h / 2) * height),
        )
        out.append(box if conf is None else Detection(image_id, box, conf))
    return out


def write_labels(path, items, width, height) -> Path:
    path = Path(path)
    try:
        path.write_text(labels_to_text(items, width, height), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write labels to {path}: {exc.strerror}") from exc
    return path


def read_labels(path, width, height, image_id=None):
    path = Path(path)
    return parse_labels(path.read_text(encoding="utf-8"), width, height, image_id or path.stem)


def mask_to_pgm(mask: BinaryMask) -> bytes:
    h, w = mask.bits.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + (mask.bits.astype(np.uint8) * 255).tobytes()


def mask_from_pgm(data: bytes, spec: GridSpec) -> BinaryMask:
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        if end == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise FormatError("not a binary PGM (P5) file")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval}")
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise FormatError("PGM pixel data truncated")
    if (h, w) != spec.shape:
        raise FormatError(f"PGM is {w}x{h} but sidecar grid is {spec.width_cells}x{spec.height_cells}")
    return BinaryMask(spec, pixels.reshape(h, w) > 0)


def _sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_mask(path, mask: BinaryMask, slide_size=None) -> Path:
    """Write ``<path>.pgm`` plus a ``.json`` sidecar with the grid layout."""
    path = Path(path)
    spec = mask.spec
    sidecar = {
        "downsample": spec.downsample,
        "width_cells": spec.width_cells,
        "height_cells": spec.height_cells,
    }
    if slide_size is not None:
        sidecar["slide_width"], sidecar["slide_height"] = int(slide_size[0]), int(slide_size[1])
    path.write_bytes(mask_to_pgm(mask))
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_mask(path):
    """Return ``(mask, sidecar_dict)`` for a PGM written by :func:`write_mask`."""
    path = Path(path)
    meta = json.loads(_sidecar_path(path).read_text(encoding="utf-8"))
    spec = GridSpec(meta["downsample"], meta["width_cells"], meta["height_cells"])
    return mask_from_pgm(path.read_bytes(), spec), meta


def mask_to_rle(mask: BinaryMask) -> dict:
    flat = mask.bits.ravel().astype(np.int8)
    edges = np.diff(np.concatenate([[0], flat, [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return {
        "dims": [mask.spec.width_cells, mask.spec.height_cells],
        "runs": [[int(s), int(e - s)] for s, e in zip(starts, ends)],
    }


def mask_from_rle(rle: dict, downsample: int) -> BinaryMask:
    w, h = rle["dims"]
    flat = np.zeros(w * h, dtype=bool)
    for start, length in rle["runs"]:
        if start < 0 or length <= 0 or start + length > flat.size:
            raise FormatError(f"run [{start}, {length}] outside a {w}x{h} mask")
        flat[start : start + length] = True
    return BinaryMask(GridSpec(downsample, w, h), flat.reshape(h, w))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def eval_table_csv(reports) -> str:
    return _csv_text(
        ["ot", "ap", "lamr", "tp", "fp", "gt"],
        [[f"{r.ot:.2f}", repr(r.ap), repr(r.lamr), r.tp, r.fp, r.gt] for r in reports],
    )


def curve_csv(report) -> str:
    """Per-detection curve rows, FPPI/miss rate filled at each confidence cutoff."""
    fppi = {c: (f, m) for c, f, m in report.mr_fppi_curve}
    rows = []
    for conf, precision, recall in report.pr_curve:
        f, m = fppi[conf]
        rows.append([repr(float(conf)), repr(float(precision)), repr(float(recall)), repr(float(f)), repr(float(m))])
    return _csv_text(["confidence", "precision", "recall", "fppi", "miss_rate"], rows)


def eval_summary(reports) -> list:
    return [
        {
            "ot": r.ot,
            "ap": r.ap,
            "map": r.map,
            "lamr": r.lamr,
            "tp": r.tp,
            "fp": r.fp,
            "gt": r.gt,
            "pr_curve": r.pr_curve.tolist(),
            "mr_fppi_curve": r.mr_fppi_curve.tolist(),
        }
        for r in reports
    ]
