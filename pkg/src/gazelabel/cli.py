"""Command-line entry point: ``gazelabel <subcommand> [options]``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .detection import ot_sweep
from .errors import GazeLabelError
from .kde import BinaryMask, GridSpec, kde_stage, merge_masks
from .masks import mask_to_bboxes
from .session import SlideGeometry, project_trace, read_session, write_session
from .simulate import SimParams, generate_scene, scene_to_dict, simulate_trace
from .sweep import param_sweep
from .tiling import TileSpec, tile_labels, tile_layout
from .timing import REFERENCE_STUDY, read_timing_csv, timing_report

log = logging.getLogger("gazelabel")

DEFAULT_SIGMAS = "400"
DEFAULT_SWEEP_SIGMAS = "100,200,400,800"
DEFAULT_SWEEP_NS = "1,3,5,7,9"


def float_list(text):
    """``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text)
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + k * step, 10) for k in range(count)]
    return [float(p) for p in text.split(",") if p.strip()]


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit(args, rows, title=None):
    """Print ``rows`` (list of dicts) to stdout in the requested format."""
    if args.format == "json":
        print(json.dumps(rows, indent=2, sort_keys=True))
        return
    if not rows:
        return
    keys = list(rows[0])
    if args.format == "csv":
        print(",".join(keys))
        for r in rows:
            print(",".join("" if r[k] is None else str(r[k]) for k in keys))
        return
    if title:
        print(title)
    cells = [[_fmt(r[k]) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    print("  ".join(k.rjust(w) for k, w in zip(keys, widths)))
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)))


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sim_params(args, seed):
    return SimParams(
        fixation_jitter=args.jitter,
        distractor_fixations=args.distractors,
        seed=seed,
        viewport_mode=args.viewport_mode,
    )


def cmd_simulate(args):
    out = _out_dir(args)
    geo = SlideGeometry(args.slide_width, args.slide_height)
    scene = generate_scene(args.rois, (args.radius_min, args.radius_max), geo, args.seed, args.downsample)
    session = simulate_trace(scene, _sim_params(args, args.seed))
    write_session(session, out / "session.jsonl")
    sidecar = scene_to_dict(scene)
    sidecar["sim_params"] = {k: getattr(_sim_params(args, args.seed), k) for k in SimParams.__dataclass_fields__}
    _dump_json(sidecar, out / "scene.json")
    formats.write_mask(out / "gt_mask.pgm", scene.gt_mask, (geo.slide_width, geo.slide_height))
    formats.write_labels(out / "gt_labels.txt", scene.gt_boxes, geo.slide_width, geo.slide_height)
    _emit(args, [{"samples": len(session.samples), "rois": len(scene.rois), "out": str(out)}])


def cmd_ingest(args):
    _require(args, "session")
    out = _out_dir(args)
    session = read_session(args.session)
    trace = project_trace(session)
    np.savetxt(
        out / "trace.csv",
        np.column_stack([trace.x, trace.y, trace.t_ms]),
        delimiter=",",
        header="x,y,t_ms",
        comments="",
        fmt="%.17g",
    )
    summary = {"samples": len(session.samples), "points": len(trace), **trace.dropped, "warnings": len(session.warnings)}
    _dump_json(summary, out / "ingest.json")
    _emit(args, [summary])


def cmd_kde(args):
    _require(args, "session")
    out = _out_dir(args)
    session = read_session(args.session)
    trace = project_trace(session)
    geo = session.geometry
    spec = GridSpec.for_slide(geo.slide_width, geo.slide_height, args.downsample)
    ns = float_list(args.n)
    if len(ns) != 1:
        raise GazeLabelError("kde takes a single --n value")
    mask = BinaryMask.empty(spec)
    rows = []
    for sigma in float_list(args.sigma):
        stage = kde_stage(trace, sigma, ns[0], spec, workers=args.workers)
        mask = merge_masks(mask, stage.mask)
        s = stage.stats
        rows.append(
            {
                "sigma": sigma,
                "clusters": len(stage.clusters),
                "theta_bar": s.theta_bar_global if s else None,
                "m": s.m if s else None,
                "tau": s.tau if s else None,
                "cells": stage.mask.count(),
            }
        )
    formats.write_mask(out / "mask.pgm", mask, (geo.slide_width, geo.slide_height))
    _dump_json(formats.mask_to_rle(mask), out / "mask_rle.json")
    _dump_json(rows, out / "kde_stats.json")
    _emit(args, rows)


def cmd_boxes(args):
    _require(args, "mask")
    out = _out_dir(args)
    mask, meta = formats.read_mask(args.mask)
    width = meta.get("slide_width", mask.spec.width_cells * mask.spec.downsample)
    height = meta.get("slide_height", mask.spec.height_cells * mask.spec.downsample)
    boxes, discarded = mask_to_bboxes(mask, args.min_area, clip_to=(width, height), with_discarded=True)
    formats.write_labels(out / "labels.txt", boxes, width, height)
    _emit(args, [{"boxes": len(boxes), "discarded": discarded}])


def cmd_tile(args):
    _require(args, "labels")
    out = _out_dir(args)
    spec = TileSpec(args.slide_width, args.slide_height, args.tile_size, args.overlap)
    boxes = formats.read_labels(args.labels, args.slide_width, args.slide_height)
    tiles = tile_labels(boxes, spec, require_label=args.require_label)
    tile_dir = out / "tiles"
    tile_dir.mkdir(exist_ok=True)
    for tile_id in sorted(tiles):
        formats.write_labels(tile_dir / f"{tile_id}.txt", tiles[tile_id], spec.tile_size, spec.tile_size)
    layout = tile_layout(spec)
    manifest = {
        "tile_size": spec.tile_size,
        "overlap": spec.overlap,
        "tiles": {t: {"origin": list(layout[t]), "labels": len(tiles[t])} for t in sorted(tiles)},
    }
    _dump_json(manifest, out / "manifest.json")
    _emit(args, [{"tile": t, "labels": len(tiles[t])} for t in sorted(tiles)])


def _label_dir(path):
    path = Path(path)
    files = sorted(path.glob("*.txt")) if path.is_dir() else [path]
    if not files:
        raise FileNotFoundError(f"no label files in {path}")
    return files


def cmd_eval(args):
    _require(args, "gt", "det")
    out = _out_dir(args)
    size = args.image_size
    gts = {f.stem: formats.read_labels(f, size, size) for f in _label_dir(args.gt)}
    dets = []
    for f in _label_dir(args.det):
        items = formats.read_labels(f, size, size)
        if any(not hasattr(d, "confidence") for d in items):
            raise GazeLabelError(f"{f}: detections need a confidence column")
        dets.extend(items)
    image_ids = sorted(set(gts) | {d.image_id for d in dets})
    for img in image_ids:
        gts.setdefault(img, [])
    reports = ot_sweep(dets, gts, len(image_ids), float_list(args.ot))

    (out / "eval.csv").write_text(formats.eval_table_csv(reports), encoding="utf-8")
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    for r in reports:
        (curves / f"ot_{r.ot:.2f}.csv").write_text(formats.curve_csv(r), encoding="utf-8")
    _dump_json(formats.eval_summary(reports), out / "eval.json")
    _emit(
        args,
        [{"ot": f"{r.ot:.2f}", "ap": r.ap, "map": r.map, "lamr": r.lamr, "tp": r.tp, "fp": r.fp, "gt": r.gt} for r in reports],
        title="single-class evaluation (mAP = AP)",
    )


def _as_list(value):
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _sweep_cases(args):
    if args.session:
        sessions, gts = _as_list(args.session), _as_list(args.gt)
        if len(sessions) != len(gts):
            raise GazeLabelError("sweep needs one --gt mask per --session")
        cases = []
        for s, g in zip(sessions, gts):
            mask, _ = formats.read_mask(g)
            cases.append((project_trace(read_session(s)), mask))
        return cases
    geo = SlideGeometry(args.slide_width, args.slide_height)
    cases = []
    for k in range(args.scenes):
        seed = args.seed + k
        scene = generate_scene(args.rois, (args.radius_min, args.radius_max), geo, seed, args.downsample)
        cases.append((project_trace(simulate_trace(scene, _sim_params(args, seed))), scene.gt_mask))
    return cases


def cmd_sweep(args):
    out = _out_dir(args)
    sigmas = float_list(args.sigma)
    ns = float_list(args.n)
    result = param_sweep(_sweep_cases(args), sigmas, ns, workers=args.workers)
    rows = []
    for s in sigmas:
        for n in ns:
            c = result.cells[s, n]
            rows.append({"sigma": s, "n": n, "miou": c.mean, "std": c.std_dev, "count": c.count})
    lines = ["sigma,n,miou,std,count"] + [f"{r['sigma']!r},{r['n']!r},{r['miou']!r},{r['std']!r},{r['count']}" for r in rows]
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    best = result.best
    _dump_json(
        {
            "cells": rows,
            "best": {"sigma": best[0], "n": best[1], "miou": result.cells[best].mean},
            "cluster_counts": {repr(s): list(c) for s, c in result.cluster_counts.items()},
        },
        out / "sweep.json",
    )
    _emit(args, rows, title=f"best: sigma={best[0]:g} n={best[1]:g} mIOU={result.cells[best].mean:.4f}")


def cmd_timing(args):
    records = read_timing_csv(args.records) if args.records else list(REFERENCE_STUDY)
    report = timing_report(records)
    rows = report.rows()
    if args.out:
        _dump_json(rows, _out_dir(args) / "timing.json")
    _emit(args, rows, title="seconds per label (average = mean of per-annotator averages)")


def _common(p, *names):
    opts = {
        "session": lambda: p.add_argument("--session", help="gaze session (.jsonl)"),
        "downsample": lambda: p.add_argument("--downsample", type=int, default=16, help="slide px per grid cell"),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "workers": lambda: p.add_argument("--workers", type=int, default=1, help="worker threads"),
        "scene": lambda: _scene_args(p),
    }
    for name in names:
        opts[name]()
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--config", help="JSON file of option defaults; command-line flags win")
    p.add_argument("--show-config", action="store_true", help="print effective options and exit")


def _scene_args(p):
    p.add_argument("--slide-width", type=int, default=40000)
    p.add_argument("--slide-height", type=int, default=40000)
    p.add_argument("--rois", type=int, default=5)
    p.add_argument("--radius-min", type=float, default=200.0)
    p.add_argument("--radius-max", type=float, default=600.0)
    p.add_argument("--jitter", type=float, default=0.35)
    p.add_argument("--distractors", type=int, default=2)
    p.add_argument("--viewport-mode", choices=("identity", "panzoom"), default="identity")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise GazeLabelError(f"{self.prog}: {message}")


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise GazeLabelError(f"missing required option(s): {', '.join(missing)}")


def build_parser():
    parser = _Parser(prog="gazelabel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="synthetic scene + gaze session")
    _common(p, "downsample", "seed", "scene")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="project a session into slide space")
    _common(p, "session")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("kde", help="gaze session -> binary ROI mask")
    _common(p, "session", "downsample", "workers")
    p.add_argument("--sigma", default=DEFAULT_SIGMAS, help="kernel sizes in slide px (comma list)")
    p.add_argument("--n", default="5", help="threshold scaling factor")
    p.set_defaults(func=cmd_kde)

    p = sub.add_parser("boxes", help="mask -> tight bounding-box labels")
    _common(p)
    p.add_argument("--mask", required=False, help="mask .pgm with .json sidecar")
    p.add_argument("--min-area", type=int, default=None, help="minimum box area in px (default one cell)")
    p.set_defaults(func=cmd_boxes)

    p = sub.add_parser("tile", help="split slide labels into patches")
    _common(p)
    p.add_argument("--labels", help="slide-level label file")
    p.add_argument("--slide-width", type=int, default=40000)
    p.add_argument("--slide-height", type=int, default=40000)
    p.add_argument("--tile-size", type=int, default=4000)
    p.add_argument("--overlap", type=int, default=0)
    p.add_argument("--require-label", action="store_true", help="drop tiles without labels")
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("eval", help="score detections against ground truth over an OT sweep")
    _common(p)
    p.add_argument("--gt", help="ground-truth label file or directory")
    p.add_argument("--det", help="detection label file or directory")
    p.add_argument("--ot", default="0.10:0.95:0.05", help="overlap thresholds (list or start:stop:step)")
    p.add_argument("--image-size", type=int, default=4000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="mIOU over a sigma x n grid")
    _common(p, "downsample", "seed", "workers", "scene")
    p.add_argument("--session", action="append", help="gaze session (.jsonl); repeatable")
    p.add_argument("--gt", action="append", help="reference mask .pgm, one per --session")
    p.add_argument("--scenes", type=int, default=20, help="simulated scenes when no --session is given")
    p.add_argument("--sigma", default=DEFAULT_SWEEP_SIGMAS)
    p.add_argument("--n", default=DEFAULT_SWEEP_NS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("timing", help="per-label annotation time report")
    _common(p)
    p.add_argument("--records", help="CSV annotator,method,total_seconds,label_count (default: reference study)")
    p.set_defaults(func=cmd_timing, out=None)

    return parser, sub.choices


def parse_args(argv=None):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        sp = subparsers[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(k.replace("-", "_") for k in config) - known)
        if unknown:
            raise GazeLabelError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
    except (GazeLabelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.show_config:
        shown = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "show_config")}
        print(json.dumps(shown, indent=2, sort_keys=True, default=str))
        return 0
    try:
        args.func(args)
    except (GazeLabelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
