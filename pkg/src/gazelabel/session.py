"""Gaze session records and screen-to-slide projection.

A session file is JSON Lines: one ``meta`` record first, then any mix of
``gaze`` and ``viewport`` records::

    {"kind":"meta","slide_width":W,"slide_height":H,"mpp":0.4952,"screen_width":SW,"screen_height":SH}
    {"kind":"gaze","t_ms":T,"x":X,"y":Y,"valid":true}
    {"kind":"viewport","t_ms":T,"offset_x":OX,"offset_y":OY,"scale":S}

Viewport events act as a step function: an event governs every sample at
``t >= event.t_ms`` until the next event. All slide coordinates are level-0
pixels.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParseError, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "SlideGeometry",
    "GazeSample",
    "ViewportEvent",
    "GazeSession",
    "GazeTrace",
    "parse_session",
    "read_session",
    "serialize_session",
    "write_session",
    "screen_to_slide",
    "slide_to_screen",
    "project_trace",
]


@dataclass(frozen=True)
class SlideGeometry:
    slide_width: int
    slide_height: int
    mpp: float = 0.4952
    screen_width: int = 1920
    screen_height: int = 1080

    def __post_init__(self):
        for name in ("slide_width", "slide_height", "screen_width", "screen_height"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not self.mpp > 0:
            raise ValidationError(f"mpp must be > 0, got {self.mpp!r}")


@dataclass(frozen=True)
class GazeSample:
    t_ms: float
    x: float
    y: float
    valid: bool = True


@dataclass(frozen=True)
class ViewportEvent:
    """Pan/zoom state: slide px of the screen origin and slide px per screen px."""

    t_ms: float
    offset_x: float
    offset_y: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"viewport scale must be > 0, got {self.scale!r}")


@dataclass(frozen=True)
class GazeSession:
    geometry: SlideGeometry
    samples: tuple[GazeSample, ...] = ()
    viewport_events: tuple[ViewportEvent, ...] = ()
    # diagnostics collected while parsing; not serialized
    warnings: tuple[str, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class GazeTrace:
    """Slide-space gaze points in recording order.

    ``x``, ``y`` and ``t_ms`` are parallel float64 arrays. ``dropped`` counts
    the samples removed during projection, keyed by reason.
    """

    x: np.ndarray
    y: np.ndarray
    t_ms: np.ndarray
    dropped: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.x)

    @classmethod
    def from_points(cls, points, t_ms=None):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if t_ms is None:
            t_ms = np.zeros(len(pts))
        return cls(pts[:, 0].copy(), pts[:, 1].copy(), np.asarray(t_ms, dtype=np.float64))

    @classmethod
    def empty(cls):
        return cls.from_points(np.empty((0, 2)))

    def points(self):
        return np.column_stack([self.x, self.y])

    def concat(self, other):
        return GazeTrace(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.y, other.y]),
            np.concatenate([self.t_ms, other.t_ms]),
        )


def _reject_constant(token):
    raise ValueError(f"non-finite number {token} not permitted")


def _number(rec, key, line_number):
    try:
        value = rec[key]
    except KeyError:
        raise FormatError(f"line {line_number}: missing field {key!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"line {line_number}: field {key!r} must be a number")
    return value


def _lines(stream):
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw


def parse_session(stream) -> GazeSession:
    """Parse a JSON-Lines session from a file object, bytes, or str.

    Out-of-order records are re-sorted by ``t_ms`` (stable) and unknown
    record kinds are skipped; both are reported in ``session.warnings``.
    """
    geometry = None
    samples, events, warns = [], [], []

    for line_number, raw in enumerate(_lines(stream), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw, parse_constant=_reject_constant)
        except ValueError as exc:
            raise ParseError(str(exc), line_number) from None
        if not isinstance(rec, dict) or "kind" not in rec:
            raise ParseError("record is not an object with a 'kind' field", line_number)

        kind = rec["kind"]
        if geometry is None:
            if kind != "meta":
                raise FormatError("first record must be the meta record")
            geometry = SlideGeometry(
                slide_width=_number(rec, "slide_width", line_number),
                slide_height=_number(rec, "slide_height", line_number),
                mpp=_number(rec, "mpp", line_number),
                screen_width=_number(rec, "screen_width", line_number),
                screen_height=_number(rec, "screen_height", line_number),
            )
        elif kind == "meta":
            raise FormatError(f"line {line_number}: duplicate meta record")
        elif kind == "gaze":
            t = _number(rec, "t_ms", line_number)
            if t < 0:
                raise ValidationError(f"line {line_number}: t_ms must be >= 0")
            valid = rec.get("valid", True)
            if not isinstance(valid, bool):
                raise FormatError(f"line {line_number}: 'valid' must be a boolean")
            samples.append(
                GazeSample(t, _number(rec, "x", line_number), _number(rec, "y", line_number), valid)
            )
        elif kind == "viewport":
            scale = _number(rec, "scale", line_number)
            if not scale > 0:
                raise ValidationError(f"line {line_number}: viewport scale must be > 0, got {scale}")
            events.append(
                ViewportEvent(
                    _number(rec, "t_ms", line_number),
                    _number(rec, "offset_x", line_number),
                    _number(rec, "offset_y", line_number),
                    scale,
                )
            )
        else:
            warns.append(f"line {line_number}: skipped unknown record kind {kind!r}")

    if geometry is None:
        raise FormatError("missing meta record")

    for name, items in (("gaze", samples), ("viewport", events)):
        if any(b.t_ms < a.t_ms for a, b in zip(items, items[1:])):
            warns.append(f"{name} records out of time order; re-sorted")
            items.sort(key=lambda r: r.t_ms)

    for w in warns:
        logger.warning(w)
    return GazeSession(geometry, tuple(samples), tuple(events), tuple(warns))


def read_session(path) -> GazeSession:
    with open(path, "rb") as fh:
        return parse_session(fh)


def serialize_session(session: GazeSession) -> str:
    """Render a session as JSON Lines (meta, then viewport and gaze records by time)."""
    g = session.geometry
    out = [
        json.dumps(
            {
                "kind": "meta",
                "slide_width": g.slide_width,
                "slide_height": g.slide_height,
                "mpp": g.mpp,
                "screen_width": g.screen_width,
                "screen_height": g.screen_height,
            }
        )
    ]
    records = [
        (e.t_ms, 0, {"kind": "viewport", "t_ms": e.t_ms, "offset_x": e.offset_x,
                     "offset_y": e.offset_y, "scale": e.scale})
        for e in session.viewport_events
    ]
    records += [
        (s.t_ms, 1, {"kind": "gaze", "t_ms": s.t_ms, "x": s.x, "y": s.y, "valid": s.valid})
        for s in session.samples
    ]
    # stable sort keeps within-kind order for equal timestamps
    records.sort(key=lambda r: (r[0], r[1]))
    out += [json.dumps(r[2]) for r in records]
    return "\n".join(out) + "\n"


def write_session(session: GazeSession, path) -> Path:
    path = Path(path)
    path.write_text(serialize_session(session), encoding="utf-8")
    return path


def screen_to_slide(sample: GazeSample, vp: ViewportEvent) -> tuple[float, float]:
    return vp.offset_x + sample.x * vp.scale, vp.offset_y + sample.y * vp.scale


def slide_to_screen(point, vp: ViewportEvent) -> tuple[float, float]:
    """Inverse of :func:`screen_to_slide` for a slide-space ``(x, y)``."""
    x, y = point
    return (x - vp.offset_x) / vp.scale, (y - vp.offset_y) / vp.scale


def project_trace(session: GazeSession) -> GazeTrace:
    """Map valid samples into slide space using the governing viewport state.

    Samples that are invalid, precede the first viewport event, or land
    outside ``[0, W) x [0, H)`` are dropped and counted in ``trace.dropped``.
    """
    if not session.viewport_events:
        raise ValidationError("no viewport state")

    g = session.geometry
    n = len(session.samples)
    dropped = {"invalid": 0, "before_viewport": 0, "out_of_bounds": 0}
    if n == 0:
        trace = GazeTrace.empty()
        return GazeTrace(trace.x, trace.y, trace.t_ms, dropped)

    t = np.array([s.t_ms for s in session.samples], dtype=np.float64)
    sx = np.array([s.x for s in session.samples], dtype=np.float64)
    sy = np.array([s.y for s in session.samples], dtype=np.float64)
    valid = np.array([s.valid for s in session.samples], dtype=bool)

    ev = session.viewport_events
    ev_t = np.array([e.t_ms for e in ev], dtype=np.float64)
    idx = np.searchsorted(ev_t, t, side="right") - 1
    has_vp = idx >= 0
    idx = np.clip(idx, 0, None)
    ox = np.array([e.offset_x for e in ev], dtype=np.float64)[idx]
    oy = np.array([e.offset_y for e in ev], dtype=np.float64)[idx]
    scale = np.array([e.scale for e in ev], dtype=np.float64)[idx]

    x = ox + sx * scale
    y = oy + sy * scale
    inside = (x >= 0) & (x < g.slide_width) & (y >= 0) & (y < g.slide_height)

    dropped["invalid"] = int(np.count_nonzero(~valid))
    dropped["before_viewport"] = int(np.count_nonzero(valid & ~has_vp))
    dropped["out_of_bounds"] = int(np.count_nonzero(valid & has_vp & ~inside))
    keep = valid & has_vp & inside
    return GazeTrace(x[keep], y[keep], t[keep], dropped)
