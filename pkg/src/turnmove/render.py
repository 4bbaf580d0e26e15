"""SVG 1.1 scene diagrams: trajectory points, stopbar, movement clusters, modelling tracks."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .pipeline import MovementModel, classify_dataset, stopped_points
from .trajectory import LEFT, RIGHT, THROUGH, UNKNOWN, ApproachDataset, Trajectory, format_float

PALETTE = {LEFT: "#1f77b4", THROUGH: "#2ca02c", RIGHT: "#ff7f0e", UNKNOWN: "#7f7f7f"}
EXTRA_COLOURS = ("#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22")
POINT_COLOUR = "#555555"
STOP_COLOUR = "#d62728"
MARGIN = 20.0


def colour_for(label: str, order: Sequence[str]) -> str:
    if label in PALETTE:
        return PALETTE[label]
    extras = [name for name in order if name not in PALETTE]
    k = extras.index(label) if label in extras else len(extras)
    return EXTRA_COLOURS[k % len(EXTRA_COLOURS)]


def _f(v: float) -> str:
    return format_float(v)


def _polyline(t: Trajectory, colour: str, width: float, extra: str = "") -> str:
    pts = " ".join(f"{_f(p.x)},{_f(p.y)}" for p in t.points)
    return (f'<polyline points="{pts}" fill="none" stroke="{colour}" '
            f'stroke-width="{_f(width)}"{extra}/>')


def _bounds(trajectories: Sequence[Trajectory], model: MovementModel | None):
    xs = [p.x for t in trajectories for p in t.points]
    ys = [p.y for t in trajectories for p in t.points]
    if model is not None:
        for mv in model.movements:
            for t in mv.trajectories:
                xs.extend(p.x for p in t.points)
                ys.extend(p.y for p in t.points)
        ys.append(model.stopbar.y_sl)
    if not xs:
        return 0.0, 0.0, 100.0, 100.0
    return min(xs), min(ys), max(xs), max(ys)


def render_svg(dataset: ApproachDataset | Sequence[Trajectory], model: MovementModel | None = None,
               labels: Mapping[str, str] | None = None, title: str | None = None) -> str:
    """Return an SVG document.

    Without a model: every trajectory point as a small dot. With a model:
    tracks coloured by assigned movement (``labels`` if given, otherwise
    classified here), the stopbar line, stopped points in red and the
    modelling trajectories drawn thick on top.
    """
    trajectories = list(dataset)
    x0, y0, x1, y1 = _bounds(trajectories, model)
    width = x1 - x0 + 2 * MARGIN
    height = y1 - y0 + 2 * MARGIN
    vx, vy = x0 - MARGIN, y0 - MARGIN
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_f(width)}" height="{_f(height)}" viewBox="{_f(vx)} {_f(vy)} {_f(width)} {_f(height)}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="{_f(vx)}" y="{_f(vy)}" width="{_f(width)}" height="{_f(height)}" fill="white"/>')

    if model is None:
        out.append(f'<g id="points" fill="{POINT_COLOUR}">')
        for t in trajectories:
            for p in t.points:
                out.append(f'<circle cx="{_f(p.x)}" cy="{_f(p.y)}" r="1"/>')
        out.append("</g>")
    else:
        if labels is None:
            labels = classify_dataset(trajectories, model).labels()
        order = model.labels + [UNKNOWN]
        out.append('<g id="clusters" opacity="0.6">')
        for t in trajectories:
            label = labels.get(t.vehicle_id, UNKNOWN)
            out.append(_polyline(t, colour_for(label, order), 1.0, f" data-label={quoteattr(label)}"))
        out.append("</g>")

        sb = model.stopbar
        out.append(f'<line id="stopbar" x1="{_f(vx)}" y1="{_f(sb.y_sl)}" x2="{_f(vx + width)}" '
                   f'y2="{_f(sb.y_sl)}" stroke="black" stroke-width="2" stroke-dasharray="8,4"/>')

        tol = model.config.stop_displacement_tolerance
        out.append(f'<g id="stopped" fill="{STOP_COLOUR}">')
        for p in stopped_points(trajectories, tol):
            out.append(f'<circle cx="{_f(p.x)}" cy="{_f(p.y)}" r="2"/>')
        out.append("</g>")

        out.append('<g id="modelling">')
        for mv in model.movements:
            for t in mv.trajectories:
                out.append(_polyline(t, colour_for(mv.label, order), 4.0,
                                     f" data-label={quoteattr(mv.label)}"))
        out.append("</g>")

        out.append('<g id="legend" font-family="sans-serif" font-size="12">')
        for k, label in enumerate(order):
            y = vy + 15 + 15 * k
            out.append(f'<text x="{_f(vx + 5)}" y="{_f(y)}" fill="{colour_for(label, order)}">'
                       f"{escape(label)}</text>")
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, dataset, model: MovementModel | None = None,
              labels: Mapping[str, str] | None = None, title: str | None = None) -> None:
    Path(path).write_text(render_svg(dataset, model, labels, title), encoding="utf-8")
