"""Hand-configured reference classifiers: entry/exit line pairs and shape similarity."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .similarity import SimilarityConfig, angle_similarity_or_fallback, distance_similarity
from .trajectory import UNKNOWN, Trajectory

log = logging.getLogger(__name__)

Point = tuple[float, float]


@dataclass(frozen=True)
class VirtualLine:
    a: Point
    b: Point

    def __post_init__(self):
        object.__setattr__(self, "a", (float(self.a[0]), float(self.a[1])))
        object.__setattr__(self, "b", (float(self.b[0]), float(self.b[1])))
        if self.a == self.b:
            raise ValueError("virtual line endpoints must differ")


@dataclass(frozen=True)
class LinePair:
    label: str
    entry: VirtualLine
    exit: VirtualLine


@dataclass(frozen=True)
class LineBasedSpec:
    movements: tuple[LinePair, ...]

    def __post_init__(self):
        object.__setattr__(self, "movements", tuple(self.movements))
        if not self.movements:
            raise ValueError("line-based spec needs at least one movement")


@dataclass(frozen=True)
class ShapeModel:
    label: str
    trajectory: Trajectory


@dataclass(frozen=True)
class ShapeSimilaritySpec:
    models: tuple[ShapeModel, ...]
    distance_limit: float
    angle_limit: float

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ValueError("shape-similarity spec needs at least one modelling trajectory")
        if not (self.distance_limit > 0 and self.angle_limit > 0):
            raise ValueError("distance_limit and angle_limit must be positive")


def _orientation(p: Point, q: Point, r: Point) -> int:
    val = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (val > 0) - (val < 0)


def _on_segment(p: Point, q: Point, r: Point) -> bool:
    """q lies within the bounding box of p-r (call only when collinear)."""
    return (min(p[0], r[0]) <= q[0] <= max(p[0], r[0])
            and min(p[1], r[1]) <= q[1] <= max(p[1], r[1]))


def segments_intersect(p1: Point, q1: Point, p2: Point, q2: Point) -> bool:
    """Closed-segment intersection; touching at an endpoint counts."""
    o1 = _orientation(p1, q1, p2)
    o2 = _orientation(p1, q1, q2)
    o3 = _orientation(p2, q2, p1)
    o4 = _orientation(p2, q2, q1)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and _on_segment(p1, p2, q1)) or (o2 == 0 and _on_segment(p1, q2, q1))
            or (o3 == 0 and _on_segment(p2, p1, q2)) or (o4 == 0 and _on_segment(p2, q1, q2)))


def segment_crossing(t: Trajectory, line: VirtualLine) -> bool:
    """Whether any step of ``t`` meets ``line``."""
    pts = [(p.x, p.y) for p in t.points]
    return any(segments_intersect(a, b, line.a, line.b) for a, b in zip(pts, pts[1:]))


def classify_line_based(t: Trajectory, spec: LineBasedSpec) -> str:
    """First movement (in spec order) whose entry and exit lines are both crossed."""
    matches = [m.label for m in spec.movements
               if segment_crossing(t, m.entry) and segment_crossing(t, m.exit)]
    if not matches:
        return UNKNOWN
    if len(matches) > 1:
        log.warning("vehicle %s crosses %d line pairs %s; using %s",
                    t.vehicle_id, len(matches), matches, matches[0])
    return matches[0]


def classify_shape_similarity(t: Trajectory, spec: ShapeSimilaritySpec,
                              cfg: SimilarityConfig | None = None) -> str:
    """Best-scoring movement among models within both limits, else Unknown."""
    cfg = cfg or SimilarityConfig()
    best_label, best = UNKNOWN, None
    for model in spec.models:
        d_s = distance_similarity(t, model.trajectory)
        t_s, _ = angle_similarity_or_fallback(t, model.trajectory, cfg)
        if d_s > spec.distance_limit or t_s > spec.angle_limit:
            continue
        s = cfg.w1 * d_s + cfg.w2 * t_s
        if best is None or s < best:
            best_label, best = model.label, s
    return best_label


def classify_all(trajectories: Sequence[Trajectory], classify, *args) -> dict[str, str]:
    return {t.vehicle_id: classify(t, *args) for t in trajectories}
