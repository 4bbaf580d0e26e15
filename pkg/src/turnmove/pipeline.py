"""Train a movement model for one approach and classify trajectories against it.

Training runs four stages: locate the stopbar from stopped vehicle positions,
keep only the part of each track past the stopbar, cluster the tracks into
movements, then pick the longest track of every lane-level sub-cluster as a
modelling trajectory. Classification assigns each incoming track to the
movement of its most similar modelling trajectory.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterAssignment, Linkage, agglomerate, cluster_sizes
from .similarity import SimilarityBreakdown, SimilarityConfig, composite_similarity, similarity_matrix
from .trajectory import (
    LEFT,
    RIGHT,
    THROUGH,
    UNKNOWN,
    ApproachDataset,
    TrackPoint,
    Trajectory,
    cluster_label,
    net_length,
)

log = logging.getLogger(__name__)

MODEL_FORMAT = "turnmove-model"
MODEL_VERSION = 1
NAMING_THRESHOLD_DEG = 20.0


class PipelineError(RuntimeError):
    """A training stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Stopbar:
    y_sl: float
    stopped_count: int = 0
    fallback: bool = False

    def __post_init__(self):
        if not math.isfinite(self.y_sl):
            raise ValueError("stopbar y must be finite")


@dataclass(frozen=True)
class PipelineConfig:
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    k_movements: int = 3
    # keys are movement names ("Through") or cluster indices; missing -> 1 lane
    lanes_per_movement: Mapping[str | int, int] = field(default_factory=dict)
    stop_displacement_tolerance: float = 0.5
    min_points: int = 5
    min_cluster_fraction: float = 0.0

    def __post_init__(self):
        if self.k_movements < 1:
            raise ValueError("k_movements must be >= 1")
        if self.min_points < 2:
            raise ValueError("min_points must be >= 2")
        if not 0 <= self.min_cluster_fraction < 1:
            raise ValueError("min_cluster_fraction must be in [0, 1)")
        if self.stop_displacement_tolerance < 0:
            raise ValueError("stop_displacement_tolerance must be >= 0")
        for key, lanes in self.lanes_per_movement.items():
            if int(lanes) < 1:
                raise ValueError(f"lanes_per_movement[{key!r}] must be >= 1")

    def lanes_for(self, label: str, cluster: int) -> int:
        lanes = self.lanes_per_movement
        for key in (label, cluster, str(cluster)):
            if key in lanes:
                return int(lanes[key])
        return 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lanes_per_movement"] = {str(k): int(v) for k, v in sorted(
            self.lanes_per_movement.items(), key=lambda kv: str(kv[0]))}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineConfig":
        d = dict(d)
        sim = SimilarityConfig(**d.pop("similarity", {}))
        lanes = {}
        for k, v in dict(d.pop("lanes_per_movement", {}) or {}).items():
            lanes[int(k) if isinstance(k, str) and k.isdigit() else k] = int(v)
        return cls(similarity=sim, lanes_per_movement=lanes, **d)


@dataclass(frozen=True)
class Movement:
    label: str
    cluster: int
    trajectories: tuple[Trajectory, ...]


@dataclass(frozen=True)
class MovementModel:
    stopbar: Stopbar
    movements: tuple[Movement, ...]
    config: PipelineConfig
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        for mv in self.movements:
            if not mv.trajectories:
                raise ValueError(f"movement {mv.label!r} has no modelling trajectory")
            if mv.label == UNKNOWN:
                raise ValueError("a trained model cannot contain the Unknown label")

    @property
    def labels(self) -> list[str]:
        return [mv.label for mv in self.movements]

    def to_json(self) -> str:
        return json.dumps(model_to_dict(self), indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MovementModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not a JSON document ({exc})") from None
        return model_from_dict(data)


def _trajectory_to_dict(t: Trajectory) -> dict:
    return {"vehicle_id": t.vehicle_id, "points": [[p.frame, p.x, p.y] for p in t.points]}


def model_to_dict(model: MovementModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "stopbar": asdict(model.stopbar),
        "config": model.config.to_dict(),
        "movements": [
            {"label": mv.label, "cluster": mv.cluster,
             "trajectories": [_trajectory_to_dict(t) for t in mv.trajectories]}
            for mv in model.movements
        ],
        "diagnostics": list(model.diagnostics),
    }


def model_from_dict(data: Mapping) -> MovementModel:
    if not isinstance(data, Mapping) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a {MODEL_FORMAT} document")
    if data.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r}")
    try:
        movements = tuple(
            Movement(
                label=str(mv["label"]),
                cluster=int(mv["cluster"]),
                trajectories=tuple(
                    Trajectory(str(t["vehicle_id"]),
                               tuple(TrackPoint(int(f), float(x), float(y)) for f, x, y in t["points"]))
                    for t in mv["trajectories"]
                ),
            )
            for mv in data["movements"]
        )
        return MovementModel(
            stopbar=Stopbar(**data["stopbar"]),
            movements=movements,
            config=PipelineConfig.from_dict(data["config"]),
            diagnostics=tuple(data.get("diagnostics", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None


# -- stage 1: stopbar ---------------------------------------------------------

def percentile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation percentile, ``x[lo] + f * (x[lo+1] - x[lo])`` over sorted values.

    Same definition as numpy's default method, but evaluated with this one
    formula so results are reproducible to the last bit.
    """
    if not 0 <= q <= 100:
        raise ValueError(f"percentile must be in [0, 100], got {q}")
    x = np.sort(np.asarray(values, dtype=float))
    if len(x) == 0:
        raise ValueError("percentile of an empty sequence")
    h = (len(x) - 1) * (q / 100.0)
    lo = math.floor(h)
    hi = min(lo + 1, len(x) - 1)
    return float(x[lo] + (h - lo) * (x[hi] - x[lo]))


def stopped_points(d: ApproachDataset | Sequence[Trajectory], tolerance: float = 0.5) -> list[TrackPoint]:
    """Points that move at most ``tolerance`` pixels by the very next frame."""
    out = []
    for t in d:
        for p, q in zip(t.points, t.points[1:]):
            if q.frame == p.frame + 1 and math.hypot(q.x - p.x, q.y - p.y) <= tolerance:
                out.append(p)
    return out


def find_stopbar(d: ApproachDataset, cfg: PipelineConfig | None = None) -> Stopbar:
    cfg = cfg or PipelineConfig()
    if len(d) == 0:
        raise PipelineError("find_stopbar", "dataset is empty")
    stopped = stopped_points(d, cfg.stop_displacement_tolerance)
    if stopped:
        y = percentile([p.y for p in stopped], 50)
        return Stopbar(y, len(stopped), False)
    ys = [p.y for t in d for p in t.points]
    y = percentile(ys, 25)
    log.warning("no stopped locations found; stopbar falls back to 25th percentile y=%.6g", y)
    return Stopbar(y, 0, True)


# -- stage 2: valid set --------------------------------------------------------

def clip_to_stopbar(t: Trajectory, stopbar: Stopbar) -> Trajectory | None:
    """Part of ``t`` on or below the stopbar, or None if nothing is left."""
    return t.subset(t.xy[:, 1] >= stopbar.y_sl)


def extract_valid_set(d: ApproachDataset | Sequence[Trajectory], stopbar: Stopbar,
                      cfg: PipelineConfig | None = None) -> list[Trajectory]:
    cfg = cfg or PipelineConfig()
    valid = []
    dropped = 0
    for t in d:
        clipped = clip_to_stopbar(t, stopbar)
        if clipped is None or len(clipped) < cfg.min_points:
            dropped += 1
            continue
        valid.append(clipped)
    if dropped:
        log.info("dropped %d trajectories with fewer than %d points past the stopbar",
                 dropped, cfg.min_points)
    if not valid:
        raise PipelineError("extract_valid_set", "no trajectory has enough points past the stopbar")
    return valid


# -- stage 3: movement clusters --------------------------------------------------

def cluster_movements(valid: Sequence[Trajectory], cfg: PipelineConfig | None = None) -> ClusterAssignment:
    cfg = cfg or PipelineConfig()
    if len(valid) < cfg.k_movements:
        raise PipelineError(
            "cluster_movements",
            f"too few trajectories ({len(valid)}) for {cfg.k_movements} movements",
        )
    m = similarity_matrix(valid, cfg.similarity, include_proximity=True)
    return agglomerate(m, cfg.k_movements, Linkage.SINGLE)


def outlier_clusters(clusters: ClusterAssignment, min_fraction: float) -> set[int]:
    n = len(clusters.labels)
    return {c for c, size in enumerate(cluster_sizes(clusters)) if size < min_fraction * n}


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.hypot(v[..., 0], v[..., 1])
    return v / np.where(norm > 0, norm, 1.0)[..., None]


def approach_direction(trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Dominant heading, the mean unit net vector over all trajectories."""
    vecs = np.array([t.end.x - t.start.x for t in trajectories]), \
        np.array([t.end.y - t.start.y for t in trajectories])
    mean = _unit(np.stack(vecs, axis=1)).mean(axis=0)
    if not np.any(mean):
        return np.array([0.0, 1.0])
    return mean / np.hypot(*mean)


def heading_change(members: Sequence[Trajectory], reference: np.ndarray) -> float:
    """Signed angle (degrees) from ``reference`` to the members' mean heading.

    With y pointing down, a negative value is a turn to the driver's left.
    """
    vecs = np.array([[t.end.x - t.start.x, t.end.y - t.start.y] for t in members])
    mean = _unit(vecs).mean(axis=0)
    cross = reference[0] * mean[1] - reference[1] * mean[0]
    dot = reference[0] * mean[0] + reference[1] * mean[1]
    return math.degrees(math.atan2(cross, dot))


def name_movements(groups: Sequence[Sequence[Trajectory]], reference: np.ndarray,
                   threshold_deg: float = NAMING_THRESHOLD_DEG) -> list[str]:
    """Left/Through/Right from each group's heading change; duplicates stay generic."""
    names = []
    for g in groups:
        a = heading_change(g, reference)
        names.append(LEFT if a < -threshold_deg else RIGHT if a > threshold_deg else THROUGH)
    return [cluster_label(i) if names.count(n) > 1 else n for i, n in enumerate(names)]


# -- stage 4: modelling trajectories ----------------------------------------------

def longest(trajectories: Sequence[Trajectory]) -> Trajectory:
    """Trajectory with the largest net length; ties go to the smallest vehicle_id."""
    return min(trajectories, key=lambda t: (-net_length(t), t.vehicle_id))


def select_modelling_trajectories(valid: Sequence[Trajectory], clusters: ClusterAssignment,
                                  cfg: PipelineConfig | None = None, *,
                                  stopbar: Stopbar | None = None,
                                  reference: np.ndarray | None = None) -> MovementModel:
    cfg = cfg or PipelineConfig()
    diagnostics = []
    outliers = outlier_clusters(clusters, cfg.min_cluster_fraction)
    for c in sorted(outliers):
        diagnostics.append(f"cluster {c} ({len(clusters.members(c))} trajectories) "
                           f"below min_cluster_fraction; excluded from modelling")
    kept = [c for c in range(clusters.k) if c not in outliers]
    groups = [[valid[i] for i in clusters.members(c)] for c in kept]
    if reference is None:
        reference = approach_direction(valid)
    names = name_movements(groups, reference)

    movements = []
    for c, name, members in zip(kept, names, groups):
        lanes = cfg.lanes_for(name, c)
        if lanes > len(members):
            diagnostics.append(f"movement {name}: {lanes} lanes requested but only "
                               f"{len(members)} trajectories; clamped")
            lanes = len(members)
        if lanes == 1:
            chosen = [longest(members)]
        else:
            m = similarity_matrix(members, cfg.similarity, include_proximity=False)
            sub = agglomerate(m, lanes, Linkage.AVERAGE)
            chosen = [longest([members[i] for i in sub.members(s)]) for s in range(sub.k)]
        movements.append(Movement(name, c, tuple(chosen)))
    for msg in diagnostics:
        log.warning(msg)
    if stopbar is None:
        stopbar = Stopbar(min(float(t.xy[:, 1].min()) for t in valid))
    return MovementModel(stopbar, tuple(movements), cfg, tuple(diagnostics))


def train(d: ApproachDataset, cfg: PipelineConfig | None = None) -> MovementModel:
    cfg = cfg or PipelineConfig()
    stopbar = find_stopbar(d, cfg)
    valid = extract_valid_set(d, stopbar, cfg)
    clusters = cluster_movements(valid, cfg)
    # heading reference from the raw tracks so the approach leg is included
    usable = [t for t in d if len(t) >= 2]
    model = select_modelling_trajectories(valid, clusters, cfg, stopbar=stopbar,
                                          reference=approach_direction(usable))
    notes = []
    if stopbar.fallback:
        notes.append("no stopped locations; stopbar from 25th percentile of all y values")
    dropped = len(d) - len(valid)
    if dropped:
        notes.append(f"{dropped} trajectories had fewer than {cfg.min_points} points past the stopbar")
    if notes:
        model = MovementModel(model.stopbar, model.movements, model.config,
                              tuple(notes) + model.diagnostics)
    return model


# -- assignment ------------------------------------------------------------------

def score_movements(t: Trajectory, model: MovementModel) -> dict[str, SimilarityBreakdown] | None:
    """Best (lowest) breakdown per movement, or None when ``t`` is unusable."""
    clipped = clip_to_stopbar(t, model.stopbar)
    if clipped is None or len(clipped) < 2:
        return None
    scores = {}
    for mv in model.movements:
        best = None
        for ref in mv.trajectories:
            b = composite_similarity(clipped, ref, model.config.similarity, include_proximity=False)
            if best is None or b.s < best.s:
                best = b
        scores[mv.label] = best
    return scores


def _argmin_label(scores: Mapping[str, SimilarityBreakdown]) -> tuple[str, float]:
    label, best = None, math.inf
    for name, b in scores.items():
        if b.s < best:
            label, best = name, b.s
    return label, best


def assign_movement(t: Trajectory, model: MovementModel) -> tuple[str, float]:
    """Movement of the most similar modelling trajectory and its score.

    Returns ``(Unknown, nan)`` when fewer than two points lie past the stopbar.
    """
    scores = score_movements(t, model)
    if not scores:
        return UNKNOWN, math.nan
    return _argmin_label(scores)


@dataclass(frozen=True)
class VehicleResult:
    label: str
    similarity: float
    breakdowns: Mapping[str, SimilarityBreakdown]


@dataclass(frozen=True)
class ClassificationResult:
    vehicles: Mapping[str, VehicleResult]
    counts: Mapping[str, int]

    def labels(self) -> dict[str, str]:
        return {vid: r.label for vid, r in self.vehicles.items()}


def classify_dataset(d: ApproachDataset | Sequence[Trajectory], model: MovementModel) -> ClassificationResult:
    vehicles = {}
    counts = {label: 0 for label in model.labels}
    counts[UNKNOWN] = 0
    for t in d:
        scores = score_movements(t, model)
        if not scores:
            result = VehicleResult(UNKNOWN, math.nan, {})
        else:
            label, s = _argmin_label(scores)
            result = VehicleResult(label, s, scores)
        vehicles[t.vehicle_id] = result
        counts[result.label] += 1
    return ClassificationResult(vehicles, counts)
