"""Declarative run configuration (YAML).

Top-level sections, all optional::

    pipeline:    k_movements, lanes_per_movement, stop_displacement_tolerance,
                 min_points, min_cluster_fraction
    similarity:  w1, w2, w3, angle_threshold_deg, degree_divisor
    scene:       SceneSpec fields; movements as [{label, lanes, per_lane}, ...]
    baselines:
      line_based:        [{label, entry: [[x, y], [x, y]], exit: [[x, y], [x, y]]}, ...]
      shape_similarity:  {distance_limit, angle_limit,
                          models: [{label, points: [[x, y], ...]}, ...]}
    evaluate:    policy (count-as-error | exclude), align (bool)
    paths:       input, model, output, labels, truth, output_dir

Unknown keys anywhere in this schema raise :class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .baselines import LineBasedSpec, LinePair, ShapeModel, ShapeSimilaritySpec, VirtualLine
from .evaluation import UnknownPolicy
from .pipeline import PipelineConfig
from .similarity import SimilarityConfig
from .synth import MovementSpec, SceneSpec
from .trajectory import Trajectory

SECTIONS = ("pipeline", "similarity", "scene", "baselines", "evaluate", "paths")
PATH_KEYS = ("input", "model", "output", "labels", "truth", "output_dir")
EVALUATE_KEYS = ("policy", "align")


class ConfigError(ValueError):
    pass


def _check_keys(where: str, data: Mapping, allowed) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _field_names(cls) -> list[str]:
    return [f.name for f in dataclasses.fields(cls) if f.init]


@dataclass
class RunConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    scene: SceneSpec | None = None
    line_based: LineBasedSpec | None = None
    shape_similarity: ShapeSimilaritySpec | None = None
    policy: UnknownPolicy = UnknownPolicy.COUNT_AS_ERROR
    align: bool = False
    paths: dict[str, str] = field(default_factory=dict)

    @property
    def similarity(self) -> SimilarityConfig:
        return self.pipeline.similarity


def _line(where: str, value) -> VirtualLine:
    try:
        (ax, ay), (bx, by) = value
        return VirtualLine((float(ax), float(ay)), (float(bx), float(by)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected [[x, y], [x, y]] ({exc})") from None


def parse_config(data: Mapping[str, Any] | None) -> RunConfig:
    data = data or {}
    _check_keys("config", data, SECTIONS)
    try:
        sim_data = data.get("similarity") or {}
        _check_keys("similarity", sim_data, _field_names(SimilarityConfig))
        pipe_data = dict(data.get("pipeline") or {})
        _check_keys("pipeline", pipe_data, [n for n in _field_names(PipelineConfig) if n != "similarity"])
        pipeline = PipelineConfig.from_dict({**pipe_data, "similarity": sim_data})

        scene = None
        if data.get("scene") is not None:
            scene_data = dict(data["scene"])
            _check_keys("scene", scene_data, _field_names(SceneSpec))
            if "movements" in scene_data:
                movements = []
                for k, m in enumerate(scene_data["movements"]):
                    _check_keys(f"scene.movements[{k}]", m, _field_names(MovementSpec))
                    movements.append(MovementSpec(**m))
                scene_data["movements"] = tuple(movements)
            scene = SceneSpec(**scene_data)

        baselines = data.get("baselines") or {}
        _check_keys("baselines", baselines, ("line_based", "shape_similarity"))
        line_based = None
        if baselines.get("line_based"):
            pairs = []
            for k, item in enumerate(baselines["line_based"]):
                where = f"baselines.line_based[{k}]"
                _check_keys(where, item, ("label", "entry", "exit"))
                pairs.append(LinePair(str(item["label"]), _line(f"{where}.entry", item["entry"]),
                                      _line(f"{where}.exit", item["exit"])))
            line_based = LineBasedSpec(tuple(pairs))
        shape = None
        if baselines.get("shape_similarity"):
            sd = baselines["shape_similarity"]
            _check_keys("baselines.shape_similarity", sd, ("distance_limit", "angle_limit", "models"))
            if "distance_limit" not in sd or "angle_limit" not in sd:
                raise ConfigError("baselines.shape_similarity: distance_limit and angle_limit are required")
            models = []
            for k, item in enumerate(sd.get("models") or ()):
                _check_keys(f"baselines.shape_similarity.models[{k}]", item, ("label", "points"))
                pts = item["points"]
                traj = Trajectory.from_arrays(f"model-{k}", range(len(pts)),
                                              [p[0] for p in pts], [p[1] for p in pts])
                models.append(ShapeModel(str(item["label"]), traj))
            shape = ShapeSimilaritySpec(tuple(models), float(sd["distance_limit"]), float(sd["angle_limit"]))

        evaluate = data.get("evaluate") or {}
        _check_keys("evaluate", evaluate, EVALUATE_KEYS)
        policy = UnknownPolicy(evaluate.get("policy", UnknownPolicy.COUNT_AS_ERROR.value))

        paths = data.get("paths") or {}
        _check_keys("paths", paths, PATH_KEYS)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(pipeline, scene, line_based, shape, policy, bool(evaluate.get("align", False)),
                     {k: str(v) for k, v in paths.items()})


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return parse_config(data)
