"""Batch command-line interface: ``turnmove train|classify|evaluate|generate|render``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .baselines import classify_line_based, classify_shape_similarity
from .config import ConfigError, RunConfig, load_config
from .evaluation import (
    EvaluationError,
    UnknownPolicy,
    align_labels,
    build_confusion,
    load_labels,
    metrics_report,
    relabel,
    report_json,
    report_table,
)
from .pipeline import ModelFormatError, MovementModel, PipelineError, classify_dataset, train
from .render import write_svg
from .synth import SceneSpec, generate, write_scene
from .trajectory import UNKNOWN, TrajectoryError, format_float, load_trajectories

log = logging.getLogger("turnmove")

METHODS = ("pipeline", "line", "shape")


class CliError(Exception):
    pass


def _path(args, cfg: RunConfig, name: str, flag: str) -> Path:
    value = getattr(args, name, None) or cfg.paths.get(name)
    if not value:
        raise CliError(f"{flag} is required (or set paths.{name} in the config)")
    return Path(value)


def _existing(path: Path) -> Path:
    if not path.is_file():
        raise CliError(f"input file not found: {path}")
    return path


def _parse_lanes(items: Sequence[str]) -> dict:
    lanes: dict = {}
    for item in items:
        name, sep, count = item.partition("=")
        if not sep or not name or not count.strip().isdigit():
            raise CliError(f"--lanes expects NAME=COUNT, got {item!r}")
        lanes[int(name) if name.isdigit() else name] = int(count)
    return lanes


def cmd_train(args, cfg: RunConfig) -> int:
    src = _existing(_path(args, cfg, "input", "--input"))
    out = _path(args, cfg, "output", "--output")
    pcfg = cfg.pipeline
    overrides = {}
    if args.k is not None:
        overrides["k_movements"] = args.k
    if args.lanes:
        overrides["lanes_per_movement"] = {**pcfg.lanes_per_movement, **_parse_lanes(args.lanes)}
    if args.min_points is not None:
        overrides["min_points"] = args.min_points
    if args.min_cluster_fraction is not None:
        overrides["min_cluster_fraction"] = args.min_cluster_fraction
    if overrides:
        try:
            pcfg = dataclasses.replace(pcfg, **overrides)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    dataset = load_trajectories(src)
    model = train(dataset, pcfg)
    model.save(out)
    for note in model.diagnostics:
        log.warning(note)
    log.info("stopbar y=%s; movements %s", format_float(model.stopbar.y_sl), ", ".join(model.labels))
    return 0


def _write_labels(path: Path, rows: list[tuple[str, str, float]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("vehicle_id", "label", "similarity"))
        for vid, label, s in rows:
            w.writerow((vid, label, "" if math.isnan(s) else format_float(s)))


def cmd_classify(args, cfg: RunConfig) -> int:
    src = _existing(_path(args, cfg, "input", "--input"))
    out = _path(args, cfg, "output", "--output")
    dataset = load_trajectories(src)
    if args.method == "pipeline":
        model = MovementModel.load(_existing(_path(args, cfg, "model", "--model")))
        result = classify_dataset(dataset, model)
        rows = [(vid, r.label, r.similarity) for vid, r in result.vehicles.items()]
        counts = dict(result.counts)
    else:
        if args.method == "line":
            if cfg.line_based is None:
                raise CliError("--method line needs baselines.line_based in the config")
            labels = {t.vehicle_id: classify_line_based(t, cfg.line_based) for t in dataset}
        else:
            if cfg.shape_similarity is None:
                raise CliError("--method shape needs baselines.shape_similarity in the config")
            labels = {t.vehicle_id: classify_shape_similarity(t, cfg.shape_similarity, cfg.similarity)
                      for t in dataset}
        rows = [(vid, label, math.nan) for vid, label in labels.items()]
        spec = cfg.line_based.movements if args.method == "line" else cfg.shape_similarity.models
        counts = {m.label: 0 for m in spec}
        counts[UNKNOWN] = 0
        for label in labels.values():
            counts[label] += 1
    _write_labels(out, rows)
    print("movement,count")
    for label, n in counts.items():
        print(f"{label},{n}")
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    pred = load_labels(_existing(_path(args, cfg, "labels", "--labels")))
    truth = load_labels(_existing(_path(args, cfg, "truth", "--truth")))
    policy = UnknownPolicy(args.policy) if args.policy else cfg.policy
    report = metrics_report(build_confusion(truth, pred, policy))
    text = ""
    if args.align or cfg.align:
        mapping = align_labels(truth, pred)
        named = {k: report[k] for k in ("accuracy", "balanced_accuracy", "macro_f1")}
        report = metrics_report(build_confusion(truth, relabel(pred, mapping), policy))
        report["alignment"] = {k: v for k, v in sorted(mapping.items()) if k != UNKNOWN}
        report["as_named"] = named
        text = ("as named: accuracy {} / balanced accuracy {} / macro F1 {}\n".format(
            *(format_float(v) for v in named.values()))
            + "alignment: " + ", ".join(f"{k} -> {v}" for k, v in report["alignment"].items()) + "\n")
    if args.output:
        Path(args.output).write_text(report_json(report), encoding="utf-8")
    sys.stdout.write(report_table(report) + text)
    return 0


def cmd_generate(args, cfg: RunConfig) -> int:
    out_dir = _path(args, cfg, "output_dir", "--output-dir")
    spec = cfg.scene or SceneSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    dataset, truth = generate(spec)
    traj_path, truth_path = write_scene(dataset, truth, out_dir, args.stem)
    log.info("wrote %d vehicles to %s and %s", len(dataset), traj_path, truth_path)
    print(traj_path)
    print(truth_path)
    return 0


def cmd_render(args, cfg: RunConfig) -> int:
    src = _existing(_path(args, cfg, "input", "--input"))
    out = _path(args, cfg, "output", "--output")
    dataset = load_trajectories(src)
    model = None
    model_path = args.model or cfg.paths.get("model")
    if model_path:
        model = MovementModel.load(_existing(Path(model_path)))
    labels = load_labels(_existing(Path(args.labels))) if args.labels else None
    write_svg(out, dataset, model, labels, title=dataset.approach_id)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turnmove", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more diagnostics on stderr (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="YAML run configuration")
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "train a movement model from a trajectory CSV")
    p.add_argument("--input", help="trajectory CSV (vehicle_id,frame,x,y)")
    p.add_argument("--output", help="model JSON to write")
    p.add_argument("--k", type=int, help="number of movements")
    p.add_argument("--lanes", action="append", default=[], metavar="NAME=COUNT",
                   help="lanes for a movement name or cluster index (repeatable)")
    p.add_argument("--min-points", type=int)
    p.add_argument("--min-cluster-fraction", type=float)

    p = add("classify", cmd_classify, "assign each trajectory to a movement")
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--model", help="model JSON (pipeline method)")
    p.add_argument("--output", help="labels CSV to write")
    p.add_argument("--method", choices=METHODS, default="pipeline")

    p = add("evaluate", cmd_evaluate, "compare labels with ground truth")
    p.add_argument("--labels", help="predicted labels CSV")
    p.add_argument("--truth", help="ground-truth labels CSV")
    p.add_argument("--policy", choices=[x.value for x in UnknownPolicy])
    p.add_argument("--align", action="store_true",
                   help="map predicted names onto truth labels before scoring")
    p.add_argument("--output", help="metrics JSON to write")

    p = add("generate", cmd_generate, "write a synthetic scene and its ground truth")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--stem", default="scene", help="file name stem (default: scene)")

    p = add("render", cmd_render, "draw a scene as SVG")
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--model", help="model JSON; adds stopbar, clusters and modelling tracks")
    p.add_argument("--labels", help="labels CSV to colour by instead of classifying")
    p.add_argument("--output", help="SVG to write")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (CliError, ConfigError, TrajectoryError, PipelineError, ModelFormatError,
            EvaluationError, ValueError, OSError) as exc:
        print(f"turnmove {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
