"""Trajectory types, CSV ingestion and the endpoint geometry shared by every stage.

Coordinates are image pixels: x grows to the right, y grows downward and
y = 0 is the top edge of the frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LEFT = "Left"
THROUGH = "Through"
RIGHT = "Right"
UNKNOWN = "Unknown"

CSV_HEADER = ("vehicle_id", "frame", "x", "y")


def cluster_label(index: int) -> str:
    """Generic name for a movement cluster that has not been given a direction."""
    return f"cluster-{index}"


class TrajectoryError(ValueError):
    pass


class TrajectoryFormatError(TrajectoryError):
    """Raised for malformed trajectory files; carries the 1-based file line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateTrajectoryError(TrajectoryError):
    pass


@dataclass(frozen=True)
class TrackPoint:
    frame: int
    x: float
    y: float

    def __post_init__(self):
        if self.frame < 0:
            raise TrajectoryError(f"negative frame {self.frame}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise TrajectoryError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class Trajectory:
    vehicle_id: str
    points: tuple[TrackPoint, ...]
    _xy: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.points:
            raise TrajectoryError(f"trajectory {self.vehicle_id!r} has no points")
        points = tuple(self.points)
        for prev, cur in zip(points, points[1:]):
            if cur.frame <= prev.frame:
                raise TrajectoryError(
                    f"trajectory {self.vehicle_id!r}: frames not strictly increasing "
                    f"({prev.frame} -> {cur.frame})"
                )
        xy = np.array([(p.x, p.y) for p in points], dtype=float)
        xy.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "_xy", xy)

    @classmethod
    def from_arrays(cls, vehicle_id: str, frames: Iterable[int], xs: Iterable[float],
                    ys: Iterable[float]) -> "Trajectory":
        pts = tuple(TrackPoint(int(f), float(x), float(y)) for f, x, y in zip(frames, xs, ys))
        return cls(str(vehicle_id), pts)

    @property
    def xy(self) -> np.ndarray:
        """Read-only (n, 2) array of point coordinates."""
        return self._xy

    @property
    def start(self) -> TrackPoint:
        return self.points[0]

    @property
    def end(self) -> TrackPoint:
        return self.points[-1]

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, keep: Sequence[bool] | np.ndarray) -> "Trajectory | None":
        """Trajectory restricted to the masked points, or None if nothing survives."""
        pts = tuple(p for p, k in zip(self.points, keep) if k)
        if not pts:
            return None
        return Trajectory(self.vehicle_id, pts)


@dataclass(frozen=True)
class ApproachDataset:
    approach_id: str
    trajectories: tuple[Trajectory, ...] = ()

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        seen = set()
        for t in trajs:
            if t.vehicle_id in seen:
                raise TrajectoryError(f"duplicate vehicle_id {t.vehicle_id!r}")
            seen.add(t.vehicle_id)
        object.__setattr__(self, "trajectories", trajs)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def by_id(self) -> dict[str, Trajectory]:
        return {t.vehicle_id: t for t in self.trajectories}


def net_vector(t: Trajectory) -> tuple[float, float]:
    """Displacement from the first to the last point."""
    if len(t) < 2:
        raise DegenerateTrajectoryError(
            f"trajectory {t.vehicle_id!r} needs at least 2 points for a direction"
        )
    return (t.end.x - t.start.x, t.end.y - t.start.y)


def net_length(t: Trajectory) -> float:
    """Endpoint-to-endpoint distance (not arc length); 0 for a single point."""
    dx = t.end.x - t.start.x
    dy = t.end.y - t.start.y
    return math.sqrt(dx * dx + dy * dy)


def _parse_float(text: str, name: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TrajectoryFormatError(f"{name}={text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise TrajectoryFormatError(f"{name}={text!r} is not finite", line)
    return value


def load_trajectories(path: str | Path, approach_id: str | None = None) -> ApproachDataset:
    """Read a ``vehicle_id,frame,x,y`` CSV into a dataset.

    Rows may come in any order; they are grouped by vehicle (in order of first
    appearance) and sorted by frame.
    """
    path = Path(path)
    groups: dict[str, dict[int, tuple[float, float]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return ApproachDataset(approach_id or path.stem)
        header = [h.strip() for h in header]
        missing = [c for c in CSV_HEADER if c not in header]
        if missing:
            raise TrajectoryFormatError(f"missing columns {missing}", 1)
        cols = {name: header.index(name) for name in CSV_HEADER}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise TrajectoryFormatError(f"expected {len(header)} fields, got {len(row)}", line)
            vid = row[cols["vehicle_id"]].strip()
            if not vid:
                raise TrajectoryFormatError("empty vehicle_id", line)
            try:
                frame = int(row[cols["frame"]])
            except ValueError:
                raise TrajectoryFormatError(f"frame={row[cols['frame']]!r} is not an integer",
                                            line) from None
            if frame < 0:
                raise TrajectoryFormatError(f"negative frame {frame}", line)
            x = _parse_float(row[cols["x"]], "x", line)
            y = _parse_float(row[cols["y"]], "y", line)
            frames = groups.setdefault(vid, {})
            if frame in frames:
                raise TrajectoryFormatError(f"duplicate frame {frame} for vehicle {vid!r}", line)
            frames[frame] = (x, y)

    trajectories = []
    for vid, frames in groups.items():
        pts = tuple(TrackPoint(f, *frames[f]) for f in sorted(frames))
        trajectories.append(Trajectory(vid, pts))
    return ApproachDataset(approach_id or path.stem, tuple(trajectories))


def format_float(value: float) -> str:
    return f"{value:.6g}"


def save_trajectories(dataset: ApproachDataset | Iterable[Trajectory], path: str | Path) -> None:
    trajectories = dataset.trajectories if isinstance(dataset, ApproachDataset) else dataset
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t in trajectories:
            for p in t.points:
                writer.writerow((t.vehicle_id, p.frame, format_float(p.x), format_float(p.y)))
