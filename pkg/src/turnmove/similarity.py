"""Composite trajectory dissimilarity.

Three ingredients are combined into one score where lower means more alike:

* distance similarity: the *smaller* of the two directed Hausdorff distances,
  so a fragment lying on a longer track scores 0 against it;
* angle similarity: the angle between the shorter track's net vector and the
  matching stretch of the longer track;
* proximity factor: a signed end-point term that pushes apart tracks whose end
  points diverge and pulls together parallel lanes of one movement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trajectory import DegenerateTrajectoryError, Trajectory, net_length, net_vector

log = logging.getLogger(__name__)


class DegenerateVectorError(DegenerateTrajectoryError):
    """One or both direction vectors of an angle comparison have zero length."""

    def __init__(self, message: str, zero_vectors: int):
        super().__init__(message)
        self.zero_vectors = zero_vectors


@dataclass(frozen=True)
class SimilarityConfig:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    angle_threshold_deg: float = 15.0
    degree_divisor: float = 3.6

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite non-negative number, got {value}")
        if not (0 < self.angle_threshold_deg <= 180):
            raise ValueError(f"angle_threshold_deg must be in (0, 180], got {self.angle_threshold_deg}")
        if not (math.isfinite(self.degree_divisor) and self.degree_divisor > 0):
            raise ValueError(f"degree_divisor must be positive, got {self.degree_divisor}")


@dataclass(frozen=True)
class SimilarityBreakdown:
    d_s: float
    t_s: float
    p_e: float
    s: float
    angle_fallback: bool = False


def _xy(t: Trajectory | np.ndarray) -> np.ndarray:
    xy = t.xy if isinstance(t, Trajectory) else np.asarray(t, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) == 0:
        raise DegenerateTrajectoryError("directed Hausdorff distance needs non-empty point sets")
    return xy


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    return dx * dx + dy * dy


def directed_hausdorff(p: Trajectory | np.ndarray, q: Trajectory | np.ndarray) -> float:
    """max over points of ``p`` of the distance to the nearest point of ``q``."""
    d2 = _squared_distances(_xy(p), _xy(q))
    # sqrt is monotone, so taking it last gives the same value as per-pair roots
    return float(np.sqrt(d2.min(axis=1).max()))


def distance_similarity(i: Trajectory, j: Trajectory) -> float:
    d2 = _squared_distances(_xy(i), _xy(j))
    forward = d2.min(axis=1).max()
    backward = d2.min(axis=0).max()
    return float(np.sqrt(min(forward, backward)))


def rear_distance(a: Trajectory, b: Trajectory) -> float:
    """Euclidean distance between the two end points."""
    dx = a.end.x - b.end.x
    dy = a.end.y - b.end.y
    return math.sqrt(dx * dx + dy * dy)


def _vector_angle(u: tuple[float, float], v: tuple[float, float]) -> float:
    cross = u[0] * v[1] - u[1] * v[0]
    dot = u[0] * v[0] + u[1] * v[1]
    return math.degrees(math.atan2(abs(cross), dot))


def matched_vector(i: Trajectory, j: Trajectory) -> tuple[float, float]:
    """Vector on ``j`` from its point nearest ``i``'s start to its point nearest ``i``'s end.

    Ties in nearest-point search resolve to the lowest point index.
    """
    xy = j.xy
    ends = np.array([[i.start.x, i.start.y], [i.end.x, i.end.y]])
    # hypot rather than squared distance: squaring tiny offsets underflows to ties
    nearest = np.hypot(ends[:, None, 0] - xy[None, :, 0], ends[:, None, 1] - xy[None, :, 1]).argmin(axis=1)
    a, b = xy[nearest[0]], xy[nearest[1]]
    return (float(b[0] - a[0]), float(b[1] - a[1]))


def angle_difference(i: Trajectory, j: Trajectory) -> float:
    """Unsigned angle in degrees between ``i``'s net vector and the matched vector on ``j``."""
    vi = net_vector(i)
    vji = matched_vector(i, j)
    zero = (vi == (0.0, 0.0)) + (vji == (0.0, 0.0))
    if zero:
        raise DegenerateVectorError(
            f"zero-length direction vector comparing {i.vehicle_id!r} with {j.vehicle_id!r}", zero
        )
    return min(180.0, max(0.0, _vector_angle(vi, vji)))


def _angle_order(i: Trajectory, j: Trajectory) -> tuple[Trajectory, Trajectory]:
    li, lj = net_length(i), net_length(j)
    if li < lj:
        return i, j
    if li > lj:
        return j, i
    # equal lengths: order by id so the score is symmetric
    return (i, j) if i.vehicle_id <= j.vehicle_id else (j, i)


def angle_similarity(i: Trajectory, j: Trajectory) -> float:
    """Angle difference measured from the shorter trajectory onto the longer one."""
    short, long_ = _angle_order(i, j)
    return angle_difference(short, long_)


def proximity_factor_from(d_s: float, t_s: float, d_r: float,
                          cfg: SimilarityConfig | None = None) -> float:
    cfg = cfg or SimilarityConfig()
    if d_r < d_s and t_s > cfg.angle_threshold_deg:
        return 0.0
    return t_s / cfg.degree_divisor * (d_r - d_s)


def angle_similarity_or_fallback(i: Trajectory, j: Trajectory, cfg: SimilarityConfig) -> tuple[float, bool]:
    try:
        return angle_similarity(i, j), False
    except DegenerateVectorError as exc:
        t_s = 0.0 if exc.zero_vectors == 2 else cfg.angle_threshold_deg
        log.debug("angle fallback %.6g for %s/%s: %s", t_s, i.vehicle_id, j.vehicle_id, exc)
        return t_s, True


def proximity_factor(i: Trajectory, j: Trajectory, cfg: SimilarityConfig | None = None) -> float:
    cfg = cfg or SimilarityConfig()
    t_s, _ = angle_similarity_or_fallback(i, j, cfg)
    return proximity_factor_from(distance_similarity(i, j), t_s, rear_distance(i, j), cfg)


def composite_similarity(i: Trajectory, j: Trajectory, cfg: SimilarityConfig | None = None,
                         include_proximity: bool = True) -> SimilarityBreakdown:
    cfg = cfg or SimilarityConfig()
    d_s = distance_similarity(i, j)
    t_s, fallback = angle_similarity_or_fallback(i, j, cfg)
    p_e = proximity_factor_from(d_s, t_s, rear_distance(i, j), cfg) if include_proximity else 0.0
    s = cfg.w1 * d_s + cfg.w2 * t_s + cfg.w3 * p_e
    return SimilarityBreakdown(d_s, t_s, p_e, s, fallback)


def similarity_matrix(trajectories: Sequence[Trajectory], cfg: SimilarityConfig | None = None,
                      include_proximity: bool = True) -> np.ndarray:
    """Symmetric matrix of composite scores with a zero diagonal."""
    n = len(trajectories)
    m = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            s = composite_similarity(trajectories[a], trajectories[b], cfg, include_proximity).s
            m[a, b] = m[b, a] = s
    return m
