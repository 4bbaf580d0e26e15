from __future__ import annotations

import math

import pytest
from hypothesis import settings

from turnmove.trajectory import Trajectory

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def make_traj(points, vid: str = "a", start_frame: int = 0) -> Trajectory:
    """Trajectory from (x, y) pairs on consecutive frames."""
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    return Trajectory.from_arrays(vid, range(start_frame, start_frame + len(xs)), xs, ys)


def brute_directed_hausdorff(p, q) -> float:
    worst = 0.0
    for a in p:
        best = math.inf
        for b in q:
            d = math.sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


@pytest.fixture
def traj():
    return make_traj
