"""Synthetic intersection-approach scenes with known movement labels.

Vehicles enter at the top of the frame, drive down their lane to a stop
zone, then go straight down (through) or follow a quarter circle and a
straight exit leg toward the right edge (left turn; with y pointing down, a
vehicle heading down turns left toward +x) or the left edge (right turn).

Randomness comes from :class:`XorShift64Star`, so a scene is a pure function
of its :class:`SceneSpec` and reproducible across platforms and languages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .trajectory import LEFT, RIGHT, THROUGH, ApproachDataset, Trajectory, save_trajectories

MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64* generator seeded through one splitmix64 step.

    state ^= state >> 12; state ^= state << 25; state ^= state >> 27;
    output = state * 0x2545F4914F6CDD1D (mod 2**64).
    ``random()`` maps the top 53 output bits to [0, 1).
    """

    def __init__(self, seed: int):
        z = (seed + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randbelow(self, n: int) -> int:
        return int(self.random() * n)

    def gauss(self, sigma: float = 1.0) -> float:
        """Box-Muller; consumes two uniforms per call."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def sample(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices out of ``range(n)`` (partial Fisher-Yates)."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])


@dataclass(frozen=True)
class MovementSpec:
    label: str
    lanes: int = 1
    per_lane: int = 20


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    frame_size: tuple[float, float] = (800.0, 800.0)
    movements: tuple[MovementSpec, ...] = (
        MovementSpec(LEFT), MovementSpec(THROUGH), MovementSpec(RIGHT))
    noise_sigma: float = 2.0
    truncation_fraction: float = 0.0
    truncation_range: tuple[float, float] = (0.2, 0.4)
    stop_fraction: float = 0.5
    # geometry
    stop_y: float = 400.0
    stop_zone_depth: float = 20.0
    lane_width: float = 60.0
    through_lane_width: float | None = None
    left_radius: float = 250.0
    right_radius: float = 120.0
    speed: float = 10.0
    entry_jitter: float = 40.0
    edge_margin: float = 10.0
    dwell_frames: tuple[int, int] = (2, 6)
    # lateral offsets from this point scale with depth, as lanes do under a
    # perspective camera; None keeps lanes parallel
    vanishing_point: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "movements", tuple(self.movements))
        object.__setattr__(self, "frame_size", tuple(self.frame_size))
        object.__setattr__(self, "truncation_range", tuple(self.truncation_range))
        object.__setattr__(self, "dwell_frames", tuple(self.dwell_frames))
        if self.vanishing_point is not None:
            object.__setattr__(self, "vanishing_point", tuple(self.vanishing_point))
            if self.vanishing_point[1] >= self.stop_y:
                raise ValueError("vanishing point must lie above the stop line")
        if sum(m.lanes * m.per_lane for m in self.movements) <= 0:
            raise ValueError("scene has no vehicles")
        for m in self.movements:
            if m.lanes < 1 or m.per_lane < 0:
                raise ValueError(f"invalid movement spec {m}")
            if m.label not in (LEFT, THROUGH, RIGHT):
                raise ValueError(f"movement label must be Left, Through or Right, got {m.label!r}")
        if not 0 <= self.truncation_fraction < 1:
            raise ValueError("truncation_fraction must be in [0, 1)")
        lo, hi = self.truncation_range
        if not 0 <= lo <= hi < 1:
            raise ValueError("truncation_range must satisfy 0 <= min <= max < 1")
        if not 0 <= self.stop_fraction <= 1:
            raise ValueError("stop_fraction must be in [0, 1]")
        if self.noise_sigma < 0 or self.speed <= 0:
            raise ValueError("noise_sigma must be >= 0 and speed > 0")
        if self.dwell_frames[0] < 2 or self.dwell_frames[1] < self.dwell_frames[0]:
            raise ValueError("dwell_frames must satisfy 2 <= min <= max")

    @property
    def n_vehicles(self) -> int:
        return sum(m.lanes * m.per_lane for m in self.movements)

    @property
    def stop_zone(self) -> tuple[float, float]:
        """(top, bottom) y of the band where stopping vehicles wait."""
        return (self.stop_y - self.stop_zone_depth, self.stop_y)


@dataclass(frozen=True)
class Lane:
    label: str
    index: int
    x: float


@dataclass
class Scene:
    dataset: ApproachDataset
    truth: dict[str, str]
    lanes: dict[str, Lane] = field(default_factory=dict)
    truncated: set[str] = field(default_factory=set)
    stopped_y: list[float] = field(default_factory=list)


_ORDER = {RIGHT: 0, THROUGH: 1, LEFT: 2}


def lane_layout(spec: SceneSpec) -> list[Lane]:
    """Lane centrelines at the stop line, right-turn lanes at small x."""
    movements = sorted(spec.movements, key=lambda m: _ORDER[m.label])
    through_w = spec.through_lane_width or spec.lane_width
    xs = []
    x = 0.0
    prev = None
    for m in movements:
        for i in range(m.lanes):
            if prev is not None:
                x += through_w if (prev == THROUGH and m.label == THROUGH) else spec.lane_width
            xs.append((m.label, i, x))
            prev = m.label
    center = spec.frame_size[0] / 2.0 - x / 2.0
    return [Lane(label, i, xc + center) for label, i, xc in xs]


class _Path:
    """Arc-length parametrised lane template."""

    def __init__(self, spec: SceneSpec, lane: Lane, y0: float):
        self.spec = spec
        self.lane = lane
        self.y0 = y0
        w, h = spec.frame_size
        m = spec.edge_margin
        self.approach = spec.stop_y - y0
        if lane.label == THROUGH:
            self.radius = 0.0
            self.arc = 0.0
            self.exit = (h - m) - spec.stop_y
        else:
            self.radius = spec.left_radius if lane.label == LEFT else spec.right_radius
            self.arc = 0.5 * math.pi * self.radius
            if lane.label == LEFT:
                self.exit = max(0.0, (w - m) - (lane.x + self.radius))
            else:
                self.exit = max(0.0, (lane.x - self.radius) - m)
        self.length = self.approach + self.arc + self.exit

    def point(self, s: float) -> tuple[float, float]:
        x, y = self._plane_point(s)
        vp = self.spec.vanishing_point
        if vp is None:
            return x, y
        scale = (y - vp[1]) / (self.spec.stop_y - vp[1])
        return vp[0] + (x - vp[0]) * scale, y

    def _plane_point(self, s: float) -> tuple[float, float]:
        x0, stop_y = self.lane.x, self.spec.stop_y
        if s <= self.approach or self.lane.label == THROUGH:
            return x0, self.y0 + s
        s -= self.approach
        r = self.radius
        side = 1.0 if self.lane.label == LEFT else -1.0
        if s <= self.arc:
            phi = s / r
            return x0 + side * r * (1.0 - math.cos(phi)), stop_y + r * math.sin(phi)
        s -= self.arc
        return x0 + side * (r + s), stop_y + r


def _vehicle(spec: SceneSpec, rng: XorShift64Star, lane: Lane, vid: str, start_frame: int,
             stops: bool) -> tuple[Trajectory, float | None]:
    y0 = rng.uniform(0.0, spec.entry_jitter)
    path = _Path(spec, lane, y0)
    stop_s = None
    dwell = 0
    if stops:
        top, bottom = spec.stop_zone
        stop_s = rng.uniform(top, bottom) - y0
        dwell = spec.dwell_frames[0] + rng.randbelow(spec.dwell_frames[1] - spec.dwell_frames[0] + 1)
    xs, ys = [], []
    s = 0.0
    stopped_y = None
    while s <= path.length:
        if stop_s is not None and s >= stop_s:
            x, y = path.point(stop_s)
            x += rng.gauss(spec.noise_sigma)
            y += rng.gauss(spec.noise_sigma)
            xs.extend([x] * (dwell + 1))
            ys.extend([y] * (dwell + 1))
            stopped_y = y
            s = stop_s + spec.speed
            stop_s = None
            continue
        x, y = path.point(s)
        if not (0.0 <= x <= spec.frame_size[0] and 0.0 <= y <= spec.frame_size[1]):
            break
        xs.append(x + rng.gauss(spec.noise_sigma))
        ys.append(y + rng.gauss(spec.noise_sigma))
        s += spec.speed
    frames = range(start_frame, start_frame + len(xs))
    return Trajectory.from_arrays(vid, frames, xs, ys), stopped_y


def generate(spec: SceneSpec) -> tuple[ApproachDataset, dict[str, str]]:
    scene = generate_scene(spec)
    return scene.dataset, scene.truth


def generate_scene(spec: SceneSpec) -> Scene:
    """Full scene, including per-vehicle lanes and which ids were truncated."""
    rng = XorShift64Star(spec.seed)
    lanes = lane_layout(spec)
    plan = []
    for m in spec.movements:
        for i in range(m.lanes):
            lane = next(l for l in lanes if l.label == m.label and l.index == i)
            plan.extend([lane] * m.per_lane)
    n = len(plan)
    n_stop = round(spec.stop_fraction * n)
    stoppers = set(rng.sample(n, n_stop))
    n_trunc = round(spec.truncation_fraction * n)
    truncated_idx = set(rng.sample(n, n_trunc))

    trajectories = []
    truth: dict[str, str] = {}
    lane_of: dict[str, Lane] = {}
    truncated: set[str] = set()
    stopped_y: list[float] = []
    width = len(str(n))
    for k, lane in enumerate(plan):
        vid = f"v{k:0{width}d}"
        t, sy = _vehicle(spec, rng, lane, vid, start_frame=3 * k, stops=k in stoppers)
        if sy is not None:
            stopped_y.append(sy)
        if k in truncated_idx:
            lo, hi = spec.truncation_range
            cut = max(1, math.floor(rng.uniform(lo, hi) * len(t)))
            cut = min(cut, len(t) - 1)
            t = Trajectory(vid, t.points[:len(t) - cut])
            truncated.add(vid)
        trajectories.append(t)
        truth[vid] = lane.label
        lane_of[vid] = lane
    return Scene(ApproachDataset(f"synthetic-{spec.seed}", tuple(trajectories)), truth,
                 lane_of, truncated, stopped_y)


def template_path(spec: SceneSpec, lane: Lane, step: float | None = None) -> np.ndarray:
    """Noise-free centreline of ``lane`` from the top of the frame, as an (n, 2) array."""
    path = _Path(spec, lane, 0.0)
    step = step or spec.speed
    s = np.arange(0.0, path.length + 1e-9, step)
    return np.array([path.point(v) for v in s])


def write_scene(dataset: ApproachDataset, truth: dict[str, str], out_dir: str | Path,
                stem: str = "scene") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / f"{stem}.csv"
    truth_path = out_dir / f"{stem}_truth.csv"
    save_trajectories(dataset, traj_path)
    with truth_path.open("w", encoding="utf-8") as fh:
        fh.write("vehicle_id,label\n")
        for vid, label in truth.items():
            fh.write(f"{vid},{label}\n")
    return traj_path, truth_path
