"""Synthetic street scenes: lane-based vehicle placement around a roadside unit.

Scenes stand in for an externally ray-traced drive dataset.  Generation is a
pure function of (config, seed); vehicles sit on the ground plane with the
center height pinned to half the body height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .features import GridSpec, NormBounds
from .geometry import OrientedBox

TWO_PI = 2.0 * math.pi

# (length, width, height) sampling ranges per vehicle class, meters.
DEFAULT_DIMENSION_RANGES = {
    "car": ((3.8, 5.0), (1.7, 2.0), (1.4, 1.8)),
    "truck": ((6.0, 9.0), (2.2, 2.5), (2.6, 3.4)),
    "bus": ((10.0, 12.0), (2.4, 2.55), (2.9, 3.5)),
}


class PlacementFailure(Exception):
    """Non-overlapping placement could not be found; the config is overcrowded."""


class InsufficientFrames(Exception):
    """Beam-coherence labeling needs at least two consecutive frames."""


class NoMs(Exception):
    """The scene has no mobile-station vehicle."""


def _norm_seed(seed: int) -> int:
    return int(seed) % (1 << 64)


@dataclass
class Vehicle:
    """A box-shaped vehicle; center.z is always height/2 (on the ground plane)."""

    center: np.ndarray
    length: float
    width: float
    height: float
    azimuth: float
    is_ms: bool = False

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("vehicle dimensions must be > 0")
        if not 0.0 <= self.azimuth < TWO_PI:
            raise ValueError("azimuth must be in [0, 2*pi)")
        if self.center[2] != self.height / 2.0:
            raise ValueError("center.z must equal height/2")

    def box(self) -> OrientedBox:
        return OrientedBox(
            center=self.center,
            half_extents=np.array([self.length / 2.0, self.width / 2.0, self.height / 2.0]),
            yaw=self.azimuth,
        )

    def footprint_corners(self) -> np.ndarray:
        """The four ground-plane corners, shape (4, 2)."""
        c, s = math.cos(self.azimuth), math.sin(self.azimuth)
        hl, hw = self.length / 2.0, self.width / 2.0
        ex = np.array([c, s])
        ey = np.array([-s, c])
        base = self.center[:2]
        return np.array([base + sx * hl * ex + sy * hw * ey
                         for sx, sy in ((1, 1), (1, -1), (-1, -1), (-1, 1))])


@dataclass
class Scene:
    """One frame: vehicles (exactly one MS), the RSU pose, and the coverage grid."""

    vehicles: list[Vehicle]
    rsu_position: np.ndarray
    grid: GridSpec
    frame_id: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        self.rsu_position = np.asarray(self.rsu_position, dtype=np.float64)

    def ms_index(self) -> int:
        for i, v in enumerate(self.vehicles):
            if v.is_ms:
                return i
        raise NoMs("scene has no mobile station")

    def ms(self) -> Vehicle:
        return self.vehicles[self.ms_index()]

    @property
    def coverage_origin(self) -> np.ndarray:
        return np.asarray(self.grid.origin, dtype=np.float64)

    @property
    def coverage_extent(self) -> np.ndarray:
        return self.grid.extent


@dataclass
class SceneConfig:
    """Knobs for the lane-based generator.

    ``class_weights`` is the blocker-density knob: more trucks/buses means more
    blocked RSU-MS paths.  Coverage is derived from ``grid``; ``rsu_position``
    defaults to a roadside pole at mid-street height ``rsu_height``.
    """

    lane_count: int = 4
    lane_width: float = 3.5
    vehicle_count_range: tuple[int, int] = (6, 14)
    dimension_ranges: dict = field(default_factory=lambda: dict(DEFAULT_DIMENSION_RANGES))
    class_weights: dict = field(default_factory=lambda: {"car": 0.55, "truck": 0.27, "bus": 0.18})
    ms_selection: str = "nearest-center"
    grid: GridSpec = field(default_factory=GridSpec)
    bounds: NormBounds = field(default_factory=NormBounds)
    rsu_position: tuple[float, float, float] | None = None
    rsu_height: float = 4.0
    azimuth_jitter: float = 0.05
    max_placement_attempts: int = 100

    def validate(self):
        if self.lane_count < 1 or self.lane_width <= 0:
            raise ValueError("need at least one lane of positive width")
        lo, hi = self.vehicle_count_range
        if not (1 <= lo <= hi):
            raise ValueError("vehicle_count_range must satisfy 1 <= min <= max")
        if not self.dimension_ranges:
            raise ValueError("dimension_ranges must not be empty")
        for name, (lr, wr, hr) in self.dimension_ranges.items():
            for r in (lr, wr, hr):
                if not (0 < r[0] <= r[1]):
                    raise ValueError(f"bad dimension range for class {name!r}")
            if not self.bounds.admits(lr[1], wr[1], hr[1]):
                raise ValueError(f"class {name!r} ranges exceed the normalization bounds")
        if self.ms_selection not in ("nearest-center", "random"):
            raise ValueError(f"unknown ms_selection rule {self.ms_selection!r}")
        if self.lane_count * self.lane_width > self.grid.extent[0]:
            raise ValueError("road wider than coverage")

    def resolved_rsu(self) -> np.ndarray:
        if self.rsu_position is not None:
            return np.asarray(self.rsu_position, dtype=np.float64)
        origin = np.asarray(self.grid.origin, dtype=np.float64)
        extent = self.grid.extent
        return np.array([origin[0], origin[1] + extent[1] / 2.0, self.rsu_height])


def _footprints_overlap(a: Vehicle, b: Vehicle) -> bool:
    """Separating-axis test on the two ground-plane rectangles."""
    ca, cb = a.footprint_corners(), b.footprint_corners()
    for corners in (ca, cb):
        for i in range(2):
            edge = corners[i + 1] - corners[i]
            axis = np.array([-edge[1], edge[0]])
            pa = ca @ axis
            pb = cb @ axis
            if pa.max() <= pb.min() or pb.max() <= pa.min():
                return False
    return True


def generate_scene(config: SceneConfig, seed: int) -> Scene:
    """Place vehicles on lanes without overlapping footprints; pick one MS.

    Deterministic for fixed (config, seed).  Raises PlacementFailure when a
    vehicle cannot be placed within config.max_placement_attempts tries.
    """
    config.validate()
    rng = np.random.default_rng(_norm_seed(seed))
    origin = np.asarray(config.grid.origin, dtype=np.float64)
    extent = config.grid.extent

    names = sorted(config.class_weights)
    weights = np.array([config.class_weights[n] for n in names], dtype=float)
    weights = weights / weights.sum()

    road_x0 = origin[0] + (extent[0] - config.lane_count * config.lane_width) / 2.0

    n = int(rng.integers(config.vehicle_count_range[0], config.vehicle_count_range[1] + 1))
    vehicles: list[Vehicle] = []
    for _ in range(n):
        for _attempt in range(config.max_placement_attempts):
            cls = names[rng.choice(len(names), p=weights)]
            (l_lo, l_hi), (w_lo, w_hi), (h_lo, h_hi) = config.dimension_ranges[cls]
            length = float(rng.uniform(l_lo, l_hi))
            width = float(rng.uniform(w_lo, w_hi))
            height = float(rng.uniform(h_lo, h_hi))

            lane = int(rng.integers(config.lane_count))
            heading = math.pi / 2.0 if lane < (config.lane_count + 1) // 2 else 3.0 * math.pi / 2.0
            azimuth = (heading + float(rng.uniform(-config.azimuth_jitter,
                                                   config.azimuth_jitter))) % TWO_PI

            lane_center = road_x0 + (lane + 0.5) * config.lane_width
            slack = max(config.lane_width - width, 0.0) / 2.0
            x = lane_center + float(rng.uniform(-0.5 * slack, 0.5 * slack))
            y_margin = length / 2.0
            y = float(rng.uniform(origin[1] + y_margin, origin[1] + extent[1] - y_margin))

            candidate = Vehicle(center=np.array([x, y, height / 2.0]),
                                length=length, width=width, height=height, azimuth=azimuth)
            if not any(_footprints_overlap(candidate, v) for v in vehicles):
                vehicles.append(candidate)
                break
        else:
            raise PlacementFailure(
                f"could not place vehicle {len(vehicles) + 1}/{n} after "
                f"{config.max_placement_attempts} attempts")

    if config.ms_selection == "random":
        ms_idx = int(rng.integers(len(vehicles)))
    else:
        center_xy = (origin + extent / 2.0)[:2]
        dists = [float(np.hypot(*(v.center[:2] - center_xy))) for v in vehicles]
        ms_idx = int(np.argmin(dists))
    vehicles[ms_idx].is_ms = True

    return Scene(vehicles=vehicles, rsu_position=config.resolved_rsu(),
                 grid=config.grid, frame_id=0, rng_seed=_norm_seed(seed))


def perturb_locations(scene: Scene, sigma_c: float, seed: int, ms_only: bool = False) -> Scene:
    """Copy of the scene with N(0, sigma_c^2) noise on each vehicle's ground
    coordinates; heights, dimensions, and azimuths are untouched.

    Perturbed centers may leave coverage; feature builders then simply see the
    vehicle outside every cell.  With ms_only=True only the MS is perturbed.
    """
    if sigma_c < 0:
        raise ValueError("sigma_c must be >= 0")
    rng = np.random.default_rng(_norm_seed(seed))
    vehicles = []
    for v in scene.vehicles:
        if ms_only and not v.is_ms:
            vehicles.append(replace(v, center=v.center.copy()))
            continue
        dx, dy = rng.normal(0.0, sigma_c, size=2)
        vehicles.append(replace(v, center=v.center + np.array([dx, dy, 0.0])))
    return Scene(vehicles=vehicles, rsu_position=scene.rsu_position.copy(),
                 grid=scene.grid, frame_id=scene.frame_id, rng_seed=scene.rng_seed)


def advance_scene(scene: Scene, distances: np.ndarray, frame_id: int | None = None) -> Scene:
    """Move each vehicle along its heading by the given per-vehicle distance."""
    vehicles = []
    for v, d in zip(scene.vehicles, distances):
        step = d * np.array([math.cos(v.azimuth), math.sin(v.azimuth), 0.0])
        vehicles.append(replace(v, center=v.center + step))
    return Scene(vehicles=vehicles, rsu_position=scene.rsu_position.copy(), grid=scene.grid,
                 frame_id=scene.frame_id + 1 if frame_id is None else frame_id,
                 rng_seed=scene.rng_seed)


def make_frames(scene: Scene, n_frames: int, speed_range: tuple[float, float],
                seed: int) -> list[Scene]:
    """A short constant-velocity trajectory starting at ``scene``."""
    rng = np.random.default_rng(_norm_seed(seed))
    speeds = rng.uniform(speed_range[0], speed_range[1], size=len(scene.vehicles))
    frames = [scene]
    for _ in range(n_frames - 1):
        frames.append(advance_scene(frames[-1], speeds))
    return frames


def label_beam_coherence(frames: list[Scene], beam_oracle, clip: int) -> list[int]:
    """Per-frame count of subsequent consecutive frames that keep the current
    frame's optimal beam pair, clipped to ``clip``.

    ``beam_oracle`` maps a Scene to its optimal flat beam-pair index.
    """
    if len(frames) < 2:
        raise InsufficientFrames("need at least 2 frames")
    pairs = [beam_oracle(f) for f in frames]
    labels = []
    for i in range(len(pairs)):
        run = 0
        for j in range(i + 1, len(pairs)):
            if pairs[j] != pairs[i]:
                break
            run += 1
        labels.append(min(run, clip))
    return labels
