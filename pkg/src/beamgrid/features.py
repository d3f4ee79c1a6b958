"""Voxel features built from a street scene.

Two feature families live here: the per-grid vehicle distribution tensor
(grid occupancy summarized as a normalized 7-entry row per 3D grid cell) and
the LIDAR occupancy voxel grid, plus the flat situational-awareness vector
used by the fully connected baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .geometry import ray_box_intersection

if TYPE_CHECKING:
    from .scene import Scene


class IndexOutOfRange(Exception):
    """Grid index outside the grid dimensions."""


class BoundsViolation(Exception):
    """A vehicle dimension exceeds the normalization bounds."""


@dataclass(frozen=True)
class GridSpec:
    """Partition of the coverage box into dims[0] x dims[1] x dims[2] cells.

    ``pitch`` is (cell width along X, cell length along Y, cell height along Z)
    in meters; ``origin`` is the minimum corner of the coverage box.
    """

    dims: tuple[int, int, int] = (14, 6, 6)
    pitch: tuple[float, float, float] = (2.0, 6.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if any(d < 1 for d in self.dims):
            raise ValueError("grid dims must be >= 1")
        if any(p <= 0 for p in self.pitch):
            raise ValueError("grid pitch must be > 0")

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=float) * np.asarray(self.pitch, dtype=float)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=float) + 0.5 * self.extent


@dataclass(frozen=True)
class NormBounds:
    """Maximum vehicle width/length/height used to normalize feature rows."""

    w_max: float = 3.0
    l_max: float = 12.0
    h_max: float = 4.0

    def __post_init__(self):
        if min(self.w_max, self.l_max, self.h_max) <= 0:
            raise ValueError("normalization bounds must be > 0")

    def admits(self, length: float, width: float, height: float) -> bool:
        return width <= self.w_max and length <= self.l_max and height <= self.h_max


@dataclass
class VdfTensor:
    """Vehicle distribution feature: data has shape dims + (7,).

    ``counts`` holds the number of vehicle centers that fell in each cell, so
    occupancy can be distinguished from a legal all-zero occupied row.
    """

    data: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class PcfSpec:
    """Voxelization spec for LIDAR point clouds."""

    voxel: tuple[float, float, float] = (0.1, 0.15, 0.5)
    dims: tuple[int, int, int] = (256, 256, 12)
    origin: tuple[float, float, float] = (1.2, -1.2, 0.0)
    mode: str = "binary"

    def __post_init__(self):
        if self.mode not in ("binary", "count"):
            raise ValueError("mode must be 'binary' or 'count'")

    @classmethod
    def centered_on(cls, grid: GridSpec, voxel=(0.1, 0.15, 0.5), dims=(256, 256, 12),
                    mode: str = "binary") -> "PcfSpec":
        """Spec whose box is centered on the coverage box of ``grid``."""
        extent = np.asarray(dims, dtype=float) * np.asarray(voxel, dtype=float)
        origin = np.asarray(grid.origin, dtype=float) + 0.5 * (grid.extent - extent)
        return cls(voxel=tuple(voxel), dims=tuple(dims), origin=tuple(origin), mode=mode)


@dataclass
class PcfGrid:
    """Occupancy voxel grid plus the count of points that fell outside it."""

    data: np.ndarray
    drops: int
    mode: str


@dataclass(frozen=True)
class LidarConfig:
    """Spinning-scanner ray fan: n_azimuth beams per elevation ring."""

    n_azimuth: int = 180
    elevations: tuple[float, ...] = tuple(np.deg2rad(np.linspace(-25.0, 2.0, 10)))
    max_range: float = 80.0
    mount_height: float = 1.0


def grid_index(center, spec: GridSpec):
    """Cell index of a point, or None when it lies outside the coverage box.

    Cells are half-open [lo, hi) along every axis, so a point exactly on an
    interior boundary belongs to the higher-index cell and a point on the
    maximum face of the coverage box is outside.
    """
    rel = (np.asarray(center, dtype=float) - np.asarray(spec.origin, dtype=float)) \
        / np.asarray(spec.pitch, dtype=float)
    idx = np.floor(rel).astype(int)
    if np.any(idx < 0) or np.any(idx >= np.asarray(spec.dims)):
        return None
    return (int(idx[0]), int(idx[1]), int(idx[2]))


def lcs_origin(g, spec: GridSpec) -> np.ndarray:
    """Minimum-corner vertex of cell ``g``: the local-coordinate-system origin.

    The local axes are parallel to the global ones, so local coordinates of any
    point inside the cell are the point minus this vertex, componentwise in
    [0, pitch).
    """
    g = np.asarray(g, dtype=int)
    if np.any(g < 0) or np.any(g >= np.asarray(spec.dims)):
        raise IndexOutOfRange(f"grid index {tuple(g)} outside dims {spec.dims}")
    return np.asarray(spec.origin, dtype=float) + g * np.asarray(spec.pitch, dtype=float)


def build_vdf(scene: "Scene", spec: GridSpec, bounds: NormBounds) -> VdfTensor:
    """Vehicle distribution tensor of shape dims + (7,).

    For each cell holding at least one vehicle center the row is

        [x_l/pitch_x, y_l/pitch_y, z_l/pitch_z,
         w_avg/w_max, l_avg/l_max, h_avg/h_max, theta_avg/(2*pi)]

    where (x_l, y_l, z_l) is the averaged center expressed in the cell's local
    frame and the averages run over the vehicles inside the cell.  Empty cells
    are all-zero.  Accumulation uses exact summation, so the result does not
    depend on the order of the vehicle list.
    """
    for v in scene.vehicles:
        if not bounds.admits(v.length, v.width, v.height):
            raise BoundsViolation(
                f"vehicle dims (l={v.length}, w={v.width}, h={v.height}) exceed "
                f"bounds (w_max={bounds.w_max}, l_max={bounds.l_max}, h_max={bounds.h_max})")

    dims = spec.dims
    data = np.zeros(dims + (7,), dtype=np.float64)
    counts = np.zeros(dims, dtype=np.int64)

    cells: dict[tuple[int, int, int], list] = {}
    for v in scene.vehicles:
        g = grid_index(v.center, spec)
        if g is None:
            continue
        cells.setdefault(g, []).append(v)

    pitch = np.asarray(spec.pitch, dtype=float)
    for g, members in cells.items():
        n = len(members)
        mean_center = np.array([
            math.fsum(v.center[0] for v in members) / n,
            math.fsum(v.center[1] for v in members) / n,
            math.fsum(v.center[2] for v in members) / n,
        ])
        w_avg = math.fsum(v.width for v in members) / n
        l_avg = math.fsum(v.length for v in members) / n
        h_avg = math.fsum(v.height for v in members) / n
        theta_avg = math.fsum(v.azimuth for v in members) / n
        local = mean_center - lcs_origin(g, spec)
        data[g] = [
            local[0] / pitch[0],
            local[1] / pitch[1],
            local[2] / pitch[2],
            w_avg / bounds.w_max,
            l_avg / bounds.l_max,
            h_avg / bounds.h_max,
            theta_avg / (2.0 * np.pi),
        ]
        counts[g] = n
    return VdfTensor(data=data, counts=counts)


def simulate_lidar(scene: "Scene", config: LidarConfig = LidarConfig()) -> np.ndarray:
    """Point cloud (N, 3) from a scanner mounted above the MS roof center.

    Casts the azimuth/elevation ray fan and keeps the nearest hit per ray
    against every non-MS vehicle box; rays without a hit inside max_range
    contribute no point.  Fully deterministic.
    """
    ms = scene.ms()
    origin = ms.center + np.array([0.0, 0.0, ms.height / 2.0 + config.mount_height])
    boxes = [v.box() for v in scene.vehicles if not v.is_ms]

    azimuths = 2.0 * np.pi * np.arange(config.n_azimuth) / config.n_azimuth
    points = []
    for elev in config.elevations:
        ce, se = np.cos(elev), np.sin(elev)
        for az in azimuths:
            direction = np.array([np.cos(az) * ce, np.sin(az) * ce, se])
            best = None
            for box in boxes:
                t = ray_box_intersection(origin, direction, box)
                if t is not None and 1e-9 < t <= config.max_range:
                    if best is None or t < best:
                        best = t
            if best is not None:
                points.append(origin + best * direction)
    if not points:
        return np.zeros((0, 3), dtype=np.float64)
    return np.asarray(points, dtype=np.float64)


def voxelize_pcf(points: np.ndarray, spec: PcfSpec) -> PcfGrid:
    """Voxelize a point cloud with the same floor/half-open cell convention as
    grid_index; out-of-bounds points are dropped and counted."""
    dims = np.asarray(spec.dims)
    dtype = np.int64 if spec.mode == "count" else np.uint8
    data = np.zeros(spec.dims, dtype=dtype)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if pts.shape[0] == 0:
        return PcfGrid(data=data, drops=0, mode=spec.mode)

    rel = (pts - np.asarray(spec.origin, dtype=float)) / np.asarray(spec.voxel, dtype=float)
    idx = np.floor(rel).astype(np.int64)
    in_bounds = np.all((idx >= 0) & (idx < dims), axis=1)
    kept = idx[in_bounds]
    if spec.mode == "count":
        np.add.at(data, (kept[:, 0], kept[:, 1], kept[:, 2]), 1)
    else:
        data[kept[:, 0], kept[:, 1], kept[:, 2]] = 1
    return PcfGrid(data=data, drops=int(np.sum(~in_bounds)), mode=spec.mode)


def build_sa_vector(scene: "Scene", grid: GridSpec, bounds: NormBounds,
                    max_vehicles: int = 20) -> np.ndarray:
    """Flat situational-awareness vector: normalized MS location followed by
    per-vehicle (center, dims, azimuth) blocks, zero-padded to max_vehicles."""
    extent = grid.extent
    origin = np.asarray(grid.origin, dtype=float)
    out = np.zeros(3 + 7 * max_vehicles, dtype=np.float64)
    out[:3] = (scene.ms().center - origin) / extent
    for k, v in enumerate(scene.vehicles[:max_vehicles]):
        base = 3 + 7 * k
        out[base:base + 3] = (v.center - origin) / extent
        out[base + 3] = v.length / bounds.l_max
        out[base + 4] = v.width / bounds.w_max
        out[base + 5] = v.height / bounds.h_max
        out[base + 6] = v.azimuth / (2.0 * np.pi)
    return out


def sa_vector_width(max_vehicles: int = 20) -> int:
    return 3 + 7 * max_vehicles
