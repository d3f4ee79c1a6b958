"""Binary file formats: all little-endian with a 4-byte magic per stream.

    BGT1  tensor           magic, u8 rank, rank x u32 dims, payload floats
    BGSC  scene stream     magic, u16 version, then length-prefixed records of
                           per-vehicle float32 octets (cx cy cz l w h theta is_ms)
    BGDS  dataset          magic, u16 version, header, then per-sample records

Standalone BGT1 files always carry float32 payloads; checkpoint files embed
BGT1 blobs whose payload dtype is declared in their own header.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

MAGIC_TENSOR = b"BGT1"
MAGIC_SCENES = b"BGSC"
MAGIC_DATASET = b"BGDS"

SCENE_STREAM_VERSION = 1
DATASET_VERSION = 1

FEATURE_KINDS = ("vdf", "pcf", "sa-vector")

_VEHICLE_RECORD = struct.Struct("<8f")


class FormatError(Exception):
    """Bad magic, version, or a structurally corrupt payload."""


def _read_exact(fp, n: int) -> bytes:
    buf = fp.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated stream: wanted {n} bytes, got {len(buf)}")
    return buf


def write_tensor(fp, arr: np.ndarray, dtype: str = "<f4") -> None:
    """One BGT1 blob: magic, u8 rank, u32 dims, row-major payload (last axis fastest)."""
    arr = np.asarray(arr)
    if arr.ndim > 255:
        raise ValueError("tensor rank exceeds format limit")
    fp.write(MAGIC_TENSOR)
    fp.write(struct.pack("<B", arr.ndim))
    for d in arr.shape:
        fp.write(struct.pack("<I", d))
    fp.write(np.ascontiguousarray(arr, dtype=np.dtype(dtype)).tobytes(order="C"))


def read_tensor(fp, dtype: str = "<f4") -> np.ndarray:
    magic = _read_exact(fp, 4)
    if magic != MAGIC_TENSOR:
        raise FormatError(f"bad tensor magic {magic!r}")
    rank = struct.unpack("<B", _read_exact(fp, 1))[0]
    dims = struct.unpack(f"<{rank}I", _read_exact(fp, 4 * rank)) if rank else ()
    dt = np.dtype(dtype)
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    data = np.frombuffer(_read_exact(fp, count * dt.itemsize), dtype=dt)
    return data.reshape(dims).copy()


def save_tensor_file(path, arr: np.ndarray) -> None:
    """Standalone tensor file; payload is always float32."""
    with open(path, "wb") as fp:
        write_tensor(fp, arr, dtype="<f4")


def load_tensor_file(path) -> np.ndarray:
    with open(path, "rb") as fp:
        return read_tensor(fp, dtype="<f4")


def write_scenes(path, scenes) -> None:
    """Scene stream: one length-prefixed record per scene, vehicles as float32."""
    with open(path, "wb") as fp:
        fp.write(MAGIC_SCENES)
        fp.write(struct.pack("<H", SCENE_STREAM_VERSION))
        for scene in scenes:
            payload = b"".join(
                _VEHICLE_RECORD.pack(v.center[0], v.center[1], v.center[2],
                                     v.length, v.width, v.height, v.azimuth,
                                     1.0 if v.is_ms else 0.0)
                for v in scene.vehicles)
            fp.write(struct.pack("<I", len(payload)))
            fp.write(payload)


def read_scenes(path, grid=None, rsu_position=None):
    """Rebuild scenes from a stream.

    The wire format stores only the vehicles, so the coverage grid and RSU pose
    must be supplied (defaults are used otherwise).  Frame ids are sequential.
    """
    from .features import GridSpec
    from .scene import Scene, Vehicle, TWO_PI

    grid = grid if grid is not None else GridSpec()
    if rsu_position is None:
        origin = np.asarray(grid.origin, dtype=float)
        extent = grid.extent
        rsu_position = np.array([origin[0], origin[1] + extent[1] / 2.0, extent[2]])

    scenes = []
    with open(path, "rb") as fp:
        magic = _read_exact(fp, 4)
        if magic != MAGIC_SCENES:
            raise FormatError(f"bad scene-stream magic {magic!r}")
        version = struct.unpack("<H", _read_exact(fp, 2))[0]
        if version != SCENE_STREAM_VERSION:
            raise FormatError(f"unsupported scene-stream version {version}")
        frame = 0
        while True:
            head = fp.read(4)
            if not head:
                break
            if len(head) != 4:
                raise FormatError("truncated record length")
            length = struct.unpack("<I", head)[0]
            if length % _VEHICLE_RECORD.size:
                raise FormatError(f"record length {length} not a whole vehicle count")
            payload = _read_exact(fp, length)
            vehicles = []
            for off in range(0, length, _VEHICLE_RECORD.size):
                cx, cy, cz, l, w, h, theta, ms_flag = _VEHICLE_RECORD.unpack_from(payload, off)
                vehicles.append(Vehicle(center=np.array([cx, cy, cz], dtype=np.float64),
                                        length=float(l), width=float(w), height=float(h),
                                        azimuth=float(theta) % TWO_PI,
                                        is_ms=ms_flag != 0.0))
            scenes.append(Scene(vehicles=vehicles, rsu_position=np.asarray(rsu_position, float),
                                grid=grid, frame_id=frame))
            frame += 1
    return scenes


@dataclass
class DatasetFile:
    """In-memory image of one BGDS container."""

    feature_kind: str
    noise_power: float
    features: np.ndarray
    gains: np.ndarray
    labels: np.ndarray
    los: np.ndarray
    splits: np.ndarray
    coherence: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return len(self.labels)


def write_container(path, data: DatasetFile) -> None:
    """Header: magic, u16 version, u8 feature kind, u8 coherence flag,
    u32 sample count, f64 noise power.  Per sample: u8 split, u8 los flag,
    u32 label, optional i32 coherence label, feature BGT1, gain BGT1."""
    if data.feature_kind not in FEATURE_KINDS:
        raise ValueError(f"unknown feature kind {data.feature_kind!r}")
    n = data.n_samples
    has_coherence = data.coherence is not None
    with open(path, "wb") as fp:
        fp.write(MAGIC_DATASET)
        fp.write(struct.pack("<HBBId", DATASET_VERSION,
                             FEATURE_KINDS.index(data.feature_kind),
                             1 if has_coherence else 0, n, data.noise_power))
        for i in range(n):
            fp.write(struct.pack("<BBI", int(data.splits[i]), 1 if data.los[i] else 0,
                                 int(data.labels[i])))
            if has_coherence:
                fp.write(struct.pack("<i", int(data.coherence[i])))
            write_tensor(fp, data.features[i], dtype="<f4")
            write_tensor(fp, data.gains[i], dtype="<f4")


def read_container(path, verify: bool = True) -> DatasetFile:
    """Load a container; with verify=True re-check that every stored label is
    the argmax of its stored gain matrix (ties to the lowest flat index)."""
    with open(path, "rb") as fp:
        magic = _read_exact(fp, 4)
        if magic != MAGIC_DATASET:
            raise FormatError(f"bad dataset magic {magic!r}")
        version, kind_code, has_coherence, n, noise_power = struct.unpack(
            "<HBBId", _read_exact(fp, 16))
        if version != DATASET_VERSION:
            raise FormatError(f"unsupported dataset version {version}")
        if kind_code >= len(FEATURE_KINDS):
            raise FormatError(f"unknown feature kind code {kind_code}")
        if not math.isfinite(noise_power) or noise_power <= 0:
            raise FormatError(f"bad noise power {noise_power}")

        features, gains = [], []
        labels = np.zeros(n, dtype=np.int64)
        los = np.zeros(n, dtype=bool)
        splits = np.zeros(n, dtype=np.uint8)
        coherence = np.zeros(n, dtype=np.int32) if has_coherence else None
        for i in range(n):
            split, los_flag, label = struct.unpack("<BBI", _read_exact(fp, 6))
            splits[i], los[i], labels[i] = split, bool(los_flag), label
            if has_coherence:
                coherence[i] = struct.unpack("<i", _read_exact(fp, 4))[0]
            features.append(read_tensor(fp, dtype="<f4"))
            gains.append(read_tensor(fp, dtype="<f4"))
        if fp.read(1):
            raise FormatError("trailing bytes after the last sample record")

    data = DatasetFile(feature_kind=FEATURE_KINDS[kind_code], noise_power=noise_power,
                       features=np.stack(features) if n else np.zeros((0,)),
                       gains=np.stack(gains) if n else np.zeros((0,)),
                       labels=labels, los=los, splits=splits, coherence=coherence)
    if verify:
        for i in range(n):
            if int(np.argmax(data.gains[i])) != int(labels[i]):
                raise FormatError(
                    f"sample {i}: stored label {labels[i]} is not the gain argmax "
                    f"{int(np.argmax(data.gains[i]))}")
    return data
