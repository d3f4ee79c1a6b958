"""Oriented-box primitives shared by the LIDAR sensor model and the blockage test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PARALLEL_EPS = 1e-12


@dataclass(frozen=True)
class OrientedBox:
    """An axis-aligned box rotated by ``yaw`` about the vertical axis through its center.

    ``half_extents`` are ordered (length/2, width/2, height/2); length runs along
    the heading direction (cos yaw, sin yaw, 0).
    """

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float

    def world_to_box(self, points: np.ndarray) -> np.ndarray:
        """Map world-frame points (…, 3) into the box frame."""
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        v = np.asarray(points, dtype=float) - self.center
        out = np.empty_like(v)
        out[..., 0] = c * v[..., 0] + s * v[..., 1]
        out[..., 1] = -s * v[..., 0] + c * v[..., 1]
        out[..., 2] = v[..., 2]
        return out

    def box_to_world(self, points: np.ndarray) -> np.ndarray:
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        v = np.asarray(points, dtype=float)
        out = np.empty_like(v)
        out[..., 0] = c * v[..., 0] - s * v[..., 1]
        out[..., 1] = s * v[..., 0] + c * v[..., 1]
        out[..., 2] = v[..., 2]
        return out + self.center

    def heading(self) -> np.ndarray:
        return np.array([np.cos(self.yaw), np.sin(self.yaw), 0.0])

    def contains(self, point: np.ndarray, tol: float = 0.0) -> bool:
        p = self.world_to_box(point)
        return bool(np.all(np.abs(p) <= self.half_extents + tol))


def _slab_interval(origin, direction, half_extents):
    """Parameter interval [t0, t1] where the line origin + t*direction is inside
    the axis-aligned box |x_i| <= half_extents[i], or None if it misses."""
    t0, t1 = -np.inf, np.inf
    for o, d, e in zip(origin, direction, half_extents):
        if abs(d) < _PARALLEL_EPS:
            if abs(o) > e:
                return None
            continue
        ta = (-e - o) / d
        tb = (e - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def ray_box_intersection(origin: np.ndarray, direction: np.ndarray, box: OrientedBox):
    """Entry distance of the ray origin + t*direction (t >= 0) into the box.

    Returns the smallest non-negative t, or None when the ray misses.
    ``direction`` need not be normalized; t is in units of its length.
    """
    o = box.world_to_box(origin)
    c, s = np.cos(box.yaw), np.sin(box.yaw)
    d = np.array([
        c * direction[0] + s * direction[1],
        -s * direction[0] + c * direction[1],
        direction[2],
    ])
    interval = _slab_interval(o, d, box.half_extents)
    if interval is None:
        return None
    t0, t1 = interval
    if t1 < 0.0:
        return None
    return max(t0, 0.0)


def segment_intersects_box(p0: np.ndarray, p1: np.ndarray, box: OrientedBox) -> bool:
    """True iff the open segment p0 -> p1 passes through the box interior."""
    o = box.world_to_box(p0)
    d = box.world_to_box(p1) - o
    interval = _slab_interval(o, d, box.half_extents)
    if interval is None:
        return False
    t0, t1 = interval
    return t0 < 1.0 and t1 > 0.0 and t0 < t1


def box_faces(box: OrientedBox):
    """The four vertical faces of the box.

    Each face is (face center, outward unit normal, (u axis, u half-size),
    (v axis, v half-size)) with u, v spanning the face plane.
    """
    hx, hy, hz = box.half_extents
    ex = box.heading()
    ey = np.array([-ex[1], ex[0], 0.0])
    ez = np.array([0.0, 0.0, 1.0])
    faces = []
    for sign in (1.0, -1.0):
        faces.append((box.center + sign * hx * ex, sign * ex, (ey, hy), (ez, hz)))
        faces.append((box.center + sign * hy * ey, sign * ey, (ex, hx), (ez, hz)))
    return faces


def mirror_point(point: np.ndarray, plane_point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Reflect a point across the plane through plane_point with unit normal."""
    return point - 2.0 * np.dot(point - plane_point, normal) * normal
