"""Geometric mmWave channel, DFT beam codebooks, and per-sample beam-pair gains.

The channel is a sum of a line-of-sight path (when the RSU-to-MS segment is
unobstructed) and first-order specular reflections off the vertical faces of
the other vehicles' bodies.  Each path contributes
amplitude * outer(rx steering, tx steering^H) for half-wavelength uniform
linear arrays at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import box_faces, mirror_point, segment_intersects_box
from .scene import Scene

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_NOISE_POWER = 1e-9


class NoPath(Exception):
    """No line of sight and no reflector: an outage sample."""


class DimensionMismatch(Exception):
    """Channel matrix and codebook element counts disagree."""


@dataclass(frozen=True)
class Codebook:
    """Unit-norm steering weight vectors, one row per beam."""

    element_count: int
    beams: np.ndarray

    @property
    def beam_count(self) -> int:
        return self.beams.shape[0]


@dataclass(frozen=True)
class ChannelParams:
    """Carrier and path-amplitude settings.

    Amplitudes follow the free-space law wavelength/(4*pi*d) scaled by
    ``amplitude_scale``; reflected paths are further scaled by
    ``reflection_coeff``.  ``phase_jitter_std`` adds a seeded per-path random
    phase (radians); zero keeps the channel a pure function of the scene.
    """

    wavelength: float = SPEED_OF_LIGHT / 28e9
    reflection_coeff: float = 0.3
    amplitude_scale: float = 1.0
    phase_jitter_std: float = 0.0
    tx_axis: tuple[float, float, float] = (0.0, 1.0, 0.0)


@dataclass
class GainMatrix:
    """Non-negative linear power gain per (tx beam, rx beam) pair."""

    gains: np.ndarray
    los: bool
    noise_power: float = DEFAULT_NOISE_POWER

    @property
    def n_pairs(self) -> int:
        return self.gains.size


def dft_codebook(n: int) -> Codebook:
    """n orthogonal beams: beam k has elements exp(2j*pi*k*m/n)/sqrt(n)."""
    if n < 1:
        raise ValueError("element count must be >= 1")
    k = np.arange(n).reshape(-1, 1)
    m = np.arange(n).reshape(1, -1)
    beams = np.exp(2j * np.pi * k * m / n) / math.sqrt(n)
    return Codebook(element_count=n, beams=beams)


def steering_vector(n: int, spatial_cosine: float) -> np.ndarray:
    """Half-wavelength ULA response, elements exp(1j*pi*m*cos(angle))."""
    return np.exp(1j * np.pi * np.arange(n) * spatial_cosine)


def beam_spatial_cosine(k: int, n: int) -> float:
    """Spatial cosine at which DFT beam k of an n-element array peaks, in (-1, 1]."""
    psi = 2.0 * k / n
    return psi if psi <= 1.0 else psi - 2.0


def is_los(scene: Scene, tx: np.ndarray, rx: np.ndarray) -> bool:
    """True iff the open segment tx->rx misses every non-MS vehicle box."""
    for v in scene.vehicles:
        if v.is_ms:
            continue
        if segment_intersects_box(tx, rx, v.box()):
            return False
    return True


def ms_antenna_position(scene: Scene) -> np.ndarray:
    """Receive antenna sits at the MS roof center."""
    ms = scene.ms()
    return ms.center + np.array([0.0, 0.0, ms.height / 2.0])


def _reflection_paths(scene: Scene, tx: np.ndarray, rx: np.ndarray):
    """(departure point, total path length) for every valid one-bounce specular
    reflection off a vertical face of a non-MS vehicle."""
    paths = []
    for v in scene.vehicles:
        if v.is_ms:
            continue
        for face_center, normal, (u_axis, u_half), (v_axis, v_half) in box_faces(v.box()):
            side_tx = float(np.dot(tx - face_center, normal))
            side_rx = float(np.dot(rx - face_center, normal))
            if side_tx <= 0.0 or side_rx <= 0.0:
                continue
            image = mirror_point(tx, face_center, normal)
            denom = float(np.dot(rx - image, normal))
            if abs(denom) < 1e-12:
                continue
            t = float(np.dot(face_center - image, normal)) / denom
            if not 0.0 < t < 1.0:
                continue
            point = image + t * (rx - image)
            rel = point - face_center
            if abs(float(np.dot(rel, u_axis))) > u_half or abs(float(np.dot(rel, v_axis))) > v_half:
                continue
            total = float(np.linalg.norm(rx - image))
            paths.append((point, total))
    return paths


def geometric_channel(scene: Scene, n_tx: int, n_rx: int,
                      params: ChannelParams = ChannelParams(), seed: int = 0) -> np.ndarray:
    """Complex channel matrix of shape (n_rx, n_tx).

    Raises NoPath when the LOS is blocked and no reflector face produces a
    valid one-bounce path.
    """
    tx = scene.rsu_position
    rx = ms_antenna_position(scene)
    ms = scene.ms()
    tx_axis = np.asarray(params.tx_axis, dtype=float)
    tx_axis = tx_axis / np.linalg.norm(tx_axis)
    rx_axis = np.array([math.cos(ms.azimuth), math.sin(ms.azimuth), 0.0])

    # (departure direction, arrival direction, path length, extra amplitude factor)
    paths = []
    if is_los(scene, tx, rx):
        d = float(np.linalg.norm(rx - tx))
        u = (rx - tx) / d
        paths.append((u, u, d, 1.0))
    for point, total in _reflection_paths(scene, tx, rx):
        dep = point - tx
        dep = dep / np.linalg.norm(dep)
        arr = rx - point
        arr = arr / np.linalg.norm(arr)
        paths.append((dep, arr, total, params.reflection_coeff))
    if not paths:
        raise NoPath("blocked line of sight and no reflector face")

    rng = np.random.default_rng(int(seed) % (1 << 64)) if params.phase_jitter_std > 0 else None
    H = np.zeros((n_rx, n_tx), dtype=np.complex128)
    for dep, arr, dist, factor in paths:
        amp = params.amplitude_scale * factor * params.wavelength / (4.0 * np.pi * dist)
        phase = -2.0 * np.pi * dist / params.wavelength
        if rng is not None:
            phase += rng.normal(0.0, params.phase_jitter_std)
        a_tx = steering_vector(n_tx, float(np.dot(dep, tx_axis)))
        a_rx = steering_vector(n_rx, float(np.dot(arr, rx_axis)))
        H += amp * np.exp(1j * phase) * np.outer(a_rx, a_tx.conj())
    return H


def beam_pair_gains(H: np.ndarray, tx_cb: Codebook, rx_cb: Codebook,
                    los: bool = False, noise_power: float = DEFAULT_NOISE_POWER) -> GainMatrix:
    """gains[i, j] = |w_rx_j^H H w_tx_i|^2 over the two codebooks."""
    n_rx, n_tx = H.shape
    if n_tx != tx_cb.element_count or n_rx != rx_cb.element_count:
        raise DimensionMismatch(
            f"H is {H.shape} but codebooks have {tx_cb.element_count} tx / "
            f"{rx_cb.element_count} rx elements")
    coupled = rx_cb.beams.conj() @ H @ tx_cb.beams.T
    gains = np.abs(coupled.T) ** 2
    return GainMatrix(gains=np.ascontiguousarray(gains), los=los, noise_power=noise_power)


def optimal_pair(g: GainMatrix) -> int:
    """Flat index i * N_rx + j of the best pair; ties go to the lowest index."""
    if g.gains.size == 0:
        raise ValueError("empty gain matrix")
    return int(np.argmax(g.gains))
