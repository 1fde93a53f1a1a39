"""Space-time separable spatio-temporal scale space at toy scale.

Volumes are smoothed by a rotationally symmetric spatial Gaussian per frame
followed by the causal temporal integrator cascade per pixel; the two
operations commute.  On top of the smoothed representation, the module
provides the first- and second-order temporal derivatives of the spatial
Laplacian (center-surround receptive fields with a temporal derivative
profile), the determinant of the spatio-temporal Hessian, synthetic
blink/onset-blob generators, and a small raw-volume file format.

Spatial derivatives use central differences on the smoothed volume and
temporal derivatives use the causal backward differences, with spatial
scale normalization s^(m gamma_s / 2) and temporal normalization delegated
to the 1-D policies.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d
from scipy.signal import lfilter

from .kernels import eval_gamma_kernel
from .scalespace import ScaleLadder, _sampled_gaussian_fir, _stage_coeffs

__all__ = [
    "VideoVolume",
    "SpatioTemporalScaleSpace",
    "smooth_volume",
    "operator_lgn",
    "det_spatiotemporal_hessian",
    "blink_generator",
    "onset_blob_generator",
    "write_volume",
    "read_volume",
]

_MAGIC = b"TSVL"
_VERSION = 1


@dataclass
class VideoVolume:
    """Dense (frames, height, width) voxel volume with grid spacings."""

    data: np.ndarray
    dx: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3 or min(self.data.shape) < 3:
            raise ValueError("volume must be (frames, height, width) with "
                             "every axis >= 3")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class SpatioTemporalScaleSpace:
    """Smoothed 5-D representation L[spatial_scale][level][t][y][x]."""

    s_list: np.ndarray
    taus: np.ndarray
    L: np.ndarray
    dx: float
    dt: float
    ladder: ScaleLadder


def _spatial_smooth_frames(data: np.ndarray, sigma_pix: float) -> np.ndarray:
    if sigma_pix <= 0:
        return data.copy()
    fir = _sampled_gaussian_fir(sigma_pix ** 2, 1.0)
    out = correlate1d(data, fir, axis=1, mode="reflect")
    return correlate1d(out, fir, axis=2, mode="reflect")


def _temporal_smooth_levels(data: np.ndarray, ladder: ScaleLadder,
                            dt: float) -> np.ndarray:
    out = np.empty((ladder.n_levels,) + data.shape)
    cur = data
    expose = {s: k for k, s in enumerate(ladder.stages_per_level)}
    for j, mu in enumerate(ladder.stage_mus, start=1):
        b, a = _stage_coeffs(mu, dt)
        cur = lfilter(b, a, cur, axis=0)
        if j in expose:
            out[expose[j]] = cur
    return out


def smooth_volume(volume: VideoVolume, s_list, ladder: ScaleLadder) -> SpatioTemporalScaleSpace:
    """Separable spatio-temporal smoothing over all requested scale pairs.

    Spatial smoothing is a truncated sampled Gaussian per frame at variance
    s (length^2 units); temporal smoothing is the causal cascade per pixel.
    The result is streaming-capable in principle since the temporal pass is
    time-recursive; here it is evaluated in batch.
    """
    s_arr = np.asarray(s_list, dtype=float)
    if s_arr.size == 0 or np.any(s_arr <= 0):
        raise ValueError("s_list must hold positive spatial variances")
    L = np.empty((len(s_arr), ladder.n_levels) + volume.data.shape)
    for j, s in enumerate(s_arr):
        sp = _spatial_smooth_frames(volume.data, math.sqrt(s) / volume.dx)
        L[j] = _temporal_smooth_levels(sp, ladder, volume.dt)
    return SpatioTemporalScaleSpace(s_list=s_arr, taus=ladder.taus.copy(),
                                    L=L, dx=volume.dx, dt=volume.dt,
                                    ladder=ladder)


def _laplacian(plane_stack: np.ndarray, dx: float) -> np.ndarray:
    lap = (np.roll(plane_stack, -1, axis=-1) + np.roll(plane_stack, 1, axis=-1)
           + np.roll(plane_stack, -1, axis=-2) + np.roll(plane_stack, 1, axis=-2)
           - 4.0 * plane_stack) / dx ** 2
    # Replicate edges rather than wrapping.
    lap[..., 0] = lap[..., 1]
    lap[..., -1] = lap[..., -2]
    lap[..., 0, :] = lap[..., 1, :]
    lap[..., -1, :] = lap[..., -2, :]
    return lap


def _temporal_diff(arr: np.ndarray, dt: float, order: int) -> np.ndarray:
    out = np.empty_like(arr)
    if order == 1:
        out[1:] = (arr[1:] - arr[:-1]) / dt
        out[0] = out[1]
    else:
        out[2:] = (arr[2:] - 2.0 * arr[1:-1] + arr[:-2]) / dt ** 2
        out[0] = out[1] = out[2]
    return out


def operator_lgn(space: SpatioTemporalScaleSpace, n: int, gamma_s: float,
                 gamma_tau: float) -> np.ndarray:
    """Scale-normalized order-n temporal derivative of the spatial Laplacian.

    Returns s^gamma_s tau^(n gamma_tau / 2) (L_xxt..t + L_yyt..t) for every
    (spatial scale, temporal level) pair, shaped like the input L array.
    """
    if n not in (1, 2):
        raise ValueError("temporal order must be 1 or 2")
    out = np.empty_like(space.L)
    for j, s in enumerate(space.s_list):
        lap = _laplacian(space.L[j], space.dx)
        for k, tau in enumerate(space.taus):
            pref = s ** gamma_s * tau ** (n * gamma_tau / 2.0)
            out[j, k] = pref * _temporal_diff(lap[k], space.dt, n)
    return out


def _spatial_diff(arr: np.ndarray, dx: float, axis: int, order: int) -> np.ndarray:
    if order == 1:
        out = (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * dx)
    else:
        out = (np.roll(arr, -1, axis=axis) - 2.0 * arr
               + np.roll(arr, 1, axis=axis)) / dx ** 2
    sl_lo = [slice(None)] * arr.ndim
    sl_lo2 = [slice(None)] * arr.ndim
    sl_hi = [slice(None)] * arr.ndim
    sl_hi2 = [slice(None)] * arr.ndim
    sl_lo[axis], sl_lo2[axis] = 0, 1
    sl_hi[axis], sl_hi2[axis] = -1, -2
    out[tuple(sl_lo)] = out[tuple(sl_lo2)]
    out[tuple(sl_hi)] = out[tuple(sl_hi2)]
    return out


def det_spatiotemporal_hessian(space: SpatioTemporalScaleSpace, gamma_s: float,
                               gamma_tau: float) -> np.ndarray:
    """Scale-normalized determinant of the spatio-temporal Hessian,

        s^(2 gamma_s) tau^gamma_tau (Lxx Lyy Ltt + 2 Lxy Lxt Lyt
            - Lxx Lyt^2 - Lyy Lxt^2 - Ltt Lxy^2),

    per (spatial scale, temporal level) pair.
    """
    out = np.empty_like(space.L)
    for j, s in enumerate(space.s_list):
        vol = space.L[j]
        for k, tau in enumerate(space.taus):
            V = vol[k]
            Lxx = _spatial_diff(V, space.dx, 2, 2)
            Lyy = _spatial_diff(V, space.dx, 1, 2)
            Lx = _spatial_diff(V, space.dx, 2, 1)
            Lxy = _spatial_diff(Lx, space.dx, 1, 1)
            Ltt = _temporal_diff(V, space.dt, 2)
            Lxt = _temporal_diff(Lx, space.dt, 1)
            Lyt = _temporal_diff(_spatial_diff(V, space.dx, 1, 1), space.dt, 1)
            det = (Lxx * Lyy * Ltt + 2.0 * Lxy * Lxt * Lyt
                   - Lxx * Lyt ** 2 - Lyy * Lxt ** 2 - Ltt * Lxy ** 2)
            out[j, k] = s ** (2.0 * gamma_s) * tau ** gamma_tau * det
    return out


def _gaussian_blob(height: int, width: int, s0: float, dx: float) -> np.ndarray:
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    y = (np.arange(height) - cy) * dx
    x = (np.arange(width) - cx) * dx
    r2 = y[:, None] ** 2 + x[None, :] ** 2
    blob = np.exp(-r2 / (2.0 * s0)) / (2.0 * math.pi * s0)
    clipped = 1.0 - blob.sum() * dx * dx
    if clipped > 1e-4:
        raise ValueError(f"volume too small: {clipped:.2e} of the spatial "
                         "mass would be clipped")
    return blob


def blink_generator(s0: float, K0: int, mu: float, frames: int, height: int,
                    width: int, dx: float = 1.0, dt: float = 1.0) -> VideoVolume:
    """Separable transient event: spatial Gaussian times a causal temporal
    peak, f(x, y, t) = g(x, y; s0) U(t; mu, K0)."""
    blob = _gaussian_blob(height, width, s0, dx)
    t = np.arange(frames) * dt
    u = eval_gamma_kernel(t, mu, K0, 0)
    if u[-1] * dt * frames > 1e-4:
        raise ValueError("volume too short for the temporal support")
    return VideoVolume(data=u[:, None, None] * blob[None, :, :], dx=dx, dt=dt)


def onset_blob_generator(s0: float, K0: int, mu: float, frames: int, height: int,
                         width: int, dx: float = 1.0, dt: float = 1.0) -> VideoVolume:
    """Separable onset event: spatial Gaussian times the primitive of the
    causal temporal peak."""
    blob = _gaussian_blob(height, width, s0, dx)
    t = np.arange(frames) * dt
    u = eval_gamma_kernel(t, mu, K0, 0)
    ramp = np.zeros(frames)
    ramp[1:] = np.cumsum(0.5 * (u[1:] + u[:-1])) * dt
    return VideoVolume(data=ramp[:, None, None] * blob[None, :, :], dx=dx, dt=dt)


def write_volume(path, volume: VideoVolume) -> None:
    """Write a volume as little-endian planar float32 frames.

    Layout: magic 'TSVL', u32 version, u32 width, u32 height, u32 frames,
    f64 dx, f64 dt, then frames * height * width float32 voxels in frame-major
    (planar) order.  All fields little-endian.
    """
    header = _MAGIC + struct.pack("<IIIIdd", _VERSION, volume.width,
                                  volume.height, volume.frames,
                                  volume.dx, volume.dt)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(volume.data.astype("<f4").tobytes())


def read_volume(path) -> VideoVolume:
    """Read a volume written by write_volume."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a raw volume file (bad magic)")
        version, width, height, frames, dx, dt = struct.unpack(
            "<IIIIdd", fh.read(struct.calcsize("<IIIIdd")))
        if version != _VERSION:
            raise ValueError(f"unsupported volume file version {version}")
        raw = fh.read(4 * width * height * frames)
    data = np.frombuffer(raw, dtype="<f4").reshape(frames, height, width)
    return VideoVolume(data=data.astype(float), dx=dx, dt=dt)
