"""Pinhole camera model, poses, depth images and depth gradients.

Conventions used throughout the package:
  * world frame is z-up
  * camera frame: +Z forward (optical axis), +X right, +Y down
  * a pose is (position, unit quaternion world-from-camera); roll is always 0,
    so any orientation is a yaw (about world z) plus a pitch (positive = up)
  * depth values are Euclidean distances along the pixel ray in meters,
    NO_RETURN is +inf
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

NO_RETURN = math.inf

FDEP_MAGIC = b"FDEP"


class PoseError(ValueError):
    """Pose lies outside the grid or inside non-Free space."""


class DepthFileError(ValueError):
    """Malformed depth image file."""


def _quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = math.sqrt(float(np.dot(q, q)))
    if n == 0.0:
        raise ValueError("zero quaternion")
    return q / n


def quat_from_yaw_pitch(yaw: float, pitch: float) -> np.ndarray:
    """Unit quaternion (w,x,y,z), world-from-camera, for yaw about world z
    then pitch about the camera right axis. Roll is fixed to 0."""
    r = rotation_from_yaw_pitch(yaw, pitch)
    return quat_from_matrix(r)


def rotation_from_yaw_pitch(yaw: float, pitch: float) -> np.ndarray:
    """World-from-camera rotation with columns [right, down, forward]."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    fwd = np.array([cy * cp, sy * cp, sp])
    right = np.array([sy, -cy, 0.0])
    down = np.cross(fwd, right)
    return np.stack([right, down, fwd], axis=1)


def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Shepperd's method, branch on the largest diagonal term."""
    m = np.asarray(r, dtype=np.float64)
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    if q[0] < 0.0:
        q = -q
    return _quat_normalize(q)


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True)
class Pose:
    """Camera pose: position p (m, world) and unit quaternion q (world-from-camera)."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.float64).reshape(3))
        q = np.asarray(self.q, dtype=np.float64).reshape(4)
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} deviates from 1 by more than 1e-9")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_yaw_pitch(cls, p, yaw: float, pitch: float) -> "Pose":
        return cls(np.asarray(p, dtype=np.float64), quat_from_yaw_pitch(yaw, pitch))

    def rotation(self) -> np.ndarray:
        return matrix_from_quat(self.q)

    def forward(self) -> np.ndarray:
        return self.rotation()[:, 2]

    def yaw_pitch(self) -> tuple[float, float]:
        f = self.forward()
        pitch = math.asin(max(-1.0, min(1.0, f[2])))
        yaw = math.atan2(f[1], f[0])
        return yaw, pitch


def angle_between_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two direction vectors in degrees."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    c = float(np.dot(a, b)) / (na * nb)
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera. FOV angles are full angles in degrees; max_range in meters.

    Focal lengths place the FOV edges at the outer pixel borders; pixel (u,v)
    samples the ray through the pixel center (u+0.5, v+0.5).
    """

    width: int = 480
    height: int = 480
    fov_x: float = 77.32
    fov_y: float = 77.32
    max_range: float = 3.5

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0.0 < self.fov_x < 180.0 and 0.0 < self.fov_y < 180.0):
            raise ValueError("fov must lie in (0, 180) degrees")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.fov_x) / 2.0)

    @property
    def fy(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.fov_y) / 2.0)

    def pixel_ray_cam(self, u: float, v: float) -> np.ndarray:
        """Unit direction in camera frame through continuous pixel coords (u,v),
        where integer (u,v) means the center of that pixel."""
        x = (u + 0.5 - self.width / 2.0) / self.fx
        y = (v + 0.5 - self.height / 2.0) / self.fy
        d = np.array([x, y, 1.0])
        return d / np.linalg.norm(d)

    def ray_grid_cam(self) -> np.ndarray:
        """(H, W, 3) unit ray directions in camera frame, cached."""
        key = (self.width, self.height, self.fov_x, self.fov_y)
        hit = _RAY_CACHE.get(key)
        if hit is not None:
            return hit
        u = (np.arange(self.width) + 0.5 - self.width / 2.0) / self.fx
        v = (np.arange(self.height) + 0.5 - self.height / 2.0) / self.fy
        xs, ys = np.meshgrid(u, v)
        dirs = np.stack([xs, ys, np.ones_like(xs)], axis=-1)
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        dirs.setflags(write=False)
        _RAY_CACHE[key] = dirs
        return dirs

    def ray_grid_world(self, pose: Pose) -> np.ndarray:
        """(H, W, 3) unit ray directions rotated into the world frame."""
        dirs = self.ray_grid_cam()
        return dirs @ pose.rotation().T

    def project(self, pose: Pose, point: np.ndarray) -> tuple[float, float, float]:
        """World point -> (u, v, z) continuous pixel coords and camera-frame depth z.
        z <= 0 means behind the camera."""
        pc = pose.rotation().T @ (np.asarray(point, dtype=np.float64) - pose.p)
        z = float(pc[2])
        if z <= 0.0:
            return math.nan, math.nan, z
        u = float(pc[0] / z * self.fx + self.width / 2.0 - 0.5)
        v = float(pc[1] / z * self.fy + self.height / 2.0 - 0.5)
        return u, v, z

    def backproject(self, pose: Pose, u: float, v: float, rng: float) -> np.ndarray:
        """Point at Euclidean range rng along the ray through pixel (u,v)."""
        d = self.pixel_ray_cam(u, v)
        return pose.p + rng * (pose.rotation() @ d)


_RAY_CACHE: dict = {}


@dataclass
class DepthImage:
    """Per-pixel Euclidean range in meters, shape (H, W), NO_RETURN = +inf."""

    ranges: np.ndarray
    max_range: float

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        if self.ranges.ndim != 2:
            raise ValueError("depth image must be 2D")

    @property
    def height(self) -> int:
        return self.ranges.shape[0]

    @property
    def width(self) -> int:
        return self.ranges.shape[1]

    def validate(self) -> None:
        finite = self.ranges[np.isfinite(self.ranges)]
        if finite.size and (finite.min() <= 0.0 or finite.max() > self.max_range + 1e-12):
            raise ValueError("finite depth values must lie in (0, max_range]")


def save_depth(path, depth: DepthImage) -> None:
    """Binary depth file: magic 'FDEP', u32 width, u32 height, u32 reserved,
    then height*width little-endian float32, row-major, +inf for NO_RETURN."""
    h, w = depth.ranges.shape
    with open(path, "wb") as fh:
        fh.write(FDEP_MAGIC)
        fh.write(struct.pack("<III", w, h, 0))
        fh.write(depth.ranges.astype("<f4").tobytes(order="C"))


def load_depth(path, max_range: float) -> DepthImage:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != FDEP_MAGIC:
            raise DepthFileError(f"{path}: bad magic or truncated header")
        w, h, _reserved = struct.unpack("<III", head[4:])
        payload = fh.read()
    expect = w * h * 4
    if len(payload) != expect:
        raise DepthFileError(f"{path}: expected {expect} payload bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
    return DepthImage(data, max_range)


@dataclass
class GradientMap:
    """Depth gradient in meters per pixel: gx, gy, and a validity mask.

    A pixel is valid only if its own depth and every sample its finite-difference
    stencil touches are finite.
    """

    gx: np.ndarray
    gy: np.ndarray
    valid: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.gx, self.gy)


def depth_gradient(depth: DepthImage) -> GradientMap:
    """Central differences in the interior, one-sided at image borders."""
    d = depth.ranges
    h, w = d.shape
    gx = np.zeros_like(d)
    gy = np.zeros_like(d)
    valid = np.isfinite(d)

    with np.errstate(invalid="ignore"):
        if w >= 2:
            gx[:, 1:-1] = (d[:, 2:] - d[:, :-2]) * 0.5
            gx[:, 0] = d[:, 1] - d[:, 0]
            gx[:, -1] = d[:, -1] - d[:, -2]
            vx = np.ones_like(valid)
            vx[:, 1:-1] = np.isfinite(d[:, 2:]) & np.isfinite(d[:, :-2])
            vx[:, 0] = np.isfinite(d[:, 1])
            vx[:, -1] = np.isfinite(d[:, -2])
            valid &= vx
        if h >= 2:
            gy[1:-1, :] = (d[2:, :] - d[:-2, :]) * 0.5
            gy[0, :] = d[1, :] - d[0, :]
            gy[-1, :] = d[-1, :] - d[-2, :]
            vy = np.ones_like(valid)
            vy[1:-1, :] = np.isfinite(d[2:, :]) & np.isfinite(d[:-2, :])
            vy[0, :] = np.isfinite(d[1, :])
            vy[-1, :] = np.isfinite(d[-2, :])
            valid &= vy

    bad = ~valid
    gx[bad] = 0.0
    gy[bad] = 0.0
    return GradientMap(gx, gy, valid)
