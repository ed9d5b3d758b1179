"""Ground-truth frontier rasters from privileged scene access.

Pipeline per view: classify the view volume with the exact render/integrate
traversal, extract single-view frontier voxels, project them through the
pixel-ray gate, refine with the depth-discontinuity mask, build the truncated
log-normalized distance field, attach occlusion-aware info gains to frontier
voxels (subsampled, the rest inverse-distance interpolated), project gains to
the image, and bin them into K classes.

A predictor is anything with ``predict(pose, depth) -> FrontierRaster``; the
reference implementation here consumes the ground-truth scene. A learned model
consuming images can be dropped in without touching the planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .camera import CameraModel, DepthImage, Pose, depth_gradient, rotation_from_yaw_pitch
from .grid import FREE, UNKNOWN, VoxelGrid
from .world import integrate_observation, render_depth


@dataclass(frozen=True)
class OracleParams:
    r_ray: float = 0.15  # m, pixel-ray gating radius
    tau_d: float = 0.05  # m/px, discontinuity threshold
    r_df: int = 20  # px, distance-field truncation
    k_classes: int = 11
    g_max: float = 0.0  # bin ceiling; 0 = derive from camera frustum volume
    sample_frac: float = 0.10
    idw_k: int = 4

    def resolved_g_max(self, cam: CameraModel, res: float) -> float:
        if self.g_max > 0.0:
            return float(self.g_max)
        return frustum_voxel_count(cam, res)


def frustum_voxel_count(cam: CameraModel, res: float) -> float:
    """Voxel count of a max_range-deep rectangular frustum, the default bin
    ceiling for gains."""
    tx = math.tan(math.radians(cam.fov_x) / 2.0)
    ty = math.tan(math.radians(cam.fov_y) / 2.0)
    vol = (4.0 / 3.0) * tx * ty * cam.max_range**3
    return float(round(vol / res**3))


@dataclass
class FrontierRaster:
    """Per-pixel outputs of one prediction: projection prior f_p,
    discontinuity mask f_d, refined mask f = f_p & f_d, truncated distance
    field d with its log-normalization d_norm, info-gain map g, and binned
    classes y."""

    f_p: np.ndarray
    f_d: np.ndarray
    f: np.ndarray
    d: np.ndarray
    d_norm: np.ndarray
    g: np.ndarray
    y: np.ndarray


def classify_view_volume(
    scene: VoxelGrid, pose: Pose, cam: CameraModel, depth: DepthImage | None = None
) -> np.ndarray:
    """Boolean in-view mask: voxels the observation would mark known, computed
    with the same exact traversal as integration."""
    if depth is None:
        depth = render_depth(scene, pose, cam)
    scratch = VoxelGrid.full(scene.dims, scene.res, scene.origin, UNKNOWN)
    integrate_observation(scratch, pose, cam, depth)
    return scratch.states != UNKNOWN


_FACE_OFFSETS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.int64
)


def _shift_or(mask: np.ndarray) -> np.ndarray:
    """OR of the six face-shifted copies of mask; cells beyond the grid
    contribute False."""
    out = np.zeros_like(mask)
    out[1:, :, :] |= mask[:-1, :, :]
    out[:-1, :, :] |= mask[1:, :, :]
    out[:, 1:, :] |= mask[:, :-1, :]
    out[:, :-1, :] |= mask[:, 1:, :]
    out[:, :, 1:] |= mask[:, :, :-1]
    out[:, :, :-1] |= mask[:, :, 1:]
    return out


def extract_frontier_voxels(scene: VoxelGrid, in_view: np.ndarray) -> np.ndarray:
    """Free voxels inside the view volume with at least one face neighbor
    outside it (neighbors beyond the grid do not count)."""
    out_adj = _shift_or(~in_view)
    return (scene.states == FREE) & in_view & out_adj


def project_frontier_prior(
    pose: Pose, cam: CameraModel, centers: np.ndarray, r_ray: float
) -> np.ndarray:
    """Pixel on iff its ray, truncated at max_range, passes within r_ray of a
    frontier voxel center. Points behind the camera never turn a pixel on."""
    dirs = np.ascontiguousarray(cam.ray_grid_world(pose).reshape(-1, 3))
    if centers.shape[0] == 0:
        return np.zeros((cam.height, cam.width), dtype=bool)
    ones = np.ones(centers.shape[0], dtype=np.float64)
    any_hit, _ = kernels.gate_values(
        pose.p, dirs, np.ascontiguousarray(centers), ones, r_ray, cam.max_range
    )
    return any_hit.reshape(cam.height, cam.width)


def depth_discontinuity_mask(depth: DepthImage, tau_d: float) -> np.ndarray:
    """Finite pixels whose depth-gradient magnitude exceeds tau_d, plus finite
    pixels bordering a NO_RETURN region (range-limit discontinuities)."""
    gm = depth_gradient(depth)
    on = gm.valid & (gm.magnitude() > tau_d)
    finite = np.isfinite(depth.ranges)
    nr = ~finite
    near_nr = np.zeros_like(nr)
    near_nr[1:, :] |= nr[:-1, :]
    near_nr[:-1, :] |= nr[1:, :]
    near_nr[:, 1:] |= nr[:, :-1]
    near_nr[:, :-1] |= nr[:, 1:]
    return on | (finite & near_nr)


def distance_field(mask: np.ndarray, r_df: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact Euclidean distance (px) to the nearest on-pixel, truncated at
    r_df, and d_norm = -log(max(d,1)/r_df). All-off masks give d = r_df
    everywhere."""
    if mask.any():
        iy, ix = ndimage.distance_transform_edt(~mask, return_distances=False, return_indices=True)
        gy, gx = np.mgrid[0 : mask.shape[0], 0 : mask.shape[1]]
        d2 = (iy.astype(np.int64) - gy) ** 2 + (ix.astype(np.int64) - gx) ** 2
        d = np.sqrt(d2.astype(np.float64))
        d = np.minimum(d, float(r_df))
    else:
        d = np.full(mask.shape, float(r_df))
    d_norm = -np.log(np.maximum(d, 1.0) / float(r_df))
    return d, d_norm


def _boundary_faces(in_view: np.ndarray) -> list:
    """Six masks, order (+x, -x, +y, -y, +z, -z): cell a is in-view and its
    in-grid face neighbor along that offset is out-of-view."""
    masks = []
    for axis in range(3):
        for sign in (1, -1):
            m = np.zeros_like(in_view)
            sl_a = [slice(None)] * 3
            sl_b = [slice(None)] * 3
            if sign > 0:
                sl_a[axis] = slice(None, -1)
                sl_b[axis] = slice(1, None)
            else:
                sl_a[axis] = slice(1, None)
                sl_b[axis] = slice(None, -1)
            m[tuple(sl_a)] = in_view[tuple(sl_a)] & ~in_view[tuple(sl_b)]
            masks.append(m)
    return masks


def _direction_sum(masks: list, dims, i: int, j: int, k: int) -> np.ndarray:
    """Sum of pair unit vectors within the 5x5x5 neighborhood of (i, j, k).
    A +axis face pair (a in-view, b = a + e out-of-view) contributes +e and
    needs both cells inside the neighborhood, so a's coordinate along the
    axis is clipped one short on the pair side."""
    c = (i, j, k)
    acc = np.zeros(3)
    for axis in range(3):
        lo = [max(0, v - 2) for v in c]
        hi = [min(n, v + 3) for v, n in zip(c, dims)]
        sl_p = [slice(lo[a], hi[a]) for a in range(3)]
        sl_m = [slice(lo[a], hi[a]) for a in range(3)]
        sl_p[axis] = slice(lo[axis], min(dims[axis], c[axis] + 2))
        sl_m[axis] = slice(max(0, c[axis] - 1), hi[axis])
        n_p = int(masks[2 * axis][tuple(sl_p)].sum())
        n_m = int(masks[2 * axis + 1][tuple(sl_m)].sum())
        acc[axis] = float(n_p - n_m)
    return acc


def frontier_directions(
    scene: VoxelGrid, in_view: np.ndarray, pose: Pose, ft_idx: np.ndarray
) -> np.ndarray:
    """Per frontier voxel: normalized sum of unit vectors over face-adjacent
    (in-view -> out-of-view) pairs inside the 5x5x5 neighborhood; falls back
    to the camera ray direction when the sum vanishes."""
    masks = _boundary_faces(in_view)
    dirs = np.zeros((ft_idx.shape[0], 3), dtype=np.float64)
    for n, (i, j, k) in enumerate(ft_idx):
        dirs[n] = _direction_of(scene, masks, pose, int(i), int(j), int(k))
    return dirs


def _direction_of(scene: VoxelGrid, masks: list, pose: Pose, i: int, j: int, k: int) -> np.ndarray:
    acc = _direction_sum(masks, scene.dims, i, j, k)
    norm = float(np.linalg.norm(acc))
    if norm > 1e-12:
        return acc / norm
    ray = scene.center_of((i, j, k)) - pose.p
    rn = float(np.linalg.norm(ray))
    return ray / rn if rn > 0 else np.array([1.0, 0.0, 0.0])


def _virtual_rotation(direction: np.ndarray) -> np.ndarray:
    yaw = math.atan2(direction[1], direction[0])
    pitch = math.asin(max(-1.0, min(1.0, float(direction[2]))))
    return rotation_from_yaw_pitch(yaw, pitch)


def voxel_info_gain(
    scene: VoxelGrid,
    in_view: np.ndarray,
    pose: Pose,
    cam: CameraModel,
    ft_idx: np.ndarray,
    sample_frac: float,
    rng_seed: int,
    idw_k: int = 4,
) -> np.ndarray:
    """Info gain per frontier voxel: count of out-of-view voxels visible from
    a virtual camera at the voxel center looking along its frontier direction,
    computed exactly for ceil(sample_frac * N) seeded samples and
    inverse-distance (power 1, k nearest) interpolated for the rest."""
    n = ft_idx.shape[0]
    gains = np.zeros(n, dtype=np.float64)
    if n == 0:
        return gains
    masks = _boundary_faces(in_view)
    out_mask = ~in_view
    tan_x = math.tan(math.radians(cam.fov_x) / 2.0)
    tan_y = math.tan(math.radians(cam.fov_y) / 2.0)

    ns = min(n, int(math.ceil(sample_frac * n)))
    rng = np.random.default_rng(rng_seed)
    chosen = np.sort(rng.choice(n, size=ns, replace=False))
    sampled = np.zeros(n, dtype=bool)
    sampled[chosen] = True

    for s in chosen:
        i, j, k = (int(v) for v in ft_idx[s])
        d = _direction_of(scene, masks, pose, i, j, k)
        rot = np.ascontiguousarray(_virtual_rotation(d))
        gains[s] = kernels.visible_out_count(
            scene.states, out_mask, i, j, k, rot, tan_x, tan_y, cam.max_range, scene.res
        )

    rest = np.flatnonzero(~sampled)
    if rest.size and chosen.size:
        kk = min(idw_k, chosen.size)
        sample_pts = ft_idx[chosen].astype(np.float64)
        for q in rest:
            delta = sample_pts - ft_idx[q]
            d2 = (delta * delta).sum(axis=1)
            order = np.argsort(d2, kind="stable")[:kk]
            dist = np.sqrt(d2[order])
            w = 1.0 / np.maximum(dist, 1e-12)
            gains[q] = float((w * gains[chosen[order]]).sum() / w.sum())
    return gains


def info_gain_map(
    pose: Pose,
    cam: CameraModel,
    centers: np.ndarray,
    gains: np.ndarray,
    r_ray: float,
) -> np.ndarray:
    """Per pixel, the max gain among frontier voxels within r_ray of its ray;
    zero where none gates."""
    if centers.shape[0] == 0:
        return np.zeros((cam.height, cam.width), dtype=np.float64)
    dirs = np.ascontiguousarray(cam.ray_grid_world(pose).reshape(-1, 3))
    _, best = kernels.gate_values(
        pose.p, dirs, np.ascontiguousarray(centers), np.ascontiguousarray(gains), r_ray, cam.max_range
    )
    return best.reshape(cam.height, cam.width)


def bin_gain(g, k_classes: int, g_max: float):
    """Class 0 iff g == 0; classes 1..K-1 split (0, g_max] into equal-width
    bins (edges belong to the upper bin); values above g_max clamp to K-1."""
    if g_max <= 0.0:
        raise ValueError("g_max must be positive")
    g_arr = np.asarray(g, dtype=np.float64)
    w = g_max / (k_classes - 1)
    cls = np.where(g_arr == 0.0, 0, np.minimum(k_classes - 1, np.floor(g_arr / w).astype(np.int64) + 1))
    return cls.astype(np.uint8)


def unbin_gain(y, k_classes: int, g_max: float):
    """Lower bound of the bin: 0 for class 0, (i-1) * width for class i."""
    y_arr = np.asarray(y)
    w = g_max / (k_classes - 1)
    return np.where(y_arr == 0, 0.0, (y_arr.astype(np.float64) - 1.0) * w)


class OraclePredictor:
    """Reference predictor backed by the ground-truth scene.

    predict() is deterministic for fixed (pose, depth, rng_seed); the seed
    only drives which frontier voxels get exact gain evaluation.
    """

    def __init__(self, scene: VoxelGrid, cam: CameraModel, params: OracleParams, seed: int = 0):
        self.scene = scene
        self.cam = cam
        self.params = params
        self.seed = seed
        self.g_max = params.resolved_g_max(cam, scene.res)

    def predict(self, pose: Pose, depth: DepthImage | None = None, rng_seed: int | None = None) -> FrontierRaster:
        cam = self.cam
        params = self.params
        if depth is None:
            depth = render_depth(self.scene, pose, cam)
        if rng_seed is None:
            rng_seed = self.seed
        in_view = classify_view_volume(self.scene, pose, cam, depth)
        ft_mask = extract_frontier_voxels(self.scene, in_view)
        ft_idx = np.argwhere(ft_mask)  # lexicographic order
        centers = self.scene.origin + (ft_idx + 0.5) * self.scene.res

        gains = voxel_info_gain(
            self.scene, in_view, pose, cam, ft_idx, params.sample_frac, rng_seed, params.idw_k
        )
        # one gating pass serves both the projection prior and the gain map
        if centers.shape[0]:
            dirs = np.ascontiguousarray(cam.ray_grid_world(pose).reshape(-1, 3))
            hit, best = kernels.gate_values(
                pose.p, dirs, np.ascontiguousarray(centers),
                np.ascontiguousarray(gains), params.r_ray, cam.max_range,
            )
            f_p = hit.reshape(cam.height, cam.width)
            g = best.reshape(cam.height, cam.width)
        else:
            f_p = np.zeros((cam.height, cam.width), dtype=bool)
            g = np.zeros((cam.height, cam.width), dtype=np.float64)
        f_d = depth_discontinuity_mask(depth, params.tau_d)
        f = f_p & f_d
        d, d_norm = distance_field(f, params.r_df)
        y = bin_gain(g, params.k_classes, self.g_max)
        return FrontierRaster(f_p=f_p, f_d=f_d, f=f, d=d, d_norm=d_norm, g=g, y=y)


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit binary PGM (P5, maxval 255)."""
    arr = np.asarray(image, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("PGM image must be 2D")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii"))
        fh.write(arr.tobytes(order="C"))
