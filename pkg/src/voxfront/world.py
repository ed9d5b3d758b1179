"""Depth rendering against a ground-truth scene and observation integration
into a robot map. Both use the same exact grid traversal, so the set of
voxels a rendered ray sweeps is exactly the set integration marks.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .camera import CameraModel, DepthImage, Pose, PoseError
from .grid import FREE, OCCUPIED, UNKNOWN, VoxelGrid


def render_depth(scene: VoxelGrid, pose: Pose, cam: CameraModel) -> DepthImage:
    """Euclidean distance to the first Occupied-voxel boundary hit per pixel,
    NO_RETURN (+inf) when none within max_range. The pose must sit in a Free
    voxel of the scene."""
    idx = scene.index_of(pose.p)
    if not scene.in_bounds(idx):
        raise PoseError(f"pose {pose.p} outside the grid")
    if scene.states[idx] == OCCUPIED:
        raise PoseError(f"pose {pose.p} inside an Occupied voxel")
    dirs = cam.ray_grid_world(pose).reshape(-1, 3)
    ranges = kernels.cast_rays(
        scene.states, scene.origin, scene.res, pose.p, np.ascontiguousarray(dirs), cam.max_range
    )
    return DepthImage(ranges.reshape(cam.height, cam.width), cam.max_range)


def integrate_observation(
    grid: VoxelGrid, pose: Pose, cam: CameraModel, depth: DepthImage
) -> int:
    """Carve the observation into the map: voxels strictly before each return
    become Free, the hit voxel Occupied (Occupied wins any conflict), rays
    with NO_RETURN free up to max_range. Returns the newly-known voxel count."""
    if depth.ranges.shape != (cam.height, cam.width):
        raise ValueError("depth image dimensions disagree with the camera")
    idx = grid.index_of(pose.p)
    if not grid.in_bounds(idx):
        raise PoseError(f"pose {pose.p} outside the grid")
    dirs = cam.ray_grid_world(pose).reshape(-1, 3)
    before = grid.states == UNKNOWN
    kernels.integrate_rays(
        grid.states,
        grid.origin,
        grid.res,
        pose.p,
        np.ascontiguousarray(dirs),
        depth.ranges.reshape(-1),
        cam.max_range,
    )
    return int(np.count_nonzero(before & (grid.states != UNKNOWN)))
