"""Procedural indoor scenes: axis-aligned rooms split by 1-voxel walls with
door openings, floor and ceiling slabs, and sealed outer walls. Generation is
a pure function of (seed, params) and only returns flood-fill-connected
scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .camera import Pose
from .grid import FREE, OCCUPIED, VoxelGrid


class GenerationError(RuntimeError):
    """No connected layout found within the attempt budget."""


@dataclass(frozen=True)
class SceneParams:
    extent: tuple[float, float, float] = (8.0, 8.0, 2.5)
    res: float = 0.1
    rooms_min: int = 2
    rooms_max: int = 5
    door_width: float = 0.9
    door_height: float = 2.0
    min_room: float = 1.4
    two_floors: bool = False
    max_attempts: int = 100


def _carve_layout(rng: np.random.Generator, params: SceneParams) -> VoxelGrid:
    res = params.res
    nx = max(8, int(round(params.extent[0] / res)))
    ny = max(8, int(round(params.extent[1] / res)))
    nz = max(6, int(round(params.extent[2] / res)))
    states = np.full((nx, ny, nz), FREE, dtype=np.uint8)

    # slabs and outer shell
    states[:, :, 0] = OCCUPIED
    states[:, :, nz - 1] = OCCUPIED
    states[0, :, :] = OCCUPIED
    states[nx - 1, :, :] = OCCUPIED
    states[:, 0, :] = OCCUPIED
    states[:, ny - 1, :] = OCCUPIED

    z_lo, z_hi = 1, nz - 1  # free interior z range
    door_top = min(nz - 2, 1 + int(round(params.door_height / res)))
    door_w = max(2, int(round(params.door_width / res)))
    min_cells = max(3, int(round(params.min_room / res)))

    floors = [(1, nz - 1)]
    if params.two_floors and nz >= 14:
        mid = nz // 2
        states[1 : nx - 1, 1 : ny - 1, mid] = OCCUPIED
        floors = [(1, mid), (mid + 1, nz - 1)]

    target = int(rng.integers(params.rooms_min, params.rooms_max + 1))

    n_rooms = 0
    for f_lo, f_hi in floors:
        rects = [(1, nx - 1, 1, ny - 1)]
        while len(rects) < target:
            # split the largest splittable rect
            order = sorted(
                range(len(rects)),
                key=lambda q: (rects[q][1] - rects[q][0]) * (rects[q][3] - rects[q][2]),
                reverse=True,
            )
            done = True
            for q in order:
                x0, x1, y0, y1 = rects[q]
                can_x = (x1 - x0) >= 2 * min_cells + 1
                can_y = (y1 - y0) >= 2 * min_cells + 1
                if not (can_x or can_y):
                    continue
                if can_x and (not can_y or (x1 - x0) >= (y1 - y0)):
                    w = int(rng.integers(x0 + min_cells, x1 - min_cells))
                    states[w, y0:y1, f_lo:f_hi] = OCCUPIED
                    # door through the new wall
                    d0 = int(rng.integers(y0, max(y0 + 1, y1 - door_w)))
                    d1 = min(y1, d0 + door_w)
                    states[w, d0:d1, f_lo : min(f_lo + door_top, f_hi)] = FREE
                    rects[q] = (x0, w, y0, y1)
                    rects.append((w + 1, x1, y0, y1))
                else:
                    w = int(rng.integers(y0 + min_cells, y1 - min_cells))
                    states[x0:x1, w, f_lo:f_hi] = OCCUPIED
                    d0 = int(rng.integers(x0, max(x0 + 1, x1 - door_w)))
                    d1 = min(x1, d0 + door_w)
                    states[d0:d1, w, f_lo : min(f_lo + door_top, f_hi)] = FREE
                    rects[q] = (x0, x1, y0, w)
                    rects.append((x0, x1, w + 1, y1))
                done = False
                break
            if done:
                break
        n_rooms += len(rects)

    if params.two_floors and len(floors) == 2:
        # stairwell opening through the mid slab
        mid = floors[0][1]
        hx = int(rng.integers(2, max(3, nx - 2 - door_w)))
        hy = int(rng.integers(2, max(3, ny - 2 - door_w)))
        states[hx : hx + door_w, hy : hy + door_w, mid] = FREE

    return VoxelGrid(states, res, np.zeros(3)), n_rooms


def _connected(grid: VoxelGrid) -> bool:
    free = grid.states == FREE
    if not free.any():
        return False
    structure = ndimage.generate_binary_structure(3, 1)
    _, count = ndimage.label(free, structure=structure)
    return count == 1


def generate_scene_info(seed: int, params: SceneParams = SceneParams()):
    """Deterministic per (seed, params); retries internally and raises
    GenerationError when no connected layout is found in max_attempts.
    Returns (grid, room count)."""
    for attempt in range(params.max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        grid, n_rooms = _carve_layout(rng, params)
        if _connected(grid):
            return grid, n_rooms
    raise GenerationError(
        f"no connected scene for seed {seed} within {params.max_attempts} attempts"
    )


def generate_scene(seed: int, params: SceneParams = SceneParams()) -> VoxelGrid:
    return generate_scene_info(seed, params)[0]


def sample_start_poses(
    scene: VoxelGrid,
    count: int,
    seed: int,
    clearance: float = 0.25,
    eye_height: float = 1.2,
) -> list[Pose]:
    """Deterministic start poses in Free space with wall clearance, level
    pitch, and random yaw."""
    free = scene.states == FREE
    dist = ndimage.distance_transform_edt(free) * scene.res
    k = min(
        scene.dims[2] - 1,
        max(1, int((eye_height - scene.origin[2]) / scene.res)),
    )
    cand = np.argwhere(dist[:, :, k] >= clearance)
    if cand.shape[0] == 0:
        cand = np.argwhere(free[:, :, k])
    if cand.shape[0] == 0:
        raise ValueError("scene has no free start voxel at eye height")
    rng = np.random.default_rng(seed)
    picks = rng.choice(cand.shape[0], size=min(count, cand.shape[0]), replace=False)
    poses = []
    for row in np.atleast_1d(picks):
        i, j = cand[row]
        p = scene.center_of((int(i), int(j), k))
        yaw = float(rng.uniform(-math.pi, math.pi))
        poses.append(Pose.from_yaw_pitch(p, yaw, 0.0))
    n0 = len(poses)
    while len(poses) < count:
        poses.append(poses[len(poses) % n0])
    return poses
