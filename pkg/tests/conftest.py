import numpy as np
import pytest

from voxfront.camera import CameraModel, Pose
from voxfront.config import RunConfig
from voxfront.grid import FREE, OCCUPIED, VoxelGrid


def box_scene(dims=(20, 20, 12), res=0.125, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    """Free interior enclosed by one-voxel Occupied walls."""
    g = VoxelGrid.full(dims, res, np.asarray(origin, dtype=np.float64), FREE)
    st = g.states
    st[0, :, :] = OCCUPIED
    st[-1, :, :] = OCCUPIED
    st[:, 0, :] = OCCUPIED
    st[:, -1, :] = OCCUPIED
    st[:, :, 0] = OCCUPIED
    st[:, :, -1] = OCCUPIED
    return g


def doorway_scene(dims=(48, 48, 18), res=0.125, wall_ix=24,
                  door_y=slice(20, 28), door_z=slice(1, 15)) -> VoxelGrid:
    """Box room split by a wall with a door opening."""
    g = box_scene(dims, res)
    g.states[wall_ix, :, :] = OCCUPIED
    g.states[wall_ix, door_y, door_z] = FREE
    return g


@pytest.fixture
def small_cam() -> CameraModel:
    return CameraModel(width=32, height=32, fov_x=77.32, fov_y=77.32, max_range=2.5)


@pytest.fixture
def small_scene() -> VoxelGrid:
    return box_scene()


@pytest.fixture
def center_pose(small_scene) -> Pose:
    nx, ny, nz = small_scene.dims
    p = small_scene.origin + np.array([nx, ny, nz]) * small_scene.res / 2.0
    return Pose.from_yaw_pitch(p, 0.0, 0.0)


def suite_config(**overrides) -> RunConfig:
    """The small-scale exploration configuration used across the tests."""
    base = dict(
        width=48, height=48, max_range=2.5, r_df=12, sigma_px=12.0,
        min_cluster_size=6, sample_frac=0.05, step_dist=0.2,
        step_angle_deg=15.0, max_steps=500,
    )
    base.update(overrides)
    return RunConfig(**base)


def random_scene(rng: np.random.Generator, dims=(16, 16, 10), res=0.125,
                 p_occ=0.15) -> VoxelGrid:
    """Free box with random Occupied blocks sprinkled in the interior."""
    g = box_scene(dims, res)
    interior = rng.random((dims[0] - 2, dims[1] - 2, dims[2] - 2)) < p_occ
    g.states[1:-1, 1:-1, 1:-1][interior] = OCCUPIED
    return g
