"""Deterministic voxel-world exploration simulator.

Ground-truth depth rendering, frontier prediction from privileged scene
access, 2D-to-3D frontier anchoring, lifecycle management, utility-driven
goal selection, and a reproducible evaluation suite.
"""

__version__ = "0.1.0"

from .camera import CameraModel, DepthImage, GradientMap, Pose
from .config import RunConfig, load_config
from .explore import ExplorationLog, run_exploration
from .grid import FREE, OCCUPIED, UNKNOWN, VoxelGrid, load_scene, save_scene
from .metrics import run_suite, vox_at_k
from .oracle import OraclePredictor
from .scenegen import SceneParams, generate_scene, sample_start_poses
from .world import integrate_observation, render_depth

__all__ = [
    "CameraModel",
    "DepthImage",
    "ExplorationLog",
    "GradientMap",
    "OraclePredictor",
    "Pose",
    "RunConfig",
    "SceneParams",
    "VoxelGrid",
    "UNKNOWN",
    "FREE",
    "OCCUPIED",
    "generate_scene",
    "integrate_observation",
    "load_config",
    "load_scene",
    "render_depth",
    "run_exploration",
    "run_suite",
    "sample_start_poses",
    "save_scene",
    "vox_at_k",
    "__version__",
]
