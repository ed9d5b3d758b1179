"""Goal selection, entry points, grid path planning, and the classic
map-frontier baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .anchor import Frontier3D
from .camera import Pose
from .grid import FREE, UNKNOWN, VoxelGrid
from .store import FrontierStore


@dataclass
class FrontierTree:
    """Chain of robot poses plus (pose_id, frontier_id) registration edges."""

    poses: list[Pose] = field(default_factory=list)
    edges: list[tuple[int, int]] = field(default_factory=list)

    def add_pose(self, pose: Pose) -> int:
        self.poses.append(pose)
        return len(self.poses) - 1

    def add_edge(self, pose_id: int, frontier_id: int) -> None:
        self.edges.append((pose_id, frontier_id))

    def pose(self, pose_id: int) -> Pose:
        return self.poses[pose_id]


def select_goal(store: FrontierStore, robot_p: np.ndarray, dist_floor: float = 0.3,
                exclude=None):
    """Active frontier maximizing gain / max(distance, dist_floor); ties by
    higher gain then lower id. None when no Active frontier exists (ids in
    `exclude` are passed over)."""
    best = None
    best_key = None
    for f in store.active():
        if exclude and f.id in exclude:
            continue
        d = max(float(np.linalg.norm(robot_p - f.p_bar)), dist_floor)
        key = (f.gain / d, f.gain, -f.id)
        if best_key is None or key > best_key:
            best, best_key = f.id, key
    return best


def find_entry_point(
    tree: FrontierTree, frontier: Frontier3D, grid: VoxelGrid, n_samples: int = 20
) -> np.ndarray:
    """First known-Free point among n_samples spaced from the frontier back
    toward its parent pose; falls back to the parent pose itself."""
    p_t = tree.pose(frontier.parent_pose_id).p
    for i in range(n_samples):
        c = frontier.p_bar + (p_t - frontier.p_bar) * (i / max(1, n_samples - 1))
        if grid.in_bounds(c) and grid.state_at(c) == FREE:
            return c
    return p_t


@dataclass
class Path:
    waypoints: list[Pose]
    total_length: float
    total_rotation: float  # degrees


def traversable_mask(grid: VoxelGrid, inflation: float) -> np.ndarray:
    """Known-Free cells farther than inflation (center metric) from any
    Occupied cell. Unknown and Occupied are obstacles and only Occupied is
    inflated."""
    from .grid import OCCUPIED

    occ = grid.states == OCCUPIED
    free = grid.states == FREE
    if inflation > 0 and occ.any():
        dist = ndimage.distance_transform_edt(~occ, sampling=grid.res)
        free = free & (dist > inflation + 1e-12)
    return free


def _wrap(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def densify(
    stations: list[tuple[np.ndarray, float, float]],
    step_dist: float,
    step_angle_deg: float,
) -> list[Pose]:
    """Expand (position, yaw, pitch) stations into poses no more than
    step_dist / step_angle apart, excluding the first station."""
    step_angle = math.radians(step_angle_deg)
    out: list[Pose] = []
    for (p0, y0, t0), (p1, y1, t1) in zip(stations, stations[1:]):
        dyaw = _wrap(y1 - y0)
        dpitch = t1 - t0
        dist = float(np.linalg.norm(p1 - p0))
        if dist < 1e-12 and abs(dyaw) < 1e-12 and abs(dpitch) < 1e-12:
            continue
        n = max(
            1,
            int(math.ceil(dist / step_dist - 1e-12)),
            int(math.ceil(abs(dyaw) / step_angle - 1e-12)),
            int(math.ceil(abs(dpitch) / step_angle - 1e-12)),
        )
        for j in range(1, n + 1):
            t = j / n
            out.append(
                Pose.from_yaw_pitch(p0 + (p1 - p0) * t, _wrap(y0 + dyaw * t), t0 + dpitch * t)
            )
    return out


def _stations_from_cells(
    grid: VoxelGrid, cells: list[tuple[int, int, int]], start_yaw: float, start_pitch: float
) -> list[tuple[np.ndarray, float, float]]:
    """Voxel-center stations with yaw facing the travel direction."""
    pts = [grid.center_of(c) for c in cells]
    stations = [(pts[0], start_yaw, start_pitch)]
    yaw = start_yaw
    for a, b in zip(pts, pts[1:]):
        d = b - a
        if abs(d[0]) > 1e-12 or abs(d[1]) > 1e-12:
            yaw = math.atan2(d[1], d[0])
        stations.append((b, yaw, 0.0))
    return stations


def plan_path(
    grid: VoxelGrid,
    start: Pose,
    goal_point: np.ndarray,
    final_yaw: float,
    final_pitch: float,
    inflation: float = 0.2,
    step_dist: float = 0.1,
    step_angle_deg: float = 10.0,
):
    """A* over 26-connected known-Free cells with inflated Occupied obstacles
    (start and goal cells are exempt from inflation, not from occupancy),
    densified to step granularity with yaw facing travel and a final turn to
    (final_yaw, final_pitch). None when no path exists."""
    if not grid.in_bounds(start.p) or not grid.in_bounds(goal_point):
        return None
    trav = traversable_mask(grid, inflation)
    si = grid.index_of(start.p)
    gi = grid.index_of(goal_point)
    for cell in (si, gi):
        if grid.states[cell] == FREE:
            trav[cell] = True
    if not trav[si] or not trav[gi]:
        return None
    found, cost, parents = kernels.astar_grid(
        trav, si[0], si[1], si[2], gi[0], gi[1], gi[2]
    )
    if not found:
        return None
    nx, ny, nz = grid.dims
    cells = []
    cur = (gi[0] * ny + gi[1]) * nz + gi[2]
    while cur >= 0:
        cells.append((cur // (ny * nz), (cur // nz) % ny, cur % nz))
        cur = int(parents[cur])
    cells.reverse()

    start_yaw, start_pitch = start.yaw_pitch()
    stations = [(start.p, start_yaw, start_pitch)]
    stations.extend(_stations_from_cells(grid, cells, start_yaw, start_pitch)[1:])
    # steer to the exact goal point keeping the current pitch, then turn to
    # the final viewing direction (travel stations already fly level)
    stations.append((np.asarray(goal_point, dtype=np.float64), stations[-1][1], stations[-1][2]))
    stations.append((np.asarray(goal_point, dtype=np.float64), final_yaw, final_pitch))
    waypoints = densify(stations, step_dist, step_angle_deg)
    length = float(cost) * grid.res
    rot = sum(
        abs(math.degrees(_wrap(b[1] - a[1]))) + abs(math.degrees(b[2] - a[2]))
        for a, b in zip(stations, stations[1:])
    )
    return Path(waypoints=waypoints, total_length=length, total_rotation=rot)


def map_frontier_mask(grid: VoxelGrid) -> np.ndarray:
    """Known-Free cells with at least one face neighbor Unknown."""
    unk = grid.states == UNKNOWN
    adj = np.zeros_like(unk)
    adj[1:, :, :] |= unk[:-1, :, :]
    adj[:-1, :, :] |= unk[1:, :, :]
    adj[:, 1:, :] |= unk[:, :-1, :]
    adj[:, :-1, :] |= unk[:, 1:, :]
    adj[:, :, 1:] |= unk[:, :, :-1]
    adj[:, :, :-1] |= unk[:, :, 1:]
    return (grid.states == FREE) & adj


@dataclass
class ClassicGoal:
    point: np.ndarray
    yaw: float
    cell: tuple[int, int, int]
    size: int
    path: Path


def classic_baseline_step(
    grid: VoxelGrid,
    robot: Pose,
    min_cluster: int = 5,
    inflation: float = 0.2,
    step_dist: float = 0.1,
    step_angle_deg: float = 10.0,
    banned=None,
):
    """Nearest reachable map-frontier cluster by planned-path length: cluster
    the map-frontier cells by 26-connectivity, drop small clusters, plan to
    each cluster's central cell, and return the goal with the shortest path.
    None when no cluster is reachable (exploration complete)."""
    mask = map_frontier_mask(grid)
    if not mask.any():
        return None
    labels, n = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=bool))
    unk = grid.states == UNKNOWN
    nx, ny, nz = grid.dims
    best = None
    for lab in range(1, n + 1):
        members = np.argwhere(labels == lab)
        if members.shape[0] < min_cluster:
            continue
        centroid = members.mean(axis=0)
        d2 = ((members - centroid) ** 2).sum(axis=1)
        cell = tuple(int(v) for v in members[int(np.argmin(d2))])
        if banned and cell in banned:
            continue
        # viewing direction: from the cluster toward its Unknown side
        acc = np.zeros(3)
        for i, j, k in members:
            for off in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                bi, bj, bk = i + off[0], j + off[1], k + off[2]
                if 0 <= bi < nx and 0 <= bj < ny and 0 <= bk < nz and unk[bi, bj, bk]:
                    acc += off
        point = grid.center_of(cell)
        if abs(acc[0]) > 1e-12 or abs(acc[1]) > 1e-12:
            yaw = math.atan2(acc[1], acc[0])
        else:
            v = point - robot.p
            yaw = math.atan2(v[1], v[0]) if (abs(v[0]) > 1e-12 or abs(v[1]) > 1e-12) else 0.0
        path = plan_path(
            grid, robot, point, yaw, 0.0, inflation, step_dist, step_angle_deg
        )
        if path is None:
            continue
        key = (path.total_length, cell)
        if best is None or key < best[0]:
            best = (key, ClassicGoal(point=point, yaw=yaw, cell=cell, size=int(members.shape[0]), path=path))
    return best[1] if best else None
