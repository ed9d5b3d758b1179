"""Lifecycle of 3D frontiers: merge-or-insert with cascading re-checks,
occupancy-driven gain adjustment, and invalidation against visited poses."""

from __future__ import annotations

import math

import numpy as np

from .anchor import ACTIVE, INVALID, Frontier3D
from . import kernels
from .camera import CameraModel, Pose, angle_between_deg, rotation_from_yaw_pitch
from .grid import UNKNOWN, VoxelGrid


class TrajectoryMemory:
    """Downsampled visited poses: a pose is kept when it differs from the
    last kept one by at least keep_dist meters or keep_angle degrees."""

    def __init__(self, keep_dist: float = 0.1, keep_angle_deg: float = 10.0):
        self.keep_dist = keep_dist
        self.keep_angle_deg = keep_angle_deg
        self.poses: list[Pose] = []

    def add(self, pose: Pose) -> bool:
        if not self.poses:
            self.poses.append(pose)
            return True
        last = self.poses[-1]
        moved = float(np.linalg.norm(pose.p - last.p)) >= self.keep_dist
        turned = angle_between_deg(pose.forward(), last.forward()) >= self.keep_angle_deg
        if moved or turned:
            self.poses.append(pose)
            return True
        return False

    def near(self, p: np.ndarray, direction: np.ndarray, dist: float, angle_deg: float) -> bool:
        for pose in self.poses:
            if float(np.linalg.norm(pose.p - p)) <= dist and (
                angle_between_deg(pose.forward(), direction) <= angle_deg
            ):
                return True
        return False


def _merge_pair(a: Frontier3D, b: Frontier3D, keep_id: int, parent: int) -> Frontier3D:
    p = (a.p_bar + b.p_bar) / 2.0
    d = a.direction() + b.direction()
    n = float(np.linalg.norm(d))
    if n < 1e-12:
        yaw, pitch = a.yaw, a.pitch
    else:
        d = d / n
        yaw = math.atan2(d[1], d[0])
        pitch = math.asin(max(-1.0, min(1.0, float(d[2]))))
    return Frontier3D(
        p_bar=p,
        yaw=yaw,
        pitch=pitch,
        gain=(a.gain + b.gain) / 2.0,
        gain0=max(a.gain0, b.gain0),
        id=keep_id,
        parent_pose_id=parent,
        status=ACTIVE,
        approach_clear=max(a.approach_clear, b.approach_clear),
    )


class FrontierStore:
    """Id-indexed 3D frontiers. Active frontiers form a maximal merged set:
    no two are simultaneously within the merge distance and angle."""

    def __init__(self):
        self.frontiers: dict[int, Frontier3D] = {}
        self.next_id = 0

    def __len__(self):
        return len(self.frontiers)

    def get(self, fid: int) -> Frontier3D:
        return self.frontiers[fid]

    def active(self) -> list[Frontier3D]:
        return [f for _, f in sorted(self.frontiers.items()) if f.status == ACTIVE]

    def merge_or_insert(self, f: Frontier3D, merge_dist: float, merge_angle_deg: float):
        """Insert f, averaging it into any Active frontier within both merge
        thresholds (nearest candidate first, ties by lower id) and cascading
        until stable. The merged entry keeps the absorbed partner's id and the
        newer parent pose. Returns (id, merged)."""
        cur = f
        merged = False
        while True:
            best_id = -1
            best_d = math.inf
            cd = cur.direction()
            for gid, g in sorted(self.frontiers.items()):
                if g.status != ACTIVE or gid == cur.id:
                    continue
                d = float(np.linalg.norm(cur.p_bar - g.p_bar))
                if d < merge_dist and angle_between_deg(cd, g.direction()) < merge_angle_deg:
                    if d < best_d:
                        best_d = d
                        best_id = gid
            if best_id < 0:
                break
            partner = self.frontiers.pop(best_id)
            if cur.id in self.frontiers:
                del self.frontiers[cur.id]
            cur = _merge_pair(cur, partner, keep_id=best_id, parent=cur.parent_pose_id)
            merged = True
        if cur.id < 0:
            cur.id = self.next_id
            self.next_id += 1
        self.frontiers[cur.id] = cur
        self.next_id = max(self.next_id, cur.id + 1)
        return cur.id, merged

    def adjust_gains(self, grid: VoxelGrid, cam: CameraModel) -> None:
        """gain = max(0, gain0 - |known voxels inside the frontier's virtual
        frustum|); membership is the same range/FOV gate as gain counting,
        without occlusion."""
        idx = np.argwhere(grid.states != UNKNOWN)
        centers = grid.origin + (idx + 0.5) * grid.res if idx.size else np.zeros((0, 3))
        tan_x = math.tan(math.radians(cam.fov_x) / 2.0)
        tan_y = math.tan(math.radians(cam.fov_y) / 2.0)
        r2 = cam.max_range**2
        for f in self.active():
            f.gain = max(0.0, f.gain0 - float(
                known_in_frustum(centers, f.p_bar, f.direction(), tan_x, tan_y, r2)
            ))

    def prune(
        self,
        traj: TrajectoryMemory,
        grid: VoxelGrid | None,
        g_min: float,
        prune_dist: float,
        prune_angle_deg: float,
    ) -> list[int]:
        """Invalidate Active frontiers whose adjusted gain fell below g_min
        (only when a map is present) or that sit within both thresholds of a
        visited pose. Invalid is absorbing; returns newly invalid ids."""
        out = []
        for f in self.active():
            low_gain = grid is not None and f.gain < g_min
            visited = traj.near(f.p_bar, f.direction(), prune_dist, prune_angle_deg)
            if low_gain or visited:
                f.status = INVALID
                out.append(f.id)
        return out

    def mergeable_pair_exists(self, merge_dist: float, merge_angle_deg: float) -> bool:
        """Exhaustive pairwise check of the maximal-merge invariant."""
        act = self.active()
        for i in range(len(act)):
            for j in range(i + 1, len(act)):
                a, b = act[i], act[j]
                if float(np.linalg.norm(a.p_bar - b.p_bar)) < merge_dist and (
                    angle_between_deg(a.direction(), b.direction()) < merge_angle_deg
                ):
                    return True
        return False


def orient_toward_unknown(f: Frontier3D, grid: VoxelGrid, cam: CameraModel) -> Frontier3D:
    """Resolve the sign of the lifted viewing direction against the map.

    The planar angle recovered from depth gradients fixes a viewing line but
    is ambiguous about which side of the boundary is unexplored: at an
    occlusion edge the hidden volume lies behind the near surface, while at a
    see-through opening or range cutoff it lies past the far one. Keep the
    orientation whose frustum holds more Unknown voxels actually visible
    through the current map (known walls block the count, so a goal facing a
    mapped wall scores nothing), ties keeping the original."""
    idx = grid.index_of(f.p_bar)
    if not all(0 <= idx[ax] < grid.dims[ax] for ax in range(3)):
        return f
    unknown = grid.states == UNKNOWN
    tan_x = math.tan(math.radians(cam.fov_x) / 2.0)
    tan_y = math.tan(math.radians(cam.fov_y) / 2.0)
    v = f.direction()

    def visible(d):
        rot = rotation_from_yaw_pitch(
            math.atan2(d[1], d[0]), math.asin(max(-1.0, min(1.0, float(d[2]))))
        )
        return kernels.visible_out_count(
            grid.states, unknown, int(idx[0]), int(idx[1]), int(idx[2]),
            rot, tan_x, tan_y, cam.max_range, grid.res,
        )

    if visible(-v) > visible(v):
        f.yaw = math.atan2(-v[1], -v[0])
        f.pitch = math.asin(max(-1.0, min(1.0, float(-v[2]))))
    return f


def known_in_frustum(
    centers: np.ndarray,
    p: np.ndarray,
    direction: np.ndarray,
    tan_x: float,
    tan_y: float,
    r2: float,
) -> int:
    """Count points inside the rectangular frustum at (p, direction) and
    within sqrt(r2) of p."""
    if centers.shape[0] == 0:
        return 0
    yaw = math.atan2(direction[1], direction[0])
    pitch = math.asin(max(-1.0, min(1.0, float(direction[2]))))
    from .camera import rotation_from_yaw_pitch

    rot = rotation_from_yaw_pitch(yaw, pitch)
    d = centers - p
    dist2 = (d * d).sum(axis=1)
    pc = d @ rot  # columns are camera axes, so pc = [x_c, y_c, z_c]
    zc = pc[:, 2]
    ok = (dist2 <= r2) & (zc > 0.0)
    ok &= np.abs(pc[:, 0]) <= zc * tan_x
    ok &= np.abs(pc[:, 1]) <= zc * tan_y
    return int(np.count_nonzero(ok))
