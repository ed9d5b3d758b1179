"""The exploration loop: observe, predict, anchor, plan, advance.

Modes: `frontiernet` plans over the occupancy map toward predicted frontiers;
`classic` targets occupancy-map frontier clusters (nearest by path length);
`mapfree` keeps no decision map and travels along the frontier tree, with
ground-truth collision checking. Mask/gain ablations swap the recovered mask
source (distance field vs raw discontinuity-refined mask) and the per-pixel
gain (predicted vs uniform g_max/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle as orc
from .anchor import ACTIVE, CONSUMED, INVALID, anchor_frontiers
from .camera import Pose, angle_between_deg, depth_gradient
from .config import RunConfig
from .grid import FREE, OCCUPIED, UNKNOWN, VoxelGrid
from .planner import (
    FrontierTree,
    Path,
    classic_baseline_step,
    densify,
    find_entry_point,
    plan_path,
    select_goal,
)
from .store import FrontierStore, TrajectoryMemory, orient_toward_unknown
from .world import integrate_observation, render_depth

EVENTS = ("collision", "done", "goal_reached", "goal_invalidated", "replan", "observe")
_EVENT_RANK = {name: i for i, name in enumerate(EVENTS)}

LOG_COLUMNS = (
    "step", "x", "y", "z", "yaw_deg", "pitch_deg",
    "known_voxels", "known_fraction", "goal_id", "event",
)


@dataclass
class LogRow:
    step: int
    pose: Pose
    known_voxels: int
    known_fraction: float
    goal_id: int
    event: str


@dataclass
class ExplorationLog:
    rows: list[LogRow] = field(default_factory=list)
    total_voxels: int = 0
    collided: bool = False
    done: bool = False

    @property
    def steps_used(self) -> int:
        return self.rows[-1].step if self.rows else 0

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for r in self.rows:
                yaw, pitch = r.pose.yaw_pitch()
                gid = "" if r.goal_id < 0 else str(r.goal_id)
                fh.write(
                    f"{r.step},{r.pose.p[0]!r},{r.pose.p[1]!r},{r.pose.p[2]!r},"
                    f"{math.degrees(yaw)!r},{math.degrees(pitch)!r},"
                    f"{r.known_voxels},{r.known_fraction!r},{gid},{r.event}\n"
                )


def _pick_event(events) -> str:
    if not events:
        return ""
    return min(events, key=lambda e: _EVENT_RANK[e])


def _scan_stations(pose: Pose, scan_deg: float, pitch_deg: float = 0.0):
    """Turn-in-place stations covering scan_deg, split into <= 90 degree legs
    so angle wrapping never cancels a full revolution. A nonzero pitch_deg
    adds a tilted-down and a tilted-up revolution to sweep the vertical FOV
    shadow around the robot."""
    yaw, pitch = pose.yaw_pitch()
    stations = [(pose.p, yaw, pitch)]
    tilts = [0.0]
    if pitch_deg > 0.0:
        tilts += [-pitch_deg, pitch_deg]
    cur = yaw
    for tilt in tilts:
        ring_pitch = pitch + math.radians(tilt)
        if stations[-1][2] != ring_pitch:
            stations.append((pose.p, cur, ring_pitch))
        remaining = scan_deg
        while remaining > 1e-9:
            leg = min(90.0, remaining)
            cur += math.radians(leg)
            stations.append((pose.p, cur, ring_pitch))
            remaining -= leg
    return stations


def _obs_seed(seed: int, counter: int) -> int:
    ss = np.random.SeedSequence((seed, counter))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _Run:
    def __init__(self, scene: VoxelGrid, start: Pose, cfg: RunConfig, seed: int, snapshot_dir=None):
        self.scene = scene
        self.cfg = cfg
        self.cam = cfg.camera()
        self.params = cfg.oracle_params()
        self.g_max = self.params.resolved_g_max(self.cam, scene.res)
        self.seed = seed
        self.pose = start
        if not scene.in_bounds(start.p) or scene.state_at(start.p) != FREE:
            from .camera import PoseError

            raise PoseError("start pose must sit in a Free scene voxel")
        self.map = VoxelGrid.full(scene.dims, scene.res, scene.origin, UNKNOWN)
        self.store = FrontierStore()
        self.tree = FrontierTree()
        self.traj = TrajectoryMemory(cfg.traj_dist, cfg.traj_angle_deg)
        self.total = int(np.count_nonzero(scene.states != UNKNOWN))
        self.known = 0
        self.obs_counter = 0
        self.fail_counts: dict[int, int] = {}
        self.goal_fid = -1
        self.classic_goal = None
        self.classic_goal_count = 0
        self.classic_fail_counts: dict[tuple, int] = {}
        self.classic_banned: set[tuple] = set()
        self.cur_node = -1
        self.goal_entry = None
        self.path: list[Pose] = []
        self.snapshot_dir = snapshot_dir
        self.log = ExplorationLog(total_voxels=self.total)

    # --- observation -----------------------------------------------------

    def observe(self) -> None:
        cfg = self.cfg
        depth = render_depth(self.scene, self.pose, self.cam)
        newly = integrate_observation(self.map, self.pose, self.cam, depth)
        self.known += newly
        self.traj.add(self.pose)
        self.cur_node = self.tree.add_pose(self.pose)
        if cfg.mode != "classic":
            self._predict_and_anchor(depth)
            if cfg.mode == "frontiernet":
                self.store.adjust_gains(self.map, self.cam)
                self.store.prune(
                    self.traj, self.map, cfg.g_min, cfg.prune_dist, cfg.prune_angle_deg
                )
            else:  # mapfree keeps only the visited-pose rule
                self.store.prune(self.traj, None, cfg.g_min, cfg.prune_dist, cfg.prune_angle_deg)
        self.obs_counter += 1
        if self.snapshot_dir is not None:
            from .grid import save_scene

            save_scene(
                f"{self.snapshot_dir}/map_{self.obs_counter - 1:04d}.txt", self.map
            )

    def _predict_and_anchor(self, depth) -> None:
        cfg = self.cfg
        cam = self.cam
        in_view = orc.classify_view_volume(self.scene, self.pose, cam, depth)
        ft_mask = orc.extract_frontier_voxels(self.scene, in_view)
        ft_idx = np.argwhere(ft_mask)
        centers = self.scene.origin + (ft_idx + 0.5) * self.scene.res
        if cfg.gain_mode == "predicted":
            gains = orc.voxel_info_gain(
                self.scene, in_view, self.pose, cam, ft_idx,
                cfg.sample_frac, _obs_seed(self.seed, self.obs_counter), cfg.idw_k,
            )
            f_p = orc.project_frontier_prior(self.pose, cam, centers, cfg.r_ray)
            g = orc.info_gain_map(self.pose, cam, centers, gains, cfg.r_ray)
            gain_img = orc.unbin_gain(
                orc.bin_gain(g, cfg.k_classes, self.g_max), cfg.k_classes, self.g_max
            )
        else:
            f_p = orc.project_frontier_prior(self.pose, cam, centers, cfg.r_ray)
            gain_img = np.full((cam.height, cam.width), self.g_max / 2.0)
        f_d = orc.depth_discontinuity_mask(depth, cfg.tau_d)
        f = f_p & f_d
        if cfg.mask_mode == "distance_field":
            d, _ = orc.distance_field(f, cfg.r_df)
            mask = d < cfg.recover_l
        else:
            mask = f
        gm = depth_gradient(depth)
        _, f3s = anchor_frontiers(
            mask, depth, gm, gain_img, self.pose, cam, self.g_max,
            cfg.fgbg_step, cfg.grad_eps, cfg.sigma_px, cfg.sigma_phi,
            cfg.sigma_g_frac, cfg.cluster_eps, cfg.min_cluster_size,
        )
        if cfg.mode == "frontiernet" and f3s:
            f3s = [orient_toward_unknown(f3, self.map, cam) for f3 in f3s]
        for f3 in f3s:
            f3.parent_pose_id = self.cur_node
            fid, _ = self.store.merge_or_insert(f3, cfg.merge_dist, cfg.merge_angle_deg)
            self.tree.add_edge(self.cur_node, fid)

    # --- planning ---------------------------------------------------------

    def replan(self) -> tuple[bool, list[str]]:
        """Pick a goal and build a fresh path. Returns (exploration done,
        events)."""
        if self.cfg.mode == "classic":
            return self._replan_classic()
        events: list[str] = []
        cfg = self.cfg
        skipped: set[int] = set()
        while True:
            fid = select_goal(self.store, self.pose.p, cfg.utility_dist_floor, exclude=skipped)
            if fid is None:
                # done only when nothing was skippable: a goal that merely
                # failed this cycle gets another chance after the map grows
                return not skipped, events
            f = self.store.get(fid)
            if cfg.mode == "mapfree":
                path = self._mapfree_route(f)
            else:
                entry = find_entry_point(self.tree, f, self.map, cfg.entry_samples)
                path = plan_path(
                    self.map, self.pose, entry, f.yaw, f.pitch,
                    cfg.inflation_radius, cfg.step_dist, cfg.step_angle_deg,
                )
            if path is not None and path.waypoints:
                if fid != self.goal_fid:
                    events.append("replan")
                self.goal_fid = fid
                self.path = list(path.waypoints)
                return False, events
            self.fail_counts[fid] = self.fail_counts.get(fid, 0) + 1
            if self.fail_counts[fid] >= cfg.max_plan_failures:
                f.status = INVALID
                events.append("goal_invalidated")
                if fid == self.goal_fid:
                    self.goal_fid = -1
            else:
                skipped.add(fid)

    def _replan_classic(self) -> tuple[bool, list[str]]:
        cfg = self.cfg
        events: list[str] = []
        while True:
            goal = classic_baseline_step(
                self.map, self.pose, cfg.classic_min_cluster,
                cfg.inflation_radius, cfg.step_dist, cfg.step_angle_deg,
                banned=self.classic_banned,
            )
            if goal is None:
                return True, events
            if not goal.path.waypoints:
                # already at the goal pose with nothing to execute
                self.classic_banned.add(goal.cell)
                events.append("goal_invalidated")
                continue
            if self.classic_goal is None or goal.cell != self.classic_goal.cell:
                self.classic_goal_count += 1
                events.append("replan")
            self.classic_goal = goal
            self.path = list(goal.path.waypoints)
            return False, events

    def _register_unreached_goal(self) -> list[str]:
        """Penalize the goal whose path just ran out without an arrival."""
        cfg = self.cfg
        if cfg.mode == "classic":
            if self.classic_goal is None:
                return []
            cell = self.classic_goal.cell
            self.classic_fail_counts[cell] = self.classic_fail_counts.get(cell, 0) + 1
            if self.classic_fail_counts[cell] >= cfg.max_plan_failures:
                self.classic_banned.add(cell)
                return ["goal_invalidated"]
            return []
        if self.goal_fid < 0:
            return []
        fid = self.goal_fid
        f = self.store.get(fid)
        if f.status != ACTIVE:
            return []
        self.fail_counts[fid] = self.fail_counts.get(fid, 0) + 1
        if self.fail_counts[fid] >= cfg.max_plan_failures:
            f.status = INVALID
            self.goal_fid = -1
            return ["goal_invalidated"]
        return []

    def _mapfree_route(self, f):
        """Chain backtrack from the current tree node to the frontier's parent
        node, then a straight leg toward the frontier, stopping where the
        registering observation stopped certifying free space."""
        cfg = self.cfg
        yaw, pitch = self.pose.yaw_pitch()
        stations = [(self.pose.p, yaw, pitch)]
        step = 1 if f.parent_pose_id >= self.cur_node else -1
        chain = list(range(self.cur_node, f.parent_pose_id + step, step))[1:]
        anchor_pts = [self.tree.pose(nid).p for nid in chain]
        leg_start = anchor_pts[-1] if anchor_pts else self.pose.p
        u = f.p_bar - leg_start
        leg_len = float(np.linalg.norm(u))
        back = f.approach_clear + cfg.inflation_radius
        if leg_len > 1e-12 and back < leg_len:
            entry = f.p_bar - u * (back / leg_len)
        else:
            entry = leg_start
        self.goal_entry = entry
        pts = anchor_pts + [entry]
        cur_yaw = yaw
        cur_pitch = pitch
        for a, b in zip([self.pose.p] + pts, pts):
            d = b - a
            if abs(d[0]) > 1e-12 or abs(d[1]) > 1e-12:
                cur_yaw = math.atan2(d[1], d[0])
            if float(np.dot(d, d)) > 1e-24:
                cur_pitch = 0.0  # travel legs fly level
            stations.append((b, cur_yaw, cur_pitch))
        stations.append((entry, f.yaw, f.pitch))
        waypoints = densify(stations, cfg.step_dist, cfg.step_angle_deg)
        if not waypoints:
            return None
        length = sum(float(np.linalg.norm(b[0] - a[0])) for a, b in zip(stations, stations[1:]))
        return Path(waypoints=waypoints, total_length=length, total_rotation=0.0)

    # --- main loop ----------------------------------------------------------

    def arrived(self) -> bool:
        cfg = self.cfg
        if self.cfg.mode == "classic":
            if self.classic_goal is None:
                return False
            g = self.classic_goal
            if float(np.linalg.norm(self.pose.p - g.point)) > cfg.arrive_dist:
                return False
            tgt = np.array([math.cos(g.yaw), math.sin(g.yaw), 0.0])
            return angle_between_deg(self.pose.forward(), tgt) <= cfg.arrive_angle_deg
        if self.goal_fid < 0:
            return False
        f = self.store.get(self.goal_fid)
        if f.status != ACTIVE:
            return False
        target = f.p_bar
        if cfg.mode == "mapfree" and self.goal_entry is not None:
            target = self.goal_entry
        if float(np.linalg.norm(self.pose.p - target)) > cfg.arrive_dist:
            return False
        return angle_between_deg(self.pose.forward(), f.direction()) <= cfg.arrive_angle_deg

    def goal_id_for_log(self) -> int:
        if self.cfg.mode == "classic":
            return self.classic_goal_count if self.classic_goal is not None else -1
        return self.goal_fid

    def log_row(self, step: int, events) -> None:
        self.log.rows.append(
            LogRow(
                step=step,
                pose=self.pose,
                known_voxels=self.known,
                known_fraction=self.known / self.total,
                goal_id=self.goal_id_for_log(),
                event=_pick_event(events),
            )
        )

    def run(self, max_steps: int) -> ExplorationLog:
        cfg = self.cfg
        if max_steps <= 0:
            return self.log
        self.observe()
        self.log_row(0, ["observe"])
        if cfg.initial_scan_deg > 0:
            self.path = densify(
                _scan_stations(self.pose, cfg.initial_scan_deg, cfg.scan_pitch_deg),
                cfg.step_dist,
                cfg.step_angle_deg,
            )
        forced = len(self.path)
        steps_since_obs = 0
        step = 0
        pending: list[str] = []
        while step < max_steps:
            if not self.path:
                # a path that ran out without reaching its goal counts as a
                # failed attempt; three of those invalidate the goal
                if forced == 0:
                    pending.extend(self._register_unreached_goal())
                # path exhausted (or never planned): observe, then replan
                self.observe()
                steps_since_obs = 0
                pending.append("observe")
                done, ev = self.replan()
                pending.extend(ev)
                if done:
                    self.log.done = True
                    self.log_row(step, pending + ["done"])
                    break
                forced = 0
                if not self.path:
                    # nothing plannable this cycle: hold one step, retry after
                    self.path = [self.pose]
                continue
            self.pose = self.path.pop(0)
            if forced > 0:
                forced -= 1
            step += 1
            steps_since_obs += 1
            events = pending
            pending = []
            if cfg.mode == "mapfree" and (
                not self.scene.in_bounds(self.pose.p)
                or self.scene.state_at(self.pose.p) == OCCUPIED
            ):
                self.log.collided = True
                self.log_row(step, events + ["collision"])
                break
            reached = self.arrived() and forced == 0
            if reached:
                events.append("goal_reached")
                if cfg.mode == "classic":
                    self.classic_goal = None
                else:
                    self.store.get(self.goal_fid).status = CONSUMED
                    self.goal_fid = -1
                self.path = []  # observe and replan at the top of the loop
            elif self.path and steps_since_obs >= cfg.k_obs:
                self.observe()
                steps_since_obs = 0
                events.append("observe")
                if forced == 0:
                    done, ev = self.replan()
                    events.extend(ev)
                    if done:
                        self.log.done = True
                        self.log_row(step, events + ["done"])
                        break
            self.log_row(step, events)
        return self.log


def run_exploration(
    scene: VoxelGrid,
    start: Pose,
    cfg: RunConfig,
    seed: int = 0,
    max_steps: int | None = None,
    snapshot_dir=None,
) -> ExplorationLog:
    """Run one exploration episode; deterministic for fixed arguments.
    snapshot_dir, when set, receives the robot map (mapfree: the metrics
    shadow map) in scene-file format after every observation."""
    run = _Run(scene, start, cfg, seed, snapshot_dir)
    return run.run(cfg.max_steps if max_steps is None else max_steps)
