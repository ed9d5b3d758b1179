"""Goal selection, entry points, grid planning, densification, and the
map-frontier baseline."""

import heapq
import math

import numpy as np
import pytest

from voxfront.anchor import Frontier3D
from voxfront.camera import Pose
from voxfront.grid import FREE, OCCUPIED, UNKNOWN, VoxelGrid
from voxfront.planner import (
    FrontierTree,
    classic_baseline_step,
    densify,
    find_entry_point,
    map_frontier_mask,
    plan_path,
    select_goal,
    traversable_mask,
)
from voxfront.store import FrontierStore


def _frontier(x, y, gain, z=0.5, yaw=0.0):
    return Frontier3D(
        p_bar=np.array([x, y, z], dtype=float), yaw=yaw, pitch=0.0, gain=gain, gain0=gain
    )


def _insert(st, f):
    fid, _ = st.merge_or_insert(f, 1e-9, 1e-9)
    return fid


class TestFrontierTree:
    def test_pose_ids_increment(self):
        t = FrontierTree()
        p0 = Pose.from_yaw_pitch(np.zeros(3), 0, 0)
        p1 = Pose.from_yaw_pitch(np.ones(3), 0.5, 0)
        assert t.add_pose(p0) == 0
        assert t.add_pose(p1) == 1
        assert np.allclose(t.pose(1).p, 1.0)

    def test_edges_recorded(self):
        t = FrontierTree()
        t.add_pose(Pose.from_yaw_pitch(np.zeros(3), 0, 0))
        t.add_edge(0, 4)
        t.add_edge(0, 9)
        assert t.edges == [(0, 4), (0, 9)]


class TestSelectGoal:
    def test_utility_ranking(self):
        st = FrontierStore()
        a = _insert(st, _frontier(1.0, 0, gain=10.0))   # utility 10
        b = _insert(st, _frontier(4.0, 0, gain=30.0))   # utility 7.5
        robot = np.array([0.0, 0.0, 0.5])
        assert select_goal(st, robot) == a
        st.get(b).gain = 50.0                            # utility 12.5
        assert select_goal(st, robot) == b

    def test_distance_floor(self):
        st = FrontierStore()
        near = _insert(st, _frontier(0.01, 0, gain=10.0))
        far = _insert(st, _frontier(0.3, 0, gain=11.0))
        robot = np.array([0.0, 0.0, 0.5])
        # both distances clamp to the floor, leaving gain to decide
        assert select_goal(st, robot, dist_floor=0.3) == far

    def test_tie_breaks(self):
        st = FrontierStore()
        a = _insert(st, _frontier(1.0, 0, gain=10.0))
        b = _insert(st, _frontier(2.0, 0, gain=20.0))   # same utility, higher gain
        robot = np.array([0.0, 0.0, 0.5])
        assert select_goal(st, robot) == b
        st = FrontierStore()
        a = _insert(st, _frontier(1.0, 0, gain=10.0))
        b = _insert(st, _frontier(0, 1.0, gain=10.0))   # full tie: lower id
        assert select_goal(st, robot) == a

    def test_exclude_and_empty(self):
        st = FrontierStore()
        robot = np.zeros(3)
        assert select_goal(st, robot) is None
        a = _insert(st, _frontier(1.0, 0, gain=10.0))
        b = _insert(st, _frontier(2.0, 0, gain=10.0))
        assert select_goal(st, robot, exclude={a}) == b
        assert select_goal(st, robot, exclude={a, b}) is None

    def test_gain_scale_invariance(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            st = FrontierStore()
            for _ in range(8):
                _insert(st, _frontier(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                      gain=rng.uniform(1, 100)))
            robot = rng.uniform(-1, 1, 3)
            pick = select_goal(st, robot)
            for f in st.active():
                f.gain *= 37.5
            assert select_goal(st, robot) == pick


class TestEntryPoint:
    def _setup(self):
        g = VoxelGrid.full((20, 8, 4), 0.25)
        tree = FrontierTree()
        parent = tree.add_pose(Pose.from_yaw_pitch(np.array([0.625, 1.0, 0.5]), 0, 0))
        f = _frontier(4.375, 1.0, gain=10.0)
        f.parent_pose_id = parent
        return g, tree, f

    def test_first_free_sample_wins(self):
        g, tree, f = self._setup()
        g.states[:10, :, :] = FREE  # known half toward the parent
        e = find_entry_point(tree, f, g, n_samples=20)
        # samples walk from p_bar toward the parent; the first Free one is
        # just inside x < 2.5
        assert g.state_at(e) == FREE
        d_total = np.linalg.norm(f.p_bar - tree.pose(0).p)
        lam = np.linalg.norm(e - f.p_bar) / d_total
        assert lam < 0.55  # barely past the unknown half

    def test_frontier_already_free(self):
        g, tree, f = self._setup()
        g.states[:] = FREE
        e = find_entry_point(tree, f, g)
        assert np.allclose(e, f.p_bar)

    def test_fallback_to_parent(self):
        g, tree, f = self._setup()  # all Unknown
        e = find_entry_point(tree, f, g)
        assert np.allclose(e, tree.pose(0).p)


class TestTraversable:
    def test_inflation_semantics(self):
        g = VoxelGrid.full((9, 9, 3), 0.2)
        g.states[:] = FREE
        g.states[4, 4, 1] = OCCUPIED
        g.states[0, 0, 0] = UNKNOWN
        t = traversable_mask(g, inflation=0.2)
        assert not t[0, 0, 0]          # Unknown blocks
        assert not t[4, 4, 1]          # the obstacle itself
        assert not t[3, 4, 1]          # face neighbor: center distance 0.2, not > 0.2
        assert t[3, 3, 1]              # diagonal: 0.283 > 0.2
        assert t[6, 4, 1]

    def test_zero_inflation(self):
        g = VoxelGrid.full((5, 5, 3), 0.2)
        g.states[:] = FREE
        g.states[2, 2, 1] = OCCUPIED
        t = traversable_mask(g, inflation=0.0)
        assert t[1, 2, 1] and not t[2, 2, 1]


def _dijkstra(trav, start, goal):
    nx, ny, nz = trav.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    seen = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in seen:
            continue
        seen.add(v)
        if v == goal:
            return d
        i, j, k = v
        for oi in (-1, 0, 1):
            for oj in (-1, 0, 1):
                for ok in (-1, 0, 1):
                    if oi == oj == ok == 0:
                        continue
                    w = (i + oi, j + oj, k + ok)
                    if not (0 <= w[0] < nx and 0 <= w[1] < ny and 0 <= w[2] < nz):
                        continue
                    if not trav[w]:
                        continue
                    nd = d + math.sqrt(oi * oi + oj * oj + ok * ok)
                    if nd < dist.get(w, math.inf) - 1e-12:
                        dist[w] = nd
                        heapq.heappush(heap, (nd, w))
    return math.inf


class TestPlanPath:
    def _room(self):
        g = VoxelGrid.full((20, 20, 5), 0.2)
        g.states[:] = FREE
        return g

    def test_straight_corridor(self):
        g = self._room()
        start = Pose.from_yaw_pitch(np.array([0.5, 1.9, 0.5]), 0.0, 0.0)
        goal = np.array([3.5, 1.9, 0.5])
        path = plan_path(g, start, goal, final_yaw=0.0, final_pitch=0.0,
                         inflation=0.0, step_dist=0.1, step_angle_deg=10.0)
        assert path is not None
        # 15 axis-aligned cell steps at res 0.2
        assert math.isclose(path.total_length, 3.0, abs_tol=1e-9)
        last = path.waypoints[-1]
        assert np.allclose(last.p, goal)
        yaw, pitch = last.yaw_pitch()
        assert abs(yaw) < 1e-9 and abs(pitch) < 1e-9

    def test_step_granularity(self):
        g = self._room()
        start = Pose.from_yaw_pitch(np.array([0.5, 0.5, 0.5]), 0.0, 0.0)
        goal = np.array([3.3, 3.3, 0.5])
        path = plan_path(g, start, goal, final_yaw=2.0, final_pitch=-0.4,
                         inflation=0.0, step_dist=0.25, step_angle_deg=15.0)
        prev = start
        for wp in path.waypoints:
            assert np.linalg.norm(wp.p - prev.p) <= 0.25 + 1e-9
            y0, t0 = prev.yaw_pitch()
            y1, t1 = wp.yaw_pitch()
            dyaw = math.degrees(abs(math.atan2(math.sin(y1 - y0), math.cos(y1 - y0))))
            assert dyaw <= 15.0 + 1e-6
            assert math.degrees(abs(t1 - t0)) <= 15.0 + 1e-6
            prev = wp

    def test_wall_forces_detour_and_blocks(self):
        g = self._room()
        g.states[10, :, :] = OCCUPIED
        start = Pose.from_yaw_pitch(np.array([1.0, 2.0, 0.5]), 0.0, 0.0)
        goal = np.array([3.0, 2.0, 0.5])
        assert plan_path(g, start, goal, 0, 0, inflation=0.0) is None
        g.states[10, 2:4, 1:3] = FREE  # door, well off the straight line
        path = plan_path(g, start, goal, 0, 0, inflation=0.0)
        assert path is not None
        assert path.total_length > 2.0 + 0.5  # detour beats the straight line

    def test_unknown_blocks(self):
        g = self._room()
        g.states[10, :, :] = UNKNOWN
        start = Pose.from_yaw_pitch(np.array([1.0, 2.0, 0.5]), 0.0, 0.0)
        assert plan_path(g, start, np.array([3.0, 2.0, 0.5]), 0, 0, inflation=0.0) is None

    def test_start_goal_inflation_exempt(self):
        g = self._room()
        g.states[:, 0, :] = OCCUPIED  # south wall
        start = Pose.from_yaw_pitch(np.array([0.5, 0.3, 0.5]), 0.0, 0.0)
        goal = np.array([3.5, 0.3, 0.5])  # both hug the wall inside inflation
        path = plan_path(g, start, goal, 0, 0, inflation=0.25)
        assert path is not None
        # interior waypoints keep clear of the wall even though the
        # endpoints are exempt
        for wp in path.waypoints[:-5]:
            assert wp.p[1] > 0.3 or np.allclose(wp.p[:2], goal[:2], atol=0.3)

    def test_out_of_bounds(self):
        g = self._room()
        start = Pose.from_yaw_pitch(np.array([1.0, 1.0, 0.5]), 0.0, 0.0)
        assert plan_path(g, start, np.array([99.0, 1.0, 0.5]), 0, 0) is None
        start_oob = Pose.from_yaw_pitch(np.array([-5.0, 1.0, 0.5]), 0.0, 0.0)
        assert plan_path(g, start_oob, np.array([1.0, 1.0, 0.5]), 0, 0) is None

    def test_optimal_against_dijkstra(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            g = VoxelGrid.full((14, 14, 4), 0.2)
            g.states[:] = FREE
            blocks = rng.random(g.dims) < 0.25
            g.states[blocks] = OCCUPIED
            trav = traversable_mask(g, 0.0)
            cells = np.argwhere(trav)
            if cells.shape[0] < 2:
                continue
            s, t = cells[rng.choice(cells.shape[0], 2, replace=False)]
            start = Pose.from_yaw_pitch(g.center_of(tuple(s)), 0.0, 0.0)
            goal = g.center_of(tuple(t))
            path = plan_path(g, start, goal, 0, 0, inflation=0.0)
            ref = _dijkstra(trav, tuple(int(v) for v in s), tuple(int(v) for v in t))
            if path is None:
                assert math.isinf(ref)
            else:
                assert math.isclose(path.total_length, ref * g.res, rel_tol=1e-9)


class TestDensify:
    def test_counts_from_quanta(self):
        a = (np.zeros(3), 0.0, 0.0)
        b = (np.array([1.0, 0, 0]), math.radians(45.0), 0.0)
        # 1 m / 0.2 -> 5; 45 deg / 10 -> 5
        out = densify([a, b], 0.2, 10.0)
        assert len(out) == 5
        assert np.allclose(out[-1].p, [1, 0, 0])
        # rotation dominates
        out = densify([a, b], 0.5, 5.0)
        assert len(out) == 9

    def test_first_station_excluded(self):
        a = (np.zeros(3), 0.0, 0.0)
        b = (np.array([0.1, 0, 0]), 0.0, 0.0)
        out = densify([a, b], 0.2, 10.0)
        assert len(out) == 1 and np.allclose(out[0].p, [0.1, 0, 0])

    def test_yaw_wraps_short_way(self):
        a = (np.zeros(3), math.radians(170.0), 0.0)
        b = (np.zeros(3), math.radians(-170.0), 0.0)
        out = densify([a, b], 0.2, 10.0)
        assert len(out) == 2
        yaw_mid = out[0].yaw_pitch()[0]
        assert math.isclose(abs(yaw_mid), math.pi, abs_tol=1e-9)  # through 180

    def test_degenerate_pair_skipped(self):
        a = (np.zeros(3), 0.5, 0.1)
        out = densify([a, a], 0.2, 10.0)
        assert out == []


class TestClassicBaseline:
    def _two_pocket_scene(self):
        # free room with two unknown pockets punched into the east and west
        g = VoxelGrid.full((24, 16, 5), 0.2)
        g.states[:] = FREE
        g.states[20:, 6:10, 1:4] = UNKNOWN
        g.states[:3, 6:10, 1:4] = UNKNOWN
        return g

    def test_empty_and_full_maps(self):
        g = VoxelGrid.full((8, 8, 3), 0.2)
        robot = Pose.from_yaw_pitch(np.array([0.8, 0.8, 0.3]), 0.0, 0.0)
        assert classic_baseline_step(g, robot) is None  # nothing known yet
        g.states[:] = FREE
        assert classic_baseline_step(g, robot) is None  # nothing unknown left

    def test_nearest_cluster_by_path_length(self):
        g = self._two_pocket_scene()
        robot = Pose.from_yaw_pitch(np.array([3.8, 1.6, 0.5]), 0.0, 0.0)
        goal = classic_baseline_step(g, robot, min_cluster=3, inflation=0.0)
        assert goal is not None
        assert goal.cell[0] >= 17  # east pocket border is closer
        assert math.cos(goal.yaw) > 0.7  # faces the unknown, +x

    def test_min_cluster_filters(self):
        g = VoxelGrid.full((10, 10, 4), 0.2)
        g.states[:] = FREE
        g.states[9, 4, 2] = UNKNOWN  # tiny pocket: frontier cluster of ~5
        robot = Pose.from_yaw_pitch(np.array([0.5, 0.9, 0.5]), 0.0, 0.0)
        assert classic_baseline_step(g, robot, min_cluster=50, inflation=0.0) is None
        assert classic_baseline_step(g, robot, min_cluster=1, inflation=0.0) is not None

    def test_banned_cell_skipped(self):
        g = self._two_pocket_scene()
        robot = Pose.from_yaw_pitch(np.array([3.8, 1.6, 0.5]), 0.0, 0.0)
        first = classic_baseline_step(g, robot, min_cluster=3, inflation=0.0)
        second = classic_baseline_step(
            g, robot, min_cluster=3, inflation=0.0, banned={first.cell}
        )
        assert second is not None and second.cell != first.cell
        assert second.cell[0] <= 6  # pushed to the west pocket

    def test_cluster_size_reported(self):
        g = self._two_pocket_scene()
        mask = map_frontier_mask(g)
        robot = Pose.from_yaw_pitch(np.array([3.8, 1.6, 0.5]), 0.0, 0.0)
        goal = classic_baseline_step(g, robot, min_cluster=3, inflation=0.0)
        assert 0 < goal.size <= int(mask.sum())


class TestMapFrontierMask:
    def test_face_adjacency_only(self):
        g = VoxelGrid.full((6, 6, 3), 0.2)
        g.states[:] = FREE
        g.states[3, 3, 1] = UNKNOWN
        m = map_frontier_mask(g)
        assert m[2, 3, 1] and m[4, 3, 1] and m[3, 2, 1] and m[3, 3, 0]
        assert not m[2, 2, 1]  # diagonal neighbor does not count
        assert not m[3, 3, 1]  # the unknown cell itself
        assert int(m.sum()) == 6

    def test_occupied_is_not_frontier(self):
        g = VoxelGrid.full((6, 6, 3), 0.2)
        g.states[:] = FREE
        g.states[3, 3, 1] = UNKNOWN
        g.states[2, 3, 1] = OCCUPIED
        m = map_frontier_mask(g)
        assert not m[2, 3, 1]
        assert int(m.sum()) == 5
