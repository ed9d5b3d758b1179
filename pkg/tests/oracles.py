"""Independent brute-force references the tests compare against.

Everything here is written from the definitions, not from the package's
algorithms: rendering goes through per-box slab intersection instead of grid
traversal, visibility through exact rational interval enumeration instead of
incremental integer marching, shortest paths through scipy's Dijkstra,
distances through full pairwise minima.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from voxfront.grid import FREE, OCCUPIED, VoxelGrid


def brute_distance_field(mask: np.ndarray, r_df: int) -> np.ndarray:
    """Truncated Euclidean distance to the nearest on-pixel, by exhaustive
    integer-squared minimum."""
    h, w = mask.shape
    on = np.argwhere(mask)
    d = np.full((h, w), float(r_df))
    if on.size == 0:
        return d
    ys, xs = np.mgrid[0:h, 0:w]
    best = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    for oy, ox in on:
        d2 = (ys - oy) ** 2 + (xs - ox) ** 2
        np.minimum(best, d2, out=best)
    d = np.sqrt(best.astype(np.float64))
    return np.minimum(d, float(r_df))


def brute_render(scene: VoxelGrid, pose, cam) -> np.ndarray:
    """Per-pixel range by slab tests against every Occupied voxel's box."""
    occ = np.argwhere(scene.states == OCCUPIED)
    lo = scene.origin + occ * scene.res
    hi = lo + scene.res
    dirs = cam.ray_grid_world(pose)  # (h, w, 3) unit vectors
    h, w = dirs.shape[:2]
    out = np.full((h, w), np.inf)
    o = pose.p
    for r in range(h):
        for c in range(w):
            dvec = dirs[r, c]
            with np.errstate(divide="ignore", invalid="ignore"):
                t0 = (lo - o) / dvec
                t1 = (hi - o) / dvec
            tn = np.minimum(t0, t1)
            tf = np.maximum(t0, t1)
            # axes with zero direction: inside the slab or never
            for ax in range(3):
                if dvec[ax] == 0.0:
                    inside = (lo[:, ax] <= o[ax]) & (o[ax] < hi[:, ax])
                    tn[:, ax] = np.where(inside, -np.inf, np.inf)
                    tf[:, ax] = np.where(inside, np.inf, -np.inf)
            enter = np.maximum(tn.max(axis=1), 0.0)
            exit_ = tf.min(axis=1)
            ok = (enter <= exit_) & (exit_ > 0.0) & (enter <= cam.max_range)
            if ok.any():
                out[r, c] = float(enter[ok].min())
    return out


def brute_frontier_voxels(scene: VoxelGrid, in_view: np.ndarray) -> np.ndarray:
    """Free, in-view, with an in-grid face neighbor that is out-of-view."""
    nx, ny, nz = scene.dims
    out = np.zeros_like(in_view)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if not in_view[i, j, k] or scene.states[i, j, k] != FREE:
                    continue
                for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                                   (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                    a, b, c = i + di, j + dj, k + dk
                    if not (0 <= a < nx and 0 <= b < ny and 0 <= c < nz):
                        continue
                    if not in_view[a, b, c]:
                        out[i, j, k] = True
                        break
    return out


def _touched_cells(src_idx, dst_idx):
    """Grid cells whose closed unit cube the closed center-to-center segment
    touches. Works in cell units with exact rational arithmetic so that
    edge and corner grazes count every adjoining cell."""
    pa = [Fraction(2 * int(c) + 1, 2) for c in src_idx]
    d = [int(dst_idx[ax]) - int(src_idx[ax]) for ax in range(3)]
    events = set()
    for ax in range(3):
        if d[ax] == 0:
            continue
        lo, hi = sorted((pa[ax], pa[ax] + d[ax]))
        for c in range(math.floor(lo) + 1, math.ceil(hi)):
            t = Fraction(c - pa[ax], d[ax])
            if 0 < t < 1:
                events.add(t)
    ts = [Fraction(0)] + sorted(events) + [Fraction(1)]
    cells = set()
    for t0, t1 in zip(ts, ts[1:]):
        m = (t0 + t1) / 2
        cells.add(tuple(math.floor(pa[ax] + m * d[ax]) for ax in range(3)))
    for t in ts[1:-1]:
        axes = []
        for ax in range(3):
            p = pa[ax] + t * d[ax]
            if p.denominator == 1:
                axes.append((int(p) - 1, int(p)))
            else:
                axes.append((math.floor(p),))
        for cell in itertools.product(*axes):
            cells.add(cell)
    return cells


def _segment_blocked(scene: VoxelGrid, src_idx, dst_idx) -> bool:
    """True when the center-to-center segment touches the closed cube of an
    Occupied voxel other than the two endpoint voxels."""
    src = tuple(int(v) for v in src_idx)
    dst = tuple(int(v) for v in dst_idx)
    for cell in _touched_cells(src, dst):
        if cell == src or cell == dst:
            continue
        if all(0 <= cell[ax] < scene.dims[ax] for ax in range(3)):
            if scene.states[cell] == OCCUPIED:
                return True
    return False


def virtual_rotation(direction: np.ndarray) -> np.ndarray:
    yaw = math.atan2(direction[1], direction[0])
    pitch = math.asin(max(-1.0, min(1.0, float(direction[2]))))
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    fwd = np.array([cy * cp, sy * cp, sp])
    right = np.array([sy, -cy, 0.0])
    down = np.cross(fwd, right)
    return np.column_stack([right, down, fwd])


def brute_visible_out_count(
    scene: VoxelGrid, in_view: np.ndarray, src_idx, direction: np.ndarray, cam,
) -> int:
    """Count out-of-view voxels inside the virtual frustum at the source
    voxel's center with an unobstructed center-to-center segment."""
    rot = virtual_rotation(direction)
    tan_x = math.tan(math.radians(cam.fov_x) / 2.0)
    tan_y = math.tan(math.radians(cam.fov_y) / 2.0)
    out_idx = np.argwhere(~in_view)
    d = (out_idx - np.asarray(src_idx)) * scene.res
    dist2 = (d * d).sum(axis=1)
    pc = d @ rot
    zc = pc[:, 2]
    ok = (dist2 <= cam.max_range**2) & (zc > 0.0)
    ok &= np.abs(pc[:, 0]) <= zc * tan_x
    ok &= np.abs(pc[:, 1]) <= zc * tan_y
    count = 0
    for w in out_idx[ok]:
        if not _segment_blocked(scene, src_idx, w):
            count += 1
    return count


def dijkstra_cost(trav: np.ndarray, start: tuple, goal: tuple) -> float:
    """Optimal 26-connected path cost in cell units via scipy Dijkstra;
    inf when unreachable."""
    nx, ny, nz = trav.shape
    idx = -np.ones(trav.shape, dtype=np.int64)
    cells = np.argwhere(trav)
    idx[tuple(cells.T)] = np.arange(len(cells))
    rows, cols, w = [], [], []
    offsets = [
        (di, dj, dk)
        for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
        if (di, dj, dk) != (0, 0, 0)
    ]
    for ci, (i, j, k) in enumerate(cells):
        for di, dj, dk in offsets:
            a, b, c = i + di, j + dj, k + dk
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz and trav[a, b, c]:
                rows.append(ci)
                cols.append(idx[a, b, c])
                w.append(math.sqrt(di * di + dj * dj + dk * dk))
    if idx[start] < 0 or idx[goal] < 0:
        return math.inf
    g = coo_matrix((w, (rows, cols)), shape=(len(cells), len(cells)))
    dist = dijkstra(g.tocsr(), directed=False, indices=[int(idx[start])])
    return float(dist[0, int(idx[goal])])
