"""Pure-numpy fallback for the hot kernels.

Same contracts as numba_backend, selected via the VOXFRONT_BACKEND env flag.
Ray casting and integration run all rays in lockstep; line-of-sight marching
falls back to plain Python integer arithmetic, so this path is correct but
slow. It exists for installs without a working numba and as the benchmark
baseline.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

OCCUPIED = 2
UNKNOWN = 0
FREE = 1


def _dda_setup(origin, res, p, dirs):
    n = dirs.shape[0]
    start = np.floor((p - origin) / res).astype(np.int64)
    idx = np.tile(start, (n, 1))
    step = np.zeros((n, 3), dtype=np.int64)
    step[dirs > 0.0] = 1
    step[dirs < 0.0] = -1
    with np.errstate(divide="ignore"):
        tdelta = np.where(step != 0, res / np.abs(dirs), np.inf)
        bound = origin + (idx + (step > 0)) * res
        tmax = np.where(step != 0, (bound - p) / dirs, np.inf)
    return idx, step, tdelta, tmax


def _pick_axis(tmax):
    ax = np.where(
        (tmax[:, 0] <= tmax[:, 1]) & (tmax[:, 0] <= tmax[:, 2]),
        0,
        np.where(tmax[:, 1] <= tmax[:, 2], 1, 2),
    )
    return ax


def cast_rays(states, origin, res, p, dirs, max_range):
    n = dirs.shape[0]
    nx, ny, nz = states.shape
    out = np.full(n, np.inf, dtype=np.float64)
    start = np.floor((p - origin) / res).astype(np.int64)
    if not (0 <= start[0] < nx and 0 <= start[1] < ny and 0 <= start[2] < nz):
        return out
    idx, step, tdelta, tmax = _dda_setup(origin, res, p, dirs)
    active = np.ones(n, dtype=bool)
    rows = np.arange(n)
    while active.any():
        act = rows[active]
        ax = _pick_axis(tmax[act])
        t = tmax[act, ax]
        over = t > max_range
        if over.any():
            active[act[over]] = False
            keep = ~over
            act = act[keep]
            ax = ax[keep]
            t = t[keep]
        if act.size == 0:
            break
        idx[act, ax] += step[act, ax]
        cur = idx[act]
        oob = (
            (cur[:, 0] < 0)
            | (cur[:, 0] >= nx)
            | (cur[:, 1] < 0)
            | (cur[:, 1] >= ny)
            | (cur[:, 2] < 0)
            | (cur[:, 2] >= nz)
        )
        if oob.any():
            active[act[oob]] = False
            keep = ~oob
            act = act[keep]
            ax = ax[keep]
            t = t[keep]
            cur = cur[keep]
        if act.size == 0:
            continue
        hit = states[cur[:, 0], cur[:, 1], cur[:, 2]] == OCCUPIED
        if hit.any():
            out[act[hit]] = t[hit]
            active[act[hit]] = False
        tmax[act, ax] += tdelta[act, ax]
    return out


def integrate_rays(states, origin, res, p, dirs, ranges, max_range):
    n = dirs.shape[0]
    nx, ny, nz = states.shape
    start = np.floor((p - origin) / res).astype(np.int64)
    if not (0 <= start[0] < nx and 0 <= start[1] < ny and 0 <= start[2] < nz):
        return
    has_hit = np.isfinite(ranges)
    limits = np.where(has_hit, ranges, max_range)
    live = limits > 0.0
    if states[start[0], start[1], start[2]] == UNKNOWN and live.any():
        states[start[0], start[1], start[2]] = FREE
    idx, step, tdelta, tmax = _dda_setup(origin, res, p, dirs)
    active = live.copy()
    rows = np.arange(n)
    while active.any():
        act = rows[active]
        ax = _pick_axis(tmax[act])
        t = tmax[act, ax]
        stopping = t >= limits[act]
        if stopping.any():
            stop_rays = act[stopping]
            stop_ax = ax[stopping]
            hitters = has_hit[stop_rays]
            if hitters.any():
                hr = stop_rays[hitters]
                ha = stop_ax[hitters]
                hidx = idx[hr].copy()
                hidx[np.arange(hr.size), ha] += step[hr, ha]
                inb = (
                    (hidx[:, 0] >= 0)
                    & (hidx[:, 0] < nx)
                    & (hidx[:, 1] >= 0)
                    & (hidx[:, 1] < ny)
                    & (hidx[:, 2] >= 0)
                    & (hidx[:, 2] < nz)
                )
                hidx = hidx[inb]
                states[hidx[:, 0], hidx[:, 1], hidx[:, 2]] = OCCUPIED
            active[stop_rays] = False
            keep = ~stopping
            act = act[keep]
            ax = ax[keep]
        if act.size == 0:
            continue
        idx[act, ax] += step[act, ax]
        cur = idx[act]
        oob = (
            (cur[:, 0] < 0)
            | (cur[:, 0] >= nx)
            | (cur[:, 1] < 0)
            | (cur[:, 1] >= ny)
            | (cur[:, 2] < 0)
            | (cur[:, 2] >= nz)
        )
        if oob.any():
            active[act[oob]] = False
            keep = ~oob
            act = act[keep]
            ax = ax[keep]
            cur = cur[keep]
        if act.size == 0:
            continue
        unk = states[cur[:, 0], cur[:, 1], cur[:, 2]] == UNKNOWN
        if unk.any():
            mk = cur[unk]
            states[mk[:, 0], mk[:, 1], mk[:, 2]] = FREE
        tmax[act, ax] += tdelta[act, ax]


def gate_values(p, dirs, pts, vals, r_ray, max_range):
    n = dirs.shape[0]
    any_hit = np.zeros(n, dtype=bool)
    best = np.zeros(n, dtype=np.float64)
    r2 = r_ray * r_ray
    for a in range(pts.shape[0]):
        w = pts[a] - p
        t = dirs @ w
        fwd = t >= 0.0
        tc = np.minimum(t, max_range)
        e = w[None, :] - tc[:, None] * dirs
        d2 = (e * e).sum(axis=1)
        gated = fwd & (d2 <= r2)
        if not gated.any():
            continue
        first = gated & ~any_hit
        best[first] = vals[a]
        better = gated & any_hit & (vals[a] > best)
        best[better] = vals[a]
        any_hit |= gated
    return any_hit, best


def _los_clear(states, ci, cj, ck, wi, wj, wk):
    di, dj, dk = wi - ci, wj - cj, wk - ck
    i, j, k = ci, cj, ck
    si = 1 if di > 0 else (-1 if di < 0 else 0)
    sj = 1 if dj > 0 else (-1 if dj < 0 else 0)
    sk = 1 if dk > 0 else (-1 if dk < 0 else 0)
    deni = 2 * di * si
    denj = 2 * dj * sj
    denk = 2 * dk * sk
    while i != wi or j != wj or k != wk:
        if si != 0:
            pi = 2 * (i + 1) if si > 0 else 2 * i
            numi = (pi - (2 * ci + 1)) * si
        else:
            numi = 1
        if sj != 0:
            pj = 2 * (j + 1) if sj > 0 else 2 * j
            numj = (pj - (2 * cj + 1)) * sj
        else:
            numj = 1
        if sk != 0:
            pk = 2 * (k + 1) if sk > 0 else 2 * k
            numk = (pk - (2 * ck + 1)) * sk
        else:
            numk = 1
        ix, jy, kz = si != 0, sj != 0, sk != 0
        xmin = ix and (not jy or numi * denj <= numj * deni) and (not kz or numi * denk <= numk * deni)
        ymin = jy and (not ix or numj * deni <= numi * denj) and (not kz or numj * denk <= numk * denj)
        zmin = kz and (not ix or numk * deni <= numi * denk) and (not jy or numk * denj <= numj * denk)
        ties = int(xmin) + int(ymin) + int(zmin)
        if ties > 1:
            if xmin and ymin:
                if (i + si, j, k) != (wi, wj, wk) and states[i + si, j, k] == OCCUPIED:
                    return False
                if (i, j + sj, k) != (wi, wj, wk) and states[i, j + sj, k] == OCCUPIED:
                    return False
            if xmin and zmin:
                if (i + si, j, k) != (wi, wj, wk) and states[i + si, j, k] == OCCUPIED:
                    return False
                if (i, j, k + sk) != (wi, wj, wk) and states[i, j, k + sk] == OCCUPIED:
                    return False
            if ymin and zmin:
                if (i, j + sj, k) != (wi, wj, wk) and states[i, j + sj, k] == OCCUPIED:
                    return False
                if (i, j, k + sk) != (wi, wj, wk) and states[i, j, k + sk] == OCCUPIED:
                    return False
            if ties == 3:
                if (i + si, j + sj, k) != (wi, wj, wk) and states[i + si, j + sj, k] == OCCUPIED:
                    return False
                if (i + si, j, k + sk) != (wi, wj, wk) and states[i + si, j, k + sk] == OCCUPIED:
                    return False
                if (i, j + sj, k + sk) != (wi, wj, wk) and states[i, j + sj, k + sk] == OCCUPIED:
                    return False
        if xmin:
            i += si
        if ymin:
            j += sj
        if zmin:
            k += sk
        if (i, j, k) == (wi, wj, wk):
            return True
        if states[i, j, k] == OCCUPIED:
            return False
    return True


def visible_out_count(states, out_mask, ci, cj, ck, rot, tan_x, tan_y, max_range, res):
    nx, ny, nz = states.shape
    rvox = int(math.ceil(max_range / res))
    lo = (max(0, ci - rvox), max(0, cj - rvox), max(0, ck - rvox))
    hi = (min(nx, ci + rvox + 1), min(ny, cj + rvox + 1), min(nz, ck + rvox + 1))
    sub = out_mask[lo[0] : hi[0], lo[1] : hi[1], lo[2] : hi[2]]
    cand = np.argwhere(sub)
    if cand.size == 0:
        return 0
    cand = cand + np.array(lo)
    d = (cand - np.array([ci, cj, ck])) * res
    d2 = (d * d).sum(axis=1)
    keep = d2 <= max_range * max_range
    cand, d = cand[keep], d[keep]
    if cand.size == 0:
        return 0
    zc = d @ rot[:, 2]
    keep = zc > 0.0
    cand, d, zc = cand[keep], d[keep], zc[keep]
    xc = d @ rot[:, 0]
    yc = d @ rot[:, 1]
    keep = (np.abs(xc) <= zc * tan_x) & (np.abs(yc) <= zc * tan_y)
    cand = cand[keep]
    count = 0
    for wi, wj, wk in cand:
        if _los_clear(states, ci, cj, ck, int(wi), int(wj), int(wk)):
            count += 1
    return count


SQ2 = math.sqrt(2.0)
SQ3 = math.sqrt(3.0)


def astar_grid(traversable, si, sj, sk, gi, gj, gk):
    nx, ny, nz = traversable.shape
    n = nx * ny * nz
    parents = np.full(n, -1, dtype=np.int32)
    if not traversable[si, sj, sk] or not traversable[gi, gj, gk]:
        return False, np.inf, parents
    gcost = np.full(n, np.inf, dtype=np.float64)
    closed = np.zeros(n, dtype=bool)
    start = (si * ny + sj) * nz + sk
    goal = (gi * ny + gj) * nz + gk

    def h(i, j, k):
        return math.sqrt(float((i - gi) ** 2 + (j - gj) ** 2 + (k - gk) ** 2))

    gcost[start] = 0.0
    heap = [(h(si, sj, sk), start)]
    while heap:
        _, v0 = heapq.heappop(heap)
        if closed[v0]:
            continue
        closed[v0] = True
        if v0 == goal:
            return True, float(gcost[goal]), parents
        vi, rem = divmod(v0, ny * nz)
        vj, vk = divmod(rem, nz)
        for oi in (-1, 0, 1):
            ni = vi + oi
            if ni < 0 or ni >= nx:
                continue
            for oj in (-1, 0, 1):
                nj = vj + oj
                if nj < 0 or nj >= ny:
                    continue
                for ok in (-1, 0, 1):
                    if oi == 0 and oj == 0 and ok == 0:
                        continue
                    nk = vk + ok
                    if nk < 0 or nk >= nz:
                        continue
                    if not traversable[ni, nj, nk]:
                        continue
                    nidx = (ni * ny + nj) * nz + nk
                    if closed[nidx]:
                        continue
                    axes = (oi != 0) + (oj != 0) + (ok != 0)
                    w = 1.0 if axes == 1 else (SQ2 if axes == 2 else SQ3)
                    cand = gcost[v0] + w
                    if cand < gcost[nidx]:
                        gcost[nidx] = cand
                        parents[nidx] = v0
                        heapq.heappush(heap, (cand + h(ni, nj, nk), nidx))
    return False, np.inf, parents
