"""Numba-compiled hot loops: ray casting, observation integration, pixel-ray
gating, visibility counting, and grid A*.

Every function here has a pure-numpy twin in numpy_backend with identical
semantics; the package-level dispatch picks one at import time.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OCCUPIED = 2
UNKNOWN = 0
FREE = 1


@njit(cache=True)
def cast_rays(states, origin, res, p, dirs, max_range):
    """Exact DDA traversal per ray; returns entry distance of the first
    Occupied voxel, +inf when none within max_range or the ray leaves the grid."""
    n = dirs.shape[0]
    out = np.empty(n, dtype=np.float64)
    nx, ny, nz = states.shape
    for r in range(n):
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        i = int(np.floor((p[0] - origin[0]) / res))
        j = int(np.floor((p[1] - origin[1]) / res))
        k = int(np.floor((p[2] - origin[2]) / res))
        if i < 0 or i >= nx or j < 0 or j >= ny or k < 0 or k >= nz:
            out[r] = np.inf
            continue
        si = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
        sj = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
        sk = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
        big = np.inf
        tdx = res / abs(dx) if si != 0 else big
        tdy = res / abs(dy) if sj != 0 else big
        tdz = res / abs(dz) if sk != 0 else big
        if si > 0:
            tmx = (origin[0] + (i + 1) * res - p[0]) / dx
        elif si < 0:
            tmx = (origin[0] + i * res - p[0]) / dx
        else:
            tmx = big
        if sj > 0:
            tmy = (origin[1] + (j + 1) * res - p[1]) / dy
        elif sj < 0:
            tmy = (origin[1] + j * res - p[1]) / dy
        else:
            tmy = big
        if sk > 0:
            tmz = (origin[2] + (k + 1) * res - p[2]) / dz
        elif sk < 0:
            tmz = (origin[2] + k * res - p[2]) / dz
        else:
            tmz = big

        hit = np.inf
        while True:
            if tmx <= tmy and tmx <= tmz:
                t = tmx
                if t > max_range:
                    break
                i += si
                if i < 0 or i >= nx:
                    break
                tmx += tdx
            elif tmy <= tmz:
                t = tmy
                if t > max_range:
                    break
                j += sj
                if j < 0 or j >= ny:
                    break
                tmy += tdy
            else:
                t = tmz
                if t > max_range:
                    break
                k += sk
                if k < 0 or k >= nz:
                    break
                tmz += tdz
            if states[i, j, k] == OCCUPIED:
                hit = t
                break
        out[r] = hit
    return out


@njit(cache=True)
def integrate_rays(states, origin, res, p, dirs, ranges, max_range):
    """Mark voxels traversed strictly before each return distance Free
    (Unknown -> Free only; Occupied wins), and the hit voxel Occupied.
    NO_RETURN rays mark Free strictly up to max_range. Mutates states."""
    n = dirs.shape[0]
    nx, ny, nz = states.shape
    for r in range(n):
        rng = ranges[r]
        has_hit = np.isfinite(rng)
        limit = rng if has_hit else max_range
        if limit <= 0.0:
            continue
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        i = int(np.floor((p[0] - origin[0]) / res))
        j = int(np.floor((p[1] - origin[1]) / res))
        k = int(np.floor((p[2] - origin[2]) / res))
        if i < 0 or i >= nx or j < 0 or j >= ny or k < 0 or k >= nz:
            continue
        si = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
        sj = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
        sk = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
        big = np.inf
        tdx = res / abs(dx) if si != 0 else big
        tdy = res / abs(dy) if sj != 0 else big
        tdz = res / abs(dz) if sk != 0 else big
        if si > 0:
            tmx = (origin[0] + (i + 1) * res - p[0]) / dx
        elif si < 0:
            tmx = (origin[0] + i * res - p[0]) / dx
        else:
            tmx = big
        if sj > 0:
            tmy = (origin[1] + (j + 1) * res - p[1]) / dy
        elif sj < 0:
            tmy = (origin[1] + j * res - p[1]) / dy
        else:
            tmy = big
        if sk > 0:
            tmz = (origin[2] + (k + 1) * res - p[2]) / dz
        elif sk < 0:
            tmz = (origin[2] + k * res - p[2]) / dz
        else:
            tmz = big

        if states[i, j, k] == UNKNOWN:
            states[i, j, k] = FREE
        while True:
            if tmx <= tmy and tmx <= tmz:
                t = tmx
                axis = 0
            elif tmy <= tmz:
                t = tmy
                axis = 1
            else:
                t = tmz
                axis = 2
            if t >= limit:
                if has_hit:
                    # the next DDA voxel is the surface hit
                    if axis == 0:
                        i += si
                    elif axis == 1:
                        j += sj
                    else:
                        k += sk
                    if 0 <= i < nx and 0 <= j < ny and 0 <= k < nz:
                        states[i, j, k] = OCCUPIED
                break
            if axis == 0:
                i += si
                tmx += tdx
            elif axis == 1:
                j += sj
                tmy += tdy
            else:
                k += sk
                tmz += tdz
            if i < 0 or i >= nx or j < 0 or j >= ny or k < 0 or k >= nz:
                break
            if states[i, j, k] == UNKNOWN:
                states[i, j, k] = FREE


@njit(cache=True)
def gate_values(p, dirs, pts, vals, r_ray, max_range):
    """Per pixel ray: does any point pass within r_ray of the ray truncated at
    max_range (points behind the camera never gate), and the max value among
    gating points."""
    n = dirs.shape[0]
    m = pts.shape[0]
    any_hit = np.zeros(n, dtype=np.bool_)
    best = np.zeros(n, dtype=np.float64)
    r2 = r_ray * r_ray
    for q in range(n):
        dx, dy, dz = dirs[q, 0], dirs[q, 1], dirs[q, 2]
        got = False
        hi = 0.0
        for a in range(m):
            wx = pts[a, 0] - p[0]
            wy = pts[a, 1] - p[1]
            wz = pts[a, 2] - p[2]
            t = wx * dx + wy * dy + wz * dz
            if t < 0.0:
                continue
            if t > max_range:
                t = max_range
            ex = wx - t * dx
            ey = wy - t * dy
            ez = wz - t * dz
            d2 = ex * ex + ey * ey + ez * ez
            if d2 <= r2:
                if not got:
                    got = True
                    hi = vals[a]
                elif vals[a] > hi:
                    hi = vals[a]
        any_hit[q] = got
        best[q] = hi if got else 0.0
    return any_hit, best


@njit(cache=True, inline="always")
def _los_clear(states, ci, cj, ck, wi, wj, wk):
    """Exact line-of-sight between voxel centers on the integer lattice.

    Works in half-voxel integer units (centers at odd coordinates) so plane
    crossings are exact rationals; any Occupied voxel other than the target
    whose closed box the open segment touches blocks, including corner grazes.
    """
    di = wi - ci
    dj = wj - cj
    dk = wk - ck
    i, j, k = ci, cj, ck
    si = 1 if di > 0 else (-1 if di < 0 else 0)
    sj = 1 if dj > 0 else (-1 if dj < 0 else 0)
    sk = 1 if dk > 0 else (-1 if dk < 0 else 0)
    # fraction t_a = num_a / den_a of the next plane crossing on each axis
    deni = 2 * di * si  # = 2|di|, 0 when axis unused
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
        # exact three-way comparison by cross multiplication; den == 0 means inf
        ix = si != 0
        jy = sj != 0
        kz = sk != 0
        # is x the (possibly tied) minimum?
        xmin = ix and (not jy or numi * denj <= numj * deni) and (not kz or numi * denk <= numk * deni)
        ymin = jy and (not ix or numj * deni <= numi * denj) and (not kz or numj * denk <= numk * denj)
        zmin = kz and (not ix or numk * deni <= numi * denk) and (not jy or numk * denj <= numj * denk)
        ties = (1 if xmin else 0) + (1 if ymin else 0) + (1 if zmin else 0)
        if ties > 1:
            # corner or edge graze: every box adjacent at the crossing point
            # is touched by the segment
            if xmin and ymin:
                if (i + si != wi or j != wj or k != wk) and states[i + si, j, k] == OCCUPIED:
                    return False
                if (i != wi or j + sj != wj or k != wk) and states[i, j + sj, k] == OCCUPIED:
                    return False
            if xmin and zmin:
                if (i + si != wi or j != wj or k != wk) and states[i + si, j, k] == OCCUPIED:
                    return False
                if (i != wi or j != wj or k + sk != wk) and states[i, j, k + sk] == OCCUPIED:
                    return False
            if ymin and zmin:
                if (i != wi or j + sj != wj or k != wk) and states[i, j + sj, k] == OCCUPIED:
                    return False
                if (i != wi or j != wj or k + sk != wk) and states[i, j, k + sk] == OCCUPIED:
                    return False
            if ties == 3:
                if (i + si != wi or j + sj != wj or k != wk) and states[i + si, j + sj, k] == OCCUPIED:
                    return False
                if (i + si != wi or j != wj or k + sk != wk) and states[i + si, j, k + sk] == OCCUPIED:
                    return False
                if (i != wi or j + sj != wj or k + sk != wk) and states[i, j + sj, k + sk] == OCCUPIED:
                    return False
        if xmin:
            i += si
        if ymin:
            j += sj
        if zmin:
            k += sk
        if i == wi and j == wj and k == wk:
            return True
        if states[i, j, k] == OCCUPIED:
            return False
    return True


@njit(cache=True)
def visible_out_count(states, out_mask, ci, cj, ck, rot, tan_x, tan_y, max_range, res):
    """Count out-of-view voxels whose center is inside the virtual frustum
    (FOV half-tangents tan_x/tan_y, Euclidean range max_range) and has clear
    line of sight from the camera voxel center."""
    nx, ny, nz = states.shape
    rvox = int(np.ceil(max_range / res))
    r2 = max_range * max_range
    lo_i = ci - rvox if ci - rvox > 0 else 0
    hi_i = ci + rvox + 1 if ci + rvox + 1 < nx else nx
    lo_j = cj - rvox if cj - rvox > 0 else 0
    hi_j = cj + rvox + 1 if cj + rvox + 1 < ny else ny
    lo_k = ck - rvox if ck - rvox > 0 else 0
    hi_k = ck + rvox + 1 if ck + rvox + 1 < nz else nz
    count = 0
    for wi in range(lo_i, hi_i):
        dx = (wi - ci) * res
        for wj in range(lo_j, hi_j):
            dy = (wj - cj) * res
            for wk in range(lo_k, hi_k):
                if not out_mask[wi, wj, wk]:
                    continue
                dz = (wk - ck) * res
                d2 = dx * dx + dy * dy + dz * dz
                if d2 > r2:
                    continue
                zc = rot[0, 2] * dx + rot[1, 2] * dy + rot[2, 2] * dz
                if zc <= 0.0:
                    continue
                xc = rot[0, 0] * dx + rot[1, 0] * dy + rot[2, 0] * dz
                if abs(xc) > zc * tan_x:
                    continue
                yc = rot[0, 1] * dx + rot[1, 1] * dy + rot[2, 1] * dz
                if abs(yc) > zc * tan_y:
                    continue
                if _los_clear(states, ci, cj, ck, wi, wj, wk):
                    count += 1
    return count


SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)


@njit(cache=True)
def astar_grid(traversable, si, sj, sk, gi, gj, gk):
    """A* over the 26-connected graph of traversable voxels with Euclidean
    edge costs in voxel units. Returns (found, cost, parents) where parents
    is a flat int32 array (-1 for unreached) for path reconstruction."""
    nx, ny, nz = traversable.shape
    n = nx * ny * nz
    parents = np.full(n, -1, dtype=np.int32)
    gcost = np.full(n, np.inf, dtype=np.float64)
    closed = np.zeros(n, dtype=np.bool_)

    start = (si * ny + sj) * nz + sk
    goal = (gi * ny + gj) * nz + gk
    if not traversable[si, sj, sk] or not traversable[gi, gj, gk]:
        return False, np.inf, parents

    cap = 64
    heap_f = np.empty(cap, dtype=np.float64)
    heap_v = np.empty(cap, dtype=np.int64)
    size = 0

    def h(i, j, k):
        ddx = float(i - gi)
        ddy = float(j - gj)
        ddz = float(k - gk)
        return np.sqrt(ddx * ddx + ddy * ddy + ddz * ddz)

    gcost[start] = 0.0
    heap_f[0] = h(si, sj, sk)
    heap_v[0] = start
    size = 1

    while size > 0:
        # pop min
        f0 = heap_f[0]
        v0 = heap_v[0]
        size -= 1
        heap_f[0] = heap_f[size]
        heap_v[0] = heap_v[size]
        pos = 0
        while True:
            l = 2 * pos + 1
            rgt = l + 1
            small = pos
            if l < size and heap_f[l] < heap_f[small]:
                small = l
            if rgt < size and heap_f[rgt] < heap_f[small]:
                small = rgt
            if small == pos:
                break
            heap_f[pos], heap_f[small] = heap_f[small], heap_f[pos]
            heap_v[pos], heap_v[small] = heap_v[small], heap_v[pos]
            pos = small
        if closed[v0]:
            continue
        closed[v0] = True
        if v0 == goal:
            return True, gcost[goal], parents
        vi = v0 // (ny * nz)
        vj = (v0 // nz) % ny
        vk = v0 % nz
        for oi in range(-1, 2):
            ni = vi + oi
            if ni < 0 or ni >= nx:
                continue
            for oj in range(-1, 2):
                nj = vj + oj
                if nj < 0 or nj >= ny:
                    continue
                for ok in range(-1, 2):
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
                    axes = (1 if oi != 0 else 0) + (1 if oj != 0 else 0) + (1 if ok != 0 else 0)
                    if axes == 1:
                        w = 1.0
                    elif axes == 2:
                        w = SQ2
                    else:
                        w = SQ3
                    cand = gcost[v0] + w
                    if cand < gcost[nidx]:
                        gcost[nidx] = cand
                        parents[nidx] = v0
                        # push
                        if size >= cap:
                            newcap = cap * 2
                            nf = np.empty(newcap, dtype=np.float64)
                            nv = np.empty(newcap, dtype=np.int64)
                            nf[:size] = heap_f[:size]
                            nv[:size] = heap_v[:size]
                            heap_f = nf
                            heap_v = nv
                            cap = newcap
                        fi = cand + h(ni, nj, nk)
                        heap_f[size] = fi
                        heap_v[size] = nidx
                        pos = size
                        size += 1
                        while pos > 0:
                            par = (pos - 1) // 2
                            if heap_f[par] <= heap_f[pos]:
                                break
                            heap_f[pos], heap_f[par] = heap_f[par], heap_f[pos]
                            heap_v[pos], heap_v[par] = heap_v[par], heap_v[pos]
                            pos = par
    return False, np.inf, parents
