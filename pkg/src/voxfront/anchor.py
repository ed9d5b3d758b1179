"""2D frontier rasters to sparse 3D frontiers.

Recover the pixel mask from the distance field, attach per-pixel features
(viewing angle from the inverse depth gradient, gain, foreground/background
depths), density-cluster the features, and lift each cluster to a 3D position
plus viewing direction by back-projecting through the camera.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .camera import CameraModel, DepthImage, GradientMap, Pose

ACTIVE = "active"
CONSUMED = "consumed"
INVALID = "invalid"


@dataclass(frozen=True)
class FrontierPixelFeature:
    x: int  # column
    y: int  # row
    phi: float  # viewing angle on the image plane, radians
    gain: float
    depth_fg: float
    depth_bg: float


@dataclass(frozen=True)
class Frontier2DCluster:
    centroid_px: tuple[int, int]  # medoid member pixel (x, y)
    phi_bar: float
    gain_bar: float
    depth_bar: float
    depth_fg_bar: float
    size: int


@dataclass
class Frontier3D:
    p_bar: np.ndarray
    yaw: float
    pitch: float
    gain: float
    gain0: float
    id: int = -1
    parent_pose_id: int = -1
    status: str = ACTIVE
    # distance from p_bar back along the approach ray to the last point the
    # registering observation actually saw as free
    approach_clear: float = 0.0

    def direction(self) -> np.ndarray:
        cp = math.cos(self.pitch)
        return np.array([math.cos(self.yaw) * cp, math.sin(self.yaw) * cp, math.sin(self.pitch)])


def recover_mask(d: np.ndarray, l: float) -> np.ndarray:
    """Pixels strictly closer than l to the mask encoded by distance field d."""
    return d < l


def pixel_viewing_angle(gm: GradientMap, x: int, y: int, eps: float = 1e-6):
    """Viewing angle at (x, y): atan2 of the negated 5x5 window-averaged
    gradient (mean over valid pixels). None when nothing valid or the mean
    gradient is degenerate."""
    h, w = gm.valid.shape
    y0, y1 = max(0, y - 2), min(h, y + 3)
    x0, x1 = max(0, x - 2), min(w, x + 3)
    v = gm.valid[y0:y1, x0:x1]
    if not v.any():
        return None
    gx = float(gm.gx[y0:y1, x0:x1][v].mean())
    gy = float(gm.gy[y0:y1, x0:x1][v].mean())
    if math.hypot(gx, gy) < eps:
        return None
    return math.atan2(-gy, -gx)


def sample_fg_bg_depth(depth: DepthImage, x: int, y: int, ux: float, uy: float, s: int):
    """Foreground/background ranges at (x, y): medians of the finite samples
    at offsets -{s,2s,3s} / +{s,2s,3s} px along the unit gradient (ux, uy).
    All-NO_RETURN background reads as max_range. Returns None when no finite
    foreground sample exists, the background is entirely off-image, or
    d_f > d_b."""
    h, w = depth.ranges.shape

    def collect(sign):
        vals = []
        n_in = 0
        for m in (1, 2, 3):
            px = int(round(x + sign * m * s * ux))
            py = int(round(y + sign * m * s * uy))
            if 0 <= px < w and 0 <= py < h:
                n_in += 1
                r = depth.ranges[py, px]
                if np.isfinite(r):
                    vals.append(float(r))
        return vals, n_in

    fg, _ = collect(-1)
    bg, bg_in = collect(+1)
    if not fg:
        return None
    d_f = float(np.median(fg))
    if bg:
        d_b = float(np.median(bg))
    elif bg_in:
        d_b = float(depth.max_range)
    else:
        return None
    if d_f > d_b:
        return None
    return d_f, d_b


def _window_mean_gradient(gm: GradientMap):
    """5x5 window means of (gx, gy) over valid pixels for every pixel, plus
    the valid-count map; borders use the clipped window."""
    from scipy import ndimage

    kernel = np.ones((5, 5))
    v = gm.valid.astype(np.float64)
    n = ndimage.convolve(v, kernel, mode="constant", cval=0.0)
    sx = ndimage.convolve(np.where(gm.valid, gm.gx, 0.0), kernel, mode="constant", cval=0.0)
    sy = ndimage.convolve(np.where(gm.valid, gm.gy, 0.0), kernel, mode="constant", cval=0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mgx = np.where(n > 0, sx / n, 0.0)
        mgy = np.where(n > 0, sy / n, 0.0)
    return mgx, mgy, n


def _gather_depth(depth: DepthImage, xs, ys, ux, uy, s: int, sign: int):
    """Depths at offsets sign*{s,2s,3s} along (ux, uy) from (xs, ys): NaN when
    off-image, +inf kept as is. Returns (vals (N,3), in_image (N,3))."""
    h, w = depth.ranges.shape
    vals = np.full((xs.size, 3), np.nan)
    inside = np.zeros((xs.size, 3), dtype=bool)
    for m in (1, 2, 3):
        px = np.rint(xs + sign * m * s * ux).astype(np.int64)
        py = np.rint(ys + sign * m * s * uy).astype(np.int64)
        ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        col = np.full(xs.size, np.nan)
        col[ok] = depth.ranges[py[ok], px[ok]]
        vals[:, m - 1] = col
        inside[:, m - 1] = ok
    return vals, inside


def extract_features(
    mask: np.ndarray,
    depth: DepthImage,
    gm: GradientMap,
    gain_image: np.ndarray,
    fgbg_step: int = 4,
    grad_eps: float = 1e-6,
) -> list[FrontierPixelFeature]:
    """Per-pixel features over the recovered mask, row-major order; pixels
    with degenerate gradients or unusable depth samples are dropped."""
    pix = np.argwhere(mask)
    if pix.shape[0] == 0:
        return []
    ys = pix[:, 0].astype(np.float64)
    xs = pix[:, 1].astype(np.float64)
    mgx, mgy, nvalid = _window_mean_gradient(gm)
    gx = mgx[pix[:, 0], pix[:, 1]]
    gy = mgy[pix[:, 0], pix[:, 1]]
    mag = np.hypot(gx, gy)
    ok = (nvalid[pix[:, 0], pix[:, 1]] > 0) & (mag >= grad_eps)
    phi = np.arctan2(-gy, -gx)
    ux = -np.cos(phi)
    uy = -np.sin(phi)

    fg_vals, _ = _gather_depth(depth, xs, ys, ux, uy, fgbg_step, -1)
    bg_vals, bg_in = _gather_depth(depth, xs, ys, ux, uy, fgbg_step, +1)
    fg_vals[~np.isfinite(fg_vals)] = np.nan
    bg_fin = bg_vals.copy()
    bg_fin[~np.isfinite(bg_fin)] = np.nan
    with np.errstate(invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        d_f = np.nanmedian(fg_vals, axis=1)
        d_b = np.nanmedian(bg_fin, axis=1)
    no_fin_bg = np.isnan(d_b)
    d_b = np.where(no_fin_bg & bg_in.any(axis=1), float(depth.max_range), d_b)
    ok &= ~np.isnan(d_f) & ~np.isnan(d_b) & (d_f <= d_b)

    gains = gain_image[pix[:, 0], pix[:, 1]].astype(np.float64)
    return [
        FrontierPixelFeature(
            x=int(xs[i]), y=int(ys[i]), phi=float(phi[i]), gain=float(gains[i]),
            depth_fg=float(d_f[i]), depth_bg=float(d_b[i]),
        )
        for i in np.flatnonzero(ok)
    ]


def _canonical_order(feats):
    return sorted(
        range(len(feats)),
        key=lambda i: (feats[i].y, feats[i].x, feats[i].phi, feats[i].gain),
    )


def cluster_frontier_pixels(
    feats: list[FrontierPixelFeature],
    sigma_px: float,
    sigma_phi: float,
    sigma_g: float,
    eps: float = 1.0,
    min_cluster_size: int = 8,
) -> list[Frontier2DCluster]:
    """Density clustering (fixed-radius cores, union-find) in the normalized
    5D space (x/s_px, y/s_px, cos phi/s_phi, sin phi/s_phi, g/s_g). Noise is
    discarded; border points attach to their nearest core. The result is
    invariant to input permutation (canonical internal ordering)."""
    if not feats:
        return []
    order = _canonical_order(feats)
    fs = [feats[i] for i in order]
    n = len(fs)
    pts = np.empty((n, 5))
    for i, f in enumerate(fs):
        pts[i] = (
            f.x / sigma_px,
            f.y / sigma_px,
            math.cos(f.phi) / sigma_phi,
            math.sin(f.phi) / sigma_phi,
            f.gain / sigma_g if sigma_g > 0 else 0.0,
        )
    tree = cKDTree(pts)
    pairs = tree.query_pairs(eps, output_type="ndarray")
    deg = np.bincount(pairs.ravel(), minlength=n) + 1  # +1: the point itself
    core = deg >= min_cluster_size

    # components of the core-core graph; the component label is its minimum
    # member index, matching a union-find that always links to the lower root
    labels = np.full(n, -1, dtype=np.int64)
    core_idx = np.flatnonzero(core)
    if core_idx.size:
        cc_pairs = pairs[core[pairs[:, 0]] & core[pairs[:, 1]]]
        adj = coo_matrix(
            (np.ones(len(cc_pairs), dtype=np.int8), (cc_pairs[:, 0], cc_pairs[:, 1])),
            shape=(n, n),
        )
        ncomp, comp = connected_components(adj, directed=False)
        roots = np.full(ncomp, n, dtype=np.int64)
        np.minimum.at(roots, comp[core_idx], core_idx)
        labels[core_idx] = roots[comp[core_idx]]

        border_idx = np.flatnonzero(~core)
        if border_idx.size:
            core_tree = cKDTree(pts[core_idx])
            cand_lists = core_tree.query_ball_point(pts[border_idx], r=eps)
            for bi, lst in zip(border_idx, cand_lists):
                if not lst:
                    continue
                cand = core_idx[sorted(lst)]
                dists = np.linalg.norm(pts[cand] - pts[bi], axis=1)
                best = -1
                best_d = math.inf
                for j, dj in zip(cand, dists):
                    if dj < best_d - 1e-15 or (abs(dj - best_d) <= 1e-15 and j < best):
                        best, best_d = int(j), float(dj)
                if best >= 0:
                    labels[bi] = labels[best]

    clusters = []
    for root in sorted(set(labels[labels >= 0].tolist())):
        members = [fs[i] for i in np.flatnonzero(labels == root)]
        if len(members) < min_cluster_size:
            continue
        clusters.append(_summarize(members))
    clusters.sort(key=lambda c: (c.centroid_px[1], c.centroid_px[0], c.size))
    return clusters


def _summarize(members) -> Frontier2DCluster:
    xy = np.array([[f.x, f.y] for f in members], dtype=np.float64)
    d = xy[:, None, :] - xy[None, :, :]
    cost = np.sqrt((d * d).sum(axis=2)).sum(axis=1)
    m = int(np.argmin(cost))  # first minimum wins on ties
    gains = np.array([f.gain for f in members])
    w = gains if gains.sum() > 0 else np.ones_like(gains)
    sin_w = float((w * np.sin([f.phi for f in members])).sum())
    cos_w = float((w * np.cos([f.phi for f in members])).sum())
    phi_bar = math.atan2(sin_w, cos_w)
    depth_bar = float(np.mean([(f.depth_fg + f.depth_bg) / 2.0 for f in members]))
    depth_fg_bar = float(np.mean([f.depth_fg for f in members]))
    return Frontier2DCluster(
        centroid_px=(members[m].x, members[m].y),
        phi_bar=phi_bar,
        gain_bar=float(gains.mean()),
        depth_bar=depth_bar,
        depth_fg_bar=depth_fg_bar,
        size=len(members),
    )


def lift_to_3d(cluster: Frontier2DCluster, pose: Pose, cam: CameraModel):
    """3D frontier from a 2D cluster: back-project the medoid at depth_bar,
    derive the viewing direction from a 1 px offset along phi_bar at the same
    depth, flatten it to yaw-only unless its vertical part dominates (> 0.9 of
    the norm). None for degenerate directions."""
    x, y = cluster.centroid_px
    p_bar = cam.backproject(pose, float(x), float(y), cluster.depth_bar)
    off = cam.backproject(
        pose,
        float(x) + math.cos(cluster.phi_bar),
        float(y) + math.sin(cluster.phi_bar),
        cluster.depth_bar,
    )
    v = off - p_bar
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        return None
    if abs(v[2]) > 0.9 * norm:
        d = v / norm
    else:
        flat = np.array([v[0], v[1], 0.0])
        fn = float(np.linalg.norm(flat))
        if fn < 1e-12:
            return None
        d = flat / fn
    yaw = math.atan2(d[1], d[0])
    pitch = math.asin(max(-1.0, min(1.0, float(d[2]))))
    return Frontier3D(
        p_bar=p_bar, yaw=yaw, pitch=pitch,
        gain=cluster.gain_bar, gain0=cluster.gain_bar,
        approach_clear=max(0.0, cluster.depth_bar - cluster.depth_fg_bar),
    )


def anchor_frontiers(
    mask: np.ndarray,
    depth: DepthImage,
    gm: GradientMap,
    gain_image: np.ndarray,
    pose: Pose,
    cam: CameraModel,
    g_max: float,
    fgbg_step: int = 4,
    grad_eps: float = 1e-6,
    sigma_px: float = 24.0,
    sigma_phi: float = 0.5,
    sigma_g_frac: float = 0.25,
    cluster_eps: float = 1.0,
    min_cluster_size: int = 8,
) -> tuple[list[Frontier2DCluster], list[Frontier3D]]:
    """Full anchoring pass: features, clusters, lifted 3D frontiers."""
    feats = extract_features(mask, depth, gm, gain_image, fgbg_step, grad_eps)
    clusters = cluster_frontier_pixels(
        feats, sigma_px, sigma_phi, sigma_g_frac * g_max, cluster_eps, min_cluster_size
    )
    out = []
    for c in clusters:
        f3 = lift_to_3d(c, pose, cam)
        if f3 is not None:
            out.append(f3)
    return clusters, out
