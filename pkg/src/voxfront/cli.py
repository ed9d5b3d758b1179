"""Command-line entry points.

Subcommands: scene-gen (procedural scenes), oracle-dump (per-view rasters and
anchored clusters), explore (one exploration run to a CSV log), evaluate (the
multi-scene suite). Exit codes: 0 ok, 2 usage or config error, 3 invalid input
data, 4 run-level failure with partial output.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys

import numpy as np

from .camera import DepthFileError, Pose, PoseError, depth_gradient, save_depth
from .config import (
    ABLATIONS,
    MODES,
    ConfigError,
    RunConfig,
    describe_keys,
    load_config,
    parse_config_items,
)
from .explore import run_exploration
from .grid import FREE, SceneParseError, load_scene, save_scene
from .metrics import cell_seed, run_suite
from .scenegen import GenerationError, SceneParams, generate_scene_info, sample_start_poses
from .world import render_depth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUN = 4

log = logging.getLogger("voxfront")


def _parse_pose(text: str) -> Pose:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (4, 5):
        raise ConfigError("pose must be x,y,z,yaw_deg[,pitch_deg]")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad pose value in {text!r}") from None
    pitch = math.radians(vals[4]) if len(vals) == 5 else 0.0
    return Pose.from_yaw_pitch(np.array(vals[:3]), math.radians(vals[3]), pitch)


def _parse_extent(text: str):
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ConfigError("extent must be LxWxH in meters, e.g. 8x8x2.5")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad extent {text!r}") from None


def _build_config(args) -> RunConfig:
    overrides = {}
    for item in getattr(args, "set", None) or []:
        overrides.update(parse_config_items([item], source="--set"))
    cfg = load_config(getattr(args, "config", None), overrides)
    if getattr(args, "mode", None):
        cfg = dataclasses.replace(cfg, mode=args.mode)
    if getattr(args, "ablation", None):
        cfg = cfg.apply_ablation(args.ablation)
    return cfg


def _named_config(base: RunConfig, name: str) -> RunConfig:
    if name in MODES:
        return dataclasses.replace(base, mode=name)
    if name in ABLATIONS:
        return dataclasses.replace(base, mode="frontiernet").apply_ablation(name)
    raise ConfigError(f"unknown config name {name!r}; use a mode or ablation")


def _require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError(f"no such file: {path}")
    return path


# --- subcommands -----------------------------------------------------------


def cmd_scene_gen(args) -> int:
    extent = _parse_extent(args.extent)
    if extent[0] < 4.0 or extent[1] < 4.0:
        raise ConfigError("horizontal extent must be at least 4 m")
    rooms = args.rooms.split(":")
    if len(rooms) != 2:
        raise ConfigError("rooms must be MIN:MAX")
    params = SceneParams(
        extent=extent,
        res=args.res,
        rooms_min=int(rooms[0]),
        rooms_max=int(rooms[1]),
        door_width=args.door_width,
        two_floors=args.two_floors,
    )
    grid, n_rooms = generate_scene_info(args.seed, params)
    save_scene(args.out, grid)
    free_frac = float(np.count_nonzero(grid.states == FREE)) / grid.states.size
    print(
        f"scene {args.out}: dims {grid.dims[0]}x{grid.dims[1]}x{grid.dims[2]} "
        f"res {grid.res} free {free_frac:.3f} rooms {n_rooms}"
    )
    return EXIT_OK


def cmd_oracle_dump(args) -> int:
    from . import oracle as orc
    from .anchor import anchor_frontiers, recover_mask

    cfg = _build_config(args)
    scene = load_scene(_require_file(args.scene))
    pose = _parse_pose(args.pose)
    cam = cfg.camera()
    os.makedirs(args.out_dir, exist_ok=True)
    predictor = orc.OraclePredictor(scene, cam, cfg.oracle_params(), seed=cfg.seed)
    depth = render_depth(scene, pose, cam)
    raster = predictor.predict(pose, depth, rng_seed=cfg.seed)

    stem = os.path.join(args.out_dir, args.image_id)
    save_depth(f"{stem}_depth.fdep", depth)
    orc.write_pgm(f"{stem}_fp.pgm", raster.f_p.astype(np.uint8) * 255)
    orc.write_pgm(f"{stem}_fd.pgm", raster.f_d.astype(np.uint8) * 255)
    orc.write_pgm(f"{stem}_f.pgm", raster.f.astype(np.uint8) * 255)
    _save_raster(f"{stem}_d.fdep", raster.d, cam.max_range)
    _save_raster(f"{stem}_dnorm.fdep", raster.d_norm, cam.max_range)
    _save_raster(f"{stem}_g.fdep", raster.g, cam.max_range)
    scale = 255 // (cfg.k_classes - 1)
    orc.write_pgm(f"{stem}_y.pgm", (raster.y * scale).astype(np.uint8))

    if args.anchor:
        mask = recover_mask(raster.d, cfg.recover_l) if cfg.mask_mode == "distance_field" else raster.f
        gain_img = orc.unbin_gain(raster.y, cfg.k_classes, predictor.g_max)
        clusters, _ = anchor_frontiers(
            mask, depth, depth_gradient(depth), gain_img, pose, cam, predictor.g_max,
            cfg.fgbg_step, cfg.grad_eps, cfg.sigma_px, cfg.sigma_phi,
            cfg.sigma_g_frac, cfg.cluster_eps, cfg.min_cluster_size,
        )
        with open(f"{stem}_anchors.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("image_id,x,y,phi_deg,gain,depth,size\n")
            for c in clusters:
                fh.write(
                    f"{args.image_id},{c.centroid_px[0]},{c.centroid_px[1]},"
                    f"{math.degrees(c.phi_bar)!r},{c.gain_bar!r},{c.depth_bar!r},{c.size}\n"
                )
        print(f"wrote rasters and {len(clusters)} anchor rows to {args.out_dir}")
    else:
        print(f"wrote rasters to {args.out_dir}")
    return EXIT_OK


def _save_raster(path, values: np.ndarray, max_range: float) -> None:
    from .camera import DepthImage

    save_depth(path, DepthImage(np.asarray(values, dtype=np.float64), max_range))


def cmd_explore(args) -> int:
    cfg = _build_config(args)
    if args.max_steps is not None:
        cfg = dataclasses.replace(cfg, max_steps=args.max_steps)
    scene = load_scene(_require_file(args.scene))
    start = _parse_pose(args.start)
    seed = cfg.seed if args.seed is None else args.seed
    if args.snapshot_dir:
        os.makedirs(args.snapshot_dir, exist_ok=True)
    result = run_exploration(scene, start, cfg, seed=seed, snapshot_dir=args.snapshot_dir)
    result.write_csv(args.out)
    cov = 100.0 * result.rows[-1].known_fraction if result.rows else 0.0
    status = "collision" if result.collided else ("done" if result.done else "budget")
    print(
        f"explored {args.scene}: steps {result.steps_used} coverage {cov:.1f}% "
        f"terminated via {status}; log at {args.out}"
    )
    if result.collided:
        return EXIT_RUN
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    scene_paths = [s for s in (p.strip() for p in args.scenes.split(",")) if s]
    if not scene_paths:
        raise ConfigError("empty scene list")
    config_names = [c for c in (p.strip() for p in args.configs.split(",")) if c]
    if not config_names:
        raise ConfigError("empty config list")
    configs = {name: _named_config(cfg, name) for name in config_names}
    compare = None
    if args.compare:
        parts = [p.strip() for p in args.compare.split(",")]
        if len(parts) != 2 or not all(p in configs for p in parts):
            raise ConfigError("--compare needs two config names from --configs")
        compare = (parts[0], parts[1])
    scenes = []
    for path in scene_paths:
        grid = load_scene(_require_file(path))
        name = os.path.splitext(os.path.basename(path))[0]
        starts = sample_start_poses(grid, args.starts, seed=cell_seed(name, 0, "starts", 0))
        scenes.append((name, grid, starts))
    records = run_suite(
        scenes, configs, repeats=args.repeats, out_path=args.out,
        jobs=args.jobs, compare=compare,
    )
    n_fail = sum(1 for r in records if r.failed)
    print(f"suite: {len(records)} runs ({n_fail} failed) -> {args.out}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="voxfront",
        description="Frontier-driven exploration simulator on voxel scenes.",
        epilog="config keys (flat key = value files, # comments):\n" + describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_cfg(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")

    p = sub.add_parser("scene-gen", help="generate a procedural multi-room scene")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--extent", default="8x8x2.5", help="LxWxH meters (default 8x8x2.5)")
    p.add_argument("--res", type=float, default=0.1)
    p.add_argument("--rooms", default="2:5", help="MIN:MAX room count (default 2:5)")
    p.add_argument("--door-width", type=float, default=0.9)
    p.add_argument("--two-floors", action="store_true")
    p.set_defaults(func=cmd_scene_gen)

    p = sub.add_parser("oracle-dump", help="write per-view rasters and anchors")
    p.add_argument("--scene", required=True)
    p.add_argument("--pose", required=True, help="x,y,z,yaw_deg[,pitch_deg]")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--image-id", default="view0")
    p.add_argument("--anchor", action="store_true", help="also write the cluster CSV")
    add_cfg(p)
    p.set_defaults(func=cmd_oracle_dump)

    p = sub.add_parser("explore", help="run one exploration episode")
    p.add_argument("--scene", required=True)
    p.add_argument("--start", required=True, help="x,y,z,yaw_deg[,pitch_deg]")
    p.add_argument("--out", required=True, help="log CSV path")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--ablation", choices=sorted(ABLATIONS))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--snapshot-dir", help="write a final robot-map snapshot here")
    add_cfg(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("evaluate", help="run the multi-scene evaluation suite")
    p.add_argument("--scenes", required=True, help="comma-separated scene files")
    p.add_argument("--out", required=True, help="suite CSV path")
    p.add_argument("--configs", default="frontiernet,classic",
                   help="comma-separated modes/ablations (default frontiernet,classic)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--starts", type=int, default=1, help="start poses per scene")
    p.add_argument("--compare", metavar="A,B", help="append per-scene mean differences A-B")
    p.add_argument("--jobs", type=int, default=1)
    add_cfg(p)
    p.set_defaults(func=cmd_evaluate)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(
        os.environ.get("FRONTIER_LOG", "").lower()
    )
    if level is not None:
        logging.basicConfig(level=level, stream=sys.stderr, format="%(name)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SceneParseError, DepthFileError, PoseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
