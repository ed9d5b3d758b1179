"""Coverage metrics and the multi-scene evaluation suite.

Vox@k is the coverage percentage at a step budget; per-scene budgets for the
25%/50% stages are the cross-config mean of the first step reaching that
coverage (runs that never reach it contribute max_steps). The suite writes one
CSV row per (scene, start, config, repeat) cell plus per-config mean/std
summary rows, deterministically (cell seeds are stable hashes of the cell
key); wallclock is the only non-reproducible column.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .camera import Pose
from .config import RunConfig
from .explore import ExplorationLog, run_exploration
from .grid import VoxelGrid

SUITE_COLUMNS = (
    "scene", "start_idx", "config", "repeat", "seed",
    "vox25", "vox50", "vox100", "success", "steps", "wallclock_ms",
)

SUCCESS_COVERAGE = 40.0  # percent of total volume at the full budget


def coverage_trace(log: ExplorationLog) -> list[float]:
    """Coverage percent per step index; later rows for the same step win."""
    if not log.rows:
        raise ValueError("empty exploration log")
    trace: dict[int, float] = {}
    for r in log.rows:
        trace[r.step] = 100.0 * r.known_fraction
    return [trace[s] for s in sorted(trace)]


def vox_at_k(log: ExplorationLog, step_budget: float) -> float:
    """Coverage percent at a (possibly fractional) step budget, linearly
    interpolated between logged steps and clamped to the final step."""
    tr = coverage_trace(log)
    if step_budget < 0:
        raise ValueError("step budget must be non-negative")
    last = len(tr) - 1
    if step_budget >= last:
        return tr[last]
    lo = int(math.floor(step_budget))
    t = step_budget - lo
    return tr[lo] * (1.0 - t) + tr[lo + 1] * t


def first_step_reaching(log: ExplorationLog, coverage_percent: float, max_steps: int) -> int:
    for s, c in enumerate(coverage_trace(log)):
        if c >= coverage_percent:
            return s
    return max_steps


def cell_seed(scene: str, start_idx: int, config: str, repeat: int) -> int:
    key = f"{scene}|{start_idx}|{config}|{repeat}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


@dataclass
class SuiteRecord:
    scene: str
    start_idx: int
    config: str
    repeat: int
    seed: int
    vox25: float
    vox50: float
    vox100: float
    success: bool
    steps: int
    wallclock_ms: float
    collided: bool
    failed: bool


def _run_cell(args):
    scene_name, grid, start_idx, start, config_name, cfg, repeat = args
    seed = cell_seed(scene_name, start_idx, config_name, repeat)
    t0 = time.perf_counter()
    try:
        log = run_exploration(grid, start, cfg, seed=seed)
        err = None
    except Exception as exc:  # failures become rows, never abort the suite
        log = None
        err = exc
    ms = (time.perf_counter() - t0) * 1e3
    return scene_name, start_idx, config_name, repeat, seed, log, ms, err


def run_suite(
    scenes: list[tuple[str, VoxelGrid, list[Pose]]],
    configs: dict[str, RunConfig],
    repeats: int,
    out_path=None,
    jobs: int = 1,
    compare: tuple[str, str] | None = None,
) -> list[SuiteRecord]:
    """Run every (scene, start, config, repeat) cell, compute Vox@k against
    per-scene cross-config budgets, and optionally write the suite CSV."""
    if not scenes:
        raise ValueError("scene list is empty")
    if not configs:
        raise ValueError("config set is empty")
    cells = [
        (scene_name, grid, start_idx, start, config_name, cfg, repeat)
        for scene_name, grid, starts in scenes
        for start_idx, start in enumerate(starts)
        for config_name, cfg in sorted(configs.items())
        for repeat in range(repeats)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        raw = [_run_cell(c) for c in cells]

    max_steps = {name: cfg.max_steps for name, cfg in configs.items()}
    by_scene: dict[str, list] = {}
    for r in raw:
        by_scene.setdefault(r[0], []).append(r)

    budgets: dict[str, tuple[float, float]] = {}
    for scene_name, rows in by_scene.items():
        firsts25, firsts50 = [], []
        for _, _, config_name, _, _, log, _, err in rows:
            steps_cap = max_steps[config_name]
            if err is None and log is not None and log.rows:
                firsts25.append(first_step_reaching(log, 25.0, steps_cap))
                firsts50.append(first_step_reaching(log, 50.0, steps_cap))
            else:
                firsts25.append(steps_cap)
                firsts50.append(steps_cap)
        budgets[scene_name] = (float(np.mean(firsts25)), float(np.mean(firsts50)))

    records = []
    for scene_name, start_idx, config_name, repeat, seed, log, ms, err in raw:
        b25, b50 = budgets[scene_name]
        if err is None and log is not None and log.rows:
            v25 = vox_at_k(log, b25)
            v50 = vox_at_k(log, b50)
            v100 = vox_at_k(log, float(max_steps[config_name]))
            steps = log.steps_used
            collided = log.collided
            failed = False
        else:
            v25 = v50 = v100 = 0.0
            steps = 0
            collided = False
            failed = True
        records.append(
            SuiteRecord(
                scene=scene_name, start_idx=start_idx, config=config_name,
                repeat=repeat, seed=seed, vox25=v25, vox50=v50, vox100=v100,
                success=v100 > SUCCESS_COVERAGE, steps=steps,
                wallclock_ms=ms, collided=collided, failed=failed,
            )
        )
    records.sort(key=lambda r: (r.scene, r.start_idx, r.config, r.repeat))
    if out_path is not None:
        write_suite_csv(records, out_path, compare)
    return records


def config_means(records: list[SuiteRecord], scene: str, config: str) -> dict:
    rows = [r for r in records if r.scene == scene and r.config == config]
    return {
        "vox25": float(np.mean([r.vox25 for r in rows])),
        "vox50": float(np.mean([r.vox50 for r in rows])),
        "vox100": float(np.mean([r.vox100 for r in rows])),
        "success": float(np.mean([1.0 if r.success else 0.0 for r in rows])),
        "steps": float(np.mean([r.steps for r in rows])),
        "wallclock_ms": float(np.mean([r.wallclock_ms for r in rows])),
    }


def _config_stds(records, scene, config):
    rows = [r for r in records if r.scene == scene and r.config == config]
    return {
        "vox25": float(np.std([r.vox25 for r in rows])),
        "vox50": float(np.std([r.vox50 for r in rows])),
        "vox100": float(np.std([r.vox100 for r in rows])),
        "success": float(np.std([1.0 if r.success else 0.0 for r in rows])),
        "steps": float(np.std([r.steps for r in rows])),
        "wallclock_ms": float(np.std([r.wallclock_ms for r in rows])),
    }


def write_suite_csv(records: list[SuiteRecord], path, compare=None) -> None:
    scenes = sorted({r.scene for r in records})
    configs = sorted({r.config for r in records})
    lines = [",".join(SUITE_COLUMNS)]
    for r in records:
        lines.append(
            f"{r.scene},{r.start_idx},{r.config},{r.repeat},{r.seed},"
            f"{r.vox25!r},{r.vox50!r},{r.vox100!r},"
            f"{'true' if r.success else 'false'},{r.steps},{r.wallclock_ms:.3f}"
        )
    for scene in scenes:
        for config in configs:
            m = config_means(records, scene, config)
            s = _config_stds(records, scene, config)
            lines.append(
                f"{scene},,{config},mean,,{m['vox25']!r},{m['vox50']!r},{m['vox100']!r},"
                f"{m['success']!r},{m['steps']!r},{m['wallclock_ms']:.3f}"
            )
            lines.append(
                f"{scene},,{config},std,,{s['vox25']!r},{s['vox50']!r},{s['vox100']!r},"
                f"{s['success']!r},{s['steps']!r},{s['wallclock_ms']:.3f}"
            )
    if compare is not None:
        a, b = compare
        for scene in scenes:
            ma = config_means(records, scene, a)
            mb = config_means(records, scene, b)
            lines.append(
                f"{scene},,{a}-{b},diff,,"
                f"{ma['vox25'] - mb['vox25']!r},{ma['vox50'] - mb['vox50']!r},"
                f"{ma['vox100'] - mb['vox100']!r},,,"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
