"""Run configuration: one flat dataclass covering every tunable, plus a
key = value config-file parser (# comments, unknown keys are errors)."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .camera import CameraModel
from .oracle import OracleParams

MODES = ("frontiernet", "classic", "mapfree")
GAIN_MODES = ("predicted", "uniform")
MASK_MODES = ("distance_field", "discontinuity")

ABLATIONS = {
    "df+gain": ("distance_field", "predicted"),
    "df+uni": ("distance_field", "uniform"),
    "discon+gain": ("discontinuity", "predicted"),
    "discon+uni": ("discontinuity", "uniform"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # camera
    width: int = 480
    height: int = 480
    fov_x: float = 77.32
    fov_y: float = 77.32
    max_range: float = 3.5
    # prediction rasters
    r_ray: float = 0.15  # m
    tau_d: float = 0.05  # m/px
    r_df: int = 20  # px
    k_classes: int = 11
    g_max: float = 0.0  # 0 = derive from camera frustum volume
    sample_frac: float = 0.10
    idw_k: int = 4
    # 2D -> 3D anchoring
    recover_l: float = 2.0  # px
    fgbg_step: int = 4  # px
    grad_eps: float = 1e-6
    sigma_px: float = 24.0
    sigma_phi: float = 0.5
    sigma_g_frac: float = 0.25
    cluster_eps: float = 1.0
    min_cluster_size: int = 8
    # frontier store
    merge_dist: float = 0.5  # m
    merge_angle_deg: float = 45.0
    prune_dist: float = 0.5  # m
    prune_angle_deg: float = 30.0
    g_min: float = 50.0
    traj_dist: float = 0.1  # m
    traj_angle_deg: float = 10.0
    # planner
    mode: str = "frontiernet"
    gain_mode: str = "predicted"
    mask_mode: str = "distance_field"
    inflation_radius: float = 0.2  # m
    entry_samples: int = 20
    utility_dist_floor: float = 0.3  # m
    arrive_dist: float = 0.3  # m
    arrive_angle_deg: float = 20.0
    max_plan_failures: int = 3
    k_obs: int = 5
    max_steps: int = 400
    step_dist: float = 0.1  # m, path densification / step-count quantum
    step_angle_deg: float = 10.0
    initial_scan_deg: float = 360.0
    scan_pitch_deg: float = 0.0  # extra tilted-down/up scan rings when > 0
    classic_min_cluster: int = 5
    # evaluation
    repeats: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.gain_mode not in GAIN_MODES:
            raise ConfigError(f"gain_mode must be one of {GAIN_MODES}, got {self.gain_mode!r}")
        if self.mask_mode not in MASK_MODES:
            raise ConfigError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        for key in ("width", "height", "k_classes", "idw_k", "entry_samples", "repeats"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        for key in ("fov_x", "fov_y", "max_range", "r_ray", "tau_d", "recover_l", "sample_frac"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        if not 0.0 < self.fov_x < 180.0 or not 0.0 < self.fov_y < 180.0:
            raise ConfigError("fov_x/fov_y must lie in (0, 180) degrees")
        if self.k_classes < 2:
            raise ConfigError("k_classes must be at least 2")
        if self.sample_frac > 1.0:
            raise ConfigError("sample_frac must lie in (0, 1]")
        if not 0.0 < self.recover_l < self.r_df:
            raise ConfigError("recover_l must lie in (0, r_df)")
        for key in ("max_steps", "max_plan_failures"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be non-negative")
        if self.k_obs < 1:
            raise ConfigError("k_obs must be at least 1")

    def camera(self) -> CameraModel:
        return CameraModel(
            width=self.width,
            height=self.height,
            fov_x=self.fov_x,
            fov_y=self.fov_y,
            max_range=self.max_range,
        )

    def oracle_params(self) -> OracleParams:
        return OracleParams(
            r_ray=self.r_ray,
            tau_d=self.tau_d,
            r_df=self.r_df,
            k_classes=self.k_classes,
            g_max=self.g_max,
            sample_frac=self.sample_frac,
            idw_k=self.idw_k,
        )

    def apply_ablation(self, name: str) -> "RunConfig":
        if name not in ABLATIONS:
            raise ConfigError(f"unknown ablation {name!r}; choose from {sorted(ABLATIONS)}")
        mask_mode, gain_mode = ABLATIONS[name]
        return dataclasses.replace(self, mask_mode=mask_mode, gain_mode=gain_mode)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    if f.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} expects an integer, got {raw!r}") from None
    if f.type in ("float", float):
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} expects a number, got {raw!r}") from None
        if math.isnan(val):
            raise ConfigError(f"key {key!r} must not be NaN")
        return val
    return raw


def parse_config_items(lines, source: str = "<config>") -> dict:
    """Parse flat `key = value` lines into a typed override dict. Blank lines
    and # comments are ignored; unknown keys and malformed lines are errors."""
    out = {}
    for line_no, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{line_no}: expected key = value, got {line.strip()!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus programmatic overrides."""
    values = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config_items(fh, source=str(path)))
    if overrides:
        values.update(overrides)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def describe_keys() -> str:
    """One line per config key with its default, for --help output."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        lines.append(f"  {f.name} = {f.default}")
    return "\n".join(lines)
