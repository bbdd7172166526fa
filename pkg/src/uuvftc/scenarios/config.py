"""Scenario configuration: YAML files with unit-suffixed speeds and angles."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ..dynamics import FaultInjection, FaultKind
from ..geometry import KNOT, ConfigurationError
from ..reasoner.scripted import StrategyTable
from ..sensors import NoiseConfig
from ..solver import NavigableArea, SolverLimits

SCENARIOS = ("exp_n", "exp_f", "sim_steering_lock", "sim_surface", "sim_crosscurrent",
             "sim_dvl", "sim_dvl_kf_only")

_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/°]*)\s*$")


def speed(v) -> float:
    """``2 kn``, ``1.0 m/s`` or a bare number in m/s."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    m = _QTY.match(str(v))
    if not m:
        raise ConfigurationError(f"cannot read speed {v!r}")
    val, unit = float(m.group(1)), m.group(2).lower()
    if unit in ("kn", "kt", "knot", "knots"):
        return val * KNOT
    if unit in ("", "m/s", "mps"):
        return val
    raise ConfigurationError(f"unsupported speed unit {unit!r}")


def angle(v) -> float:
    """``60 deg`` or radians (bare number or ``rad``)."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    m = _QTY.match(str(v))
    if not m:
        raise ConfigurationError(f"cannot read angle {v!r}")
    val, unit = float(m.group(1)), m.group(2).lower()
    if unit in ("deg", "degree", "degrees", "°"):
        return math.radians(val)
    if unit in ("", "rad"):
        return val
    raise ConfigurationError(f"unsupported angle unit {unit!r}")


@dataclass(frozen=True)
class Thresholds:
    eps_p: float = 3.0
    eps_psi: float = 0.35
    n_w: int = 5
    r_acc: float = 2.0


@dataclass(frozen=True)
class Timing:
    dt: float = 0.05
    slow_period: float = 0.1
    sensor_period: float = 0.1
    duration_cap: float = 600.0
    reasoner_latency: float = 0.3
    solver_latency: float = 0.01


@dataclass(frozen=True)
class GuidanceConfig:
    Kp: float = 1.2
    Kd: float = 0.4
    phase1: str = "track"          # or "heading_hold"
    depth_rate: float = 0.1        # m/s towards the waypoint depth
    plan_spacing: float = 1.0      # arc sampling of tracked plans, metres


@dataclass(frozen=True)
class EstimatorConfig:
    mode: str = "raw"              # raw | lake_kf | dvl_kf
    q_vel: float = 0.01
    r_gps: float = 1.0
    r_dvl: float = 0.01
    p0_pos: float = 1.0
    p0_vel: float = 1.0
    apply_kf_scale: bool = True


@dataclass(frozen=True)
class InitialState:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    d: float = 0.0
    steering_locked: bool = False


@dataclass(frozen=True)
class ReplayPath:
    """Out-and-back truth loop used when the closed loop must not alter the
    fault trace: north for ``leg``, a left U-turn of ``radius``, back south."""

    leg: float = 60.0
    radius: float = 10.0
    speed: float = 2.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str
    area: NavigableArea
    corners: tuple[tuple[float, ...], ...]
    radius: float
    speed: float
    thresholds: Thresholds
    limits: SolverLimits
    noise: NoiseConfig
    fault: FaultInjection
    strategy: StrategyTable
    initial: InitialState = InitialState()
    timing: Timing = Timing()
    guidance: GuidanceConfig = GuidanceConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    reasoner: str = "scripted"
    endpoint_url: str | None = None
    endpoint_timeout: float = 2.0
    n_max: int = 3
    m_st: int = 8
    assume_degraded_on_fault: bool = False
    nominal_heading: float | None = None
    v_bound: float = 0.0
    replay: ReplayPath | None = None
    seed: int = 0
    acceptance: dict = field(default_factory=dict)
    description: str = ""

    @property
    def slow_every(self) -> int:
        return _ratio(self.timing.slow_period, self.timing.dt, "slow_period")

    @property
    def sensor_every(self) -> int:
        return _ratio(self.timing.sensor_period, self.timing.dt, "sensor_period")

    def with_overrides(self, **kw) -> "ScenarioConfig":
        cfg = replace(self, **kw)
        if "seed" in kw:
            cfg = replace(cfg, noise=replace(cfg.noise, seed=int(kw["seed"])))
        return cfg


def _ratio(period: float, dt: float, name: str) -> int:
    n = round(period / dt)
    if n < 1 or abs(n * dt - period) > 1e-9:
        raise ConfigurationError(f"{name} must be a whole multiple of dt")
    return int(n)


def _section(cls, data: dict | None, converters: dict | None = None):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in {cls.__name__}: {sorted(unknown)}")
    for k, conv in (converters or {}).items():
        if k in data:
            data[k] = conv(data[k])
    return cls(**data)


def _points(raw) -> tuple[tuple[float, ...], ...]:
    try:
        pts = tuple(tuple(float(c) for c in p) for p in raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"bad point list {raw!r}") from None
    if any(len(p) not in (2, 3) for p in pts):
        raise ConfigurationError("points need 2 or 3 coordinates")
    return pts


def from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    doc = dict(doc)
    try:
        name = doc.pop("name")
        kind = doc.pop("kind")
        area_doc = doc.pop("area")
        plan = doc.pop("plan")
    except KeyError as exc:
        raise ConfigurationError(f"missing config key {exc.args[0]!r}") from None
    area = NavigableArea(tuple(tuple(map(float, v)) for v in area_doc["vertices"]),
                         float(area_doc["d_safe"]))
    seed = int(doc.pop("seed", 0))
    noise_doc = dict(doc.pop("noise", {}) or {})
    preset = noise_doc.pop("preset", "none")
    noise = NoiseConfig.preset(preset, seed=seed, **{k: float(v) for k, v in noise_doc.items()})
    fault_doc = dict(doc.pop("fault", {}) or {})
    fkind = FaultKind(fault_doc.pop("kind", "none"))
    fault = FaultInjection.default(fkind, **{k: float(v) for k, v in fault_doc.items()})
    limits_doc = doc.pop("limits", None) or {}
    limits = _section(SolverLimits, limits_doc,
                      {"u_min": speed, "u_max": speed, "delta_max": angle,
                       "delta_max_eff": angle, "dtheta": angle})
    if fkind is FaultKind.LOWER_RUDDER_REMOVED and "delta_max_eff" not in limits_doc:
        limits = replace(limits, delta_max_eff=math.asin(limits.L / (2.0 * fault["r_min_fault"])))
    st_doc = dict(doc.pop("strategy"))
    st_conv = {"speed": speed, "rudder_bias": angle, "initial_speed": speed}
    for k in ("target", "kf_factors"):
        if k in st_doc:
            st_doc[k] = tuple(float(c) for c in st_doc[k])
    plan_corners = _points(plan["corners"])
    strategy = _section(StrategyTable, {**st_doc,
                                        "initial_corners": plan_corners,
                                        "initial_radius": float(plan["radius"]),
                                        "initial_speed": speed(plan["speed"])}, st_conv)
    replay = doc.pop("replay", None)
    nominal = doc.pop("nominal_heading", None)
    cfg = ScenarioConfig(
        name=name, kind=kind, area=area, corners=plan_corners,
        radius=float(plan["radius"]), speed=speed(plan["speed"]),
        thresholds=_section(Thresholds, doc.pop("thresholds", None), {"eps_psi": angle}),
        limits=limits, noise=noise, fault=fault, strategy=strategy,
        initial=_section(InitialState, doc.pop("initial", None), {"u": speed, "psi": angle}),
        timing=_section(Timing, doc.pop("timing", None)),
        guidance=_section(GuidanceConfig, doc.pop("guidance", None)),
        estimator=_section(EstimatorConfig, doc.pop("estimator", None)),
        replay=None if replay is None else _section(ReplayPath, replay, {"speed": speed}),
        nominal_heading=None if nominal is None else angle(nominal),
        seed=seed,
        **{k: doc.pop(k) for k in list(doc) if k in
           ("reasoner", "endpoint_url", "endpoint_timeout", "n_max", "m_st",
            "assume_degraded_on_fault", "v_bound", "acceptance", "description")},
    )
    if doc:
        raise ConfigurationError(f"unknown config keys: {sorted(doc)}")
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    th = cfg.thresholds
    if th.eps_p <= 0 or th.eps_psi <= 0 or th.n_w < 1 or th.r_acc <= 0:
        raise ConfigurationError("thresholds must be positive and n_w >= 1")
    if len(cfg.corners) < 2:
        raise ConfigurationError("initial plan needs at least 2 corners")
    if cfg.radius <= 0 or cfg.speed <= 0:
        raise ConfigurationError("initial radius and speed must be positive")
    if cfg.reasoner not in ("scripted", "endpoint"):
        raise ConfigurationError(f"unknown reasoner mode {cfg.reasoner!r}")
    if cfg.reasoner == "endpoint" and not cfg.endpoint_url:
        raise ConfigurationError("endpoint mode needs endpoint_url")
    if cfg.estimator.mode not in ("raw", "lake_kf", "dvl_kf"):
        raise ConfigurationError(f"unknown estimator mode {cfg.estimator.mode!r}")
    if cfg.guidance.phase1 not in ("track", "heading_hold"):
        raise ConfigurationError(f"unknown phase1 mode {cfg.guidance.phase1!r}")
    if cfg.n_max < 0 or cfg.m_st < 1:
        raise ConfigurationError("n_max must be >= 0 and m_st >= 1")
    _ = cfg.slow_every, cfg.sensor_every
    if cfg.timing.duration_cap <= 0:
        raise ConfigurationError("duration_cap must be positive")
    inside = cfg.area.contains([c[:2] for c in cfg.corners])
    if not inside.all():
        raise ConfigurationError("initial plan leaves the navigable area")
    return cfg


def load(path_or_name: str | Path) -> ScenarioConfig:
    """Load a YAML file, or a bundled scenario by name."""
    p = Path(path_or_name)
    if p.suffix in (".yaml", ".yml") and p.exists():
        text = p.read_text()
    elif str(path_or_name) in SCENARIOS:
        text = resources.files("uuvftc.scenarios.configs").joinpath(f"{path_or_name}.yaml").read_text()
    else:
        raise ConfigurationError(f"no scenario file or bundled scenario named {path_or_name!r}")
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario file must hold a mapping")
    return from_dict(doc)
