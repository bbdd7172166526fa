"""Noisy measurement models: GPS/compass/speed-log/depth plus a biased DVL."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .dynamics import FaultInjection, FaultKind, VehicleState
from .geometry import KNOT, ConfigurationError


@dataclass(frozen=True)
class Measurement:
    x_m: float
    y_m: float
    psi_m: float
    u_m: float
    d_m: float
    rudder_ok_m: bool
    t_stamp: float


@dataclass(frozen=True)
class DvlMeasurement:
    vel_lateral: float
    vel_along: float
    t_stamp: float


@dataclass(frozen=True)
class NoiseConfig:
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    sigma_psi: float = 0.0
    sigma_u: float = 0.0
    sigma_d: float = 0.0
    lat_drift_max: float = 0.0
    lat_walk: float = 0.0
    lat_white: float = 0.0
    depth_bias_max: float = 0.0
    depth_walk: float = 0.0
    depth_white: float = 0.0
    depth_bias_init: float | None = None
    dvl_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if name in ("seed", "depth_bias_init") or val is None:
                continue
            if not math.isfinite(val) or val < 0.0:
                raise ConfigurationError(f"noise parameter {name} must be finite and >= 0")

    @classmethod
    def none(cls, seed: int = 0) -> "NoiseConfig":
        return cls(seed=seed)

    @classmethod
    def lake(cls, seed: int = 0) -> "NoiseConfig":
        # Listed accuracies read as 3-sigma bounds for GPS and speed log.
        return cls(sigma_x=10.0 / 3.0, sigma_y=10.0 / 3.0, sigma_psi=math.radians(1.0),
                   sigma_u=KNOT / 3.0, sigma_d=0.01, seed=seed)

    @classmethod
    def sim(cls, seed: int = 0) -> "NoiseConfig":
        return cls(lat_drift_max=3.0, lat_walk=0.25, lat_white=0.08,
                   depth_bias_max=0.35, depth_walk=0.04, depth_white=0.02,
                   depth_bias_init=0.175, seed=seed)

    @classmethod
    def preset(cls, name: str, seed: int = 0, **overrides) -> "NoiseConfig":
        try:
            base = {"none": cls.none, "lake": cls.lake, "sim": cls.sim}[name](seed)
        except KeyError:
            raise ConfigurationError(f"unknown noise preset {name!r}") from None
        return cls(**{**base.__dict__, **overrides})


def substream(seed: int, channel: str) -> np.random.Generator:
    """Independent generator per named channel, derived from the run seed."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(channel.encode())])


class SensorSuite:
    """Stateful sampler for one run. Each channel owns its own RNG substream,
    so enabling one channel never shifts the draws of another."""

    CHANNELS = ("x", "y", "psi", "u", "d", "lat_walk", "lat_white",
                "depth_walk", "depth_white", "dvl", "dvl_fault")

    def __init__(self, cfg: NoiseConfig):
        self.cfg = cfg
        self.rng = {c: substream(cfg.seed, c) for c in self.CHANNELS}
        self.lat_drift = 0.0
        init = cfg.depth_bias_init
        self.depth_bias = (0.5 * cfg.depth_bias_max) if init is None else init
        self.depth_bias = min(max(self.depth_bias, 0.0), cfg.depth_bias_max)

    def _gauss(self, channel: str, sigma: float) -> float:
        if sigma <= 0.0:
            return 0.0
        return float(self.rng[channel].normal(0.0, sigma))

    def sample(self, truth: VehicleState, t: float) -> Measurement:
        cfg = self.cfg
        if cfg.lat_drift_max > 0.0:
            step = self._gauss("lat_walk", cfg.lat_walk)
            self.lat_drift = float(np.clip(self.lat_drift + step, -cfg.lat_drift_max, cfg.lat_drift_max))
        lateral = self.lat_drift + self._gauss("lat_white", cfg.lat_white)
        nx, ny = -math.sin(truth.psi), math.cos(truth.psi)
        x_m = truth.x + lateral * nx + self._gauss("x", cfg.sigma_x)
        y_m = truth.y + lateral * ny + self._gauss("y", cfg.sigma_y)

        if cfg.depth_bias_max > 0.0:
            step = self._gauss("depth_walk", cfg.depth_walk)
            self.depth_bias = float(np.clip(self.depth_bias + step, 0.0, cfg.depth_bias_max))
            white = self._gauss("depth_white", cfg.depth_white)
            # the offset as a whole stays non-negative
            offset = max(0.0, self.depth_bias + white)
        else:
            offset = 0.0
        d_m = max(0.0, truth.d + offset + self._gauss("d", cfg.sigma_d))
        return Measurement(x_m=x_m, y_m=y_m,
                           psi_m=truth.psi + self._gauss("psi", cfg.sigma_psi),
                           u_m=truth.u + self._gauss("u", cfg.sigma_u),
                           d_m=d_m, rudder_ok_m=bool(truth.rudder_ok), t_stamp=t)

    def sample_dvl(self, truth_vel: tuple[float, float], fault: FaultInjection,
                   step_k: int, t: float) -> DvlMeasurement:
        """``truth_vel`` is (lateral, along) in the reporting frame."""
        lat, along = truth_vel
        sig = self.cfg.dvl_sigma
        lat += self._gauss("dvl", sig)
        along += self._gauss("dvl", sig)
        if fault.kind is FaultKind.DVL_BIAS and step_k >= int(fault["trigger_step"]):
            lat += fault["bias"] + self._gauss("dvl_fault", fault["sigma"])
        return DvlMeasurement(vel_lateral=lat, vel_along=along, t_stamp=t)
