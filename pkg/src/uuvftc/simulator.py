"""Vehicle side of the loop: truth model, fault injection and sensors.

The agent talks to it one fast tick at a time: it sends an ``ActuatorFrame``
and receives the ``SensorReport`` for the next tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .dynamics import (FaultKind, TruthAugmentation, VehicleParams, VehicleState,
                       apply_steering_lock, step_depth, step_kinematics)
from .geometry import wrap_angle
from .sensors import DvlMeasurement, Measurement, SensorSuite


@dataclass(frozen=True)
class ActuatorFrame:
    tick: int
    rudder: float                  # total deflection, bias included
    speed: float
    depth_target: float | None
    replanned: bool


@dataclass(frozen=True)
class SensorReport:
    tick: int
    t: float
    measurement: Measurement | None
    dvl: DvlMeasurement | None
    truth: VehicleState
    done: bool = False


def replay_pose(replay, t: float) -> tuple[float, float, float, bool]:
    """Pose on the out-and-back loop at time ``t``: (x, y, heading, finished)."""
    s = replay.speed * t
    leg, R = replay.leg, replay.radius
    total = 2 * leg + math.pi * R
    done = s >= total
    s = min(s, total)
    if s <= leg:
        return 0.0, s, math.pi / 2, done
    if s <= leg + math.pi * R:
        a = (s - leg) / R
        return -R + R * math.cos(a), leg + R * math.sin(a), wrap_angle(math.pi / 2 + a), done
    return -2 * R, leg - (s - leg - math.pi * R), -math.pi / 2, done


class VehicleSim:
    def __init__(self, cfg):
        self.cfg = cfg
        self.dt = cfg.timing.dt
        init = cfg.initial
        fault = cfg.fault
        nominal = cfg.nominal_heading if cfg.nominal_heading is not None else init.psi
        self.params = VehicleParams.with_fault(fault, nominal_heading=nominal, v_bound=cfg.v_bound)
        rudder_ok = not (fault.kind is FaultKind.LOWER_RUDDER_REMOVED and fault["health_signal"])
        self.state = VehicleState(init.x, init.y, wrap_angle(init.psi), init.u, init.d, rudder_ok)
        current = fault["current_speed"] if fault.kind is FaultKind.CROSS_CURRENT else 0.0
        self.aug = TruthAugmentation(current_lateral=current,
                                     steering_locked=(fault.kind is FaultKind.STEERING_LOCK
                                                      and init.steering_locked))
        self.sensors = SensorSuite(cfg.noise)
        self.tick = 0
        self.with_dvl = fault.kind is FaultKind.DVL_BIAS or cfg.estimator.mode == "dvl_kf"
        if cfg.replay is not None:
            self._replay(0.0)

    def _replay(self, t: float) -> bool:
        x, y, psi, done = replay_pose(self.cfg.replay, t)
        self.state = replace(self.state, x=x, y=y, psi=psi, u=0.0 if done else self.cfg.replay.speed)
        return done

    def report(self, done: bool = False) -> SensorReport:
        k = self.tick
        t = k * self.dt
        meas = dvl = None
        if k % self.cfg.sensor_every == 0:
            meas = self.sensors.sample(self.state, t)
            if self.with_dvl:
                s = self.state
                truth_vel = (0.0 + self.aug.v, s.u)  # body frame: (lateral, along)
                dvl = self.sensors.sample_dvl(truth_vel, self.cfg.fault,
                                              k // self.cfg.sensor_every, t)
        return SensorReport(k, t, meas, dvl, self.state, done)

    def step(self, frame: ActuatorFrame) -> SensorReport:
        """Apply ``frame`` over one dt and report the next tick."""
        done = False
        if self.cfg.replay is not None:
            self.tick += 1
            finished = self._replay(self.tick * self.dt)
            # end on a sensor tick so the last estimate has seen the final fix
            return self.report(finished and self.tick % self.cfg.sensor_every == 0)
        self.state, self.aug = step_kinematics(self.state, self.aug, frame.rudder, frame.speed,
                                               self.dt, self.params)
        if not self.aug.steering_locked:
            self.state = step_depth(self.state, frame.depth_target, self.cfg.guidance.depth_rate,
                                    self.dt)
        self.tick += 1
        if self.tick % self.cfg.slow_every == 0 and self.cfg.fault.kind is FaultKind.STEERING_LOCK:
            self.state, self.aug = apply_steering_lock(self.state, self.aug, frame.replanned,
                                                       self.cfg.fault)
        return self.report(done)
