"""Planar constant-velocity Kalman filter fusing GPS position and DVL velocity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalError(ArithmeticError):
    """Covariance lost symmetry or positive definiteness."""


@dataclass(frozen=True)
class KfState:
    mean: np.ndarray        # (x, y, vx, vy)
    cov: np.ndarray         # 4x4

    @classmethod
    def initial(cls, mean, pos_var: float = 1.0, vel_var: float = 1.0) -> "KfState":
        return cls(np.asarray(mean, dtype=float).copy(), np.diag([pos_var, pos_var, vel_var, vel_var]))


@dataclass(frozen=True)
class KfNoiseParams:
    """``q_vel`` is a spectral density (m^2/s^3), injected as ``q_vel * dt``."""

    q_vel: float
    r_gps: float
    r_dvl: float

    def __post_init__(self):
        if not (self.q_vel > 0 and self.r_gps > 0 and self.r_dvl > 0):
            raise ValueError("KF noise parameters must be positive")


H_POS = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
H_VEL = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


def _check(cov: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(cov)):
        raise NumericalError(f"non-finite covariance after {where}")
    asym = np.max(np.abs(cov - cov.T))
    if asym > 1e-9 * max(1.0, np.max(np.abs(cov))):
        raise NumericalError(f"covariance asymmetric by {asym:.3e} after {where}")
    cov = 0.5 * (cov + cov.T)
    if np.linalg.eigvalsh(cov)[0] <= 0.0:
        raise NumericalError(f"covariance not positive definite after {where}")
    return cov


def kf_predict(state: KfState, params: KfNoiseParams, dt: float) -> KfState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    Q = np.zeros((4, 4))
    Q[2, 2] = Q[3, 3] = params.q_vel * dt
    return KfState(F @ state.mean, _check(F @ state.cov @ F.T + Q, "predict"))


def _update(state: KfState, z, H: np.ndarray, R: np.ndarray, where: str) -> KfState:
    P = state.cov
    S = H @ P @ H.T + R
    K = np.linalg.solve(S, H @ P).T
    innov = np.asarray(z, dtype=float) - H @ state.mean
    I_KH = np.eye(4) - K @ H
    cov = I_KH @ P @ I_KH.T + K @ R @ K.T
    return KfState(state.mean + K @ innov, _check(cov, where))


def kf_update_gps(state: KfState, z, r_gps: float | np.ndarray) -> KfState:
    R = np.asarray(r_gps, dtype=float)
    R = R * np.eye(2) if R.ndim == 0 else R
    return _update(state, z, H_POS, R, "gps update")


def kf_update_dvl(state: KfState, z, r_dvl: float | np.ndarray) -> KfState:
    """``z`` is a world-frame velocity; ``r_dvl`` scalar or a 2x2 matrix."""
    R = np.asarray(r_dvl, dtype=float)
    R = R * np.eye(2) if R.ndim == 0 else R
    return _update(state, z, H_VEL, R, "dvl update")


def rescale_covariances(params: KfNoiseParams, factors: tuple[float, float, float]) -> KfNoiseParams:
    f_q, f_gps, f_dvl = factors
    return KfNoiseParams(params.q_vel * f_q, params.r_gps * f_gps, params.r_dvl * f_dvl)


def rotated_velocity_noise(heading: float, var_along: float, var_cross: float) -> np.ndarray:
    """World-frame covariance of a body-frame velocity measurement."""
    c, s = np.cos(heading), np.sin(heading)
    Rot = np.array([[c, -s], [s, c]])
    return Rot @ np.diag([var_along, var_cross]) @ Rot.T
