"""Wrench-to-actuator allocation, gimbal-lock handling, saturation and envelopes.

The closed-form allocation splits the desired wrench into net-force, roll,
pitch and yaw parts, each spread equally over the four arms. For the planar
symmetric layout this coincides with the minimum-norm (pseudo-inverse)
solution of ``f = sum t_i, tau = sum l_i x t_i``.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .vehicle import ArmCommand, ArmCommands, VehicleParams, Wrench

log = logging.getLogger(__name__)

GIMBAL_EPS = 0.1


def _wrench_arrays(w) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(w, Wrench):
        f, tau = w.f, w.tau
    else:
        v = np.asarray(w, dtype=float).reshape(6)
        f, tau = v[:3], v[3:]
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(tau))):
        raise ValueError("wrench must be finite")
    return np.ascontiguousarray(f), np.ascontiguousarray(tau)


def _require_planar(params: VehicleParams):
    if params.l_z != 0.0:
        raise ValueError("closed-form allocation assumes a planar arm layout (l_z = 0)")


def yaw_basis(params: VehicleParams) -> np.ndarray:
    """Unit in-plane directions whose lever-arm moment is purely +z (shape (4, 3))."""
    return kernels.yaw_basis(params.l_x, params.l_y)


def allocate_wrench(w, params: VehicleParams) -> np.ndarray:
    """Closed-form minimum-energy thrust vectors, shape (4, 3)."""
    _require_planar(params)
    f, tau = _wrench_arrays(w)
    return kernels.allocate(f, tau, params.l_x, params.l_y)


def thrust_map_matrix(params: VehicleParams) -> np.ndarray:
    """6x12 linear map from stacked thrust vectors to ``[f; tau]``."""
    M = np.zeros((6, 12))
    for i, l in enumerate(params.arm_positions):
        M[:3, 3 * i:3 * i + 3] = np.eye(3)
        M[3:, 3 * i:3 * i + 3] = kernels.hat(l)
    return M


def minimum_norm_oracle(w, params: VehicleParams) -> np.ndarray:
    """Reference allocation ``M^T (M M^T)^-1 w`` by dense linear algebra."""
    f, tau = _wrench_arrays(w)
    M = thrust_map_matrix(params)
    if np.linalg.matrix_rank(M) < 6:
        raise np.linalg.LinAlgError("thrust map is rank deficient for this geometry")
    y = np.linalg.solve(M @ M.T, np.concatenate([f, tau]))
    return (M.T @ y).reshape(4, 3)


def minimum_norm_operator(params: VehicleParams) -> np.ndarray:
    """12x6 pseudo-inverse of :func:`thrust_map_matrix` for batched use."""
    M = thrust_map_matrix(params)
    if np.linalg.matrix_rank(M) < 6:
        raise np.linalg.LinAlgError("thrust map is rank deficient for this geometry")
    return M.T @ np.linalg.inv(M @ M.T)


def thrust_energy(T) -> float:
    """``0.5 * sum ||t_i||^2``."""
    T = np.asarray(T, dtype=float)
    return 0.5 * float(np.sum(T * T))


def extract_arm_command(t, params: VehicleParams) -> ArmCommand:
    """Servo angles and rotor speed realizing one thrust vector.

    ``beta`` is in [-pi/2, pi/2]; ``alpha`` follows the three-way branch on the
    signs of ``t_z`` and ``t_x``. Zero thrust maps to all zeros. Thrusts above
    ``t_max`` are converted anyway and logged; limit them with
    :func:`saturate_thrust_set` first.
    """
    t = np.asarray(t, dtype=float).reshape(3)
    if not np.all(np.isfinite(t)):
        raise ValueError("thrust vector must be finite")
    if np.linalg.norm(t) > params.t_max * (1.0 + 1e-12):
        log.debug("thrust %.6g N exceeds t_max %.6g N", np.linalg.norm(t), params.t_max)
    a, b, o = kernels.extract_one(t, params.c_t)
    return ArmCommand(a, b, o)


def extract_arm_commands(T, params: VehicleParams) -> ArmCommands:
    T = np.ascontiguousarray(T, dtype=float).reshape(4, 3)
    if not np.all(np.isfinite(T)):
        raise ValueError("thrust vectors must be finite")
    a, b, o = kernels.extract(T, params.c_t)
    return ArmCommands(a, b, o)


def alpha_branch(t) -> int:
    """Which alpha branch a thrust vector takes: 1 (t_z<0, t_x>=0), 2 (t_z<0, t_x<0), 3 otherwise."""
    t = np.asarray(t, dtype=float)
    if t[2] < 0.0:
        return 1 if t[0] >= 0.0 else 2
    return 3


def gimbal_locked(T, eps: float = GIMBAL_EPS) -> np.ndarray:
    """Per-arm flag: thrust direction within ``eps`` of the body j-axis."""
    T = np.asarray(T, dtype=float).reshape(4, 3)
    out = np.zeros(4, dtype=bool)
    for i in range(4):
        if np.linalg.norm(T[i]) > 0.0:
            out[i] = abs(kernels.elevation(T[i])) > 0.5 * np.pi - eps
    return out


def allocate_with_gimbal_fallback(w, params: VehicleParams,
                                  eps: float = GIMBAL_EPS) -> Tuple[np.ndarray, bool]:
    """Closed-form allocation, switching yaw to differential j-axis thrust near gimbal lock.

    When any arm of the nominal solution would sit within ``eps`` of
    ``|beta| = pi/2`` and yaw torque is demanded, the yaw share is carried as
    ``+-tau_z / (4 l_x)`` along j_B (positive on the +x arms). Returns the
    thrust set and whether the fallback was used.
    """
    _require_planar(params)
    f, tau = _wrench_arrays(w)
    T, used = kernels.allocate_with_fallback(f, tau, params.l_x, params.l_y, float(eps))
    return T, bool(used)


@dataclass(frozen=True)
class SaturationReport:
    scale: float
    max_norm: float

    @property
    def saturated(self) -> bool:
        return self.scale < 1.0


def saturate_thrust_set(T, params: VehicleParams) -> Tuple[np.ndarray, SaturationReport]:
    """Uniformly scale all thrusts so the largest is at most ``t_max``."""
    T = np.ascontiguousarray(T, dtype=float).reshape(4, 3)
    max_norm = float(np.max(np.linalg.norm(T, axis=1)))
    Ts, s = kernels.saturate(T, params.t_max)
    return Ts, SaturationReport(float(s), max_norm)


# --------------------------------------------------------------------------
# Envelopes
# --------------------------------------------------------------------------


def fibonacci_directions(n: int) -> np.ndarray:
    """``n`` quasi-uniform unit vectors (Fibonacci lattice)."""
    if n < 1:
        raise ValueError("need at least one direction")
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    rho = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + 5.0**0.5) * k
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _feasible(s: float, d: np.ndarray, params: VehicleParams, torque: bool) -> bool:
    zero = np.zeros(3)
    if torque:
        T = kernels.allocate(zero, s * d, params.l_x, params.l_y)
    else:
        T = kernels.allocate(s * d, zero, params.l_x, params.l_y)
    return kernels.max_row_norm(T) <= params.t_max


def _bisect_envelope(D, params: VehicleParams, torque: bool, rtol: float) -> np.ndarray:
    _require_planar(params)
    out = np.empty(len(D))
    for j, d in enumerate(D):
        d = np.ascontiguousarray(d, dtype=float)
        lo, hi = 0.0, params.t_max
        while _feasible(hi, d, params, torque):
            lo, hi = hi, 2.0 * hi
        while hi - lo > rtol * max(lo, 1e-300):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _feasible(mid, d, params, torque):
                lo = mid
            else:
                hi = mid
        out[j] = lo
    return out


@dataclass
class Envelope:
    kind: str
    directions: np.ndarray
    magnitudes: np.ndarray

    def summary(self) -> dict:
        lo, hi = float(self.magnitudes.min()), float(self.magnitudes.max())
        return {"min": lo, "max": hi, "ratio": lo / hi if hi > 0 else float("nan")}

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"direction": [float(x) for x in d], "max_magnitude": float(s)}
                for d, s in zip(self.directions, self.magnitudes)
            ],
            "summary": self.summary(),
        }


def force_envelope(params: VehicleParams, n_dirs: int = 1000, rtol: float = 1e-12) -> Envelope:
    """Largest pure force (zero torque) per direction, by bisection on feasibility."""
    D = fibonacci_directions(n_dirs)
    return Envelope("force", D, _bisect_envelope(D, params, torque=False, rtol=rtol))


def torque_envelope(params: VehicleParams, n_dirs: int = 1000, rtol: float = 1e-12) -> Envelope:
    """Largest pure torque (zero force) per direction, by bisection on feasibility."""
    D = fibonacci_directions(n_dirs)
    return Envelope("torque", D, _bisect_envelope(D, params, torque=True, rtol=rtol))


def envelope_document(force: Envelope, torque: Envelope, params: VehicleParams) -> dict:
    return {
        "vehicle": {
            "t_max": params.t_max, "l_x": params.l_x, "l_y": params.l_y, "r": params.r,
        },
        "force": force.to_dict(),
        "torque": torque.to_dict(),
    }
