"""Geometric tracking controller on SO(3) with fully decoupled force and torque.

Because the vehicle can realize any body wrench, the desired force is simply
the world-frame PD + feedforward demand rotated into the body frame, and the
torque cancels the rigid-body nonlinearity exactly. Substituting the law into
the dynamics gives linear translational error dynamics and the standard
attitude error dynamics; :func:`error_dynamics_rhs` evaluates those.
"""
from dataclasses import dataclass, fields
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .so3 import psi_error
from .vehicle import VehicleParams, Wrench


@dataclass(frozen=True)
class GainSet:
    k_p: float
    k_v: float
    k_R: float
    k_w: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"gain {f.name} must be positive, got {v}")

    @classmethod
    def default(cls, params: Optional[VehicleParams] = None) -> "GainSet":
        """Translational gains scale with mass; attitude gains are absolute."""
        m = params.m if params is not None else VehicleParams().m
        return cls(k_p=16.0 * m, k_v=5.6 * m, k_R=8.81, k_w=2.54)


@dataclass
class TrackingError:
    e_p: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_w: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.e_p, self.e_v, self.e_R, self.e_w])


def _ref_arrays(ref):
    return (np.asarray(ref.p, float), np.asarray(ref.v, float), np.asarray(ref.a, float),
            np.asarray(ref.R, float), np.asarray(ref.w, float), np.asarray(ref.wdot, float))


def compute_errors(state, ref) -> TrackingError:
    pd, vd, _, Rd, wd, _ = _ref_arrays(ref)
    ep, ev, eR, ew = kernels.tracking_errors(state.p, state.v, state.R, state.w, pd, vd, Rd, wd)
    return TrackingError(ep, ev, eR, ew)


def control_wrench(state, ref, gains: GainSet, params: VehicleParams) -> Wrench:
    """Desired body wrench.

    ``f = R^T(-k_p e_p - k_v e_v - m g + m a_d)`` and
    ``tau = -k_R e_R - k_w e_w + w x Jw - J(w x R^T R_d w_d - R^T R_d wdot_d)``.
    """
    pd, vd, ad, Rd, wd, wdd = _ref_arrays(ref)
    f, tau = kernels.control_wrench(
        state.p, state.v, state.R, state.w, pd, vd, ad, Rd, wd, wdd,
        gains.k_p, gains.k_v, gains.k_R, gains.k_w, params.m, params.J, params.g_vec)
    return Wrench(f, tau)


def error_dynamics_rhs(err: TrackingError, state, ref, gains: GainSet,
                       params: VehicleParams) -> TrackingError:
    """Closed-loop error derivatives (returned in a ``TrackingError`` container)."""
    Rd = np.asarray(ref.R, float)
    dep, dev, deR, dew = kernels.error_rates(
        err.e_p, err.e_v, err.e_R, err.e_w, state.R, Rd,
        gains.k_p, gains.k_v, gains.k_R, gains.k_w, params.m, params.J_inv)
    return TrackingError(dep, dev, deR, dew)


class RoaCheck(NamedTuple):
    inside: bool
    psi: float
    psi_margin: float
    omega_bound_sq: float
    omega_margin: float


def lambda_max(J) -> float:
    return float(np.max(np.linalg.eigvalsh(np.asarray(J, float))))


def omega_bound_sq(psi: float, gains: GainSet, params: VehicleParams) -> float:
    """Largest admissible ``||e_w||^2`` for a given initial ``Psi``."""
    return 2.0 * gains.k_R / lambda_max(params.J) * (2.0 - psi)


def in_region_of_attraction(state, ref, gains: GainSet, params: VehicleParams) -> RoaCheck:
    """Sufficient condition for exponential convergence from this initial condition."""
    psi = psi_error(state.R, ref.R)
    err = compute_errors(state, ref)
    bound = omega_bound_sq(psi, gains, params)
    w2 = float(err.e_w @ err.e_w)
    inside = psi < 2.0 and w2 < bound
    return RoaCheck(bool(inside), psi, 2.0 - psi, bound, bound - w2)


class DecayFit(NamedTuple):
    slope: float
    r2: float
    t_start: float
    t_end: float
    n: int


def fit_log_decay(t, psi, floor: float = 1e-9, drop: float = 0.5) -> DecayFit:
    """Least-squares line through ``log(psi)`` over the decay window.

    The window opens once ``psi`` has fallen to ``drop`` times its peak and
    closes when it reaches ``floor``. A run that never leaves ``floor`` is
    reported with slope NaN and R^2 = 1.
    """
    t = np.asarray(t, float)
    psi = np.asarray(psi, float)
    ok = np.isfinite(psi)
    t, psi = t[ok], psi[ok]
    k_peak = int(np.argmax(psi))
    peak = psi[k_peak]
    if peak <= floor:
        return DecayFit(float("nan"), 1.0, float(t[0]), float(t[0]), 0)
    after = np.nonzero(psi[k_peak:] <= drop * peak)[0]
    if len(after) == 0:
        return DecayFit(float("nan"), 0.0, float(t[-1]), float(t[-1]), 0)
    k0 = k_peak + int(after[0])
    below = np.nonzero(psi[k0:] < floor)[0]
    k1 = k0 + int(below[0]) if len(below) else len(psi)
    tt, y = t[k0:k1], np.log(psi[k0:k1])
    if len(tt) < 3:
        return DecayFit(float("nan"), 0.0, float(tt[0]) if len(tt) else float(t[k0]),
                        float(tt[-1]) if len(tt) else float(t[k0]), len(tt))
    A = np.column_stack([tt, np.ones_like(tt)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(coef[0]), r2, float(tt[0]), float(tt[-1]), len(tt))
