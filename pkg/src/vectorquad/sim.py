"""Closed-loop simulation: reference -> controller -> allocation -> actuators -> rigid body."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import kernels
from .allocation import GIMBAL_EPS, _require_planar, minimum_norm_operator
from .controller import GainSet, fit_log_decay, omega_bound_sq
from .so3 import as_rotation, exp_so3
from .trajectories import Reference
from .vehicle import VehicleParams, Wrench

log = logging.getLogger(__name__)

ACTUATOR_MODES = ("ideal-wrench", "instant-actuators", "rate-limited-actuators")


class SimulationError(RuntimeError):
    """Raised when the state stops being finite."""


@dataclass
class RigidState:
    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.p = np.array(self.p, dtype=float).reshape(3)
        self.v = np.array(self.v, dtype=float).reshape(3)
        self.R = np.array(self.R, dtype=float).reshape(3, 3)
        self.w = np.array(self.w, dtype=float).reshape(3)

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0), R=None) -> "RigidState":
        return cls(p, np.zeros(3), np.eye(3) if R is None else R, np.zeros(3))

    @classmethod
    def from_reference(cls, ref) -> "RigidState":
        return cls(ref.p, ref.v, ref.R, ref.w)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.v))
                    and np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.w)))

    def copy(self) -> "RigidState":
        return RigidState(self.p, self.v, self.R, self.w)


@dataclass
class ActuatorState:
    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    alpha_cmd: np.ndarray = field(default_factory=lambda: np.zeros(4))
    beta_cmd: np.ndarray = field(default_factory=lambda: np.zeros(4))
    omega_cmd: np.ndarray = field(default_factory=lambda: np.zeros(4))


@dataclass
class SimConfig:
    dt: float = 1e-3
    duration: Optional[float] = None
    actuator_mode: str = "instant-actuators"
    servo_time_constant: float = 0.03
    servo_rate: float = 10.0
    rotor_time_constant: float = 0.02
    seed: int = 0
    divergence_bound: float = 50.0
    settle_time: float = 1.0
    gimbal_eps: float = GIMBAL_EPS
    check_oracle: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration is not None and self.duration < self.dt:
            raise ValueError("duration must be at least one step")
        if self.actuator_mode not in ACTUATOR_MODES:
            raise ValueError(f"actuator_mode must be one of {ACTUATOR_MODES}")


def step(state: RigidState, wrench: Wrench, params: VehicleParams, dt: float) -> RigidState:
    """Advance the rigid body one RK4 step under a constant body wrench."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p, v, R, w = kernels.rk4_step(state.p, state.v, state.R, state.w, wrench.f, wrench.tau,
                                  params.m, params.J, params.J_inv, params.g_vec, dt)
    out = RigidState(p, v, R, w)
    if not out.is_finite():
        raise SimulationError(f"non-finite state after step (wrench f={wrench.f}, tau={wrench.tau})")
    return out


@dataclass
class Telemetry:
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    w: np.ndarray
    pd: np.ndarray
    Rd: np.ndarray
    psi: np.ndarray
    ep_norm: np.ndarray
    fd: np.ndarray
    taud: np.ndarray
    f: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    sat_scale: np.ndarray
    energy: np.ndarray
    nominal_energy: np.ndarray
    oracle_energy: np.ndarray
    fallback: np.ndarray
    diverged: bool = False
    settle_time: float = 0.0
    aim_error: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.t)

    def summary(self) -> Dict[str, object]:
        post = self.t >= self.settle_time
        if not post.any():
            post = np.ones(len(self.t), dtype=bool)
        ep = self.ep_norm[post]
        out = {
            "rms_ep": float(np.sqrt(np.mean(ep**2))),
            "max_ep": float(np.max(ep)),
            "max_psi": float(np.max(self.psi[post])),
            "mean_energy": float(np.mean(self.energy)),
            "saturation_fraction": float(np.mean(self.sat_scale < 1.0)),
            "diverged": bool(self.diverged),
        }
        if self.aim_error is not None:
            a = self.aim_error[post]
            out["aim_error"] = {"max": float(np.max(a)), "rms": float(np.sqrt(np.mean(a**2))),
                                "mean": float(np.mean(a))}
        return out


def _initial_actuators(T, params: VehicleParams) -> ActuatorState:
    a, b, o = kernels.extract(T, params.c_t)
    return ActuatorState(a.copy(), b.copy(), o.copy(), a, b, o)


def run_scenario(cfg: SimConfig, params: VehicleParams, gains: GainSet, trajectory: Reference,
                 initial: Optional[RigidState] = None) -> Telemetry:
    """Simulate one scenario and return per-step telemetry.

    The state starts on the reference unless ``initial`` is given. Saturation
    is logged and recorded; leaving ``divergence_bound`` ends the run early
    with ``diverged=True``.
    """
    duration = trajectory.duration if cfg.duration is None else cfg.duration
    n = int(round(duration / cfg.dt))
    dt = cfg.dt
    mode = cfg.actuator_mode
    state = RigidState.from_reference(trajectory(0.0)) if initial is None else initial.copy()
    as_rotation(state.R, tol=1e-6)
    _require_planar(params)

    m, J, Jinv, g = params.m, params.J, params.J_inv, params.g_vec
    L = params.arm_positions
    lx, ly, ct, tmax = params.l_x, params.l_y, params.c_t, params.t_max
    omega_max = params.rotor_speed_limit
    N = minimum_norm_operator(params) if cfg.check_oracle else None
    servo_rate = cfg.servo_rate
    if params.servo_rate_max is not None:
        servo_rate = min(servo_rate, params.servo_rate_max)

    t_hist = np.empty(n)
    cols3 = {k: np.empty((n, 3)) for k in ("p", "v", "w", "pd", "fd", "taud", "f", "tau")}
    R_hist = np.empty((n, 3, 3))
    Rd_hist = np.empty((n, 3, 3))
    cols4 = {k: np.empty((n, 4)) for k in ("alpha", "beta", "omega")}
    scal = {k: np.empty(n) for k in ("psi", "ep_norm", "sat_scale", "energy",
                                     "nominal_energy", "oracle_energy")}
    fallback = np.zeros(n, dtype=bool)
    aim = np.empty(n) if hasattr(trajectory, "aim_error") else None

    act = None
    diverged = False
    saturation_events = 0
    k_end = n
    for k in range(n):
        t = k * dt
        ref = trajectory(t)
        fd, taud = kernels.control_wrench(
            state.p, state.v, state.R, state.w, ref.p, ref.v, ref.a, ref.R, ref.w, ref.wdot,
            gains.k_p, gains.k_v, gains.k_R, gains.k_w, m, J, g)
        T_nom = kernels.allocate(fd, taud, lx, ly)
        T, used_fb = kernels.allocate_with_fallback(fd, taud, lx, ly, cfg.gimbal_eps)
        T_sat, scale = kernels.saturate(T, tmax)
        a_cmd, b_cmd, o_cmd = kernels.extract(T_sat, ct)

        if act is None:
            act = _initial_actuators(T_sat, params)
        a_cmd = kernels.unwrap_towards(a_cmd, act.alpha)
        act.alpha_cmd, act.beta_cmd, act.omega_cmd = a_cmd, b_cmd, o_cmd

        if mode == "ideal-wrench":
            f_app, tau_app = fd, taud
            act.alpha, act.beta, act.omega = a_cmd, b_cmd, o_cmd
        else:
            if mode == "instant-actuators":
                act.alpha, act.beta, act.omega = a_cmd, b_cmd, np.minimum(o_cmd, omega_max)
            else:
                act.alpha, act.beta, act.omega = kernels.actuator_update(
                    act.alpha, act.beta, act.omega, a_cmd, b_cmd, o_cmd,
                    cfg.servo_time_constant, servo_rate, cfg.rotor_time_constant,
                    omega_max, dt)
            f_app, tau_app = kernels.wrench_of_thrusts(
                kernels.thrust_vectors(act.alpha, act.beta, act.omega, ct), L)

        if scale < 1.0:
            saturation_events += 1
            if saturation_events == 1:
                log.warning("thrust saturation at t=%.3f s (scale %.4f)", t, scale)

        ep = state.p - ref.p
        t_hist[k] = t
        cols3["p"][k], cols3["v"][k], cols3["w"][k] = state.p, state.v, state.w
        cols3["pd"][k] = ref.p
        cols3["fd"][k], cols3["taud"][k] = fd, taud
        cols3["f"][k], cols3["tau"][k] = f_app, tau_app
        R_hist[k], Rd_hist[k] = state.R, ref.R
        cols4["alpha"][k], cols4["beta"][k], cols4["omega"][k] = act.alpha, act.beta, act.omega
        scal["psi"][k] = kernels.psi(state.R, ref.R)
        scal["ep_norm"][k] = math.sqrt(float(ep @ ep))
        scal["sat_scale"][k] = scale
        scal["energy"][k] = 0.5 * float(np.sum(T_sat * T_sat))
        scal["nominal_energy"][k] = 0.5 * float(np.sum(T_nom * T_nom))
        if N is not None:
            t_or = N @ np.concatenate((fd, taud))
            scal["oracle_energy"][k] = 0.5 * float(t_or @ t_or)
        else:
            scal["oracle_energy"][k] = np.nan
        fallback[k] = used_fb
        if aim is not None:
            aim[k] = trajectory.aim_error(state.p, state.R)

        if scal["ep_norm"][k] > cfg.divergence_bound:
            diverged = True
            k_end = k + 1
            log.error("diverged at t=%.3f s: |e_p| = %.3g m", t, scal["ep_norm"][k])
            break

        p, v, R, w = kernels.rk4_step(state.p, state.v, state.R, state.w, f_app, tau_app,
                                      m, J, Jinv, g, dt)
        state = RigidState(p, v, R, w)
        if not state.is_finite():
            raise SimulationError(f"non-finite state at t={t + dt:.6f} s")

    if saturation_events:
        log.info("saturated on %d of %d steps", saturation_events, k_end)

    sl = slice(0, k_end)
    return Telemetry(
        t=t_hist[sl], p=cols3["p"][sl], v=cols3["v"][sl], R=R_hist[sl], w=cols3["w"][sl],
        pd=cols3["pd"][sl], Rd=Rd_hist[sl], psi=scal["psi"][sl], ep_norm=scal["ep_norm"][sl],
        fd=cols3["fd"][sl], taud=cols3["taud"][sl], f=cols3["f"][sl], tau=cols3["tau"][sl],
        alpha=cols4["alpha"][sl], beta=cols4["beta"][sl], omega=cols4["omega"][sl],
        sat_scale=scal["sat_scale"][sl], energy=scal["energy"][sl],
        nominal_energy=scal["nominal_energy"][sl], oracle_energy=scal["oracle_energy"][sl],
        fallback=fallback[sl], diverged=diverged, settle_time=cfg.settle_time,
        aim_error=None if aim is None else aim[sl],
    )


# --------------------------------------------------------------------------
# Attitude recovery and Monte-Carlo region-of-attraction runs
# --------------------------------------------------------------------------


@dataclass
class RecoveryRun:
    t: np.ndarray
    psi: np.ndarray
    ep_norm: np.ndarray


def attitude_recovery(R0, w0, params: VehicleParams, gains: GainSet, duration: float = 10.0,
                      dt: float = 1e-3, p0=None, v0=None, Rd=None,
                      psi_floor: float = 1e-12) -> RecoveryRun:
    """Ideal-wrench regulation to a fixed pose; stops early once Psi < ``psi_floor``."""
    Rd = np.eye(3) if Rd is None else np.asarray(Rd, float)
    p0 = np.zeros(3) if p0 is None else np.asarray(p0, float)
    v0 = np.zeros(3) if v0 is None else np.asarray(v0, float)
    n = int(round(duration / dt))
    psi, ep = kernels.hover_closed_loop(
        p0, v0, np.asarray(R0, float), np.asarray(w0, float), np.zeros(3), Rd,
        gains.k_p, gains.k_v, gains.k_R, gains.k_w, params.m, params.J, params.J_inv,
        params.g_vec, dt, n, psi_floor)
    t = np.arange(n + 1) * dt
    ok = np.isfinite(psi)
    return RecoveryRun(t[ok], psi[ok], ep[ok])


ROA_COLUMNS = ("index", "angle_deg", "axis_x", "axis_y", "axis_z", "psi0", "omega0",
               "omega_bound", "psi_margin", "omega_margin", "inside_roa", "converged",
               "t_converge", "final_psi", "decay_rate", "decay_r2")


def roa_monte_carlo(params: VehicleParams, gains: GainSet, samples: int = 200, seed: int = 0,
                    min_angle_deg: float = 0.0, max_angle_deg: float = 179.0,
                    omega_fraction: float = 0.9, duration: float = 10.0, dt: float = 1e-3,
                    psi_converged: float = 1e-3) -> List[dict]:
    """Sample initial attitude errors and rates, simulate, and record the outcomes.

    Angles are uniform in the given range about uniformly random axes; the
    initial body rate has a random direction and magnitude ``omega_fraction``
    times the admissible bound for that attitude error.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(samples):
        angle = np.deg2rad(rng.uniform(min_angle_deg, max_angle_deg))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wdir = rng.normal(size=3)
        wdir /= np.linalg.norm(wdir)
        R0 = exp_so3(angle * axis)
        psi0 = float(kernels.psi(R0, np.eye(3)))
        bound_sq = omega_bound_sq(psi0, gains, params)
        w0 = omega_fraction * math.sqrt(max(bound_sq, 0.0)) * wdir
        run = attitude_recovery(R0, w0, params, gains, duration=duration, dt=dt)
        below = np.nonzero(run.psi < psi_converged)[0]
        fit = fit_log_decay(run.t, run.psi)
        w2 = float(w0 @ w0)
        rows.append({
            "index": i,
            "angle_deg": float(np.rad2deg(angle)),
            "axis_x": float(axis[0]), "axis_y": float(axis[1]), "axis_z": float(axis[2]),
            "psi0": psi0,
            "omega0": math.sqrt(w2),
            "omega_bound": math.sqrt(max(bound_sq, 0.0)),
            "psi_margin": 2.0 - psi0,
            "omega_margin": bound_sq - w2,
            "inside_roa": bool(psi0 < 2.0 and w2 < bound_sq),
            "converged": bool(len(below) > 0),
            "t_converge": float(run.t[below[0]]) if len(below) else float("nan"),
            "final_psi": float(run.psi[-1]),
            "decay_rate": fit.slope,
            "decay_r2": fit.r2,
        })
    return rows
