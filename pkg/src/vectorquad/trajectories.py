"""Reference generators.

Every reference is a callable ``ref(t) -> ReferenceSample`` giving desired
position, velocity, acceleration, attitude, body angular velocity and body
angular acceleration. The tool/camera axis is body x throughout.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.transform import Rotation, RotationSpline

from . import kernels
from .so3 import as_rotation, log_so3, rot_y, rot_z

E_Z = np.array([0.0, 0.0, 1.0])


@dataclass
class ReferenceSample:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    R: np.ndarray
    w: np.ndarray
    wdot: np.ndarray


def _quintic(tau: float) -> Tuple[float, float, float]:
    """Rest-to-rest blend s(tau) on [0, 1] with its first two derivatives."""
    tau = min(max(tau, 0.0), 1.0)
    t2, t3 = tau * tau, tau * tau * tau
    s = t3 * (10.0 - 15.0 * tau + 6.0 * t2)
    ds = 30.0 * t2 * (1.0 - 2.0 * tau + t2)
    dds = 60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2)
    return s, ds, dds


def attitude_rates_fd(R_of_t, t: float, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Body rate and its derivative from central differences of an attitude curve."""

    Rm2, Rm1, R0, Rp1, Rp2 = (R_of_t(t + k * h) for k in (-2, -1, 0, 1, 2))
    w = log_so3(Rm1.T @ Rp1) / (2.0 * h)
    w_next = log_so3(R0.T @ Rp2) / (2.0 * h)
    w_prev = log_so3(Rm2.T @ R0) / (2.0 * h)
    return w, (w_next - w_prev) / (2.0 * h)


class Reference:
    duration: float = 0.0

    def __call__(self, t: float) -> ReferenceSample:
        raise NotImplementedError

    def sample(self, ts: Sequence[float]) -> List[ReferenceSample]:
        return [self(float(t)) for t in ts]


class HoverReference(Reference):
    def __init__(self, p0=(0.0, 0.0, 1.0), R0=None, duration: float = 5.0):
        self.p0 = np.asarray(p0, float).reshape(3)
        self.R0 = np.eye(3) if R0 is None else as_rotation(R0)
        self.duration = float(duration)

    def __call__(self, t: float) -> ReferenceSample:
        z = np.zeros(3)
        return ReferenceSample(self.p0.copy(), z, z.copy(), self.R0.copy(), z.copy(), z.copy())


def hover_ref(p0=(0.0, 0.0, 1.0), R0=None, duration: float = 5.0) -> HoverReference:
    return HoverReference(p0, R0, duration)


# --------------------------------------------------------------------------
# Water tower: wall ascent, dome climb, azimuthal turn, dome and wall descent
# --------------------------------------------------------------------------


@dataclass
class _Phase:
    kind: str  # "wall" (z varies), "el" or "az" (dome angles vary)
    t0: float
    T: float
    q0: float
    q1: float
    az: float
    el: float


class WaterTowerReference(Reference):
    """Surface-following path around a cylindrical tower with a hemispherical dome.

    The vehicle stays ``standoff`` metres off the surface with its tool axis
    along the inward surface normal: it climbs the wall, pitches up over the
    dome to ``apex_elevation``, swings its heading by ``turn`` around the dome
    and comes back down along the new meridian. Each leg is a rest-to-rest
    quintic, so position is C2 across legs.
    """

    def __init__(self, radius: float = 1.0, height: float = 2.0, ascent_rate: float = 0.3,
                 standoff: float = 0.3, start_height: float = 0.5,
                 apex_elevation: float = np.deg2rad(60.0), turn: float = np.deg2rad(90.0),
                 base=(0.0, 0.0, 0.0), hold: float = 1.0):
        if min(radius, height, ascent_rate, standoff) <= 0:
            raise ValueError("tower geometry and ascent rate must be positive")
        if not 0.0 <= apex_elevation < 0.5 * np.pi:
            raise ValueError("apex elevation must be in [0, 90) degrees")
        self.radius = float(radius)
        self.height = float(height)
        self.standoff = float(standoff)
        self.rho = self.radius + self.standoff
        self.base = np.asarray(base, float).reshape(3)
        self.dome_center = self.base + np.array([0.0, 0.0, self.height])
        self.hold = float(hold)

        legs = [
            ("wall", start_height, height, 0.0, 0.0),
            ("el", 0.0, apex_elevation, 0.0, 0.0),
            ("az", 0.0, turn, 0.0, apex_elevation),
            ("el", apex_elevation, 0.0, turn, 0.0),
            ("wall", height, start_height, turn, 0.0),
        ]
        self.phases: List[_Phase] = []
        t = self.hold
        for kind, q0, q1, az, el in legs:
            if kind == "wall":
                length = abs(q1 - q0)
            elif kind == "el":
                length = self.rho * abs(q1 - q0)
            else:
                length = self.rho * np.cos(el) * abs(q1 - q0)
            if length <= 0:
                continue
            T = length / ascent_rate
            self.phases.append(_Phase(kind, t, T, q0, q1, az, el))
            t += T
        self.duration = t + self.hold
        first = self.phases[0]
        self._start = _Phase(first.kind, 0.0, 1.0, first.q0, first.q0, first.az, first.el)

    def _phase_at(self, t: float) -> Tuple[_Phase, float]:
        if t < self.phases[0].t0:
            return self._start, 0.0
        for ph in self.phases:
            if t <= ph.t0 + ph.T:
                return ph, (t - ph.t0) / ph.T
        last = self.phases[-1]
        return last, 1.0

    def _coords(self, t: float):
        """(z, az, el) and their first and second time derivatives."""
        ph, tau = self._phase_at(t)
        s, ds, dds = _quintic(tau)
        dq = ph.q1 - ph.q0
        q, qd, qdd = ph.q0 + dq * s, dq * ds / ph.T, dq * dds / ph.T**2
        if tau >= 1.0 or tau <= 0.0:
            qd = qdd = 0.0
        z = (q, qd, qdd) if ph.kind == "wall" else (self.height, 0.0, 0.0)
        az = (q, qd, qdd) if ph.kind == "az" else (ph.az, 0.0, 0.0)
        el = (q, qd, qdd) if ph.kind == "el" else (ph.el, 0.0, 0.0)
        return ph.kind == "wall", z, az, el

    def __call__(self, t: float) -> ReferenceSample:
        on_wall, (z, zd, zdd), (a, ad, add), (e, ed, edd) = self._coords(float(t))
        ca, sa, ce, se = np.cos(a), np.sin(a), np.cos(e), np.sin(e)
        if on_wall:
            p = self.base + np.array([self.rho * ca, self.rho * sa, z])
            v = np.array([0.0, 0.0, zd])
            acc = np.array([0.0, 0.0, zdd])
        else:
            n = np.array([ce * ca, ce * sa, se])
            n_a = np.array([-ce * sa, ce * ca, 0.0])
            n_e = np.array([-se * ca, -se * sa, ce])
            n_aa = np.array([-ce * ca, -ce * sa, 0.0])
            n_ae = np.array([se * sa, -se * ca, 0.0])
            p = self.dome_center + self.rho * n
            v = self.rho * (n_a * ad + n_e * ed)
            acc = self.rho * (n_aa * ad**2 + 2.0 * n_ae * ad * ed - n * ed**2
                              + n_a * add + n_e * edd)
        # heading az + pi faces the tower; pitch e tilts the tool onto the dome normal
        yaw, pitch = a + np.pi, e
        R = rot_z(yaw) @ rot_y(pitch)
        sp, cp = np.sin(pitch), np.cos(pitch)
        w = np.array([-ad * sp, ed, ad * cp])
        wdot = np.array([-add * sp - ad * ed * cp, edd, add * cp - ad * ed * sp])
        return ReferenceSample(p, v, acc, R, w, wdot)

    def surface_normal(self, p) -> np.ndarray:
        """Outward unit normal of the tower surface nearest to ``p``."""
        p = np.asarray(p, float)
        if p[2] <= self.dome_center[2] + 1e-12:
            d = p - self.base
            d[2] = 0.0
        else:
            d = p - self.dome_center
        return d / np.linalg.norm(d)


def watertower_ref(radius: float = 1.0, height: float = 2.0, ascent_rate: float = 0.3,
                   standoff: float = 0.3, **kwargs) -> WaterTowerReference:
    return WaterTowerReference(radius, height, ascent_rate, standoff, **kwargs)


# --------------------------------------------------------------------------
# Pipe: splined waypoints
# --------------------------------------------------------------------------


class PipeReference(Reference):
    """C2 path through pose waypoints at a mean ``speed``.

    Positions use a cubic spline and attitudes a cubic rotation spline, both
    parameterized by cumulative chord length ``s``; a rest-to-rest quintic
    maps time onto ``s`` so the vehicle starts and stops at rest.
    """

    def __init__(self, positions, rotations, speed: float = 0.5, hold: float = 1.0):
        P = np.asarray(positions, float).reshape(-1, 3)
        if len(P) < 2:
            raise ValueError("need at least two waypoints")
        if len(rotations) != len(P):
            raise ValueError("one attitude per waypoint")
        if speed <= 0:
            raise ValueError("speed must be positive")
        chords = np.linalg.norm(np.diff(P, axis=0), axis=1)
        if np.any(chords < 1e-9):
            raise ValueError("coincident consecutive waypoints")
        Rs = [as_rotation(R) for R in rotations]
        self.knots = np.concatenate([[0.0], np.cumsum(chords)])
        self.length = float(self.knots[-1])
        self.waypoints = P
        self.rotations = Rs
        self._pos = CubicSpline(self.knots, P, bc_type="natural" if len(P) > 2 else "clamped")
        self._rot = RotationSpline(self.knots, Rotation.from_matrix(np.array(Rs)))
        self.hold = float(hold)
        self.travel_time = self.length / speed
        self.duration = self.travel_time + 2.0 * self.hold

    def _s(self, t: float):
        tau = (t - self.hold) / self.travel_time
        s, ds, dds = _quintic(tau)
        if tau <= 0.0 or tau >= 1.0:
            ds = dds = 0.0
        L, T = self.length, self.travel_time
        return L * s, L * ds / T, L * dds / T**2

    def __call__(self, t: float) -> ReferenceSample:
        s, sd, sdd = self._s(float(t))
        p = self._pos(s)
        dp, ddp = self._pos(s, 1), self._pos(s, 2)
        R = self._rot(s).as_matrix()
        w_s, a_s = self._rot(s, 1), self._rot(s, 2)
        return ReferenceSample(p, dp * sd, ddp * sd**2 + dp * sdd, R,
                               w_s * sd, a_s * sd**2 + w_s * sdd)


def pipe_ref(waypoints, speed: float = 0.5, hold: float = 1.0) -> PipeReference:
    """``waypoints`` is a sequence of ``(position, rotation_matrix)`` pairs."""
    positions = [w[0] for w in waypoints]
    rotations = [w[1] for w in waypoints]
    return PipeReference(positions, rotations, speed, hold)


# --------------------------------------------------------------------------
# Corkscrew with a look-at attitude
# --------------------------------------------------------------------------


def look_at(aim, up=E_Z, fallback_up=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Rotation with body x along ``aim`` and body z as close to ``up`` as possible."""
    x = np.asarray(aim, float)
    x = x / np.linalg.norm(x)
    z = up - np.dot(up, x) * x
    nz = np.linalg.norm(z)
    if nz < 1e-6:
        fb = np.asarray(fallback_up, float)
        z = fb - np.dot(fb, x) * x
        nz = np.linalg.norm(z)
    z = z / nz
    y = kernels.cross3(z, x)
    return np.column_stack([x, y, z])


class CorkscrewReference(Reference):
    """Helix about a vertical axis through ``center`` with the camera aimed at ``center``.

    Position derivatives are analytic; body rates come from central
    differences of the look-at attitude with step ``h``.
    """

    def __init__(self, center=(0.0, 0.0, 2.0), radius: float = 1.5, pitch_per_turn: float = 0.5,
                 turns: float = 2.0, period_per_turn: float = 12.0, h: float = 1e-3):
        if radius <= 0 or period_per_turn <= 0 or turns <= 0:
            raise ValueError("radius, turns and period must be positive")
        self.center = np.asarray(center, float).reshape(3)
        self.radius = float(radius)
        self.pitch = float(pitch_per_turn)
        self.turns = float(turns)
        self.period = float(period_per_turn)
        self.h = float(h)
        self.rate = 2.0 * np.pi / self.period
        self.climb = self.pitch / self.period
        self.z0 = -0.5 * self.pitch * self.turns
        self.duration = self.turns * self.period

    def position(self, t: float) -> np.ndarray:
        ph = self.rate * t
        return self.center + np.array([self.radius * np.cos(ph), self.radius * np.sin(ph),
                                       self.z0 + self.climb * t])

    def attitude(self, t: float) -> np.ndarray:
        return look_at(self.center - self.position(t))

    def __call__(self, t: float) -> ReferenceSample:
        t = float(t)
        ph, r, k = self.rate * t, self.radius, self.rate
        c, s = np.cos(ph), np.sin(ph)
        p = self.position(t)
        v = np.array([-r * k * s, r * k * c, self.climb])
        a = np.array([-r * k * k * c, -r * k * k * s, 0.0])
        w, wdot = attitude_rates_fd(self.attitude, t, self.h)
        return ReferenceSample(p, v, a, self.attitude(t), w, wdot)

    def aim_error(self, p, R) -> float:
        """Angle between body x and the line of sight to ``center``."""
        los = self.center - np.asarray(p, float)
        x = np.asarray(R)[:, 0]
        return float(np.arctan2(np.linalg.norm(kernels.cross3(x, los)), np.dot(x, los)))


def corkscrew_ref(center=(0.0, 0.0, 2.0), radius: float = 1.5, pitch_per_turn: float = 0.5,
                  turns: float = 2.0, period_per_turn: float = 12.0,
                  h: float = 1e-3) -> CorkscrewReference:
    return CorkscrewReference(center, radius, pitch_per_turn, turns, period_per_turn, h)


# --------------------------------------------------------------------------
# Consistency scan
# --------------------------------------------------------------------------


def consistency_scan(ref: Reference, dt: float, t0: float = 0.0,
                     t1: Optional[float] = None) -> dict:
    """Largest mismatch between central differences and the reported derivatives."""
    t1 = ref.duration if t1 is None else t1
    ts = np.arange(t0 + dt, t1 - dt, dt)
    worst = {"v": 0.0, "a": 0.0, "w": 0.0, "wdot": 0.0, "ortho": 0.0}
    prev = ref(ts[0] - dt)
    cur = ref(ts[0])
    for t in ts:
        nxt = ref(t + dt)
        worst["v"] = max(worst["v"], np.linalg.norm((nxt.p - prev.p) / (2 * dt) - cur.v))
        worst["a"] = max(worst["a"], np.linalg.norm((nxt.v - prev.v) / (2 * dt) - cur.a))
        w_fd = log_so3(prev.R.T @ nxt.R) / (2 * dt)
        worst["w"] = max(worst["w"], np.linalg.norm(w_fd - cur.w))
        worst["wdot"] = max(worst["wdot"], np.linalg.norm((nxt.w - prev.w) / (2 * dt) - cur.wdot))
        worst["ortho"] = max(worst["ortho"], np.max(np.abs(cur.R.T @ cur.R - np.eye(3))),
                             abs(np.linalg.det(cur.R) - 1.0))
        prev, cur = cur, nxt
    return {k: float(v) for k, v in worst.items()}
