"""Fixed-size numeric kernels for the control loop.

Everything here takes and returns float64 numpy arrays or scalars so the same
source runs under numba and under plain numpy (see ``_jit``). The public
modules wrap these with validation and friendlier types.
"""
import math

import numpy as np

from ._jit import njit

SMALL_ANGLE = 1e-6
ORTHO_TOL = 1e-9

# Allocation sign pattern, arms ordered (+x,+y), (+x,-y), (-x,-y), (-x,+y).
ROLL_SIGN = np.array([1.0, -1.0, -1.0, 1.0])
PITCH_SIGN = np.array([-1.0, -1.0, 1.0, 1.0])
X_SIGN = np.array([1.0, 1.0, -1.0, -1.0])


# --------------------------------------------------------------------------
# SO(3)
# --------------------------------------------------------------------------


@njit
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit
def hat(v):
    M = np.zeros((3, 3))
    M[0, 1] = -v[2]
    M[0, 2] = v[1]
    M[1, 0] = v[2]
    M[1, 2] = -v[0]
    M[2, 0] = -v[1]
    M[2, 1] = v[0]
    return M


@njit
def vee(M):
    """Vee of the antisymmetric part of ``M``."""
    out = np.empty(3)
    out[0] = 0.5 * (M[2, 1] - M[1, 2])
    out[1] = 0.5 * (M[0, 2] - M[2, 0])
    out[2] = 0.5 * (M[1, 0] - M[0, 1])
    return out


@njit
def exp_so3(v):
    th2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    th = math.sqrt(th2)
    if th < SMALL_ANGLE:
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / th2
    K = hat(v)
    return np.eye(3) + a * K + b * (K @ K)


@njit
def psi(R, Rd):
    return 0.5 * (3.0 - np.trace(Rd.T @ R))


@njit
def ortho_defect(R):
    return np.max(np.abs(R.T @ R - np.eye(3)))


@njit
def polar_project(R):
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, 2] = -U[:, 2]
        Q = U @ Vt
    return Q


# --------------------------------------------------------------------------
# Rigid body
# --------------------------------------------------------------------------


@njit
def body_rates(v, R, w, f, tau, m, J, Jinv, g):
    vdot = g + (R @ f) / m
    wdot = Jinv @ (tau - cross3(w, J @ w))
    return vdot, wdot


@njit
def rk4_step(p, v, R, w, f, tau, m, J, Jinv, g, dt):
    """One RK4 step with body-frame wrench held constant.

    Stage attitudes are propagated with the exponential map; the final
    attitude uses the RK4-weighted mean body rate.
    """
    h = 0.5 * dt
    a1, b1 = body_rates(v, R, w, f, tau, m, J, Jinv, g)
    v2 = v + h * a1
    w2 = w + h * b1
    R2 = R @ exp_so3(h * w)
    a2, b2 = body_rates(v2, R2, w2, f, tau, m, J, Jinv, g)
    v3 = v + h * a2
    w3 = w + h * b2
    R3 = R @ exp_so3(h * w2)
    a3, b3 = body_rates(v3, R3, w3, f, tau, m, J, Jinv, g)
    v4 = v + dt * a3
    w4 = w + dt * b3
    R4 = R @ exp_so3(dt * w3)
    a4, b4 = body_rates(v4, R4, w4, f, tau, m, J, Jinv, g)

    s = dt / 6.0
    p_new = p + s * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + s * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    w_new = w + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    w_bar = (w + 2.0 * w2 + 2.0 * w3 + w4) / 6.0
    R_new = R @ exp_so3(dt * w_bar)
    if ortho_defect(R_new) > ORTHO_TOL:
        R_new = polar_project(R_new)
    return p_new, v_new, R_new, w_new


# --------------------------------------------------------------------------
# Controller
# --------------------------------------------------------------------------


@njit
def tracking_errors(p, v, R, w, pd, vd, Rd, wd):
    ep = p - pd
    ev = v - vd
    eR = vee(Rd.T @ R)  # vee takes the antisymmetric part: 0.5 (Rd^T R - R^T Rd)
    ew = w - (R.T @ Rd) @ wd
    return ep, ev, eR, ew


@njit
def control_wrench(p, v, R, w, pd, vd, ad, Rd, wd, wdd, kp, kv, kR, kw, m, J, g):
    ep = p - pd
    ev = v - vd
    RtRd = R.T @ Rd
    eR = vee(Rd.T @ R)  # vee takes the antisymmetric part: 0.5 (Rd^T R - R^T Rd)
    wd_body = RtRd @ wd
    ew = w - wd_body
    f = R.T @ (-kp * ep - kv * ev - m * g + m * ad)
    tau = (
        -kR * eR
        - kw * ew
        + cross3(w, J @ w)
        - J @ (cross3(w, wd_body) - RtRd @ wdd)
    )
    return f, tau


@njit
def error_rates(ep, ev, eR, ew, R, Rd, kp, kv, kR, kw, m, Jinv):
    RtRd = R.T @ Rd
    dep = ev.copy()
    dev = (-kp * ep - kv * ev) / m
    deR = 0.5 * ((np.trace(RtRd) * np.eye(3) - RtRd) @ ew)
    dew = Jinv @ (-kR * eR - kw * ew)
    return dep, dev, deR, dew


# --------------------------------------------------------------------------
# Allocation and actuators
# --------------------------------------------------------------------------


@njit
def yaw_basis(lx, ly):
    r = math.sqrt(lx * lx + ly * ly)
    Y = np.zeros((4, 3))
    Y[0, 0] = -ly / r
    Y[0, 1] = lx / r
    Y[1, 0] = ly / r
    Y[1, 1] = lx / r
    Y[2, 0] = ly / r
    Y[2, 1] = -lx / r
    Y[3, 0] = -ly / r
    Y[3, 1] = -lx / r
    return Y


@njit
def _force_roll_pitch(f, tau, lx, ly):
    T = np.empty((4, 3))
    for i in range(4):
        T[i, 0] = 0.25 * f[0]
        T[i, 1] = 0.25 * f[1]
        T[i, 2] = (
            0.25 * f[2]
            + ROLL_SIGN[i] * tau[0] / (4.0 * ly)
            + PITCH_SIGN[i] * tau[1] / (4.0 * lx)
        )
    return T


@njit
def allocate(f, tau, lx, ly):
    r = math.sqrt(lx * lx + ly * ly)
    T = _force_roll_pitch(f, tau, lx, ly)
    Y = yaw_basis(lx, ly)
    c = tau[2] / (4.0 * r)
    for i in range(4):
        T[i, 0] += c * Y[i, 0]
        T[i, 1] += c * Y[i, 1]
    return T


@njit
def elevation(t):
    """-asin(t_hat_y), evaluated through atan2 for conditioning near +-pi/2."""
    return -math.atan2(t[1], math.hypot(t[0], t[2]))


@njit
def allocate_with_fallback(f, tau, lx, ly, eps):
    T = allocate(f, tau, lx, ly)
    if tau[2] == 0.0:
        return T, False
    locked = False
    for i in range(4):
        n = math.sqrt(T[i, 0] ** 2 + T[i, 1] ** 2 + T[i, 2] ** 2)
        if n > 0.0 and abs(elevation(T[i])) > 0.5 * math.pi - eps:
            locked = True
    if not locked:
        return T, False
    T = _force_roll_pitch(f, tau, lx, ly)
    d = tau[2] / (4.0 * lx)
    for i in range(4):
        T[i, 1] += X_SIGN[i] * d
    return T, True


@njit
def extract_one(t, ct):
    n = math.sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
    if n == 0.0:
        return 0.0, 0.0, 0.0
    omega = math.sqrt(n / ct)
    beta = elevation(t)
    # asin(t_hat_x / cos(beta)), with cos(beta) = hypot(t_x, t_z) / |t|
    a0 = math.atan2(t[0], abs(t[2]))
    if t[2] < 0.0 and t[0] >= 0.0:
        alpha = math.pi - a0
    elif t[2] < 0.0 and t[0] < 0.0:
        alpha = -math.pi - a0
    else:
        alpha = a0
    return alpha, beta, omega


@njit
def extract(T, ct):
    alpha = np.empty(4)
    beta = np.empty(4)
    omega = np.empty(4)
    for i in range(4):
        alpha[i], beta[i], omega[i] = extract_one(T[i], ct)
    return alpha, beta, omega


@njit
def thrust_vectors(alpha, beta, omega, ct):
    T = np.empty((4, 3))
    for i in range(4):
        mag = ct * omega[i] * omega[i]
        cb = math.cos(beta[i])
        T[i, 0] = mag * math.sin(alpha[i]) * cb
        T[i, 1] = -mag * math.sin(beta[i])
        T[i, 2] = mag * math.cos(alpha[i]) * cb
    return T


@njit
def wrench_of_thrusts(T, L):
    f = np.zeros(3)
    tau = np.zeros(3)
    for i in range(4):
        f += T[i]
        tau += cross3(L[i], T[i])
    return f, tau


@njit
def max_row_norm(T):
    mx = 0.0
    for i in range(T.shape[0]):
        n = math.sqrt(T[i, 0] ** 2 + T[i, 1] ** 2 + T[i, 2] ** 2)
        if n > mx:
            mx = n
    return mx


@njit
def saturate(T, tmax):
    mx = 0.0
    for i in range(4):
        n = math.sqrt(T[i, 0] ** 2 + T[i, 1] ** 2 + T[i, 2] ** 2)
        if n > mx:
            mx = n
    if mx <= tmax:
        return T.copy(), 1.0
    s = tmax / mx
    return T * s, s


@njit
def unwrap_towards(target, current):
    two_pi = 2.0 * math.pi
    return target + two_pi * np.round((current - target) / two_pi)


@njit
def actuator_update(alpha, beta, omega, alpha_t, beta_t, omega_t,
                    servo_tau, servo_rate, rotor_tau, omega_max, dt):
    """First-order lag with symmetric rate limit on the servos, lag on rotors."""
    ks = 1.0 - math.exp(-dt / servo_tau) if servo_tau > 0.0 else 1.0
    kr = 1.0 - math.exp(-dt / rotor_tau) if rotor_tau > 0.0 else 1.0
    lim = servo_rate * dt
    da = np.minimum(np.maximum(ks * (alpha_t - alpha), -lim), lim)
    db = np.minimum(np.maximum(ks * (beta_t - beta), -lim), lim)
    om = omega + kr * (omega_t - omega)
    om = np.minimum(np.maximum(om, 0.0), omega_max)
    return alpha + da, beta + db, om


# --------------------------------------------------------------------------
# Whole closed loop for a constant pose reference (Monte-Carlo workhorse)
# --------------------------------------------------------------------------


@njit
def hover_closed_loop(p0, v0, R0, w0, pd, Rd, kp, kv, kR, kw, m, J, Jinv, g,
                      dt, n_steps, psi_floor):
    """Ideal-wrench closed loop about a fixed pose.

    Returns the attitude-error and position-error histories; the run stops
    early once Psi drops below ``psi_floor`` (remaining entries are NaN).
    """
    zero = np.zeros(3)
    psi_hist = np.full(n_steps + 1, np.nan)
    ep_hist = np.full(n_steps + 1, np.nan)
    p = p0.copy()
    v = v0.copy()
    R = R0.copy()
    w = w0.copy()
    for k in range(n_steps + 1):
        ps = psi(R, Rd)
        psi_hist[k] = ps
        ep_hist[k] = math.sqrt(np.sum((p - pd) ** 2))
        if ps < psi_floor or k == n_steps:
            break
        f, tau = control_wrench(p, v, R, w, pd, zero, zero, Rd, zero, zero,
                                kp, kv, kR, kw, m, J, g)
        p, v, R, w = rk4_step(p, v, R, w, f, tau, m, J, Jinv, g, dt)
    return psi_hist, ep_hist
