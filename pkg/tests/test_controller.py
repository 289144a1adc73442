import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vectorquad.controller import (GainSet, TrackingError, compute_errors, control_wrench,
                                   error_dynamics_rhs, fit_log_decay, in_region_of_attraction,
                                   lambda_max, omega_bound_sq)
from vectorquad.sim import RigidState, attitude_recovery
from vectorquad.so3 import exp_so3, hat, random_rotation, rot_x, rot_z, vee
from vectorquad.trajectories import ReferenceSample
from vectorquad.vehicle import VehicleParams

P = VehicleParams()
G = GainSet.default(P)
Z = np.zeros(3)


def ref_at(p=Z, v=Z, a=Z, R=None, w=Z, wdot=Z):
    return ReferenceSample(np.asarray(p, float), np.asarray(v, float), np.asarray(a, float),
                           np.eye(3) if R is None else R, np.asarray(w, float), np.asarray(wdot, float))


def random_case(rng):
    state = RigidState(rng.normal(size=3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3))
    ref = ref_at(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3), random_rotation(rng),
                 rng.normal(size=3), rng.normal(size=3))
    return state, ref


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        GainSet(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        GainSet(1.0, 1.0, float("nan"), 1.0)
    g = GainSet.default(P)
    assert (g.k_p, g.k_v, g.k_R, g.k_w) == (64.0, pytest.approx(22.4), 8.81, 2.54)


def test_errors_zero_on_reference(rng):
    _, ref = random_case(rng)
    e = compute_errors(RigidState(ref.p, ref.v, ref.R, ref.w), ref)
    np.testing.assert_allclose(e.as_vector(), 0.0, atol=1e-12)


def test_attitude_error_quarter_turn():
    e = compute_errors(RigidState(Z, Z, rot_z(np.pi / 2), Z), ref_at())
    np.testing.assert_allclose(e.e_R, [0, 0, 1], atol=1e-15)


def test_errors_match_definitions(rng):
    for _ in range(50):
        s, r = random_case(rng)
        e = compute_errors(s, r)
        np.testing.assert_allclose(e.e_p, s.p - r.p)
        np.testing.assert_allclose(e.e_v, s.v - r.v)
        np.testing.assert_allclose(e.e_R, 0.5 * vee(r.R.T @ s.R - s.R.T @ r.R), atol=1e-14)
        np.testing.assert_allclose(e.e_w, s.w - s.R.T @ r.R @ r.w, atol=1e-14)


def test_hover_wrench():
    w = control_wrench(RigidState(Z, Z, np.eye(3), Z), ref_at(), G, P)
    np.testing.assert_allclose(w.f, [0, 0, 39.24], atol=1e-12)
    np.testing.assert_array_equal(w.tau, 0.0)


def test_position_offset_wrench():
    g = GainSet(16.0, 1.0, 1.0, 1.0)
    w = control_wrench(RigidState([1, 0, 0], Z, np.eye(3), Z), ref_at(), g, P)
    np.testing.assert_allclose(w.f, [-16, 0, 39.24], atol=1e-12)


def test_spinning_hover_feedforward_only():
    wdd = np.array([0.3, -0.2, 0.5])
    w = control_wrench(RigidState(Z, Z, np.eye(3), [0, 0, 1]), ref_at(w=[0, 0, 1], wdot=wdd), G, P)
    np.testing.assert_allclose(w.tau, P.J @ wdd, atol=1e-14)


def closed_loop_rates(state, ref, gains, params):
    """Error rates obtained by pushing the control wrench through the rigid-body equations."""
    wr = control_wrench(state, ref, gains, params)
    R, w, Rd = state.R, state.w, ref.R
    vdot = params.g_vec + R @ wr.f / params.m
    wdot = np.linalg.solve(params.J, -np.cross(w, params.J @ w) + wr.tau)
    Rdot, Rd_dot = R @ hat(w), Rd @ hat(ref.w)
    e_R_dot = 0.5 * vee(Rd_dot.T @ R + Rd.T @ Rdot - Rdot.T @ Rd - R.T @ Rd_dot)
    # e_w = w - R^T Rd wd
    e_w_dot = wdot - (Rdot.T @ Rd @ ref.w + R.T @ Rd_dot @ ref.w + R.T @ Rd @ ref.wdot)
    return np.concatenate([state.v - ref.v, vdot - ref.a, e_R_dot, e_w_dot])


def test_control_law_yields_closed_loop_rhs(rng):
    for _ in range(200):
        s, r = random_case(rng)
        err = compute_errors(s, r)
        rhs = error_dynamics_rhs(err, s, r, G, P).as_vector()
        np.testing.assert_allclose(closed_loop_rates(s, r, G, P), rhs, atol=1e-10)


def test_error_rhs_structure(rng):
    s, r = random_case(rng)
    zero = TrackingError(Z, Z, Z, Z)
    np.testing.assert_array_equal(error_dynamics_rhs(zero, s, r, G, P).as_vector(), 0.0)
    e = TrackingError(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3), Z)
    np.testing.assert_array_equal(error_dynamics_rhs(e, s, r, G, P).e_R, 0.0)


def test_roa_examples():
    s = RigidState(Z, Z, np.eye(3), Z)
    c = in_region_of_attraction(s, ref_at(), G, P)
    assert c.inside and c.psi_margin == 2.0
    c = in_region_of_attraction(RigidState(Z, Z, rot_x(np.pi), Z), ref_at(), G, P)
    assert not c.inside
    # psi = 1.9, k_R = 10, lambda_max = 0.12
    g = GainSet(1.0, 1.0, 10.0, 1.0)
    ang = np.arccos(1.0 - 1.9)
    R = exp_so3([0, 0, ang])
    assert abs(np.sqrt(omega_bound_sq(1.9, g, P)) - 4.0825) < 1e-4
    c = in_region_of_attraction(RigidState(Z, Z, R, [4.0, 0, 0]), ref_at(), g, P)
    assert abs(c.psi - 1.9) < 1e-12 and c.inside
    c = in_region_of_attraction(RigidState(Z, Z, R, [4.1, 0, 0]), ref_at(), g, P)
    assert not c.inside


def test_lambda_max():
    assert lambda_max(P.J) == pytest.approx(0.12)
    J = np.array([[2.0, 1.0, 0], [1.0, 2.0, 0], [0, 0, 1.0]])
    assert lambda_max(J) == pytest.approx(3.0)


@given(st.floats(-20.0, -0.1), st.floats(0.1, 10.0))
def test_decay_fit_recovers_rate(rate, amp):
    t = np.arange(0.0, 30.0, 1e-2)
    psi = amp * np.exp(rate * t)
    fit = fit_log_decay(t, psi)
    assert fit.r2 > 0.999999
    assert abs(fit.slope - rate) < 1e-6 * abs(rate)


def test_decay_fit_edge_cases():
    t = np.linspace(0, 1, 10)
    assert np.isnan(fit_log_decay(t, np.zeros(10)).slope)
    assert fit_log_decay(t, np.ones(10)).r2 == 0.0


def test_translation_decoupled_from_attitude(rng):
    # exact in continuous time; the zero-order-held body force leaks O(dt) coupling
    p0, v0 = np.array([0.3, -0.2, 0.1]), np.array([0.1, 0.0, -0.2])
    axes = [a / np.linalg.norm(a) for a in rng.normal(size=(2, 3))]
    gaps = []
    for dt in (2e-3, 1e-3, 5e-4):
        runs = [attitude_recovery(exp_so3(ang * ax), Z, P, G, duration=3.0, dt=dt, p0=p0, v0=v0,
                                  psi_floor=0.0).ep_norm
                for ang, ax in zip((0.0, 1.0, 2.5), [axes[0]] + axes)]
        gaps.append(max(np.max(np.abs(r - runs[0])) for r in runs[1:]))
        assert gaps[-1] < dt * np.linalg.norm(p0)
    assert gaps[1] < 0.6 * gaps[0] and gaps[2] < 0.6 * gaps[1]
