import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vectorquad import allocation as al
from vectorquad import kernels
from vectorquad.vehicle import ArmCommands, VehicleParams, forward_wrench, wrench_from_thrusts

P = VehicleParams()
wrench6 = arrays(np.float64, 6, elements=st.floats(-30.0, 30.0))
vec3 = arrays(np.float64, 3, elements=st.floats(-20.0, 20.0))


def brute_wrench(T, p=P):
    T = np.asarray(T)
    f = T.sum(axis=0)
    tau = sum(np.cross(p.arm_positions[i], T[i]) for i in range(4))
    return np.concatenate([f, tau])


def test_equal_split():
    T = al.allocate_wrench([0, 0, 40, 0, 0, 0], P)
    np.testing.assert_allclose(T, np.tile([0, 0, 10.0], (4, 1)), atol=1e-15)


def test_roll_example():
    T = al.allocate_wrench([0, 0, 0, 2, 0, 0], P)
    np.testing.assert_allclose(T[[0, 3]], [[0, 0, 2]] * 2, atol=1e-14)
    np.testing.assert_allclose(T[[1, 2]], [[0, 0, -2]] * 2, atol=1e-14)
    np.testing.assert_allclose(brute_wrench(T), [0, 0, 0, 2, 0, 0], atol=1e-14)


def test_yaw_example():
    T = al.allocate_wrench([0, 0, 0, 0, 0, 4], P)
    np.testing.assert_allclose(np.linalg.norm(T, axis=1), 4 / (4 * P.r), atol=1e-12)
    np.testing.assert_allclose(T / np.linalg.norm(T, axis=1)[:, None], al.yaw_basis(P), atol=1e-12)
    np.testing.assert_allclose(brute_wrench(T), [0, 0, 0, 0, 0, 4], atol=1e-12)


def test_yaw_basis_invariants():
    Y = al.yaw_basis(P)
    np.testing.assert_allclose(np.linalg.norm(Y, axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(Y[0] + Y[2], 0.0, atol=1e-15)
    np.testing.assert_allclose(Y[1] + Y[3], 0.0, atol=1e-15)
    assert np.all(Y[:, 2] == 0.0)
    for l, y in zip(P.arm_positions, Y):
        m = np.cross(l, y)
        np.testing.assert_allclose(m, [0, 0, P.r], atol=1e-15)


@given(wrench6)
def test_allocation_matches_oracle(w):
    T = al.allocate_wrench(w, P)
    np.testing.assert_allclose(T, al.minimum_norm_oracle(w, P), atol=1e-9 * (1 + np.linalg.norm(w)))
    np.testing.assert_allclose(brute_wrench(T), w, atol=1e-12 * (1 + np.linalg.norm(w)))


@given(wrench6, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_allocation_matches_oracle_other_geometry(w, lx, ly):
    p = VehicleParams(l_x=lx, l_y=ly)
    np.testing.assert_allclose(al.allocate_wrench(w, p), al.minimum_norm_oracle(w, p),
                               atol=1e-9 * (1 + np.linalg.norm(w)))


def test_oracle_zero_and_rank_deficiency():
    np.testing.assert_array_equal(al.minimum_norm_oracle(np.zeros(6), P), np.zeros((4, 3)))
    # l_x -> 0 collapses the arms onto the y axis: no pitch authority
    M = al.thrust_map_matrix(P)
    assert np.linalg.matrix_rank(M) == 6
    bad = VehicleParams(l_x=1e-300)
    with pytest.raises(np.linalg.LinAlgError):
        al.minimum_norm_oracle(np.ones(6), bad)


def test_energy_is_minimal_against_nullspace_perturbations(rng):
    M = al.thrust_map_matrix(P)
    # nullspace basis from the SVD
    _, _, Vt = np.linalg.svd(M)
    Nb = Vt[6:].T
    for _ in range(1000):
        w = rng.uniform(-20, 20, 6)
        T = al.allocate_wrench(w, P)
        d = (Nb @ rng.normal(size=Nb.shape[1])).reshape(4, 3) * rng.uniform(1e-3, 5)
        np.testing.assert_allclose(brute_wrench(d), 0.0, atol=1e-12)
        assert al.thrust_energy(T + d) >= al.thrust_energy(T) - 1e-12


def test_closed_form_requires_planar_layout():
    with pytest.raises(ValueError):
        al.allocate_wrench(np.ones(6), VehicleParams(l_z=0.05))


def test_nonfinite_wrench_rejected():
    with pytest.raises(ValueError):
        al.allocate_wrench([np.nan, 0, 0, 0, 0, 0], P)


@pytest.mark.parametrize("t, alpha, branch", [
    ((0, 0, 10), 0.0, 3),
    ((0, 0, -10), np.pi, 1),
    ((-7.07, 0, -7.07), -3 * np.pi / 4, 2),
    ((7.07, 0, -7.07), 3 * np.pi / 4, 1),
    ((7.07, 0, 7.07), np.pi / 4, 3),
])
def test_extraction_branches(t, alpha, branch):
    cmd = al.extract_arm_command(t, P)
    assert al.alpha_branch(t) == branch
    assert abs(cmd.alpha - alpha) < 1e-12
    assert abs(cmd.beta) < 1e-15
    back = kernels.thrust_vectors(np.array([cmd.alpha] * 4), np.array([cmd.beta] * 4),
                                  np.array([cmd.omega] * 4), P.c_t)[0]
    np.testing.assert_allclose(back, t, rtol=1e-12, atol=1e-12)


def test_extraction_hover_example():
    cmd = al.extract_arm_command((0, 0, 10), P)
    assert (cmd.alpha, cmd.beta) == (0.0, 0.0) and abs(cmd.omega - 1000.0) < 1e-9


def test_zero_thrust_convention():
    cmd = al.extract_arm_command((0, 0, 0), P)
    assert (cmd.alpha, cmd.beta, cmd.omega) == (0.0, 0.0, 0.0)


def _asin_reference(t):
    # textbook inverse-sine form, used only as an oracle away from its singularities
    n = np.linalg.norm(t)
    u = t / n
    beta = -np.arcsin(u[1])
    a0 = np.arcsin(u[0] / np.cos(beta))
    if u[2] < 0 and u[0] >= 0:
        return np.pi - a0, beta
    if u[2] < 0 and u[0] < 0:
        return -np.pi - a0, beta
    return a0, beta


# physical thrusts only: below ~1e-150 N the c_t * Omega^2 product underflows
thrust3 = vec3.filter(lambda v: not 0.0 < np.max(np.abs(v)) < 1e-6)


@given(thrust3)
def test_extraction_roundtrip_and_ranges(t):
    n = np.linalg.norm(t)
    cmd = al.extract_arm_command(t, P)
    assert -np.pi / 2 <= cmd.beta <= np.pi / 2
    assert -np.pi <= cmd.alpha <= np.pi
    back = P.c_t * cmd.omega**2 * np.array([np.sin(cmd.alpha) * np.cos(cmd.beta), -np.sin(cmd.beta),
                                            np.cos(cmd.alpha) * np.cos(cmd.beta)])
    np.testing.assert_allclose(back, t, atol=1e-9 * n)
    if n > 1e-3 and abs(t[1]) < 0.99 * n and abs(t[2]) > 1e-6 * n:
        a_ref, b_ref = _asin_reference(t)
        assert abs(cmd.beta - b_ref) < 1e-6
        assert abs(cmd.alpha - a_ref) < 1e-6


def test_gimbal_fallback_example():
    w = np.array([0, 32, 0, 0, 0, 1.0])
    T, used = al.allocate_with_gimbal_fallback(w, P)
    assert used
    np.testing.assert_allclose(T[:2], [[0, 9, 0]] * 2, atol=1e-12)
    np.testing.assert_allclose(T[2:], [[0, 7, 0]] * 2, atol=1e-12)
    np.testing.assert_allclose(brute_wrench(T), w, atol=1e-12)
    assert np.all(al.gimbal_locked(al.allocate_wrench(w, P)))


def test_gimbal_fallback_inactive_cases(rng):
    w = np.array([0, 32, 0, 0, 0, 0.0])
    T, used = al.allocate_with_gimbal_fallback(w, P)
    assert not used
    np.testing.assert_array_equal(T, al.allocate_wrench(w, P))
    for _ in range(200):
        w = rng.uniform(-5, 5, 6)
        w[2] = 40.0
        T, used = al.allocate_with_gimbal_fallback(w, P)
        assert not used
        np.testing.assert_array_equal(T, al.allocate_wrench(w, P))


@given(st.floats(-40, 40).filter(lambda x: abs(x) > 5), st.floats(-3, 3), st.floats(-2, 2),
       st.floats(-2, 2), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_gimbal_fallback_reproduces_wrench(fy, tz, tx, ty, fx, fz):
    w = np.array([fx, fy, fz, tx, ty, tz])
    T, used = al.allocate_with_gimbal_fallback(w, P)
    np.testing.assert_allclose(brute_wrench(T), w, atol=1e-9 * (1 + np.linalg.norm(w)))


def test_saturation():
    T = np.tile([0, 0, 10.0], (4, 1))
    Ts, rep = al.saturate_thrust_set(T, P)
    np.testing.assert_array_equal(Ts, T)
    assert rep.scale == 1.0 and not rep.saturated
    T2 = T.copy()
    T2[0] = [0, 0, 40.0]
    Ts, rep = al.saturate_thrust_set(T2, P)
    assert rep.scale == 0.5 and rep.saturated and rep.max_norm == 40.0
    np.testing.assert_allclose(Ts, 0.5 * T2)
    np.testing.assert_allclose(brute_wrench(Ts), 0.5 * brute_wrench(T2))


def test_fibonacci_directions():
    D = al.fibonacci_directions(1000)
    np.testing.assert_allclose(np.linalg.norm(D, axis=1), 1.0, atol=1e-15)
    assert abs(D.mean(axis=0)).max() < 1e-2
    assert al.fibonacci_directions(1).shape == (1, 3)
    with pytest.raises(ValueError):
        al.fibonacci_directions(0)


def test_force_envelope_is_isotropic():
    env = al.force_envelope(P, 300)
    np.testing.assert_allclose(env.magnitudes, 80.0, atol=1e-9)
    env5 = al.force_envelope(VehicleParams(t_max=5.0), 50)
    np.testing.assert_allclose(env5.magnitudes, 20.0, atol=1e-9)


def _torque_closed_form(d, p=P):
    # max over arms of ||t_i|| for a unit torque in direction d, then invert
    T = al.minimum_norm_oracle(np.concatenate([np.zeros(3), d]), p)
    return p.t_max / np.max(np.linalg.norm(T, axis=1))


def test_torque_envelope_axes_and_closed_form():
    z = al._bisect_envelope(np.array([[0, 0, 1.0]]), P, True, 1e-12)[0]
    x = al._bisect_envelope(np.array([[1.0, 0, 0]]), P, True, 1e-12)[0]
    assert abs(z - 4 * P.r * 20) < 1e-9 * z
    assert abs(x - 4 * 0.25 * 20) < 1e-9 * x
    env = al.torque_envelope(P, 200)
    for d, s in zip(env.directions[::10], env.magnitudes[::10]):
        assert abs(s - _torque_closed_form(d)) < 1e-9 * s
    s = env.summary()
    assert 0.4 <= s["ratio"] <= 0.6


def test_envelope_document_shape():
    doc = al.envelope_document(al.force_envelope(P, 1), al.torque_envelope(P, 1), P)
    assert len(doc["force"]["entries"]) == 1
    e = doc["force"]["entries"][0]
    assert set(e) == {"direction", "max_magnitude"} and len(e["direction"]) == 3
    assert set(doc["torque"]["summary"]) == {"min", "max", "ratio"}


def test_extract_commands_roundtrip_through_vehicle_model(rng):
    for _ in range(200):
        w = rng.uniform(-15, 15, 6)
        T = al.allocate_wrench(w, P)
        cmds = al.extract_arm_commands(T, P)
        assert isinstance(cmds, ArmCommands)
        np.testing.assert_allclose(forward_wrench(cmds, P).as_vector(), w, atol=1e-9 * (1 + np.linalg.norm(w)))
        np.testing.assert_allclose(wrench_from_thrusts(T, P).as_vector(), w, atol=1e-12 * (1 + np.linalg.norm(w)))
