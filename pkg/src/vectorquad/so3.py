"""Rotation-group helpers: hat/vee, exponential and log maps, ZXY Euler angles,
the attitude error function and quaternion conversion."""
from typing import NamedTuple

import numpy as np

from . import kernels

ANTISYM_TOL = 1e-9
ROTATION_TOL = 1e-9


def _vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def as_rotation(R, tol: float = ROTATION_TOL) -> np.ndarray:
    """Return ``R`` as a float array after checking it lies on SO(3)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("rotation has non-finite entries")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation")
    return R


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    try:
        as_rotation(R, tol)
    except ValueError:
        return False
    return True


def project_to_so3(M) -> np.ndarray:
    """Nearest rotation in the Frobenius sense (polar decomposition)."""
    return kernels.polar_project(np.asarray(M, dtype=float))


def hat(v) -> np.ndarray:
    """Skew matrix with ``hat(v) @ w == cross(v, w)``."""
    return kernels.hat(_vec3(v))


def vee(M) -> np.ndarray:
    """Inverse of :func:`hat`.

    The input is antisymmetrized before extraction; matrices whose symmetric
    part exceeds ``1e-9`` are rejected.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    if np.max(np.abs(M + M.T)) > 2.0 * ANTISYM_TOL:
        raise ValueError("matrix is not antisymmetric")
    return kernels.vee(M)


def exp_so3(v) -> np.ndarray:
    """Rodrigues formula for a rotation vector in radians."""
    return kernels.exp_so3(_vec3(v))


def log_so3(R) -> np.ndarray:
    """Rotation vector of ``R`` (angle in [0, pi])."""
    R = np.asarray(R, dtype=float)
    c = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = np.arccos(c)
    w = kernels.vee(R)  # sin(theta) * axis
    s = np.linalg.norm(w)
    if theta < 1e-6:
        return w * (1.0 + theta * theta / 6.0)
    if np.pi - theta > 1e-4:
        return w * (theta / s)
    # near pi: axis from the symmetric part, sign from the antisymmetric part
    B = 0.5 * (R + np.eye(3))
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / np.sqrt(max(B[k, k], 1e-300))
    axis /= np.linalg.norm(axis)
    if np.dot(axis, w) < 0.0:
        axis = -axis
    return axis * theta


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class EulerZXY(NamedTuple):
    yaw: float
    roll: float
    pitch: float
    degenerate: bool


def euler_zxy_to_rotation(yaw: float, roll: float, pitch: float) -> np.ndarray:
    """``Rz(yaw) @ Rx(roll) @ Ry(pitch)``."""
    if not np.all(np.isfinite([yaw, roll, pitch])):
        raise ValueError("Euler angles must be finite")
    return rot_z(yaw) @ rot_x(roll) @ rot_y(pitch)


def rotation_to_euler_zxy(R, tol: float = 1e-9) -> EulerZXY:
    """Recover (yaw, roll, pitch) with roll in [-pi/2, pi/2].

    At roll = +-pi/2 yaw and pitch are not separable; the result then carries
    ``degenerate=True`` and puts the whole heading into yaw.
    """
    R = np.asarray(R, dtype=float)
    roll = float(np.arcsin(np.clip(R[2, 1], -1.0, 1.0)))
    cr = np.hypot(R[2, 0], R[2, 2])
    if cr < tol:
        yaw = float(np.arctan2(R[1, 0], R[0, 0]))
        return EulerZXY(yaw, roll, 0.0, True)
    roll = float(np.arctan2(R[2, 1], cr))
    yaw = float(np.arctan2(-R[0, 1], R[1, 1]))
    pitch = float(np.arctan2(-R[2, 0], R[2, 2]))
    return EulerZXY(yaw, roll, pitch, False)


def psi_error(R, Rd) -> float:
    """Attitude error ``0.5 * tr(I - Rd^T R)``, in [0, 2]."""
    return float(kernels.psi(np.asarray(R, dtype=float), np.asarray(Rd, dtype=float)))


def rotation_to_quaternion(R) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                      (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                      0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    return q if q[0] >= 0.0 else -q


def quaternion_to_rotation(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def continuous_quaternions(Rs) -> np.ndarray:
    """Quaternions for a rotation sequence, sign-flipped to stay in one hemisphere."""
    Q = np.array([rotation_to_quaternion(R) for R in Rs]).reshape(-1, 4)
    for k in range(1, len(Q)):
        if np.dot(Q[k], Q[k - 1]) < 0.0:
            Q[k] = -Q[k]
    return Q


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation (Haar measure) from a unit quaternion."""
    q = rng.normal(size=4)
    return quaternion_to_rotation(q / np.linalg.norm(q))
