"""Vehicle parameters and the forward actuator model.

Each arm carries a co-axial rotor pair (equal speeds, drag torques cancel)
on a two-servo gimbal: ``alpha`` tilts about the body j-axis, then ``beta``
about the propeller i-axis. The arm thrust is ``c_t * omega**2`` along the
tilted propeller k-axis, and the body wrench is the sum of arm forces and
their lever-arm moments.
"""
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import kernels
from .so3 import rot_x, rot_y

GRAVITY = (0.0, 0.0, -9.81)


@dataclass(frozen=True, eq=False)
class VehicleParams:
    """Physical parameters. ``r`` and the arm positions are derived."""

    m: float = 4.0
    J: np.ndarray = field(default_factory=lambda: np.diag([0.08, 0.08, 0.12]))
    c_t: float = 1e-5
    l_x: float = 0.25
    l_y: float = 0.25
    l_z: float = 0.0
    t_max: float = 20.0
    omega_max: Optional[float] = None
    servo_rate_max: Optional[float] = 10.0
    g_vec: np.ndarray = field(default_factory=lambda: np.array(GRAVITY))

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        g = np.array(self.g_vec, dtype=float)
        if J.shape != (3, 3) or g.shape != (3,):
            raise ValueError("J must be 3x3 (or a diagonal 3-vector) and g_vec a 3-vector")
        if not self.m > 0:
            raise ValueError("mass must be positive")
        if not np.allclose(J, J.T, atol=1e-12) or np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValueError("inertia must be symmetric positive definite")
        if not (self.c_t > 0 and self.l_x > 0 and self.l_y > 0 and self.t_max > 0):
            raise ValueError("c_t, l_x, l_y and t_max must be positive")
        if self.omega_max is not None and not self.omega_max > 0:
            raise ValueError("omega_max must be positive")
        if self.servo_rate_max is not None and not self.servo_rate_max > 0:
            raise ValueError("servo_rate_max must be positive")
        J.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "g_vec", g)
        object.__setattr__(self, "m", float(self.m))

    @property
    def r(self) -> float:
        return float(np.hypot(self.l_x, self.l_y))

    @property
    def arm_positions(self) -> np.ndarray:
        lx, ly, lz = self.l_x, self.l_y, self.l_z
        return np.array([
            [lx, ly, lz],
            [lx, -ly, lz],
            [-lx, -ly, lz],
            [-lx, ly, lz],
        ])

    @property
    def J_inv(self) -> np.ndarray:
        return np.linalg.inv(self.J)

    @property
    def rotor_speed_limit(self) -> float:
        if self.omega_max is not None:
            return float(self.omega_max)
        return float(np.sqrt(self.t_max / self.c_t))

    @property
    def hover_thrust(self) -> float:
        return self.m * float(np.linalg.norm(self.g_vec))


@dataclass(frozen=True)
class ArmCommand:
    alpha: float
    beta: float
    omega: float


@dataclass
class ArmCommands:
    """Commands for all four arms as parallel arrays."""

    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(4)
        self.beta = np.asarray(self.beta, dtype=float).reshape(4)
        self.omega = np.asarray(self.omega, dtype=float).reshape(4)

    @classmethod
    def from_list(cls, cmds) -> "ArmCommands":
        cmds = list(cmds)
        if len(cmds) != 4:
            raise ValueError("need exactly four arm commands")
        return cls([c.alpha for c in cmds], [c.beta for c in cmds], [c.omega for c in cmds])

    def __getitem__(self, i: int) -> ArmCommand:
        return ArmCommand(float(self.alpha[i]), float(self.beta[i]), float(self.omega[i]))

    def __iter__(self) -> Iterator[ArmCommand]:
        return (self[i] for i in range(4))

    def __len__(self) -> int:
        return 4


@dataclass
class Wrench:
    """Body-frame force (N) and torque (N m)."""

    f: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float).reshape(3)
        self.tau = np.asarray(self.tau, dtype=float).reshape(3)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.f, self.tau])

    @classmethod
    def from_vector(cls, w) -> "Wrench":
        w = np.asarray(w, dtype=float)
        return cls(w[:3], w[3:])

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.f + other.f, self.tau + other.tau)

    def __mul__(self, s: float) -> "Wrench":
        return Wrench(self.f * s, self.tau * s)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_vector()))


def propeller_rotation(alpha: float, beta: float) -> np.ndarray:
    """Body-to-propeller rotation: about j by ``alpha``, then about the propeller i by ``beta``."""
    return rot_y(alpha) @ rot_x(beta)


def thrust_direction(alpha: float, beta: float) -> np.ndarray:
    return np.array([
        np.sin(alpha) * np.cos(beta),
        -np.sin(beta),
        np.cos(alpha) * np.cos(beta),
    ])


def arm_thrust_vector(cmd: ArmCommand, params: VehicleParams) -> np.ndarray:
    return params.c_t * cmd.omega**2 * thrust_direction(cmd.alpha, cmd.beta)


def thrust_vectors(cmds: ArmCommands, params: VehicleParams) -> np.ndarray:
    """Per-arm thrust vectors, shape (4, 3)."""
    return kernels.thrust_vectors(cmds.alpha, cmds.beta, cmds.omega, params.c_t)


def wrench_from_thrusts(T, params: VehicleParams) -> Wrench:
    f, tau = kernels.wrench_of_thrusts(np.asarray(T, dtype=float), params.arm_positions)
    return Wrench(f, tau)


def forward_wrench(cmds: ArmCommands, params: VehicleParams) -> Wrench:
    if not isinstance(cmds, ArmCommands):
        cmds = ArmCommands.from_list(cmds)
    return wrench_from_thrusts(thrust_vectors(cmds, params), params)


def wrench_map_matrix(alphas, betas, params: VehicleParams) -> np.ndarray:
    """The 6x4 map F with ``[f; tau] = c_t * F @ omega**2``."""
    alphas = np.asarray(alphas, dtype=float).reshape(4)
    betas = np.asarray(betas, dtype=float).reshape(4)
    L = params.arm_positions
    F = np.empty((6, 4))
    for i in range(4):
        d = thrust_direction(alphas[i], betas[i])
        F[:3, i] = d
        F[3:, i] = np.cross(L[i], d)
    return F
