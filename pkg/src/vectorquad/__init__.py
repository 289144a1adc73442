"""Simulation and control toolkit for an omnidirectional thrust-vectoring quadrotor."""
from .allocation import (allocate_wrench, allocate_with_gimbal_fallback, extract_arm_command,
                         extract_arm_commands, force_envelope, minimum_norm_oracle,
                         saturate_thrust_set, torque_envelope)
from .controller import GainSet, control_wrench, error_dynamics_rhs, in_region_of_attraction
from .sim import RigidState, SimConfig, run_scenario, step
from .vehicle import ArmCommand, ArmCommands, VehicleParams, Wrench, forward_wrench

__version__ = "0.1.0"

__all__ = [
    "ArmCommand", "ArmCommands", "GainSet", "RigidState", "SimConfig", "VehicleParams", "Wrench",
    "allocate_wrench", "allocate_with_gimbal_fallback", "control_wrench", "error_dynamics_rhs",
    "extract_arm_command", "extract_arm_commands", "force_envelope", "forward_wrench",
    "in_region_of_attraction", "minimum_norm_oracle", "run_scenario", "saturate_thrust_set",
    "step", "torque_envelope",
]
