"""Simulator for a three-dot-per-qubit charge architecture and its
geometric controlled-phase gate."""

from .analysis import FidelityReport, average_gate_fidelity, bloch_trajectory, solid_angle
from .cphase import ConfigurationError, GateParams, build_cphase_timeline, select_gate_params
from .experiments import ExperimentConfig, ExperimentReport
from .model import DeviceModel, Geometry3D, coulomb_energy, ideal_device
from .propagate import propagate_timeline
from .schedule import Channel, ControlTimeline, NoiseSpec, Pulse

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ConfigurationError",
    "ControlTimeline",
    "DeviceModel",
    "ExperimentConfig",
    "ExperimentReport",
    "FidelityReport",
    "GateParams",
    "Geometry3D",
    "NoiseSpec",
    "Pulse",
    "average_gate_fidelity",
    "bloch_trajectory",
    "build_cphase_timeline",
    "coulomb_energy",
    "ideal_device",
    "propagate_timeline",
    "select_gate_params",
    "solid_angle",
]
