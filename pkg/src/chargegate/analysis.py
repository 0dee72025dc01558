"""Gate fidelity, Bloch trajectories and geometric-phase diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .cphase import target_unitary
from .model import QUBIT_INDICES, basis_index
from .propagate import PropagationResult, project_qubit_subspace

# (initial state, upper level, lower level) of the step-2 two-level subsystems
SUBSYSTEMS = {"S1": ("21", "21", "31"), "S2": ("23", "23", "33")}


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    error: float
    leakage: float


def average_gate_fidelity(u_full: np.ndarray, target: np.ndarray | None = None) -> FidelityReport:
    """Haar-averaged gate fidelity of ``u_full`` restricted to the qubit subspace.

    Uses ``F = (Tr(M M^+) + |Tr M|^2) / (d (d + 1))`` with
    ``M = target^+ P U P``, which accounts for population leaking out of the
    subspace and ignores global phase.  ``leakage`` is the mean population
    outside the subspace over the four basis inputs.
    """
    target = target_unitary() if target is None else np.asarray(target)
    d = target.shape[0]
    m = target.conj().T @ project_qubit_subspace(u_full)
    f = (np.trace(m @ m.conj().T).real + abs(np.trace(m)) ** 2) / (d * (d + 1))
    f = min(max(float(f), 0.0), 1.0)
    cols = np.asarray(u_full)[:, list(QUBIT_INDICES)]
    kept = np.sum(np.abs(cols[list(QUBIT_INDICES)]) ** 2, axis=0)
    leakage = max(float(np.mean(1.0 - kept)), 0.0)
    return FidelityReport(f, 1.0 - f, leakage)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise deviation of ``a`` from ``b`` after removing the best global phase."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def wrap_angle(x):
    """Map angles to ``(-pi, pi]``."""
    return -((-np.asarray(x) + np.pi) % (2 * np.pi) - np.pi)


def conditional_phase(u: np.ndarray, label: str) -> float:
    """Phase of the diagonal amplitude of basis state ``label``, in ``[0, 2 pi)``."""
    i = basis_index(label)
    return float(np.angle(u[i, i]) % (2 * np.pi))


class DegenerateSubspaceError(ValueError):
    pass


class OpenLoopError(ValueError):
    """Trajectory does not return to its start; ``gap`` is the closure distance."""

    def __init__(self, gap: float):
        super().__init__(f"trajectory is not closed (gap {gap:.3g})")
        self.gap = gap


@dataclass(frozen=True, eq=False)
class BlochTrajectory:
    times: np.ndarray
    vectors: np.ndarray
    norms: np.ndarray
    subsystem: str

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s_x", "s_y", "s_z", "norm", "subsystem"])
            for t, s, nrm in zip(self.times, self.vectors, self.norms):
                w.writerow([repr(float(t)), *(repr(float(x)) for x in s), repr(float(nrm)), self.subsystem])


def bloch_trajectory(
    result: PropagationResult,
    subsystem: str,
    initial: str | None = None,
    t_start: float | None = None,
    t_end: float | None = None,
) -> BlochTrajectory:
    """Bloch vector of a two-level subsystem along a recorded trajectory.

    ``S1 = {|21>, |31>}`` (tracked from ``|21>``) and ``S2 = {|23>, |33>}``
    (tracked from ``|23>``).  ``initial`` overrides the tracked input, e.g.
    ``"22"`` which enters ``S2`` after the first swap.
    """
    default_init, up, down = SUBSYSTEMS[subsystem]
    amps = result.states[initial or default_init]
    t = result.times
    sel = np.ones(t.shape, dtype=bool)
    if t_start is not None:
        sel &= t >= t_start - 1e-12
    if t_end is not None:
        sel &= t <= t_end + 1e-12
    alpha = amps[sel, basis_index(up)]
    beta = amps[sel, basis_index(down)]
    norm = np.sqrt(np.abs(alpha) ** 2 + np.abs(beta) ** 2)
    if np.any(norm < 1e-6):
        raise DegenerateSubspaceError(
            f"{subsystem} population vanishes (min norm {norm.min():.2e})"
        )
    alpha, beta = alpha / norm, beta / norm
    cross = np.conj(alpha) * beta
    s = np.stack([2 * cross.real, 2 * cross.imag, np.abs(alpha) ** 2 - np.abs(beta) ** 2], axis=-1)
    return BlochTrajectory(t[sel], s, norm**2, subsystem)


def solid_angle(traj: BlochTrajectory, closure_tol: float = 0.05) -> float:
    """Signed area swept by a closed Bloch loop, counting every turn.

    The loop is fanned into spherical triangles from a reference point on
    the mean rotation axis (the sum of ``s_i x s_i+1``), so a cone of
    half-angle ``theta`` traversed counter-clockwise about its axis ``n``
    times yields ``2 pi n (1 - cos theta)``.
    """
    s = np.asarray(traj.vectors, dtype=float)
    s = s / np.linalg.norm(s, axis=1, keepdims=True)
    gap = float(np.linalg.norm(s[-1] - s[0]))
    if gap > closure_tol:
        raise OpenLoopError(gap)
    a = s
    b = np.roll(s, -1, axis=0)
    axis = np.sum(np.cross(a, b), axis=0)
    if np.linalg.norm(axis) == 0:
        return 0.0
    ref = axis / np.linalg.norm(axis)
    # Van Oosterom-Strackee triangle formula
    num = np.einsum("j,ij->i", ref, np.cross(a, b))
    den = 1 + a @ ref + b @ ref + np.sum(a * b, axis=1)
    return float(2 * np.sum(np.arctan2(num, den)))


def predicted_phases(n: int, k: int) -> tuple[float, float, float, float]:
    """Conditional phases of ``|21>`` and ``|23>`` and the solid angles of S1, S2."""
    if not 2 * n > 2 * k - 1:
        raise ValueError("need 2n > 2k - 1")
    m = 2 * k - 1
    omega1 = 2 * math.pi * n * (1 - m / (2 * n))
    omega2 = 2 * math.pi * n * (1 + m / (2 * n))
    return (2 * n - m) * math.pi / 2, (2 * n + m) * math.pi / 2, omega1, omega2


def rotation_axis(subsystem: str, mu: float) -> np.ndarray:
    """Bloch rotation axis during step 2: ``2 (mu, 0, +-1/4)``."""
    return 2 * np.array([mu, 0.0, 0.25 if subsystem == "S1" else -0.25])


def winding_number(traj: BlochTrajectory, axis: np.ndarray) -> float:
    """Turns of the Bloch vector about ``axis`` (continuous, signed)."""
    n = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    e1 = np.cross(n, [0.0, 1.0, 0.0])
    if np.linalg.norm(e1) < 1e-8:
        e1 = np.cross(n, [1.0, 0.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    phi = np.unwrap(np.arctan2(traj.vectors @ e2, traj.vectors @ e1))
    return float((phi[-1] - phi[0]) / (2 * math.pi))


__all__ = [
    "BlochTrajectory",
    "DegenerateSubspaceError",
    "FidelityReport",
    "OpenLoopError",
    "SUBSYSTEMS",
    "average_gate_fidelity",
    "bloch_trajectory",
    "conditional_phase",
    "equal_up_to_phase",
    "predicted_phases",
    "rotation_axis",
    "solid_angle",
    "winding_number",
    "wrap_angle",
]
