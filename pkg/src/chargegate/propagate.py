"""Unitary propagation of the two-unit system.

Piecewise-constant segments are exponentiated exactly.  General timelines
use the exponential midpoint rule on a uniform grid, refined so that every
ideal pulse edge is a grid point; for ideal pulses this makes the result
exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import QUBIT_INDICES, DeviceModel, basis_index, total_hamiltonians
from .schedule import ControlTimeline

DEFAULT_DT = 0.005

_CHUNK = 4096


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for a Hermitian matrix or a stack of them."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * np.asarray(t)[..., None])
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def segment_unitary(h: np.ndarray, t: float) -> np.ndarray:
    """Propagator of a constant Hamiltonian applied for time ``t``."""
    if t < 0:
        raise ValueError("duration must be non-negative")
    return expm_hermitian(np.asarray(h, dtype=complex), t)


@dataclass
class PropagationResult:
    """Final propagator plus optional sampled trajectories.

    ``states[label]`` has shape ``(len(times), 9)`` and holds the amplitudes
    of the state that started in basis state ``label``.
    """

    unitary: np.ndarray
    times: np.ndarray | None = None
    states: dict[str, np.ndarray] = field(default_factory=dict)

    def population(self, initial: str, final: str) -> np.ndarray:
        return np.abs(self.states[initial][:, basis_index(final)]) ** 2


def time_grid(tl: ControlTimeline, dt: float, t_start: float = 0.0, t_end: float | None = None) -> np.ndarray:
    """Uniform grid of spacing ``dt`` with the timeline's breakpoints inserted."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    t_end = tl.total_duration if t_end is None else t_end
    n = int(np.floor((t_end - t_start) / dt + 1e-9))
    grid = t_start + np.arange(n + 1) * dt
    bps = tl.breakpoints()
    bps = bps[(bps > t_start) & (bps < t_end)]
    grid = np.concatenate([grid, bps, [t_end]])
    grid = np.unique(grid)
    # merge points closer than roundoff noise
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(1.0, t_end)])
    grid = grid[keep]
    grid[-1] = t_end
    return grid


def step_unitaries(tl: ControlTimeline, dev: DeviceModel | None, grid: np.ndarray) -> np.ndarray:
    """Midpoint-rule propagators for every interval of ``grid``."""
    mids = 0.5 * (grid[1:] + grid[:-1])
    steps = np.diff(grid)
    out = np.empty((len(mids), 9, 9), dtype=complex)
    for s in range(0, len(mids), _CHUNK):
        sl = slice(s, s + _CHUNK)
        c = tl.sample(mids[sl])
        h = total_hamiltonians(c[:, 0:3], c[:, 3:6], c[:, 6:9], c[:, 9:12], dev)
        out[sl] = expm_hermitian(h, steps[sl])
    return out


def propagate_timeline(
    tl: ControlTimeline,
    dev: DeviceModel | None,
    dt: float = DEFAULT_DT,
    initial_states: Sequence[str] = (),
    t_start: float = 0.0,
    t_end: float | None = None,
) -> PropagationResult:
    """Propagate over ``[t_start, t_end]`` (default: whole timeline).

    Trajectories are recorded on the step grid for each basis label in
    ``initial_states``.
    """
    grid = time_grid(tl, dt, t_start, t_end)
    steps = step_unitaries(tl, dev, grid)
    idx = [basis_index(s) for s in initial_states]
    u = np.eye(9, dtype=complex)
    traj = np.empty((len(grid), 9, len(idx)), dtype=complex) if idx else None
    if idx:
        traj[0] = u[:, idx]
    for j, step in enumerate(steps):
        u = step @ u
        if idx:
            traj[j + 1] = u[:, idx]
    states = {s: traj[:, :, i] for i, s in enumerate(initial_states)} if idx else {}
    return PropagationResult(u, grid if idx else None, states)


def project_qubit_subspace(u: np.ndarray) -> np.ndarray:
    """Restriction of a 9x9 operator to ``{|11>, |12>, |21>, |22>}``."""
    idx = np.array(QUBIT_INDICES)
    return np.asarray(u)[np.ix_(idx, idx)]


def unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


__all__ = [
    "DEFAULT_DT",
    "PropagationResult",
    "expm_hermitian",
    "project_qubit_subspace",
    "propagate_timeline",
    "segment_unitary",
    "step_unitaries",
    "time_grid",
    "unitarity_error",
]
