"""Local gates, the four-step controlled-phase schedule and closed-form checks.

The CPHASE sequence (dimensionless units):

1. swap ``|2>_2 <-> |3>_2`` with tunnelling rate ``mu23_2`` for ``tau1 = pi / (2 mu23_2)``;
2. raise ``eps_2`` of unit 1 to 1/2 and open ``mu23`` of unit 1 at ``mu23_1`` for ``tau2``;
3. repeat step 1;
4. local phase shifts on ``|2>_1`` and ``|2>_2`` for ``tau4``.

With finite rise/decay times the corrected schedule lengthens every pulse by
``tau_s``, wraps the step-2 tunnelling pulse inside a longer energy window
and subtracts the extra phase of that window in step 4.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .model import LocalControls, build_local_hamiltonian
from .propagate import expm_hermitian, project_qubit_subspace
from .schedule import Channel, ControlTimeline, Pulse, pulse_area

#: hbar in meV * s
HBAR_MEV_S = 6.582119569e-13

#: Default rate for the step-1/3 swaps and default step-4 length
DEFAULT_SWAP_RATE = 1.0
DEFAULT_TAU4 = math.pi / 2

EPS_STEP2 = 0.5

U1_EPS2 = Channel.energy(1, 2)
U2_EPS2 = Channel.energy(2, 2)
U1_MU23 = Channel.tunnel(1, 2, 3)
U2_MU23 = Channel.tunnel(2, 2, 3)


class ConfigurationError(ValueError):
    """Gate parameters that cannot be turned into a valid schedule."""


# --- local operations -------------------------------------------------------


@dataclass(frozen=True)
class LocalGateSpec:
    phi1: float
    alpha: float
    phi2: float


HADAMARD_SPEC = LocalGateSpec(phi1=-math.pi / 2, alpha=math.pi / 4, phi2=-math.pi / 2)


def local_phase_unitary(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(-1j * phi), 1.0])


def tunnel_unitary(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -1j * s, 0], [-1j * s, c, 0], [0, 0, 1]], dtype=complex)


def compose_local(spec: LocalGateSpec) -> np.ndarray:
    """Phase, tunnel, phase: ``U2(phi2) U12(alpha) U2(phi1)``."""
    return (
        local_phase_unitary(spec.phi2)
        @ tunnel_unitary(spec.alpha)
        @ local_phase_unitary(spec.phi1)
    )


def one_step_hadamard(mu12: float) -> tuple[LocalControls, float]:
    """Controls and duration giving a Hadamard (up to phase) in a single pulse.

    Detuning ``(eps2 - eps1) / 2 = -mu12`` together with tunnelling ``mu12``
    for ``t = pi / (2 sqrt(2) mu12)``.
    """
    if not mu12 > 0:
        raise ValueError("mu12 must be positive")
    controls = LocalControls(eps=(mu12, -mu12, 0.0), mu=(mu12, 0.0, 0.0))
    return controls, math.pi / (2 * math.sqrt(2) * mu12)


def local_propagator(c: LocalControls, t: float) -> np.ndarray:
    return expm_hermitian(build_local_hamiltonian(c).astype(complex), t)


# --- gate parameters ----------------------------------------------------------


def step2_rate(n: int, k: int) -> float:
    """Tunnelling rate for which ``n`` Rabi loops fit in ``2 pi (2k - 1)``."""
    return 0.25 * math.sqrt((2 * n / (2 * k - 1)) ** 2 - 1)


@dataclass(frozen=True)
class GateParams:
    """Parameters of the four-step gate.

    Derived quantities (``mu23_1``, ``tau1``, ``tau2``, ``ell`` ...) are
    properties so they can never drift from ``n``, ``k`` and ``mu23_2``.
    """

    n: int = 1
    k: int = 1
    mu23_2: float = DEFAULT_SWAP_RATE
    tau4: float = DEFAULT_TAU4
    tau_s: float = 0.0
    corrected: bool = False

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or not 2 * self.n > 2 * self.k - 1:
            raise ConfigurationError(f"need positive n, k with 2n > 2k - 1, got n={self.n}, k={self.k}")
        if not self.mu23_2 > 0 or not self.tau4 > 0:
            raise ConfigurationError("mu23_2 and tau4 must be positive")
        if self.tau_s < 0:
            raise ConfigurationError("tau_s must be non-negative")

    @property
    def u2(self) -> float:
        return 2 * self.n / (2 * self.k - 1)

    @property
    def mu23_1(self) -> float:
        return step2_rate(self.n, self.k)

    @property
    def tau1(self) -> float:
        return math.pi / (2 * self.mu23_2)

    @property
    def tau3(self) -> float:
        return self.tau1

    @property
    def tau2(self) -> float:
        return 2 * math.pi * (2 * self.k - 1)

    @property
    def ell(self) -> float:
        return 0.5 - (self.n + self.k) % 2

    @property
    def nominal_duration(self) -> float:
        return self.tau1 + self.tau2 + self.tau3 + self.tau4

    def with_rise(self, tau_s: float, corrected: bool) -> "GateParams":
        return replace(self, tau_s=tau_s, corrected=corrected)


def _ceil_pos(x: float) -> int:
    return max(1, math.ceil(x - 1e-12))


def select_gate_params(
    tau_min: float | None = None,
    mu_max: float | None = None,
    tau_s: float = 0.0,
    corrected: bool = False,
) -> GateParams:
    """Fastest ``(n, k)`` compatible with a minimum pulse length and/or maximum rate.

    A minimum pulse length also fixes steps 1, 3 and 4 to ``tau_min``; a
    rate limit caps the swap rate of steps 1 and 3.
    """
    if tau_min is not None and not tau_min > 0:
        raise ConfigurationError("tau_min must be positive")
    if mu_max is not None and not mu_max > 0:
        raise ConfigurationError("mu_max must be positive")

    k_tau = _ceil_pos(tau_min / (4 * math.pi) + 0.5) if tau_min is not None else 1
    if mu_max is None:
        n, k = k_tau, k_tau
    else:
        u_max = math.sqrt(16 * mu_max**2 + 1)
        k1 = math.ceil(1 / (u_max - 1)) // 2 + 1
        k = max(k1, k_tau)
        n = math.floor((2 * k - 1) * u_max / 2)

    swap_rate, tau4 = DEFAULT_SWAP_RATE, DEFAULT_TAU4
    if tau_min is not None:
        swap_rate, tau4 = math.pi / (2 * tau_min), tau_min
    if mu_max is not None:
        swap_rate = min(swap_rate, mu_max)
    return GateParams(n, k, swap_rate, tau4, tau_s, corrected)


def brute_force_params(tau_min: float | None, mu_max: float | None, limit: int = 50):
    """Smallest feasible ``k``, and the largest ``n`` allowed for it, by enumeration."""
    for k in range(1, limit + 1):
        if tau_min is not None and 2 * math.pi * (2 * k - 1) < tau_min:
            continue
        feasible = [
            n
            for n in range(k, limit + 1)
            if mu_max is None or step2_rate(n, k) <= mu_max
        ]
        if feasible:
            return (max(feasible) if mu_max is not None else min(feasible)), k
    return None


# --- schedule ---------------------------------------------------------------


def _check_rise(p: GateParams) -> None:
    lengths = {"tau1": p.tau1, "tau2": p.tau2, "tau4": p.tau4}
    for name, tau in lengths.items():
        if p.tau_s >= tau / 2:
            raise ConfigurationError(
                f"rise/decay time {p.tau_s} too long for {name}={tau:.4g}"
            )


def step2_phase_excess(tl: ControlTimeline, p: GateParams) -> float:
    """Extra phase of the step-2 energy window beyond ``tau2 / 2``."""
    t1, t2 = tl.marks["dphi_start"], tl.marks["dphi_end"]
    return pulse_area(tl, U1_EPS2, t1, t2) - EPS_STEP2 * p.tau2


def build_cphase_timeline(p: GateParams) -> ControlTimeline:
    """Pulse schedule for the gate; see the module docstring for the steps."""
    _check_rise(p)
    ts = p.tau_s
    if not p.corrected or ts == 0:
        t1 = p.tau1
        t2 = t1 + p.tau2
        t3 = t2 + p.tau3
        pulses = [
            Pulse(U2_MU23, 0.0, p.tau1, p.mu23_2, ts),
            Pulse(U1_EPS2, t1, p.tau2, EPS_STEP2, ts),
            Pulse(U1_MU23, t1, p.tau2, p.mu23_1, ts),
            Pulse(U2_MU23, t2, p.tau3, p.mu23_2, ts),
            Pulse(U1_EPS2, t3, p.tau4, p.ell * math.pi / p.tau4, ts),
            Pulse(U2_EPS2, t3, p.tau4, math.pi / p.tau4, ts),
        ]
        marks = {
            "step1_end": t1,
            "step2_start": t1,
            "step2_end": t2,
            "step3_end": t3,
            "dphi_start": t1,
            "dphi_end": t2,
            "dphi": 0.0,
        }
        return ControlTimeline(pulses, t3 + p.tau4, marks=marks)

    tau1c, tau2c, tau3c, tau4c = (x + ts for x in (p.tau1, p.tau2, p.tau3, p.tau4))
    t1 = tau1c
    t2 = t1 + tau2c
    t3 = t2 + tau3c
    window = Pulse(U1_EPS2, t1 - ts, tau2c + 2 * ts, EPS_STEP2, ts)
    head = [
        Pulse(U2_MU23, 0.0, tau1c, p.mu23_2, ts),
        window,
        Pulse(U1_MU23, t1, tau2c, p.mu23_1, ts),
        Pulse(U2_MU23, t2, tau3c, p.mu23_2, ts),
    ]
    marks = {
        "step1_end": t1,
        "step2_start": t1,
        "step2_end": t2,
        "step3_end": t3,
        "dphi_start": t1 - ts,
        "dphi_end": t2 + ts,
    }
    draft = ControlTimeline(head, t3, marks=marks)
    dphi = step2_phase_excess(draft, p)
    tail = [
        Pulse(U1_EPS2, t3, tau4c, (math.pi * p.ell - dphi) / p.tau4, ts),
        Pulse(U2_EPS2, t3, tau4c, math.pi / p.tau4, ts),
    ]
    marks["dphi"] = dphi
    return ControlTimeline(head + tail, t3 + tau4c, marks=marks)


def build_step2_timeline(p: GateParams) -> ControlTimeline:
    """Only the ideal step-2 pulses, starting at t = 0 (for phase analysis)."""
    pulses = [
        Pulse(U1_EPS2, 0.0, p.tau2, EPS_STEP2),
        Pulse(U1_MU23, 0.0, p.tau2, p.mu23_1),
    ]
    return ControlTimeline(pulses, p.tau2, marks={"step2_start": 0.0, "step2_end": p.tau2})


# --- closed forms -----------------------------------------------------------


def target_unitary() -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def analytic_swap1(mu: float) -> np.ndarray:
    """Propagator of the first swap at ``tau1 = pi / (2 mu)``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    tau = math.pi / (2 * mu)
    u1 = math.sqrt(1 + 4 * mu**2)
    ph = np.exp(-0.5j * tau)
    c, s = math.cos(tau * u1 / 2), math.sin(tau * u1 / 2)
    w = ph * np.array([[c + 1j * s / u1, -2j * mu / u1 * s], [-2j * mu / u1 * s, c - 1j * s / u1]])
    swap = np.array([[0, -1j], [-1j, 0]])
    u = np.zeros((9, 9), dtype=complex)
    u[0, 0] = u[3, 3] = u[6, 6] = 1
    u[1:3, 1:3] = swap
    u[4:6, 4:6] = swap
    u[7:9, 7:9] = w
    return u


def step2_phases(n: int, k: int) -> tuple[complex, complex]:
    """Diagonal entries ``(a, a')`` of the step-2 propagator at ``tau2``."""
    u2 = 2 * n / (2 * k - 1)
    sign = (-1) ** n
    return sign * np.exp(-1j * n * math.pi / u2), sign * np.exp(-3j * n * math.pi / u2)


def analytic_step2(n: int, k: int) -> np.ndarray:
    if not 2 * n > 2 * k - 1:
        raise ValueError("need 2n > 2k - 1")
    a, a2 = step2_phases(n, k)
    return np.diag([1, 1, 1, a, a, a2, a, a, a2]).astype(complex)


def analytic_composed(n: int, k: int, mu: float = DEFAULT_SWAP_RATE) -> np.ndarray:
    """Qubit-subspace block of swap, step 2, swap; equals ``diag(1, -1, a, -a')``."""
    s = analytic_swap1(mu)
    return project_qubit_subspace(s @ analytic_step2(n, k) @ s)


def local_correction(n: int, k: int) -> np.ndarray:
    """Step-4 local phases ``U(1) x U(2)`` on the qubit subspace."""
    u2 = 2 * n / (2 * k - 1)
    u_first = np.diag([1, (-1) ** n * np.exp(1j * math.pi * n / u2)])
    u_second = np.diag([1, -1])
    return np.kron(u_first, u_second).astype(complex)


# --- reporting --------------------------------------------------------------


def time_unit_ps(gamma_eff_mev: float) -> float:
    """Exact ``hbar / gamma_eff`` in picoseconds."""
    if not gamma_eff_mev > 0:
        raise ConfigurationError("gamma_eff_mev must be positive")
    return HBAR_MEV_S / gamma_eff_mev * 1e12


def gate_report(p: GateParams, gamma_eff_mev: float = 0.718, tl: ControlTimeline | None = None) -> dict:
    """Gate parameters in dimensionless and physical units.

    ``*_ps`` and ``*_radps`` use 1 time unit = 1 ps; ``*_exact`` use hbar / gamma_eff.
    """
    unit = time_unit_ps(gamma_eff_mev)
    tl = tl or build_cphase_timeline(p)
    rates = {"mu23_1": p.mu23_1, "mu23_2": p.mu23_2}
    times = {
        "tau1": p.tau1,
        "tau2": p.tau2,
        "tau3": p.tau3,
        "tau4": p.tau4,
        "gate_time": p.nominal_duration,
        "timeline_duration": tl.total_duration,
    }
    out = {k: v for k, v in asdict(p).items()}
    out.update(ell=p.ell, dphi=tl.marks.get("dphi", 0.0), gamma_eff_mev=gamma_eff_mev)
    out["time_unit_ps_exact"] = unit
    for name, v in rates.items():
        out[name] = v
        out[f"{name}_radps"] = v * 1e12
        out[f"{name}_radps_exact"] = v / (unit * 1e-12)
    for name, v in times.items():
        out[name] = v
        out[f"{name}_ps"] = v
        out[f"{name}_ps_exact"] = v * unit
    return out


__all__ = [
    "ConfigurationError",
    "GateParams",
    "HADAMARD_SPEC",
    "LocalGateSpec",
    "analytic_composed",
    "analytic_step2",
    "analytic_swap1",
    "brute_force_params",
    "build_cphase_timeline",
    "build_step2_timeline",
    "compose_local",
    "gate_report",
    "hadamard",
    "local_correction",
    "local_phase_unitary",
    "local_propagator",
    "one_step_hadamard",
    "select_gate_params",
    "step2_phase_excess",
    "step2_phases",
    "step2_rate",
    "target_unitary",
    "time_unit_ps",
    "tunnel_unitary",
]
