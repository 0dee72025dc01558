"""Multi-channel control timelines built from smoothed square pulses.

A timeline is a list of pulses on twelve channels (three dot energies and
three tunnelling rates per unit) plus optional multiplicative noise traces.
Everything here is in dimensionless units.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import integrate
from scipy.special import erf

#: Steepness of the erf edges; erf(2) ~ 0.9953 so an edge completes within tau_s
EDGE_STEEPNESS = 4.0

N_CHANNELS = 12

_PAIRS = {(1, 2): 0, (1, 3): 1, (2, 3): 2}


@dataclass(frozen=True, order=True)
class Channel:
    """One control knob: ``kind`` is ``"eps"`` (dot energy) or ``"mu"`` (tunnelling)."""

    unit: int
    kind: str
    dots: tuple[int, ...]

    def __post_init__(self):
        if self.unit not in (1, 2):
            raise ValueError(f"unit must be 1 or 2, got {self.unit}")
        dots = tuple(int(d) for d in self.dots)
        if self.kind == "eps":
            if len(dots) != 1 or dots[0] not in (1, 2, 3):
                raise ValueError(f"bad dot index {self.dots}")
        elif self.kind == "mu":
            dots = tuple(sorted(dots))
            if dots not in _PAIRS:
                raise ValueError(f"bad dot pair {self.dots}")
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        object.__setattr__(self, "dots", dots)

    @classmethod
    def energy(cls, unit: int, dot: int) -> "Channel":
        return cls(unit, "eps", (dot,))

    @classmethod
    def tunnel(cls, unit: int, d1: int, d2: int) -> "Channel":
        return cls(unit, "mu", (d1, d2))

    @classmethod
    def parse(cls, label: str) -> "Channel":
        """Inverse of :attr:`label`, e.g. ``"u1:mu23"``."""
        try:
            unit, name = label.split(":")
            unit = int(unit.lstrip("u"))
            if name.startswith("eps"):
                return cls.energy(unit, int(name[3:]))
            if name.startswith("mu") and len(name) == 4:
                return cls.tunnel(unit, int(name[2]), int(name[3]))
        except ValueError as exc:
            raise ValueError(f"cannot parse channel {label!r}") from exc
        raise ValueError(f"cannot parse channel {label!r}")

    @property
    def index(self) -> int:
        """Column in the ``(N, 12)`` control array."""
        base = 6 * (self.unit - 1)
        if self.kind == "eps":
            return base + self.dots[0] - 1
        return base + 3 + _PAIRS[self.dots]

    @property
    def label(self) -> str:
        return f"u{self.unit}:{self.kind}{''.join(map(str, self.dots))}"


ALL_CHANNELS = tuple(
    ch
    for u in (1, 2)
    for ch in [*(Channel.energy(u, d) for d in (1, 2, 3)), *(Channel.tunnel(u, *p) for p in _PAIRS)]
)


@dataclass(frozen=True)
class Pulse:
    """Square pulse of amplitude ``A`` on ``[t0, t0 + tau]`` with erf edges of width ``tau_s``."""

    channel: Channel
    t0: float
    tau: float
    A: float
    tau_s: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"pulse length must be positive, got {self.tau}")
        if not 0 <= self.tau_s < self.tau / 2:
            raise ValueError(
                f"rise/decay time {self.tau_s} must lie in [0, tau/2) for tau={self.tau}"
            )

    @property
    def t_end(self) -> float:
        return self.t0 + self.tau

    @property
    def nominal_area(self) -> float:
        return self.A * (self.tau - self.tau_s)


def sample_pulse(p: Pulse, t):
    """Pulse value at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    if p.tau_s == 0:
        out = np.where((t >= p.t0) & (t < p.t_end), p.A, 0.0)
    else:
        # tiny tau_s saturates the erf arguments at +-inf, which is fine
        with np.errstate(over="ignore"):
            rise = erf(EDGE_STEEPNESS * (t - p.t0 - p.tau_s / 2) / p.tau_s)
            fall = erf(EDGE_STEEPNESS * (t - p.t_end + p.tau_s / 2) / p.tau_s)
        out = 0.5 * p.A * (rise - fall)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded 1/f noise: flat spectrum below ``omega0``, 1/omega above, max |eta| = ``eta0``."""

    eta0: float
    omega0: float
    seed: int = 0

    def __post_init__(self):
        if self.eta0 < 0:
            raise ValueError("eta0 must be non-negative")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    """Noise sampled on ``0, dt, 2 dt, ...``; linearly interpolated in between."""

    dt: float
    values: np.ndarray

    def __call__(self, t):
        grid = np.arange(len(self.values)) * self.dt
        return np.interp(t, grid, self.values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt


def noise_frequencies(n_samples: int, dt: float) -> np.ndarray:
    """Angular frequencies of the rfft bins for ``n_samples`` points spaced ``dt``."""
    return 2 * np.pi * np.fft.rfftfreq(n_samples, dt)


def generate_noise(spec: NoiseSpec, duration: float, dt: float) -> NoiseTrace:
    """Random-phase synthesis of a bounded, zero-mean 1/f trace.

    The sample count is forced odd so there is no Nyquist bin and every
    non-DC bin keeps exactly the prescribed magnitude.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not duration > dt:
        raise ValueError("duration must exceed dt")
    n = int(np.ceil(duration / dt)) + 1
    n += 1 - n % 2
    if spec.eta0 == 0:
        return NoiseTrace(dt, np.zeros(n))
    rng = np.random.default_rng(spec.seed)
    omega = noise_frequencies(n, dt)
    mag = np.zeros_like(omega)
    mag[1:] = 1.0 / np.maximum(omega[1:], spec.omega0)
    phases = rng.uniform(0.0, 2 * np.pi, size=omega.size)
    eta = np.fft.irfft(mag * np.exp(1j * phases), n=n)
    eta *= spec.eta0 / np.max(np.abs(eta))
    return NoiseTrace(dt, eta)


def channel_seed(seed: int, channel_index: int) -> int:
    """Deterministic per-channel seed derived from a trial seed."""
    return int(np.random.SeedSequence([seed, channel_index]).generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class ControlTimeline:
    """Pulses, total duration and per-channel noise overlays.

    ``marks`` holds named reference times (e.g. step boundaries) for analysis.
    """

    pulses: tuple[Pulse, ...]
    total_duration: float
    noise: Mapping[int, NoiseTrace] = field(default_factory=dict)
    marks: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        latest = max((p.t_end for p in self.pulses), default=0.0)
        if self.total_duration < latest - 1e-12:
            raise ValueError(
                f"total_duration {self.total_duration} ends before last pulse ({latest})"
            )

    @property
    def active_channels(self) -> tuple[Channel, ...]:
        return tuple(sorted({p.channel for p in self.pulses}))

    def sample(self, t) -> np.ndarray:
        """Control values at times ``t`` as an array of shape ``t.shape + (12,)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (N_CHANNELS,))
        for p in self.pulses:
            out[..., p.channel.index] += sample_pulse(p, t)
        for idx, trace in self.noise.items():
            out[..., idx] *= 1.0 + trace(t)
        return out

    def channel_value(self, ch: Channel, t):
        """Value of one channel; channels without pulses read as zero."""
        vals = self.sample(t)[..., ch.index]
        return vals if np.ndim(vals) else float(vals)

    def breakpoints(self) -> np.ndarray:
        """Discontinuities (ideal pulse edges) inside ``(0, total_duration)``."""
        pts = set()
        for p in self.pulses:
            if p.tau_s == 0:
                pts.update((p.t0, p.t_end))
        pts = np.array(sorted(pts), dtype=float)
        return pts[(pts > 0) & (pts < self.total_duration)]

    def with_noise(self, spec: NoiseSpec, dt: float, channels: Iterable[Channel] | None = None):
        """Copy of the timeline with an independent noise trace per channel.

        Defaults to every channel carrying a pulse.  Channel seeds derive from
        ``spec.seed`` and the channel index.
        """
        channels = self.active_channels if channels is None else tuple(channels)
        duration = max(self.total_duration, 2 * dt)
        noise = {}
        for ch in channels:
            sub = NoiseSpec(spec.eta0, spec.omega0, channel_seed(spec.seed, ch.index))
            noise[ch.index] = generate_noise(sub, duration, dt)
        return ControlTimeline(self.pulses, self.total_duration, noise, dict(self.marks))

    def to_csv(self, path, dt: float, channels: Iterable[Channel] | None = None) -> None:
        """Write ``t, channel_id, value`` rows sampled every ``dt``."""
        channels = self.active_channels if channels is None else tuple(channels)
        n = int(np.floor(self.total_duration / dt + 1e-9)) + 1
        t = np.arange(n) * dt
        vals = self.sample(t)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "channel_id", "value"])
            for i, ti in enumerate(t):
                for ch in channels:
                    w.writerow([f"{ti:.6f}", ch.label, repr(float(vals[i, ch.index]))])


def channel_value(tl: ControlTimeline, ch: Channel, t):
    return tl.channel_value(ch, t)


def pulse_area(tl: ControlTimeline, ch: Channel, t_start: float, t_end: float) -> float:
    """Integral of one channel over ``[t_start, t_end]``."""
    if not t_start < t_end:
        raise ValueError("t_start must be before t_end")
    pts = []
    for p in tl.pulses:
        if p.channel == ch:
            pts += [p.t0, p.t_end, p.t0 + p.tau_s / 2, p.t_end - p.tau_s / 2]
    pts = sorted({x for x in pts if t_start < x < t_end})
    edges = [t_start, *pts, t_end]

    if ch.index in tl.noise:
        # noise is piecewise linear: integrate each noise cell with Gauss-Legendre
        nodes = tl.noise[ch.index].times
        edges = np.unique(np.concatenate([edges, nodes[(nodes > t_start) & (nodes < t_end)]]))
        x, w = np.polynomial.legendre.leggauss(8)
        a, b = edges[:-1, None], edges[1:, None]
        t = 0.5 * (b - a) * x + 0.5 * (b + a)
        vals = tl.channel_value(ch, t)
        return float(np.sum(0.5 * (b - a) * w * vals))

    f = lambda t: tl.channel_value(ch, t)  # noqa: E731
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-10, limit=200)
        total += val
    return total


__all__ = [
    "ALL_CHANNELS",
    "Channel",
    "ControlTimeline",
    "EDGE_STEEPNESS",
    "NoiseSpec",
    "NoiseTrace",
    "Pulse",
    "channel_seed",
    "channel_value",
    "generate_noise",
    "noise_frequencies",
    "pulse_area",
    "sample_pulse",
]
