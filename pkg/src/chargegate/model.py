"""Device geometry, Coulomb energetics and Hamiltonian construction.

Each unit is a qubit (dots 1, 2) plus an auxiliary dot 3 holding a single
electron.  Two units span a 9-dimensional space with basis order
``|11>, |12>, |13>, |21>, ..., |33>`` (unit 1 is the left tensor factor).

Dynamics are dimensionless: energies in units of the design effective
coupling ``gamma_eff`` and times in ``hbar / gamma_eff``.  Physical units
(nm, meV) only appear in the device description.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

#: e^2 / (4 pi eps_0) in meV * nm
COULOMB_CONSTANT_MEV_NM = 1439.96

#: Default relative permittivity (bulk silicon)
EPS_R_SILICON = 11.8

#: Qubit-subspace indices {|11>, |12>, |21>, |22>} in the 9-dim basis
QUBIT_INDICES = (0, 1, 3, 4)

BASIS_LABELS = tuple(f"{d1}{d2}" for d1 in (1, 2, 3) for d2 in (1, 2, 3))


def basis_index(label: str) -> int:
    """Index of a two-unit basis state given as ``"dd'"``, e.g. ``"21"``."""
    try:
        return BASIS_LABELS.index(label)
    except ValueError:
        raise ValueError(f"unknown basis state {label!r}") from None


def coulomb_energy(r: float, eps_r: float) -> float:
    """Point-charge Coulomb energy (meV) between two electrons ``r`` nm apart."""
    if not r > 0:
        raise ValueError(f"distance must be positive, got {r}")
    if not eps_r > 0:
        raise ValueError(f"relative permittivity must be positive, got {eps_r}")
    return COULOMB_CONSTANT_MEV_NM / (eps_r * r)


@dataclass(frozen=True)
class LocalControls:
    """Dot energies ``(e1, e2, e3)`` and tunnelling rates ``(mu12, mu13, mu23)``."""

    eps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mu: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        eps = tuple(float(x) for x in self.eps)
        mu = tuple(float(x) for x in self.mu)
        if len(eps) != 3 or len(mu) != 3:
            raise ValueError("need exactly three energies and three rates")
        if not all(np.isfinite(eps + mu)):
            raise ValueError("controls must be finite")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True)
class Geometry3D:
    """Symmetric 3D layout parameters (nm).

    ``a`` is half the aux-aux distance, ``b`` the lateral offset of the qubit
    dots and ``c`` their half-separation.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("a, b, c must be positive")
        if np.isclose(np.sqrt(4 * self.b**2 + 2 * self.c**2), 2 * self.a):
            raise ValueError("sqrt(4b^2 + 2c^2) == 2a gives no effective coupling")


def dot_positions(g: Geometry3D) -> np.ndarray:
    """Dot coordinates as a ``(2, 3, 3)`` array indexed ``[unit, dot, xyz]``."""
    a, b, c = g.a, g.b, g.c
    return np.array(
        [
            [[-b, c, 0.0], [-b, -c, 0.0], [-a, 0.0, 0.0]],
            [[b, 0.0, c], [b, 0.0, -c], [a, 0.0, 0.0]],
        ]
    )


def coulomb_matrix(positions, eps_r: float, shield_mask=None) -> np.ndarray:
    """Cross-unit Coulomb energies ``gamma[d, d']`` (meV).

    Entries where ``shield_mask`` is true are screened to zero.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.shape != (2, 3, 3):
        raise ValueError(f"positions must have shape (2, 3, 3), got {pos.shape}")
    dist = np.linalg.norm(pos[0][:, None, :] - pos[1][None, :, :], axis=-1)
    if np.any(dist <= 0):
        raise ValueError("coincident dots in different units")
    gamma = COULOMB_CONSTANT_MEV_NM / (eps_r * dist)
    if shield_mask is not None:
        gamma = np.where(np.asarray(shield_mask, dtype=bool), 0.0, gamma)
    return gamma


def bias_offsets(gamma1: float, gamma2: float) -> np.ndarray:
    """Per-unit dot-energy offsets cancelling the qubit-qubit Coulomb terms."""
    return np.array([-gamma1 / 2, -gamma1 / 2, gamma1 / 2 - gamma2])


def _default_mask():
    return np.zeros((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class DeviceModel:
    """Six-dot device with its Coulomb matrix and bias offsets.

    ``offsets`` are applied identically to both units.  ``gamma_eff`` is the
    design coupling used as the energy unit; perturbed devices keep the
    design value and the design offsets.
    """

    positions: np.ndarray
    eps_r: float
    gamma: np.ndarray
    offsets: np.ndarray
    gamma_eff: float
    shield_mask: np.ndarray = field(default_factory=_default_mask)

    def __post_init__(self):
        if not self.gamma_eff > 0:
            raise ValueError("gamma_eff must be positive")
        for name in ("positions", "gamma", "offsets", "shield_mask"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def symmetric_3d(cls, g: Geometry3D, eps_r: float = EPS_R_SILICON) -> "DeviceModel":
        """Unshielded 3D device with offsets cancelling qubit-qubit terms."""
        pos = dot_positions(g)
        gamma = coulomb_matrix(pos, eps_r)
        g1, g2 = gamma[0, 0], gamma[0, 2]
        geff = gamma[2, 2] - 2 * g2 + g1
        return cls(pos, eps_r, gamma, bias_offsets(g1, g2), geff)

    @classmethod
    def shielded_2d(
        cls,
        aux_distance: float = 170.0,
        eps_r: float = EPS_R_SILICON,
        gamma_eff: float | None = None,
        dot_spacing: float = 50.0,
    ) -> "DeviceModel":
        """Planar device where a barrier screens all pairs except aux-aux.

        ``gamma_eff`` defaults to the free-space aux-aux energy; pass a
        smaller value to account for screening.
        """
        h = aux_distance / 2
        s = dot_spacing
        pos = np.array(
            [
                [[-h - s, s, 0.0], [-h - s, -s, 0.0], [-h, 0.0, 0.0]],
                [[h + s, s, 0.0], [h + s, -s, 0.0], [h, 0.0, 0.0]],
            ]
        )
        mask = np.ones((3, 3), dtype=bool)
        mask[2, 2] = False
        gamma = coulomb_matrix(pos, eps_r, mask)
        if gamma_eff is None:
            gamma_eff = gamma[2, 2]
        else:
            gamma = gamma.copy()
            gamma[2, 2] = gamma_eff
        return cls(pos, eps_r, gamma, np.zeros(3), gamma_eff, mask)

    def with_positions(self, positions) -> "DeviceModel":
        """Same device (mask, offsets, gamma_eff) with dots moved."""
        pos = np.asarray(positions, dtype=float)
        return replace(
            self,
            positions=pos,
            gamma=coulomb_matrix(pos, self.eps_r, self.shield_mask),
        )

    def coulomb_diagonal(self) -> np.ndarray:
        """Diagonal of the dimensionless Coulomb-plus-offset Hamiltonian."""
        off = np.asarray(self.offsets)
        energies = self.gamma + off[:, None] + off[None, :]
        return energies.ravel() / self.gamma_eff


def ideal_device() -> DeviceModel:
    """Shielded 2D device with 170 nm aux spacing (H_C = |33><33|)."""
    return DeviceModel.shielded_2d()


def build_local_hamiltonian(c: LocalControls) -> np.ndarray:
    """3x3 single-unit Hamiltonian from dot energies and tunnelling rates."""
    return local_hamiltonians(np.array([c.eps]), np.array([c.mu]))[0]


def local_hamiltonians(eps: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Stack of local Hamiltonians from ``(N, 3)`` energies and ``(N, 3)`` rates."""
    eps = np.asarray(eps, dtype=float)
    mu = np.asarray(mu, dtype=float)
    h = np.zeros(eps.shape[:-1] + (3, 3))
    h[..., [0, 1, 2], [0, 1, 2]] = eps
    for j, (d, e) in enumerate(((0, 1), (0, 2), (1, 2))):
        h[..., d, e] = mu[..., j]
        h[..., e, d] = mu[..., j]
    return h


_EYE3 = np.eye(3)


def total_hamiltonians(
    eps1: np.ndarray,
    mu1: np.ndarray,
    eps2: np.ndarray,
    mu2: np.ndarray,
    dev: DeviceModel | None,
) -> np.ndarray:
    """Stack of 9x9 two-unit Hamiltonians, one per row of the control arrays."""
    h1 = local_hamiltonians(eps1, mu1)
    h2 = local_hamiltonians(eps2, mu2)
    n = h1.shape[0]
    h = np.einsum("nij,kl->nikjl", h1, _EYE3).reshape(n, 9, 9)
    h += np.einsum("ij,nkl->nikjl", _EYE3, h2).reshape(n, 9, 9)
    if dev is not None:
        diag = dev.coulomb_diagonal()
        h[:, np.arange(9), np.arange(9)] += diag
    return h.astype(complex)


def build_total_hamiltonian(
    c1: LocalControls, c2: LocalControls, dev: DeviceModel | None
) -> np.ndarray:
    """Two-unit Hamiltonian ``H1 x I + I x H2 + H_C``.

    ``dev=None`` omits the Coulomb term entirely.
    """
    return total_hamiltonians(
        np.array([c1.eps]), np.array([c1.mu]), np.array([c2.eps]), np.array([c2.mu]), dev
    )[0]


def kron_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, _EYE3) + np.kron(_EYE3, b)


def is_hermitian(h: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))) < tol)


__all__ = [
    "BASIS_LABELS",
    "COULOMB_CONSTANT_MEV_NM",
    "DeviceModel",
    "EPS_R_SILICON",
    "Geometry3D",
    "LocalControls",
    "QUBIT_INDICES",
    "basis_index",
    "bias_offsets",
    "build_local_hamiltonian",
    "build_total_hamiltonian",
    "coulomb_energy",
    "coulomb_matrix",
    "dot_positions",
    "ideal_device",
    "is_hermitian",
    "kron_sum",
    "local_hamiltonians",
    "total_hamiltonians",
]
