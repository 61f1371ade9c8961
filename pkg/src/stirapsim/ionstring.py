"""Equilibrium positions of an ion string in a harmonic axial well."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants, optimize

CA40_MASS = 39.962590863 * constants.atomic_mass - constants.electron_mass


class ConvergenceError(RuntimeError):
    pass


def length_scale(axial_freq: float, mass: float = CA40_MASS) -> float:
    """(e^2 / (4 pi eps0 m w^2))^(1/3) in metres."""
    k = constants.e ** 2 / (4 * np.pi * constants.epsilon_0)
    return (k / (mass * axial_freq ** 2)) ** (1.0 / 3.0)


def _gradient(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(1.0 / (d * np.abs(d)), axis=1)


def _hessian(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    off = -2.0 / np.abs(d) ** 3
    np.fill_diagonal(off, 0.0)
    H = off
    np.fill_diagonal(H, 1.0 + np.sum(2.0 / np.abs(d) ** 3, axis=1))
    return H


def _energy(u):
    i, j = np.triu_indices(len(u), 1)
    return 0.5 * np.sum(u ** 2) + np.sum(1.0 / np.abs(u[i] - u[j]))


def scaled_positions(n_ions: int, gtol: float = 1e-10) -> np.ndarray:
    """Dimensionless equilibrium positions, sorted."""
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    if n_ions == 1:
        return np.zeros(1)
    u0 = np.linspace(-1.0, 1.0, n_ions) * (n_ions ** 0.56)
    res = optimize.minimize(_energy, u0, jac=_gradient, hess=_hessian, method="trust-exact",
                            options={"gtol": gtol * 1e-2})
    u = np.sort(res.x)
    for _ in range(20):  # Newton polish
        g = _gradient(u)
        if np.linalg.norm(g) < gtol * 1e-2:
            break
        u = u - np.linalg.solve(_hessian(u), g)
    u = 0.5 * (u - u[::-1])  # exact mirror symmetry
    if not np.linalg.norm(_gradient(u)) < gtol:
        raise ConvergenceError(f"ion positions did not converge (|grad| = {np.linalg.norm(_gradient(u)):.2e})")
    return u


def string_positions(n_ions: int, axial_freq: float, mass: float = CA40_MASS) -> np.ndarray:
    """Axial equilibrium positions (m) of ``n_ions`` ions, centred on zero."""
    if not axial_freq > 0:
        raise ValueError("axial_freq must be > 0")
    return scaled_positions(n_ions) * length_scale(axial_freq, mass)


@dataclass(frozen=True)
class IonString:
    """A string along the trap axis, crossed at ``beam_offset`` by a beam of waist ``waist``."""

    n_ions: int
    axial_freq: float
    positions: tuple[float, ...]
    beam_offset: float = 0.0
    waist: float = 55e-6

    def __post_init__(self):
        pos = np.asarray(self.positions)
        if len(pos) != self.n_ions:
            raise ValueError("need one position per ion")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("positions must be strictly increasing")
        span = pos[-1] - pos[0] if self.n_ions > 1 else 1.0
        if np.max(np.abs(pos + pos[::-1])) > 1e-9 * span:
            raise ValueError("positions must be symmetric about the trap centre")

    @classmethod
    def equilibrium(cls, n_ions: int, axial_freq: float, beam_offset: float = 0.0,
                    waist: float = 55e-6) -> "IonString":
        pos = string_positions(n_ions, axial_freq)
        return cls(n_ions, axial_freq, tuple(float(x) for x in pos), beam_offset, waist)

    def radial_offsets(self) -> np.ndarray:
        """Distance of each ion from the beam axis, which crosses the string at right angles."""
        return np.abs(np.asarray(self.positions) - self.beam_offset)
