"""Dark-state and adiabaticity diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atom import N_LEVELS, Level
from .pulses import PUMP, STOKES, PulseSequence, rabi_envelope, rabi_envelope_derivative


def mixing_angle(omega850: float, omega854: float) -> float:
    """Dark-state mixing angle, tan(theta) = Omega_850 / Omega_854."""
    if omega850 == 0 and omega854 == 0:
        raise ValueError("mixing angle undefined with both beams off")
    return math.atan2(omega850, omega854)


def dark_state(theta: float) -> np.ndarray:
    """cos(theta)|D32> - sin(theta)|D52>, with no P3/2 amplitude."""
    psi = np.zeros(N_LEVELS, dtype=complex)
    psi[Level.D32] = math.cos(theta)
    psi[Level.D52] = -math.sin(theta)
    return psi


def dark_population(rho: np.ndarray, theta: float) -> float:
    psi = dark_state(theta)
    return float(np.real(psi.conj() @ rho @ psi))


@dataclass
class AdiabaticityTrace:
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    omega_eff: np.ndarray
    ratio: np.ndarray

    def rows(self):
        return np.column_stack([self.t, self.theta, self.theta_dot, self.omega_eff, self.ratio])

    def max_ratio(self, threshold: float = 0.01) -> float:
        """Largest |theta_dot| / omega_eff where omega_eff exceeds ``threshold`` of its peak."""
        mask = self.omega_eff > threshold * np.max(self.omega_eff)
        return float(np.max(self.ratio[mask]))


def _beam(seq: PulseSequence, laser: int, t: float) -> tuple[float, float]:
    # the beam follows whichever of its pulses is currently largest
    best, slope = 0.0, 0.0
    for lz, p in seq.pulses():
        if lz != laser:
            continue
        v = rabi_envelope(p, t)
        if v > best:
            best, slope = v, rabi_envelope_derivative(p, t)
    return best, slope


def adiabaticity_trace(pulses: PulseSequence, sample_times) -> AdiabaticityTrace:
    """Mixing angle, its analytic rate and the local ratio |theta_dot| / omega_eff."""
    ts = np.asarray(sample_times, dtype=float)
    theta, theta_dot, omega_eff = (np.empty_like(ts) for _ in range(3))
    for i, t in enumerate(ts):
        op, dop = _beam(pulses, PUMP, t)
        os, dos = _beam(pulses, STOKES, t)
        w2 = op * op + os * os
        omega_eff[i] = math.sqrt(w2)
        if w2 == 0:
            theta[i], theta_dot[i] = math.nan, math.nan
            continue
        theta[i] = math.atan2(op, os)
        theta_dot[i] = (os * dop - op * dos) / w2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(omega_eff > 0, np.abs(theta_dot) / omega_eff, np.inf)
    return AdiabaticityTrace(ts, theta, theta_dot, omega_eff, ratio)
