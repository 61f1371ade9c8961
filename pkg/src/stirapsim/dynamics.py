"""Rotating-frame Hamiltonian, Lindblad generator and time evolution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .atom import (
    N_LEVELS,
    DensityMatrixError,
    Level,
    LevelScheme,
    default_scheme,
    population,
    validate,
)
from .pulses import PulseSequence

TWO_PI = 2.0 * math.pi

# integrity bounds every evolved state must meet without renormalisation
TRACE_TOL = 1e-8
PSD_TOL = 1e-8
HERM_TOL = 1e-10


class IntegrationError(RuntimeError):
    """The adaptive stepper could not reach the end time."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class RamanParams:
    """Detunings (rad/s) and laser dephasing rates (s^-1).

    ``delta_one`` > 0 puts both lasers red of the P3/2 resonance.
    """

    delta_one: float = TWO_PI * 600e6
    delta_two: float = 0.0
    dephase_850: float = 0.0
    dephase_854: float = 0.0

    def __post_init__(self):
        if self.dephase_850 < 0 or self.dephase_854 < 0:
            raise ValueError("dephasing rates must be >= 0")


@dataclass(frozen=True)
class SimModel:
    pulses: PulseSequence
    raman: RamanParams = field(default_factory=RamanParams)
    scheme: LevelScheme = field(default_factory=default_scheme)
    t_start: float | None = None
    t_end: float | None = None
    tol_rel: float = 1e-9
    tol_abs: float = 1e-12

    def __post_init__(self):
        if not (self.tol_rel > 0 and self.tol_abs > 0):
            raise ValueError("tolerances must be positive")
        if not self.start < self.end:
            raise ValueError(f"t_start ({self.start}) must precede t_end ({self.end})")

    @property
    def start(self) -> float:
        return self.pulses.start if self.t_start is None else self.t_start

    @property
    def end(self) -> float:
        return self.pulses.end if self.t_end is None else self.t_end

    def with_pulses(self, pulses: PulseSequence) -> "SimModel":
        return replace(self, pulses=pulses)

    def with_raman(self, **kw) -> "SimModel":
        return replace(self, raman=replace(self.raman, **kw))

    def dephasing_matrix(self) -> np.ndarray:
        """Coherence damping from the two laser-linewidth channels.

        A diagonal jump operator with entries l_i at rate g damps rho_ij at
        g/2 (l_i - l_j)^2.
        """
        G = np.zeros((N_LEVELS, N_LEVELS))
        for lower, rate in ((Level.D32, self.raman.dephase_850), (Level.D52, self.raman.dephase_854)):
            ell = np.zeros(N_LEVELS)
            ell[Level.P32], ell[lower] = 1.0, -1.0
            G += 0.5 * (rate / 2.0) * (ell[:, None] - ell[None, :]) ** 2
        return G

    def kernel_args(self):
        up, lo, rate = self.scheme.decay_arrays()
        return (self.pulses.table(), float(self.raman.delta_one), float(self.raman.delta_two),
                up, lo, rate, self.dephasing_matrix())


def build_hamiltonian(model: SimModel, t: float) -> np.ndarray:
    """H/hbar in rad/s at time ``t`` (levels ordered S12, P12, D32, P32, D52)."""
    H = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    table, d1, d2, *_ = model.kernel_args()
    _kernels.hamiltonian(table, d1, d2, float(t), H)
    return H


def lindblad_rhs(model: SimModel, rho: np.ndarray, t: float) -> np.ndarray:
    """d rho / dt written out with explicit jump operators."""
    H = build_hamiltonian(model, t)
    out = -1j * (H @ rho - rho @ H)

    def dissipate(L, g):
        LdL = L.conj().T @ L
        return g * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))

    for ch in model.scheme.decays:
        L = np.zeros((N_LEVELS, N_LEVELS))
        L[ch.lower, ch.upper] = 1.0
        out = out + dissipate(L, ch.rate)
    for lower, rate in ((Level.D32, model.raman.dephase_850), (Level.D52, model.raman.dephase_854)):
        L = np.zeros((N_LEVELS, N_LEVELS))
        L[Level.P32, Level.P32], L[lower, lower] = 1.0, -1.0
        out = out + dissipate(L, rate / 2.0)
    return out


@dataclass
class EvolveResult:
    rho: np.ndarray
    times: np.ndarray
    samples: np.ndarray
    n_steps: int
    n_rejected: int

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.samples))

    @property
    def efficiency(self) -> float:
        return transfer_efficiency(self.rho)


def _segments(model: SimModel) -> list[tuple[float, float]]:
    t0, t1 = model.start, model.end
    cuts = [t for t in model.pulses.breakpoints() if t0 < t < t1]
    edges = [t0, *cuts, t1]
    return list(zip(edges[:-1], edges[1:]))


def evolve(model: SimModel, rho0: np.ndarray, sample_times=None, *,
           max_steps: int = 50_000_000, check: bool = True) -> EvolveResult:
    """Integrate the master equation from ``model.start`` to ``model.end``.

    The step is split at every envelope discontinuity.  The final state is
    returned as integrated, never renormalised; a state outside the
    integrity bounds raises :class:`IntegrationError`.
    """
    rho0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    report = validate(rho0, TRACE_TOL, PSD_TOL, HERM_TOL)
    if not report.ok:
        raise DensityMatrixError(f"initial state: {report}")
    sample_t = np.asarray([] if sample_times is None else sample_times, dtype=np.float64)
    if sample_t.size and (np.any(np.diff(sample_t) < 0) or sample_t[0] < model.start
                          or sample_t[-1] > model.end):
        raise ValueError("sample times must be sorted and inside [t_start, t_end]")
    samples = np.zeros((sample_t.size, N_LEVELS, N_LEVELS), dtype=np.complex128)

    args = model.kernel_args()
    rho = rho0
    h = 1e-12
    i_sample = 0
    n_acc = n_rej = 0
    for a, b in _segments(model):
        hmin = 64 * np.finfo(float).eps * max(abs(a), abs(b), 1e-9)
        if b - a <= hmin:
            continue
        rho, t, h, acc, rej, status, i_sample = _kernels.dopri5(
            *args, rho, a, b, math.nextafter(b, -math.inf), model.tol_rel, model.tol_abs, min(h, b - a), hmin,
            max_steps - n_acc - n_rej, sample_t, samples, i_sample)
        n_acc += acc
        n_rej += rej
        if status == _kernels.UNDERFLOW:
            raise IntegrationError(f"step size underflow at t = {t:.6e} s", t)
        if status == _kernels.MAX_STEPS:
            raise IntegrationError(f"step budget exhausted at t = {t:.6e} s", t)
    while i_sample < sample_t.size:  # samples sitting exactly on t_end
        samples[i_sample] = rho
        i_sample += 1

    if check:
        report = validate(rho, TRACE_TOL, PSD_TOL, HERM_TOL)
        if not report.ok:
            raise IntegrationError(f"final state failed integrity check: {report}", model.end)
    return EvolveResult(rho, sample_t, samples, n_acc, n_rej)


def evolve_fixed_rk4(model: SimModel, rho0: np.ndarray, max_step: float = 1e-10) -> np.ndarray:
    """Reference solution with classical RK4 at a fixed step no larger than ``max_step``.

    Segments between envelope discontinuities each get a whole number of
    equal steps.
    """
    args = model.kernel_args()
    rho = np.ascontiguousarray(rho0, dtype=np.complex128)
    for a, b in _segments(model):
        n = max(1, int(math.ceil((b - a) / max_step)))
        rho = _kernels.rk4(*args, rho, a, b, math.nextafter(b, -math.inf), n)
    return rho


def transfer_efficiency(rho_final: np.ndarray) -> float:
    """Population shelved in D5/2."""
    return population(rho_final, Level.D52)


def coherence_d32_d52(rho: np.ndarray) -> complex:
    return complex(rho[Level.D32, Level.D52])
