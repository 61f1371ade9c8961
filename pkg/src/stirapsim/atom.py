"""Five-level 40Ca+ structure and density-matrix primitives.

Level order (and therefore matrix index order) is S12, P12, D32, P32, D52.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Level(enum.IntEnum):
    S12 = 0
    P12 = 1
    D32 = 2
    P32 = 3
    D52 = 4

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Level.S12: "4S1/2",
    Level.P12: "4P1/2",
    Level.D32: "3D3/2",
    Level.P32: "4P3/2",
    Level.D52: "3D5/2",
}

N_LEVELS = len(Level)

# Energy rank used to check that decays go downhill.
_ENERGY_RANK = {Level.S12: 0, Level.D32: 1, Level.D52: 2, Level.P12: 3, Level.P32: 4}

# Literature values (Gerritsma et al. 2008 lifetimes and branching fractions).
P32_TOTAL_RATE = 1.0 / 6.924e-9
P32_BRANCHING = {Level.S12: 0.9347, Level.D52: 0.0587, Level.D32: 0.0066}
P12_TOTAL_RATE = 1.0 / 7.098e-9
P12_BRANCHING = {Level.S12: 0.9357, Level.D32: 0.0643}
D52_LIFETIME = 1.1

LASER_COUPLINGS = (
    (Level.S12, Level.P12, 397),
    (Level.D32, Level.P12, 866),
    (Level.D32, Level.P32, 850),
    (Level.D52, Level.P32, 854),
)


class DensityMatrixError(ValueError):
    """Raised when a density matrix violates one of its physical bounds."""


@dataclass(frozen=True)
class DecayChannel:
    upper: Level
    lower: Level
    rate: float  # s^-1

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"decay rate must be >= 0, got {self.rate}")
        if self.upper == self.lower:
            raise ValueError("decay channel needs distinct levels")
        if _ENERGY_RANK[self.upper] <= _ENERGY_RANK[self.lower]:
            raise ValueError(f"{self.upper.name} -> {self.lower.name} does not decay downhill")


@dataclass(frozen=True)
class LevelScheme:
    decays: tuple[DecayChannel, ...]
    couplings: tuple[tuple[Level, Level, int], ...] = LASER_COUPLINGS
    levels: tuple[Level, ...] = field(default=tuple(Level))

    def __post_init__(self):
        if len(set(self.levels)) != N_LEVELS:
            raise ValueError("a level scheme needs exactly five distinct levels")
        if set(self.couplings) != set(LASER_COUPLINGS):
            raise ValueError("laser couplings must be the 397/866/850/854 set")

    def total_rate(self, level: Level) -> float:
        """Summed decay rate out of ``level`` (s^-1)."""
        return sum(c.rate for c in self.decays if c.upper == level)

    def decay_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        up = np.array([int(c.upper) for c in self.decays], dtype=np.int64)
        lo = np.array([int(c.lower) for c in self.decays], dtype=np.int64)
        rate = np.array([c.rate for c in self.decays], dtype=np.float64)
        return up, lo, rate

    def without_decay(self) -> "LevelScheme":
        return LevelScheme(decays=(), couplings=self.couplings, levels=self.levels)


def default_scheme(
    p32_rate: float = P32_TOTAL_RATE,
    p32_branching: dict[Level, float] | None = None,
    p12_rate: float = P12_TOTAL_RATE,
    p12_branching: dict[Level, float] | None = None,
    d52_lifetime: float = D52_LIFETIME,
) -> LevelScheme:
    """Build the scheme from total rates and branching fractions.

    D3/2 decay is left out, its lifetime being far longer than anything
    simulated here.
    """
    p32_branching = P32_BRANCHING if p32_branching is None else p32_branching
    p12_branching = P12_BRANCHING if p12_branching is None else p12_branching
    decays = [DecayChannel(Level.P32, lo, p32_rate * f) for lo, f in p32_branching.items()]
    decays += [DecayChannel(Level.P12, lo, p12_rate * f) for lo, f in p12_branching.items()]
    if d52_lifetime > 0 and np.isfinite(d52_lifetime):
        decays.append(DecayChannel(Level.D52, Level.S12, 1.0 / d52_lifetime))
    return LevelScheme(decays=tuple(decays))


def pure_state(level: Level) -> np.ndarray:
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[level, level] = 1.0
    return rho


def maximally_mixed() -> np.ndarray:
    return np.eye(N_LEVELS, dtype=complex) / N_LEVELS


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`.

    ``kind`` is ``None`` when every check passes; otherwise it names the
    worst violated bound and ``magnitude`` how far past zero it went.
    """

    hermiticity: float
    trace_error: float
    min_eigenvalue: float
    kind: str | None = None
    magnitude: float = 0.0

    @property
    def ok(self) -> bool:
        return self.kind is None

    def __str__(self):
        if self.ok:
            return "ok"
        return f"{self.kind} violation {self.magnitude:.3g}"


def validate(rho: np.ndarray, tol_trace: float = 1e-9, tol_psd: float = 1e-9,
             tol_herm: float = 1e-12) -> ValidationReport:
    if tol_trace <= 0 or tol_psd <= 0 or tol_herm <= 0:
        raise ValueError("tolerances must be positive")
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace_err = float(abs(np.trace(rho) - 1.0))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))

    # ratio to tolerance picks the worst offender
    offences = []
    if herm > tol_herm:
        offences.append((herm / tol_herm, "hermiticity", herm))
    if trace_err > tol_trace:
        offences.append((trace_err / tol_trace, "trace", trace_err))
    if -min_eig > tol_psd:
        offences.append((-min_eig / tol_psd, "positivity", -min_eig))
    if not offences:
        return ValidationReport(herm, trace_err, min_eig)
    _, kind, mag = max(offences)
    return ValidationReport(herm, trace_err, min_eig, kind, mag)


def check(rho: np.ndarray, tol_trace: float = 1e-9, tol_psd: float = 1e-9,
          tol_herm: float = 1e-12) -> None:
    report = validate(rho, tol_trace, tol_psd, tol_herm)
    if not report.ok:
        raise DensityMatrixError(str(report))


def population(rho: np.ndarray, level: Level, tol: float = 1e-8) -> float:
    check(rho, tol, tol, 1e-10)
    return float(np.real(rho[level, level]))
