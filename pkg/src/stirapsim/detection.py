"""Electron-shelving fluorescence readout and the (L - S) / (L - B) estimator.

An ion left in D5/2 stays dark on the 397 nm cooling transition; every other
ion scatters at ``bright_rate``.  Counts are Poisson on top of a constant
background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CCD_EXPOSURE = 8e-3
PMT_EXPOSURE = 10e-3


@dataclass(frozen=True)
class DetectionConfig:
    exposure: float = CCD_EXPOSURE  # s
    bright_rate: float = 5e5  # detected counts/s from one fluorescing ion
    background_rate: float = 5e3  # counts/s
    d52_lifetime: float = 1.1  # s

    def __post_init__(self):
        if not self.exposure > 0:
            raise ValueError("exposure must be > 0")
        if self.bright_rate < 0 or self.background_rate < 0:
            raise ValueError("count rates must be >= 0")
        if not self.d52_lifetime > 0:
            raise ValueError("d52_lifetime must be > 0")

    @property
    def survival(self) -> float:
        """Time-averaged fraction of the window a shelved ion spends still shelved."""
        x = self.exposure / self.d52_lifetime
        return -math.expm1(-x) / x


def decay_during_detection(p_shelved: float, cfg: DetectionConfig) -> float:
    if not 0.0 <= p_shelved <= 1.0:
        raise ValueError("p_shelved must lie in [0, 1]")
    return p_shelved * cfg.survival


def _mean_counts(n_bright, cfg: DetectionConfig):
    return cfg.exposure * (cfg.background_rate + cfg.bright_rate * n_bright)


def expected_counts(p_shelved: float, n_ions: int, cfg: DetectionConfig) -> float:
    return _mean_counts(n_ions * (1.0 - decay_during_detection(p_shelved, cfg)), cfg)


def simulate_counts(p_shelved: float, n_ions: int, cfg: DetectionConfig, seed,
                    size: int | None = None):
    """Photon counts for ``n_ions`` each shelved with probability ``p_shelved``.

    ``seed`` may be an int or a ready ``numpy.random.Generator``.  With
    ``size`` set, returns an array of independent repetitions.
    """
    if n_ions < 0:
        raise ValueError("n_ions must be >= 0")
    rng = np.random.default_rng(seed)
    q = decay_during_detection(p_shelved, cfg)
    n_dark = rng.binomial(n_ions, q, size=size)
    counts = rng.poisson(_mean_counts(n_ions - n_dark, cfg))
    return counts if size is not None else int(counts)


def background_counts(cfg: DetectionConfig, seed, size: int | None = None):
    """The B level: every ion held dark, only stray light is counted."""
    rng = np.random.default_rng(seed)
    counts = rng.poisson(cfg.exposure * cfg.background_rate, size=size)
    return counts if size is not None else int(counts)


def efficiency_estimator(L, S, B):
    """(L - S) / (L - B), deliberately not clipped to [0, 1]."""
    L, S, B = (np.asarray(x, dtype=float) for x in (L, S, B))
    if np.any(L <= B):
        raise ValueError("bright level L must exceed background B")
    out = (L - S) / (L - B)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Measurement:
    L: int
    S: int
    B: int

    @property
    def efficiency(self) -> float:
        return efficiency_estimator(self.L, self.S, self.B)


def measure(p_shelved: float, n_ions: int, cfg: DetectionConfig, seed) -> Measurement:
    """One simulated L / S / B triple from a single seeded stream."""
    rng = np.random.default_rng(seed)
    L = simulate_counts(0.0, n_ions, cfg, rng)
    S = simulate_counts(p_shelved, n_ions, cfg, rng)
    B = background_counts(cfg, rng)
    return Measurement(L, S, B)


def measure_many(p_shelved: float, n_ions: int, cfg: DetectionConfig, seed, n_trials: int):
    """Vectorised version of :func:`measure`; returns arrays L, S, B."""
    rng = np.random.default_rng(seed)
    L = simulate_counts(0.0, n_ions, cfg, rng, size=n_trials)
    S = simulate_counts(p_shelved, n_ions, cfg, rng, size=n_trials)
    B = background_counts(cfg, rng, size=n_trials)
    return L, S, B


def per_ion_readout(p_shelved_per_ion, cfg: DetectionConfig, seed) -> list[int]:
    """Independent single-ion count streams, one per camera region."""
    ps = list(p_shelved_per_ion)
    if not ps:
        raise ValueError("need at least one ion")
    rng = np.random.default_rng(seed)
    return [simulate_counts(p, 1, cfg, rng) for p in ps]


def discrimination_threshold(cfg: DetectionConfig) -> float:
    """Count level midway between a dark and a bright single ion."""
    return cfg.exposure * (cfg.background_rate + 0.5 * cfg.bright_rate)
