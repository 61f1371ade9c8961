"""Gaussian Raman pulse envelopes with residual floors and switch-off cutoffs.

Times are in seconds and Rabi frequencies in rad/s throughout.  ``sigma`` is
the 1/e half width of the *intensity* Gaussian, so the Rabi envelope
exp[-(t - t0)^2 / (2 sigma^2)] is wider by sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numba
import numpy as np

PUMP, STOKES = 0, 1  # 850 nm and 854 nm beams
LASER_NAMES = {PUMP: "850", STOKES: "854"}

RF_OFF_DELAY = 10e-6
SHUTTER_DELAY = 100e-6
SUPPORT_SIGMAS = 4.0

# column layout of the table handed to the integrator kernel
(COL_LASER, COL_OMEGA, COL_CENTER, COL_SIGMA, COL_FLOOR,
 COL_RF_OFF, COL_SUPPRESS, COL_SHUTTER) = range(8)
N_COLS = 8


@numba.njit(cache=True, nogil=True)
def _envelope(omega, center, sigma, floor, rf_off, suppress, shutter, t):
    if t >= shutter:
        return 0.0
    x = (t - center) / sigma
    g = math.exp(-0.5 * x * x)
    if g < floor:
        g = floor
    if t >= rf_off:
        g *= suppress
    return omega * g


@numba.njit(cache=True, nogil=True)
def beam_rabi(table, laser, t):
    """Rabi frequency of one beam: the largest envelope among its pulses."""
    out = 0.0
    for k in range(table.shape[0]):
        if int(table[k, 0]) != laser:
            continue
        v = _envelope(table[k, 1], table[k, 2], table[k, 3], table[k, 4],
                      table[k, 5], table[k, 6], table[k, 7], t)
        if v > out:
            out = v
    return out


@dataclass(frozen=True)
class PulseParams:
    omega_peak: float
    center: float
    sigma: float
    floor_fraction: float = 0.0
    rf_off_time: float = math.inf
    rf_suppression_db: float = 100.0
    shutter_time: float = math.inf

    def __post_init__(self):
        if self.omega_peak < 0:
            raise ValueError("omega_peak must be >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if not 0 <= self.floor_fraction < 1:
            raise ValueError("floor_fraction must lie in [0, 1)")
        if self.rf_off_time > self.shutter_time:
            raise ValueError("rf_off_time must not come after shutter_time")

    @property
    def suppression(self) -> float:
        # dB refers to optical power; Rabi frequency goes as its square root
        return 10.0 ** (-self.rf_suppression_db / 20.0)

    def row(self, laser: int) -> list[float]:
        return [laser, self.omega_peak, self.center, self.sigma, self.floor_fraction,
                self.rf_off_time, self.suppression, self.shutter_time]


def rabi_envelope(p: PulseParams, t):
    """Rabi frequency of a single pulse at time(s) ``t``."""
    if np.ndim(t) == 0:
        return _envelope(p.omega_peak, p.center, p.sigma, p.floor_fraction,
                         p.rf_off_time, p.suppression, p.shutter_time, float(t))
    return np.array([rabi_envelope(p, ti) for ti in np.asarray(t, dtype=float)])


def rabi_envelope_derivative(p: PulseParams, t: float) -> float:
    """Analytic dOmega/dt; zero where the floor or a cutoff is in force."""
    if t >= p.shutter_time:
        return 0.0
    x = (t - p.center) / p.sigma
    g = math.exp(-0.5 * x * x)
    if g < p.floor_fraction:
        return 0.0
    d = -p.omega_peak * g * (t - p.center) / p.sigma**2
    return d * p.suppression if t >= p.rf_off_time else d


class PulseSequence:
    """Shared behaviour of a single pair and a train of pairs."""

    def pulses(self) -> list[tuple[int, PulseParams]]:
        raise NotImplementedError

    def table(self) -> np.ndarray:
        return np.array([p.row(laser) for laser, p in self.pulses()], dtype=np.float64)

    @property
    def start(self) -> float:
        return min(p.center - SUPPORT_SIGMAS * p.sigma for _, p in self.pulses())

    @property
    def end(self) -> float:
        return max(p.shutter_time for _, p in self.pulses())

    def breakpoints(self) -> list[float]:
        """Times where the envelopes jump (RF switch-off, shutter)."""
        ts = set()
        for _, p in self.pulses():
            ts.update(x for x in (p.rf_off_time, p.shutter_time) if math.isfinite(x))
        return sorted(ts)

    def rabi(self, t) -> tuple:
        """(Omega_850, Omega_854) at time(s) ``t``."""
        tab = self.table()
        if np.ndim(t) == 0:
            return beam_rabi(tab, PUMP, float(t)), beam_rabi(tab, STOKES, float(t))
        ts = np.asarray(t, dtype=float)
        return (np.array([beam_rabi(tab, PUMP, x) for x in ts]),
                np.array([beam_rabi(tab, STOKES, x) for x in ts]))

    def scaled(self, factor: float):
        raise NotImplementedError


@dataclass(frozen=True)
class PulsePair(PulseSequence):
    """850 nm pump and 854 nm Stokes pulse.

    ``delta_tau`` is pump centre minus Stokes centre, so a positive delay is
    the counter-intuitive order (Stokes first).
    """

    pump: PulseParams
    stokes: PulseParams
    delta_tau: float

    def __post_init__(self):
        if not math.isclose(self.pump.center - self.stokes.center, self.delta_tau,
                            rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError("pump.center - stokes.center must equal delta_tau")

    def pulses(self):
        return [(PUMP, self.pump), (STOKES, self.stokes)]

    def scaled(self, factor: float) -> "PulsePair":
        return replace(self,
                       pump=replace(self.pump, omega_peak=self.pump.omega_peak * factor),
                       stokes=replace(self.stokes, omega_peak=self.stokes.omega_peak * factor))

    def shifted(self, dt: float) -> "PulsePair":
        def mv(p):
            return replace(p, center=p.center + dt, rf_off_time=p.rf_off_time + dt,
                           shutter_time=p.shutter_time + dt)
        return replace(self, pump=mv(self.pump), stokes=mv(self.stokes))

    @property
    def support(self) -> float:
        return abs(self.delta_tau) + SUPPORT_SIGMAS * (self.pump.sigma + self.stokes.sigma)


def stirap_pair(delta_tau: float, sigma: float, omega850: float, omega854: float,
                floor850: float = 0.0, floor854: float = 0.0, *,
                rf_off_time: float | None = None, shutter_time: float | None = None,
                rf_suppression_db: float = 100.0, rf_off_delay: float = RF_OFF_DELAY,
                shutter_delay: float = SHUTTER_DELAY) -> PulsePair:
    """Build a pulse pair with the pump at +delta_tau/2 and the Stokes at -delta_tau/2.

    Unless given explicitly, the RF switch acts ``rf_off_delay`` after the
    later peak and the shutter closes ``shutter_delay`` after the sequence
    starts (never before the switch-off).
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    c_pump, c_stokes = 0.5 * delta_tau, -0.5 * delta_tau
    if rf_off_time is None:
        rf_off_time = max(c_pump, c_stokes) + rf_off_delay
    if shutter_time is None:
        shutter_time = max(min(c_pump, c_stokes) - SUPPORT_SIGMAS * sigma + shutter_delay,
                           rf_off_time)
    common = dict(sigma=sigma, rf_off_time=rf_off_time, shutter_time=shutter_time,
                  rf_suppression_db=rf_suppression_db)
    return PulsePair(
        pump=PulseParams(omega850, c_pump, floor_fraction=floor850, **common),
        stokes=PulseParams(omega854, c_stokes, floor_fraction=floor854, **common),
        delta_tau=delta_tau,
    )


@dataclass(frozen=True)
class PulseTrain(PulseSequence):
    """Consecutive pulse pairs sharing one RF switch-off and one shutter."""

    pairs: tuple[PulsePair, ...]
    pair_spacing: float

    def pulses(self):
        out = []
        for pair in self.pairs:
            out.extend(pair.pulses())
        return out

    def scaled(self, factor: float) -> "PulseTrain":
        return replace(self, pairs=tuple(p.scaled(factor) for p in self.pairs))

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


def multi_pair_train(n_pairs: int, base: PulsePair, spacing: float) -> PulseTrain:
    """Alternate forward and backward transfers, ``spacing`` apart.

    Odd-numbered pairs (1st, 3rd, ...) keep ``base`` and move D3/2 to D5/2;
    even-numbered ones swap the pulse timing of the two beams so the 850 nm
    pulse leads and population returns to D3/2.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if n_pairs > 1 and spacing <= base.support:
        raise ValueError(
            f"pairs overlap: spacing {spacing:.3g} s must exceed pulse support {base.support:.3g} s")
    pairs = []
    for k in range(n_pairs):
        pair = base if k % 2 == 0 else replace(
            base,
            pump=replace(base.pump, center=base.stokes.center),
            stokes=replace(base.stokes, center=base.pump.center),
            delta_tau=-base.delta_tau,
        )
        pairs.append(pair.shifted(k * spacing) if k else pair)

    if n_pairs > 1:
        last = pairs[-1]
        rf_off = max(last.pump.center, last.stokes.center) + RF_OFF_DELAY
        start = min(p.center - SUPPORT_SIGMAS * p.sigma for pr in pairs for _, p in pr.pulses())
        shutter = max(start + SHUTTER_DELAY, rf_off)

        def cut(p):
            return replace(p, rf_off_time=rf_off, shutter_time=shutter)
        pairs = [replace(pr, pump=cut(pr.pump), stokes=cut(pr.stokes)) for pr in pairs]
    return PulseTrain(pairs=tuple(pairs), pair_spacing=spacing)


def beam_scale(radial_offset: float, waist: float) -> float:
    """Rabi-frequency factor for an ion ``radial_offset`` from a Gaussian beam axis."""
    if not waist > 0:
        raise ValueError("waist must be > 0")
    return math.exp(-(radial_offset / waist) ** 2)


def envelope_trace(seq: PulseSequence, times: Sequence[float]) -> np.ndarray:
    """Rows of (t, Omega_850, Omega_854)."""
    ts = np.asarray(times, dtype=float)
    o850, o854 = seq.rabi(ts)
    return np.column_stack([ts, o850, o854])


def rebuild_pair(pair: PulsePair, *, delta_tau: float | None = None,
                 sigma: float | None = None) -> PulsePair:
    """Same beams and floors as ``pair`` with a new delay and/or width.

    Switch-off and shutter times keep their offsets from the later peak and
    from the sequence start.
    """
    later = max(pair.pump.center, pair.stokes.center)
    return stirap_pair(
        pair.delta_tau if delta_tau is None else delta_tau,
        pair.pump.sigma if sigma is None else sigma,
        pair.pump.omega_peak, pair.stokes.omega_peak,
        pair.pump.floor_fraction, pair.stokes.floor_fraction,
        rf_suppression_db=pair.pump.rf_suppression_db,
        rf_off_delay=pair.pump.rf_off_time - later,
        shutter_delay=pair.pump.shutter_time - pair.start,
    )
