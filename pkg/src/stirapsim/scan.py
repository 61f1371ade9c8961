"""Parameter scans over delay, two-photon detuning, width and train length."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .atom import Level, pure_state
from .detection import DetectionConfig, measure
from .dynamics import SimModel, evolve, transfer_efficiency
from .ionstring import IonString
from .pulses import PulsePair, PulseTrain, beam_scale, multi_pair_train, rebuild_pair

PARAMETERS = ("delay", "two_photon_detuning", "width", "n_pairs")

# column unit and SI -> column factor for each scanned parameter
UNITS = {
    "delay": ("us", 1e6),
    "two_photon_detuning": ("MHz", 1e-6 / (2 * math.pi)),
    "width": ("us", 1e6),
    "n_pairs": ("", 1.0),
}


class ScanError(RuntimeError):
    """An evaluation failed; ``value`` is the grid point (SI units)."""

    def __init__(self, parameter: str, value: float, cause: Exception):
        super().__init__(f"{parameter} = {value!r}: {cause}")
        self.parameter = parameter
        self.value = value


def base_pair(model: SimModel) -> PulsePair:
    p = model.pulses
    if isinstance(p, PulseTrain):
        return p.pairs[0]
    if not isinstance(p, PulsePair):
        raise TypeError("scans need a PulsePair or PulseTrain base model")
    return p


@dataclass(frozen=True)
class ScanSpec:
    """What to vary, over which values (SI units), around which model.

    ``spacing`` is the pair separation used when the pulses are a train or
    when scanning ``n_pairs``.  With ``delay_ratio`` set, a width scan moves
    the delay along as delta_tau = ratio * sigma.
    """

    parameter: str
    grid: tuple[float, ...]
    base_model: SimModel
    spacing: float | None = None
    delay_ratio: float | None = None

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown scan parameter {self.parameter!r}; pick one of {PARAMETERS}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0:
            raise ValueError("scan grid is empty")
        if not np.all(np.isfinite(g)):
            raise ValueError("scan grid must be finite")
        d = np.diff(g)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("scan grid must be strictly monotone")
        if self.parameter == "width" and np.any(g <= 0):
            raise ValueError("widths must be > 0")
        if self.parameter == "n_pairs":
            if np.any(g < 1) or np.any(g != np.round(g)):
                raise ValueError("n_pairs values must be positive integers")
            if self.spacing is None:
                raise ValueError("an n_pairs scan needs a pair spacing")
        base_pair(self.base_model)

    def model_at(self, value: float) -> SimModel:
        m = self.base_model
        pair = base_pair(m)
        n = m.pulses.n_pairs if isinstance(m.pulses, PulseTrain) else 1
        spacing = self.spacing
        if spacing is None and isinstance(m.pulses, PulseTrain):
            spacing = m.pulses.pair_spacing
        if self.parameter == "two_photon_detuning":
            return m.with_raman(delta_two=float(value))
        if self.parameter == "delay":
            pair = rebuild_pair(pair, delta_tau=float(value))
        elif self.parameter == "width":
            dt = None if self.delay_ratio is None else self.delay_ratio * value
            pair = rebuild_pair(pair, sigma=float(value), delta_tau=dt)
        else:
            n = int(value)
        pulses = pair if n == 1 else multi_pair_train(n, pair, spacing)
        return replace(m, pulses=pulses, t_start=None, t_end=None)


@dataclass
class EfficiencyCurve:
    parameter: str
    rows: list  # (value in SI, model efficiency, measured efficiency or None)
    metadata: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def efficiencies(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    def argmax(self) -> float:
        return float(self.values[int(np.argmax(self.efficiencies))])

    def peak(self) -> float:
        return float(np.max(self.efficiencies))

    def at(self, value: float, rel: float = 1e-9) -> float:
        for v, e, _ in self.rows:
            if math.isclose(v, value, rel_tol=rel, abs_tol=1e-15):
                return e
        raise KeyError(value)

    def to_csv(self) -> str:
        unit, k = UNITS[self.parameter]
        lines = [f"# {key} = {val}" for key, val in self.metadata.items()]
        lines.append(f"# param = {self.parameter}" + (f" [{unit}]" if unit else ""))
        lines.append("param,model_efficiency,measured_efficiency")
        for v, e, m in self.rows:
            pv = f"{int(v)}" if self.parameter == "n_pairs" else f"{v * k:.10g}"
            lines.append(f"{pv},{e:.12f}," + ("" if m is None else f"{m:.12f}"))
        return "\n".join(lines) + "\n"


def _efficiency(model: SimModel) -> float:
    return transfer_efficiency(evolve(model, pure_state(Level.D32)).rho)


def _map(fn: Callable, items: Sequence, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _measured(eff: float, detection: DetectionConfig | None, n_ions: int, seed, index: int):
    if detection is None:
        return None
    # one independent stream per grid row, fixed by the row index
    key = [*np.atleast_1d(seed).tolist(), index]
    return measure(min(max(eff, 0.0), 1.0), n_ions, detection, key).efficiency


def scan(spec: ScanSpec, *, workers: int = 1, detection: DetectionConfig | None = None,
         n_ions: int = 1, seed: int = 0, metadata: dict | None = None) -> EfficiencyCurve:
    """Transfer efficiency at each grid point, starting from pure D3/2."""

    def one(item):
        i, value = item
        try:
            eff = _efficiency(spec.model_at(value))
        except Exception as exc:
            raise ScanError(spec.parameter, value, exc) from exc
        return (float(value), eff, _measured(eff, detection, n_ions, seed, i))

    rows = _map(one, list(enumerate(spec.grid)), workers)
    return EfficiencyCurve(spec.parameter, rows, dict(metadata or {}))


def width_scan(sigmas: Sequence[float], base: SimModel, *, delay_ratio: float | None = 2.0,
               **kw) -> EfficiencyCurve:
    """Scan the pulse width; the delay follows as 2 sigma unless ``delay_ratio`` is None."""
    return scan(ScanSpec("width", tuple(sigmas), base, delay_ratio=delay_ratio), **kw)


def scale_model(model: SimModel, factor: float) -> SimModel:
    return model.with_pulses(model.pulses.scaled(factor))


def string_scan(string: IonString, spec: ScanSpec, *, workers: int = 1,
                **kw) -> list[EfficiencyCurve]:
    """One curve per ion, with both Rabi peaks reduced by the ion's beam factor."""
    curves = []
    seed = kw.pop("seed", 0)
    for ion, r in enumerate(string.radial_offsets()):
        s = beam_scale(float(r), string.waist)
        sub = replace(spec, base_model=scale_model(spec.base_model, s))
        c = scan(sub, workers=workers, seed=[seed, ion], **kw)
        c.metadata.update(radial_offset_um=f"{r * 1e6:.6g}", beam_scale=f"{s:.12g}")
        curves.append(c)
    return curves


def fit_dephasing(base: SimModel, sigma: float, target: float, *, delay_ratio: float = 2.0,
                  rate_max: float = 1e6, tol: float = 1e-3) -> tuple[float, float]:
    """One dephasing rate (s^-1, shared by both lasers) giving ``target`` efficiency at ``sigma``.

    Dephasing only removes population from the dark state, so efficiency
    falls monotonically with the rate and bisection is enough.  When the
    undephased model is already at or below ``target`` the fit pins to 0.
    Returns (rate, efficiency at that rate).
    """
    spec = ScanSpec("width", (sigma,), base, delay_ratio=delay_ratio)
    model = spec.model_at(sigma)

    def eff(rate):
        return _efficiency(model.with_raman(dephase_850=rate, dephase_854=rate))

    e0 = eff(0.0)
    if e0 <= target:
        return 0.0, e0
    lo, hi = 0.0, rate_max
    e_hi = eff(hi)
    if e_hi > target:
        raise ValueError(f"rate_max {rate_max:g} s^-1 still leaves efficiency {e_hi:.3f} above target")
    e_lo = e0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        e = eff(mid)
        if e > target:
            lo, e_lo = mid, e
        else:
            hi, e_hi = mid, e
        if abs(e - target) < 1e-4:
            return mid, e
    return (lo, e_lo) if abs(e_lo - target) <= abs(e_hi - target) else (hi, e_hi)
