"""Multi-start Nelder-Mead search over pulse delay and width."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .dynamics import SimModel
from .pulses import PulseTrain, multi_pair_train, rebuild_pair
from .scan import _efficiency, base_pair

# starting points in the unit box: centroid, then four corners pulled inside
STARTS = ((0.5, 0.5), (0.2, 0.2), (0.8, 0.2), (0.2, 0.8), (0.8, 0.8))


@dataclass
class OptimizeResult:
    delta_tau: float
    sigma: float
    efficiency: float
    warning: bool
    message: str
    trace: list = field(default_factory=list)  # (start, delta_tau, sigma, efficiency) per evaluation
    restarts: list = field(default_factory=list)  # (start point, end point, efficiency, n_evals)


def model_with(base: SimModel, delta_tau: float, sigma: float) -> SimModel:
    pair = rebuild_pair(base_pair(base), delta_tau=delta_tau, sigma=sigma)
    p = base.pulses
    pulses = multi_pair_train(p.n_pairs, pair, p.pair_spacing) if isinstance(p, PulseTrain) else pair
    return replace(base, pulses=pulses, t_start=None, t_end=None)


def optimize_pulses(bounds, base: SimModel, *, xatol: float = 2e-3, fatol: float = 1e-5,
                    max_evals: int = 120, improve_tol: float = 1e-6) -> OptimizeResult:
    """Maximise transfer efficiency over ``bounds = ((dt_lo, dt_hi), (sig_lo, sig_hi))`` in s.

    Each restart runs a bounded simplex search in coordinates scaled to the
    unit box.  Evaluations are cached, so the same point is never simulated
    twice.  ``warning`` is set when no restart improved on its starting value
    by more than ``improve_tol`` or none met the simplex tolerances.
    """
    (a0, a1), (b0, b1) = bounds
    lo = np.array([a0, b0], dtype=float)
    hi = np.array([a1, b1], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("bounds must be finite")
    if np.any(hi < lo):
        raise ValueError("each lower bound must not exceed its upper bound")
    if lo[1] <= 0:
        raise ValueError("sigma bounds must be > 0")
    free = hi > lo
    span = np.where(free, hi - lo, 1.0)

    cache: dict[tuple[float, float], float] = {}
    trace: list = []
    start_id = [0]

    def point(u):
        x = lo + np.where(free, np.clip(u, 0.0, 1.0), 0.0) * span
        return float(x[0]), float(x[1])

    def efficiency(dt, sig):
        key = (dt, sig)
        if key not in cache:
            cache[key] = _efficiency(model_with(base, dt, sig))
        trace.append((start_id[0], dt, sig, cache[key]))
        return cache[key]

    if not free.any():
        dt, sig = point(np.zeros(2))
        eff = efficiency(dt, sig)
        return OptimizeResult(dt, sig, eff, False, "bounds are a single point", trace)

    idx = np.flatnonzero(free)

    def objective(v):
        u = np.zeros(2)
        u[idx] = v
        return -efficiency(*point(u))

    restarts = []
    best = None
    any_improved = any_converged = False
    for k, s in enumerate(STARTS):
        start_id[0] = k
        v0 = np.asarray(s)[idx]
        if any(np.allclose(v0, r[0]) for r in restarts):
            continue  # only one free axis: corners collapse onto each other
        f0 = objective(v0)
        res = optimize.minimize(objective, v0, method="Nelder-Mead",
                                bounds=[(0.0, 1.0)] * len(idx),
                                options={"xatol": xatol, "fatol": fatol, "maxfev": max_evals,
                                         "initial_simplex": _simplex(v0)})
        restarts.append((v0, res.x, -res.fun, res.nfev))
        any_improved |= res.fun < f0 - improve_tol
        any_converged |= bool(res.success)
        if best is None or res.fun < best.fun:
            best = res

    u = np.zeros(2)
    u[idx] = best.x
    dt, sig = point(u)
    warning = not (any_improved and any_converged)
    msg = "converged" if not warning else (
        "no restart improved on its start" if not any_improved else "simplex tolerances not met")
    restarts = [(point(_full(r[0], idx)), point(_full(r[1], idx)), r[2], r[3]) for r in restarts]
    return OptimizeResult(dt, sig, -float(best.fun), warning, msg, trace, restarts)


def _full(v, idx):
    u = np.zeros(2)
    u[idx] = v
    return u


def _simplex(v0, step=0.1):
    # axis steps pointing into the box
    n = len(v0)
    pts = [np.array(v0, dtype=float)]
    for i in range(n):
        p = np.array(v0, dtype=float)
        p[i] += step if p[i] + step <= 1.0 else -step
        pts.append(p)
    return np.array(pts)


def grid_best(base: SimModel, sigma: float, dt_lo: float, dt_hi: float,
              step: float = 0.1e-6) -> tuple[float, float]:
    """Best (delta_tau, efficiency) on a regular delay grid at fixed width."""
    n = int(math.floor((dt_hi - dt_lo) / step + 1e-9)) + 1
    grid = dt_lo + step * np.arange(n)
    effs = [_efficiency(model_with(base, float(d), sigma)) for d in grid]
    i = int(np.argmax(effs))
    return float(grid[i]), float(effs[i])
