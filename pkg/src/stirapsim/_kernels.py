"""Compiled Lindblad right-hand side and the two time steppers.

Everything here works on the raw arrays built by :mod:`stirapsim.dynamics`;
nothing in this module knows about dataclasses.
"""

import numba
import numpy as np

from .pulses import beam_rabi

D32, P32, D52 = 2, 3, 4

OK, UNDERFLOW, MAX_STEPS = 0, 1, 2

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 10.0
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA


@numba.njit(cache=True, nogil=True)
def hamiltonian(table, d1, d2, t, H):
    H[:, :] = 0.0
    op = beam_rabi(table, 0, t)
    os = beam_rabi(table, 1, t)
    H[P32, P32] = d1
    # Delta_two > 0 is the bright-resonance side of the Raman line
    H[D52, D52] = -d2
    H[P32, D32] = 0.5 * op
    H[D32, P32] = 0.5 * op
    H[P32, D52] = 0.5 * os
    H[D52, P32] = 0.5 * os


@numba.njit(cache=True, nogil=True)
def lindblad(table, d1, d2, up, lo, rate, deph, t, rho, out, H):
    n = rho.shape[0]
    hamiltonian(table, d1, d2, t, H)
    for i in range(n):
        for j in range(n):
            acc = 0j
            for k in range(n):
                acc += H[i, k] * rho[k, j] - rho[i, k] * H[k, j]
            out[i, j] = -1j * acc - deph[i, j] * rho[i, j]
    for c in range(up.shape[0]):
        u, l, g = up[c], lo[c], rate[c]
        out[l, l] += g * rho[u, u]
        for k in range(n):
            out[u, k] -= 0.5 * g * rho[u, k]
            out[k, u] -= 0.5 * g * rho[k, u]


@numba.njit(cache=True, nogil=True)
def dopri5(table, d1, d2, up, lo, rate, deph, rho0, t0, t1, t_cap, rtol, atol, h,
           hmin, max_steps, sample_t, samples, i_sample):
    """Adaptive Dormand-Prince 5(4) with PI step control from ``t0`` to ``t1``.

    Stage times are clipped to ``t_cap`` (the float just below ``t1``) so the
    envelopes are always read on the left of a switch-off at ``t1``.

    Lands exactly on every ``sample_t`` inside the interval, storing the state
    in ``samples``.  Returns (rho, t, h_next, n_accepted, n_rejected, status,
    next_sample_index).
    """
    n = rho0.shape[0]
    H = np.zeros((n, n), dtype=np.complex128)
    y = rho0.copy()
    ynew = np.empty_like(y)
    tmp = np.empty_like(y)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    k5 = np.empty_like(y)
    k6 = np.empty_like(y)
    k7 = np.empty_like(y)
    t = t0
    err_old = 1e-4
    n_acc = 0
    n_rej = 0
    n_samples = sample_t.shape[0]
    while i_sample < n_samples and sample_t[i_sample] <= t0:
        samples[i_sample] = y
        i_sample += 1

    lindblad(table, d1, d2, up, lo, rate, deph, t, y, k1, H)
    rejected = False
    while t < t1:
        if n_acc + n_rej >= max_steps:
            return y, t, h, n_acc, n_rej, MAX_STEPS, i_sample
        if h < hmin:
            return y, t, h, n_acc, n_rej, UNDERFLOW, i_sample
        target = t1
        if i_sample < n_samples and sample_t[i_sample] < t1:
            target = sample_t[i_sample]
        hs = h
        landing = False
        if t + hs >= target or target - t - hs < hmin:
            hs = target - t
            landing = True

        for i in range(n):
            for j in range(n):
                tmp[i, j] = y[i, j] + hs * A21 * k1[i, j]
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + C2 * hs, t_cap), tmp, k2, H)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = y[i, j] + hs * (A31 * k1[i, j] + A32 * k2[i, j])
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + C3 * hs, t_cap), tmp, k3, H)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = y[i, j] + hs * (A41 * k1[i, j] + A42 * k2[i, j] + A43 * k3[i, j])
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + C4 * hs, t_cap), tmp, k4, H)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = y[i, j] + hs * (A51 * k1[i, j] + A52 * k2[i, j] + A53 * k3[i, j]
                                            + A54 * k4[i, j])
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + C5 * hs, t_cap), tmp, k5, H)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = y[i, j] + hs * (A61 * k1[i, j] + A62 * k2[i, j] + A63 * k3[i, j]
                                            + A64 * k4[i, j] + A65 * k5[i, j])
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + hs, t_cap), tmp, k6, H)
        for i in range(n):
            for j in range(n):
                ynew[i, j] = y[i, j] + hs * (A71 * k1[i, j] + A73 * k3[i, j] + A74 * k4[i, j]
                                             + A75 * k5[i, j] + A76 * k6[i, j])
        t_new = target if landing else t + hs
        lindblad(table, d1, d2, up, lo, rate, deph, min(t_new, t_cap), ynew, k7, H)

        err = 0.0
        for i in range(n):
            for j in range(n):
                e = hs * (E1 * k1[i, j] + E3 * k3[i, j] + E4 * k4[i, j]
                          + E5 * k5[i, j] + E6 * k6[i, j] + E7 * k7[i, j])
                sc = atol + rtol * max(abs(y[i, j]), abs(ynew[i, j]))
                r = abs(e) / sc
                err += r * r
        err = np.sqrt(err / (n * n))

        if err <= 1.0:
            err = max(err, 1e-10)
            fac = SAFETY * err ** (-ALPHA) * err_old ** BETA
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected:
                fac = min(fac, 1.0)
            err_old = err
            t = t_new
            y[:, :] = ynew
            k1[:, :] = k7
            n_acc += 1
            rejected = False
            if landing:
                if i_sample < n_samples and target == sample_t[i_sample]:
                    samples[i_sample] = y
                    i_sample += 1
                # a truncated landing step says nothing about the next one
                h = max(h, hs * fac)
            else:
                h = hs * fac
        else:
            n_rej += 1
            rejected = True
            h = hs * max(FAC_MIN, SAFETY * err ** (-ALPHA))
    return y, t, h, n_acc, n_rej, OK, i_sample


@numba.njit(cache=True, nogil=True)
def rk4(table, d1, d2, up, lo, rate, deph, rho0, t0, t1, t_cap, n_steps):
    """Classical fixed-step fourth-order Runge-Kutta (stage times clipped to ``t_cap``)."""
    n = rho0.shape[0]
    H = np.zeros((n, n), dtype=np.complex128)
    y = rho0.copy()
    tmp = np.empty_like(y)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    h = (t1 - t0) / n_steps
    for s in range(n_steps):
        t = t0 + s * h
        lindblad(table, d1, d2, up, lo, rate, deph, t, y, k1, H)
        tmp[:, :] = y + 0.5 * h * k1
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + 0.5 * h, t_cap), tmp, k2, H)
        tmp[:, :] = y + 0.5 * h * k2
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + 0.5 * h, t_cap), tmp, k3, H)
        tmp[:, :] = y + h * k3
        lindblad(table, d1, d2, up, lo, rate, deph, min(t + h, t_cap), tmp, k4, H)
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
