import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import MHZ, US, quick_pair
from stirapsim.atom import (
    DecayChannel, DensityMatrixError, Level, LevelScheme, default_scheme, maximally_mixed,
    pure_state, validate,
)
from stirapsim.dynamics import (
    HERM_TOL, PSD_TOL, TRACE_TOL, IntegrationError, RamanParams, SimModel, build_hamiltonian,
    coherence_d32_d52, evolve, evolve_fixed_rk4, lindblad_rhs, transfer_efficiency,
)
from stirapsim.pulses import PulseParams, PulsePair, stirap_pair


def no_decay():
    return default_scheme().without_decay()


def test_free_hamiltonian_is_diagonal():
    m = SimModel(stirap_pair(0, US, 0.0, 0.0), RamanParams(delta_one=7.0, delta_two=3.0))
    H = build_hamiltonian(m, 0.0)
    # the D5/2 entry carries -delta_two; see the sign convention in the kernel
    assert np.allclose(H, np.diag([0, 0, 0, 7.0, -3.0]))


def test_hamiltonian_couplings_follow_envelopes(quick_model):
    for t in (-1e-6, 0.0, 0.5e-6):
        H = build_hamiltonian(quick_model, t)
        o850, o854 = quick_model.pulses.rabi(t)
        assert np.array_equal(H, H.conj().T)
        assert H[Level.P32, Level.D32] == pytest.approx(o850 / 2)
        assert H[Level.P32, Level.D52] == pytest.approx(o854 / 2)
        assert not H[Level.S12].any() and not H[Level.P12].any()


def test_rate_equation_limit():
    g = 1e7
    scheme = LevelScheme(decays=(DecayChannel(Level.P32, Level.S12, g),))
    m = SimModel(stirap_pair(0, US, 0.0, 0.0), RamanParams(delta_one=0.0), scheme)
    d = lindblad_rhs(m, pure_state(Level.P32), 0.0)
    assert d[Level.P32, Level.P32].real == pytest.approx(-g)
    assert d[Level.S12, Level.S12].real == pytest.approx(g)


def test_rhs_matches_kernel_and_is_traceless(quick_model):
    from stirapsim import _kernels
    m = quick_model.with_raman(dephase_850=3e4, dephase_854=5e4)
    rng = np.random.default_rng(1)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    for t in (-2e-6, 0.1e-6, 1e-6):
        ref = lindblad_rhs(m, rho, t)
        out = np.empty_like(rho)
        _kernels.lindblad(*m.kernel_args(), t, rho, out, np.empty_like(rho))
        assert np.allclose(out, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
        assert abs(np.trace(ref)) <= 1e-12 * np.linalg.norm(ref)


def test_dephasing_damps_only_optical_coherences():
    m = SimModel(stirap_pair(0, US, 0.0, 0.0), RamanParams(dephase_850=2.0, dephase_854=6.0))
    G = m.dephasing_matrix()
    # each jump operator also shifts P3/2 against the other D level, at a quarter of the rate
    assert G[Level.P32, Level.D32] == pytest.approx(2.0 + 6.0 / 4)
    assert G[Level.P32, Level.D52] == pytest.approx(6.0 + 2.0 / 4)
    assert G[Level.D32, Level.D52] == pytest.approx((2.0 + 6.0) / 4)
    assert np.all(np.diag(G) == 0)
    with pytest.raises(ValueError):
        RamanParams(dephase_850=-1.0)


def test_two_level_rabi_oscillation():
    # a flat-topped 850 pulse: huge sigma makes the envelope constant over the window
    omega = 2 * math.pi * 5e6
    pump = PulseParams(omega, 0.0, 1.0)
    stokes = PulseParams(0.0, 0.0, 1.0)
    m = SimModel(PulsePair(pump, stokes, 0.0), RamanParams(delta_one=0.0), no_decay(),
                 t_start=0.0, t_end=5 * 2 * math.pi / omega, tol_rel=1e-11, tol_abs=1e-13)
    ts = np.linspace(0.0, m.t_end, 101)
    res = evolve(m, pure_state(Level.D32), ts)
    p = res.populations()[:, Level.P32]
    om = omega * np.exp(-0.5 * ts ** 2)
    assert np.max(np.abs(p - np.sin(om * ts / 2) ** 2)) < 1e-7


def test_frozen_without_pulses_or_decay():
    rho0 = maximally_mixed()
    rho0[Level.D32, Level.D52] = rho0[Level.D52, Level.D32] = 0.05
    m = SimModel(stirap_pair(0, US, 0.0, 0.0), RamanParams(delta_one=0, delta_two=0), no_decay(),
                 t_start=0.0, t_end=20 * US)
    assert np.allclose(evolve(m, rho0).rho, rho0, atol=1e-12)


def test_unitary_limit_keeps_purity():
    m = SimModel(quick_pair(floors=(0, 0)), RamanParams(delta_two=-1 * MHZ), no_decay(),
                 t_start=-8 * US, t_end=8 * US)
    rho = evolve(m, pure_state(Level.D32)).rho
    assert abs(np.trace(rho @ rho).real - 1) < 1e-7


def test_integrity_and_convergence(quick_model):
    loose = evolve(replace(quick_model, tol_rel=1e-7, tol_abs=1e-10), pure_state(Level.D32))
    tight = evolve(quick_model, pure_state(Level.D32))
    finer = evolve(replace(quick_model, tol_rel=5e-10, tol_abs=5e-13), pure_state(Level.D32))
    r = validate(tight.rho, TRACE_TOL, PSD_TOL, HERM_TOL)
    assert r.ok
    assert abs(finer.efficiency - tight.efficiency) < abs(tight.efficiency - loose.efficiency) + 1e-9
    assert abs(finer.efficiency - tight.efficiency) < 1e-7


def test_samples_land_on_requested_times(quick_model):
    ts = np.array([quick_model.start, 0.0, 1e-6, quick_model.end])
    res = evolve(quick_model, pure_state(Level.D32), ts)
    assert np.allclose(res.samples[0], pure_state(Level.D32))
    assert np.allclose(res.samples[-1], res.rho)
    with pytest.raises(ValueError):
        evolve(quick_model, pure_state(Level.D32), [1.0, 0.0])


def test_adaptive_matches_rk4_on_short_window():
    m = SimModel(quick_pair(), RamanParams(delta_two=-1 * MHZ), t_start=-6 * US, t_end=12 * US)
    a = evolve(m, pure_state(Level.D32)).rho
    b = evolve_fixed_rk4(m, pure_state(Level.D32), max_step=0.1e-9)
    assert np.max(np.abs(a - b)) < 1e-6


def test_bad_input_state_and_budget(quick_model):
    with pytest.raises(DensityMatrixError):
        evolve(quick_model, 2 * pure_state(Level.D32))
    with pytest.raises(IntegrationError, match="budget") as info:
        evolve(quick_model, pure_state(Level.D32), max_steps=100)
    assert info.value.t is not None


def test_model_invariants():
    with pytest.raises(ValueError):
        SimModel(quick_pair(), t_start=1.0, t_end=0.0)
    with pytest.raises(ValueError):
        SimModel(quick_pair(), tol_rel=0.0)


def test_transfer_efficiency():
    assert transfer_efficiency(pure_state(Level.D52)) == 1.0
    assert transfer_efficiency(pure_state(Level.D32)) == 0.0
    assert coherence_d32_d52(pure_state(Level.D32)) == 0


def test_detuning_sign_asymmetry():
    pair = quick_pair(delta_tau=2 * US)
    effs = {}
    for sign in (+1, -1):
        m = SimModel(pair, RamanParams(delta_two=sign * MHZ))
        effs[sign] = evolve(m, pure_state(Level.D32)).efficiency
    assert effs[+1] < effs[-1]
