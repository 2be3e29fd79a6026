from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import rel_entr

from collapse_lab import grw
from collapse_lab.ensemble import stream
from collapse_lab.errors import ConfigurationError, DegenerateJumpError
from collapse_lab.qm import (Grid, HamiltonianSpec, WaveFunction, cat_state, evolve_unitary, expectation,
                             gaussian)


def _amplitude_gaussian(grid, x0, width):
    return WaveFunction(grid, np.exp(-((grid.x - x0) ** 2) / (2 * width**2))).normalized()


def test_jump_on_matching_gaussian_narrows_by_sqrt2():
    g = Grid(2001, -10, 10)
    r_c = 0.8
    out = grw.apply_jump(_amplitude_gaussian(g, 1.5, r_c), 1.5, r_c)
    expected = _amplitude_gaussian(g, 1.5, r_c / np.sqrt(2))
    np.testing.assert_allclose(out.amplitudes, expected.amplitudes, atol=1e-12)


def test_jump_on_cat_selects_the_peak():
    g = Grid(2001, -20, 20)
    d, r_c = 8.0, 0.5
    psi = cat_state(g, 2 * d, 0.5, np.sqrt(0.5), np.sqrt(0.5))
    out = grw.apply_jump(psi, d, r_c)
    assert expectation(out, "q") == pytest.approx(d, abs=r_c)
    assert np.sum(out.density()[g.x < 0]) * g.dx < 1e-20


def test_infinitely_wide_jump_is_identity():
    g = Grid(256, -5, 5)
    psi = gaussian(g, 0.5, 0.7, k0=1.3)
    out = grw.apply_jump(psi, 0.2, 1e6 * g.span)
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-8)


def test_jump_far_from_support_raises():
    g = Grid(256, -5, 5)
    with pytest.raises(DegenerateJumpError):
        grw.apply_jump(gaussian(g, -4.0, 0.05), 4.0, 0.01)


def test_pdf_of_narrow_state_is_gaussian():
    g = Grid(4001, -10, 10)
    r_c = 0.5
    amps = np.zeros(g.n_points)
    amps[g.index_of(1.0)] = 1.0
    psi = WaveFunction(g, amps).normalized()
    p = grw.jump_pdf(psi, r_c)
    x0 = g.x[g.index_of(1.0)]
    analytic = np.exp(-((g.x - x0) ** 2) / r_c**2) / (np.sqrt(np.pi) * r_c)
    kl = np.sum(rel_entr(p * g.dx, analytic * g.dx))
    assert kl < 1e-4


def test_pdf_weights_of_cat_peaks():
    g = Grid(2001, -15, 15)
    psi = cat_state(g, 12.0, 0.5, np.sqrt(0.3), np.sqrt(0.7))
    p = grw.jump_pdf(psi, 0.5)
    assert np.sum(p[g.x > 0]) * g.dx == pytest.approx(0.3, abs=1e-3)
    assert np.sum(p[g.x < 0]) * g.dx == pytest.approx(0.7, abs=1e-3)


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(-3, 3), sigma=st.floats(0.05, 1.5), r_c=st.floats(0.05, 1.0),
       k0=st.floats(-5, 5))
def test_pdf_completeness(x0, sigma, r_c, k0):
    g = Grid(1024, -12, 12)
    p = grw.jump_pdf(gaussian(g, x0, sigma, k0), r_c)
    assert np.sum(p) * g.dx == pytest.approx(1.0, abs=1e-8)
    assert np.all(p >= 0)


def test_sample_from_grid_density_inverts_cdf():
    g = Grid(11, 0, 10)
    p = np.zeros(11)
    p[3] = 1.0
    for u in (0.0, 0.25, 0.5, 0.999):
        assert grw.sample_from_grid_density(p, g, u) == pytest.approx(3 - 0.5 + u)


def test_jump_times_examples():
    assert grw.sample_jump_times(0.0, 10.0, stream(0, "t", 0)) == []
    a = grw.sample_jump_times(2.0, 5.0, stream(7, "t", 0))
    b = grw.sample_jump_times(2.0, 5.0, stream(7, "t", 0))
    assert a == b and a == sorted(a) and all(0 < t <= 5 for t in a)
    counts = grw.poisson_count_trials(10.0, 10.0, 10_000, seed=3)
    assert abs(counts.mean() - 100) <= 3 * np.sqrt(100 / 10_000)
    with pytest.raises(ConfigurationError):
        grw.sample_jump_times(-1.0, 1.0, stream(0, "t", 0))


def test_zero_rate_run_matches_unitary_evolution():
    g = Grid(512, -20, 20)
    h = HamiltonianSpec.free(g, 1.0)
    psi0 = gaussian(g, 0.0, 1.0, k0=0.5)
    params = grw.GrwParams(0.0, 0.5, 2.0, 0.1)
    tr = grw.run_grw(psi0, h, params, stream(0, "grw", 0))
    psi = psi0
    for _ in range(20):
        psi = evolve_unitary(psi, h, 0.1)
    assert tr.jumps == []
    np.testing.assert_allclose(tr.final_state.amplitudes, psi.amplitudes, atol=1e-12)
    assert tr.sigma_q[-1] == pytest.approx(np.sqrt(expectation(psi, "q2")
                                                    - expectation(psi, "q") ** 2), abs=1e-12)


def test_cat_state_is_pinned_by_many_jumps():
    setup = grw.CatSetup(p_plus=0.5, t_total=20.0)
    psi, h, params = setup.build()
    tr = grw.run_grw(psi, h, params, stream(2, "grw", 0))
    assert len(tr.jumps) > 5
    assert tr.sigma_q[-1] <= 2 * setup.r_c
    # <q> wanders by at most ~sigma0 overall: its variance is the lost sigma_q^2
    assert min(abs(tr.mean_q[-1] - 5.0), abs(tr.mean_q[-1] + 5.0)) < 3 * setup.sigma


def test_run_is_deterministic_per_seed():
    setup = grw.CatSetup(p_plus=0.3, record_dt=1.0)
    psi, h, params = setup.build()
    a = grw.run_grw(psi, h, params, stream(11, "grw", 4))
    b = grw.run_grw(psi, h, params, stream(11, "grw", 4))
    np.testing.assert_array_equal(a.mean_q, b.mean_q)
    assert a.jumps == b.jumps


@pytest.mark.parametrize("t, n, expected", [(1e17, 10**23, 1e-6), (1e17, 1, 1e17), (1e17, 2.5e4, 4e12)])
def test_amplification_time(t, n, expected):
    assert grw.amplification_time(t, n) == expected


def test_params_validation():
    with pytest.raises(ConfigurationError):
        grw.GrwParams(-1.0, 0.5, 1.0, 0.1)
    with pytest.raises(ConfigurationError):
        grw.GrwParams(1.0, 0.0, 1.0, 0.1)
    with pytest.raises(ConfigurationError):
        grw.amplification_time(1.0, 0.5)


@pytest.mark.slow
def test_cat_ensemble_born_frequency():
    res = grw.grw_cat_ensemble(grw.CatSetup(p_plus=0.3), 2000, seed=1)
    assert res.n_unresolved == 0
    assert abs(res.frequency_plus - 0.3) <= 3 * res.binomial_sigma


def test_ensemble_is_worker_invariant():
    setup = grw.CatSetup(p_plus=0.3)
    a = grw.grw_cat_ensemble(setup, 60, seed=5, workers=1)
    b = grw.grw_cat_ensemble(setup, 60, seed=5, workers=2)
    assert (a.n_plus, a.n_unresolved) == (b.n_plus, b.n_unresolved)
    np.testing.assert_array_equal(a.surviving_fraction, b.surviving_fraction)
