from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab.errors import ConfigurationError, NotNormalizedError
from collapse_lab.qm import (Grid, HamiltonianSpec, WaveFunction, build_grid, cat_state, evolve_unitary,
                             expectation, free_spread, gaussian, moments, norm)


@pytest.mark.parametrize("args, dx", [((5, 0, 4), 1.0), ((2, -1, 1), 2.0), ((256, -10, 10), 20 / 255)])
def test_build_grid_spacing(args, dx):
    assert build_grid(*args).dx == pytest.approx(dx, rel=1e-15)
    assert build_grid(256, -10, 10).dx == pytest.approx(0.078431, abs=1e-6)


@pytest.mark.parametrize("args", [(1, 0, 1), (10, 1, 1), (10, 2, 1), (2.5, 0, 1)])
def test_build_grid_rejects_bad_input(args):
    with pytest.raises(ConfigurationError):
        build_grid(*args)


def test_norm_of_zero_flat_and_gaussian():
    g = Grid(101, -3.0, 5.0)
    assert norm(WaveFunction(g, np.zeros(101))) == 0.0
    flat = WaveFunction(g, np.full(101, 1 / np.sqrt(g.span)))
    assert norm(flat) == pytest.approx(1.0, abs=1e-12)
    g = build_grid(2001, -10, 10)
    psi = WaveFunction(g, np.exp(-g.x**2 / 2) / np.pi**0.25)
    assert norm(psi) == pytest.approx(1.0, abs=1e-6)


def test_expectation_examples():
    g = build_grid(2001, -10, 10)
    assert expectation(gaussian(g, 0.0, 1.0), "q") == pytest.approx(0.0, abs=1e-12)
    assert expectation(gaussian(g, 2.0, 0.7), "q") == pytest.approx(2.0, abs=1e-6)
    # ground state of the unit oscillator: variance 1/2
    assert expectation(gaussian(g, 0.0, np.sqrt(0.5)), "q2") == pytest.approx(0.5, abs=1e-6)
    assert expectation(gaussian(g, 0.0, 1.0), lambda x: x**2) == pytest.approx(1.0, abs=1e-6)


def test_expectation_requires_normalized_state():
    g = build_grid(64, -5, 5)
    with pytest.raises(NotNormalizedError):
        expectation(WaveFunction(g, 2 * gaussian(g).amplitudes))


def test_zero_hamiltonian_leaves_state_unchanged():
    g = build_grid(128, -5, 5)
    psi = gaussian(g, 0.3, 0.5, k0=1.0)
    out = evolve_unitary(psi, HamiltonianSpec.zero(g), 0.37)
    np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)


@pytest.mark.parametrize("boundary", ["periodic", "hard-wall"])
def test_free_packet_spreading(boundary):
    g = build_grid(1024, -40, 40)
    h = HamiltonianSpec.free(g, 1.0, boundary=boundary)
    psi = gaussian(g, 0.0, 1.0)
    dt = 0.005
    for _ in range(1000):
        psi = evolve_unitary(psi, h, dt)
    s = moments(psi).sigma_q
    assert s == pytest.approx(free_spread(1.0, 1000 * dt), rel=0.01)


def test_harmonic_ground_state_is_stationary():
    g = build_grid(512, -10, 10)
    h = HamiltonianSpec.harmonic(g, 1.0, 1.0, boundary="periodic")
    psi0 = gaussian(g, 0.0, np.sqrt(0.5))
    # the discrete ground state differs from the continuum Gaussian by
    # spectral error only, which is far below 1e-8 at this resolution
    psi = psi0
    for _ in range(200):
        psi = evolve_unitary(psi, h, 0.01)
    assert np.max(np.abs(np.abs(psi.amplitudes) - np.abs(psi0.amplitudes))) < 1e-8


def _l2_error(dt, t_end=2.0):
    g = build_grid(4001, -20, 20)
    h = HamiltonianSpec.free(g, 1.0)
    psi = gaussian(g, 0.0, 1.0)
    for _ in range(int(round(t_end / dt))):
        psi = evolve_unitary(psi, h, dt)
    # reference: same spatial discretisation with a much finer step
    ref = gaussian(g, 0.0, 1.0)
    for _ in range(int(round(t_end / (dt / 16)))):
        ref = evolve_unitary(ref, h, dt / 16)
    return np.sqrt(np.sum(np.abs(psi.amplitudes - ref.amplitudes) ** 2) * g.dx)


@pytest.mark.slow
def test_crank_nicolson_is_second_order_in_time():
    ratio = _l2_error(0.2) / _l2_error(0.1)
    assert ratio == pytest.approx(4.0, rel=0.15)


@settings(max_examples=25, deadline=None)
@given(x0=st.floats(-3, 3), sigma=st.floats(0.3, 2.0), k0=st.floats(-3, 3),
       dt=st.floats(0.001, 0.5), boundary=st.sampled_from(["periodic", "hard-wall"]))
def test_unitary_evolution_preserves_norm(x0, sigma, k0, dt, boundary):
    g = build_grid(256, -15, 15)
    psi = gaussian(g, x0, sigma, k0)
    out = evolve_unitary(psi, HamiltonianSpec.harmonic(g, 1.0, 0.5, boundary=boundary), dt)
    assert out.norm_squared() == pytest.approx(psi.norm_squared(), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(d=st.floats(4.0, 8.0), p=st.floats(0.0, 1.0))
def test_cat_state_is_normalized_with_expected_weights(d, p):
    g = build_grid(1024, -15, 15)
    psi = cat_state(g, d, 0.3, np.sqrt(p), np.sqrt(1 - p))
    assert psi.is_normalized()
    right = np.sum(psi.density()[g.x > 0]) * g.dx
    assert right == pytest.approx(p, abs=1e-6)


def test_hamiltonian_validation():
    g = build_grid(16, 0, 1)
    with pytest.raises(ConfigurationError):
        HamiltonianSpec.free(g, -1.0)
    with pytest.raises(ConfigurationError):
        HamiltonianSpec.free(g, 1.0, boundary="reflecting")
    with pytest.raises(ConfigurationError):
        HamiltonianSpec.custom(g, np.zeros(3))
