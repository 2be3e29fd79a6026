from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab import aikyon
from collapse_lab.acceptance import coupled_spec
from collapse_lab.errors import ConfigurationError, DegenerateLagrangianError
from collapse_lab.graded import GradedDimension, GradedMatrix, OperatorPolynomial
from collapse_lab.trace_dynamics import (LagrangianSpec, PhasePoint, adler_millard, canonical_momenta,
                                         consistent_convention, integrate_eom, liouville_jacobian,
                                         oscillator_spec, random_hermitian, random_unitary, solve_velocities,
                                         trace_hamiltonian, trace_lagrangian, ward_equipartition)

N4 = GradedDimension(4, 0)


def herm(n, seed, scale=1.0):
    return random_hermitian(n, np.random.default_rng(seed), scale)


def point(q, p, dim=N4):
    return PhasePoint.from_arrays(dim, [q], [p], (1,))


def test_oscillator_momentum_is_twice_velocity():
    spec = oscillator_spec(4)
    q, v = GradedMatrix(N4, herm(4, 1)), GradedMatrix(N4, herm(4, 2))
    (p,) = canonical_momenta(spec, [q], [v])
    assert p.allclose(2 * v)


def test_linear_velocity_term_gives_constant_momentum():
    p0 = GradedMatrix(N4, herm(4, 3))
    spec = LagrangianSpec(OperatorPolynomial.build([(1, ("q_dot", "p0"))]), ("q",), (1,), N4, {"p0": p0})
    (p,) = canonical_momenta(spec, [GradedMatrix(N4, herm(4, 4))], [GradedMatrix(N4, herm(4, 5))])
    assert p.allclose(p0)
    with pytest.raises(DegenerateLagrangianError):
        solve_velocities(spec, point(herm(4, 4), herm(4, 5)))


def test_oscillator_legendre_transform():
    spec = oscillator_spec(4)
    q, p = herm(4, 6), herm(4, 7)
    expected = np.trace(p @ p / 4 + q @ q)
    assert trace_hamiltonian(spec, point(q, p)) == pytest.approx(expected, rel=1e-13)
    free = LagrangianSpec(OperatorPolynomial.build([(1, ("q_dot", "q_dot"))]), ("q",), (1,), N4)
    assert trace_hamiltonian(free, point(q, p)) == pytest.approx(np.trace(p @ p) / 4, rel=1e-13)
    # static point: q' = 0 leaves H = Tr q^2
    assert trace_hamiltonian(spec, point(q, np.zeros((4, 4)))) == pytest.approx(np.trace(q @ q), rel=1e-13)


def test_lagrangian_and_hamiltonian_are_legendre_pair():
    spec = coupled_spec(3)
    rng = np.random.default_rng(8)
    dim = spec.dim
    q = [GradedMatrix(dim, random_hermitian(3, rng)) for _ in spec.coords]
    p = [GradedMatrix(dim, random_hermitian(3, rng)) for _ in spec.coords]
    pt = PhasePoint(q, p, spec.grades)
    v = solve_velocities(spec, pt)
    back = canonical_momenta(spec, q, v)
    for a, b in zip(back, p):
        assert a.allclose(b, atol=1e-12)
    pv = sum(np.trace(a.full @ b.full) for a, b in zip(p, v))
    assert trace_hamiltonian(spec, pt) == pytest.approx(pv - trace_lagrangian(spec, q, v), rel=1e-12)


def test_scalar_limit_is_cosine():
    spec = oscillator_spec(3)
    n = 1000
    tr = integrate_eom(spec, point(np.eye(3), np.zeros((3, 3)), GradedDimension(3, 0)), np.pi / 2 / n, n)
    np.testing.assert_allclose(tr.q[-1][0], np.zeros((3, 3)), atol=1e-8)
    mid = tr.q[n // 2][0]
    np.testing.assert_allclose(mid, np.cos(np.pi / 4) * np.eye(3), atol=1e-10)


def test_random_oscillator_conserves_energy_and_charge():
    spec = oscillator_spec(4)
    tr = integrate_eom(spec, point(herm(4, 9, 0.5), herm(4, 10, 0.5)), 0.01, 2000, record_every=50)
    rep = tr.report
    assert rep.energy_drift <= 1e-8
    assert rep.charge_relative_drift <= 1e-8
    assert np.max(rep.anti_hermitian_defect) <= 1e-10 * max(1.0, rep.charge_norm0)


def test_commuting_start_has_zero_charge_forever():
    q, p = np.diag([1.0, -0.5, 0.3, 2.0]), np.diag([0.2, 0.1, -1.0, 0.4])
    tr = integrate_eom(oscillator_spec(4), point(q, p), 0.01, 300, record_every=30)
    assert tr.report.charge_norm0 == 0
    assert np.max(tr.report.charge_drift) <= 1e-12


def test_anharmonic_charge_conserved():
    tr = integrate_eom(oscillator_spec(3, coupling=0.3), point(herm(3, 11, 0.5), herm(3, 12, 0.5),
                                                               GradedDimension(3, 0)), 0.005, 1000, 100)
    assert tr.report.charge_relative_drift <= 1e-8
    assert tr.report.energy_drift <= 1e-8


def _fermionic_spec(mode):
    dim = GradedDimension(2, 2)
    poly = OperatorPolynomial.build([(1, ("q_dot", "q_dot")), (-1, ("q", "q")), (1, ("q", "f_dot", "f_dot")),
                                     (0.5, ("f_dot", "f_dot")), (-1, ("f", "f", "q"))])
    spec = LagrangianSpec(poly, ("q", "f"), (1, -1), dim, trace_mode=mode)
    rng = np.random.default_rng(1)
    q = GradedMatrix.random(dim, 0, rng, True) * 0.3 + GradedMatrix.identity(dim) * 2
    p = GradedMatrix.random(dim, 0, rng, True) * 0.3
    f, pf = (GradedMatrix.random(dim, 1, rng, True) * 0.3 for _ in range(2))
    return spec, PhasePoint((q, f), (p, pf), (1, -1))


@pytest.mark.parametrize("mode", ["super", "ordinary"])
def test_each_trace_mode_conserves_its_own_charge(mode):
    spec, pt = _fermionic_spec(mode)
    own = integrate_eom(spec, pt, 1e-3, 400, record_every=40)
    assert own.report.convention == consistent_convention(mode)
    assert own.report.charge_relative_drift <= 1e-7
    other = "commutator" if own.report.convention == "graded" else "graded"
    assert integrate_eom(spec, pt, 1e-3, 400, 40, convention=other).report.charge_relative_drift > 1e-3


def test_adler_millard_conventions():
    dim = GradedDimension(1, 1)
    q = GradedMatrix.from_blocks(dim, b=[[1.0]], c=[[2.0]])
    p = GradedMatrix.from_blocks(dim, b=[[3.0]], c=[[5.0]])
    pt = PhasePoint((q,), (p,), (-1,))
    qp, pq = q.full @ p.full, p.full @ q.full
    np.testing.assert_allclose(adler_millard(pt).full, -(qp + pq))
    np.testing.assert_allclose(adler_millard(pt, "commutator").full, qp - pq)
    with pytest.raises(ConfigurationError):
        adler_millard(pt, "weird")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_global_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    spec = coupled_spec(3)
    q = [random_hermitian(3, rng) for _ in spec.coords]
    p = [random_hermitian(3, rng) for _ in spec.coords]
    pt = PhasePoint.from_arrays(spec.dim, q, p, spec.grades)
    u = random_unitary(3, rng)
    h0, h1 = trace_hamiltonian(spec, pt), trace_hamiltonian(spec, pt.conjugated(u))
    assert abs(h1 - h0) <= 1e-12 * max(1.0, abs(h0))
    v = solve_velocities(spec, pt)
    qg = [GradedMatrix(spec.dim, m) for m in q]
    l0 = trace_lagrangian(spec, qg, v)
    ud = u.conj().T
    l1 = trace_lagrangian(spec, [GradedMatrix(spec.dim, u @ m.full @ ud) for m in qg],
                          [GradedMatrix(spec.dim, u @ m.full @ ud) for m in v])
    assert abs(l1 - l0) <= 1e-12 * max(1.0, abs(l0))


def test_rk4_map_preserves_phase_volume():
    j = liouville_jacobian(oscillator_spec(2, coupling=0.2), point(herm(2, 13), herm(2, 14), GradedDimension(2, 0)),
                           0.01)
    assert j == pytest.approx(1.0, abs=1e-8)


def test_aikyon_lagrangian_cross_check():
    rng = np.random.default_rng(15)
    cfg = aikyon.AikyonConfig.random(3.0, 1.0, rng)
    dim = cfg.beta1.dim
    vb, vf = GradedMatrix.random(dim, 0, rng), GradedMatrix.random(dim, 1, rng)
    spec = aikyon.lagrangian_spec(cfg)
    zero_b, zero_f = GradedMatrix.zeros(dim), GradedMatrix.zeros(dim)
    pb, pf = canonical_momenta(spec, [zero_b, zero_f], [vb, vf])
    cb, cf = aikyon.aikyon_momenta(cfg, vb, vf)
    assert pb.allclose(cb, atol=1e-12) and pf.allclose(cf, atol=1e-12)
    assert trace_lagrangian(spec, [zero_b, zero_f], [vb, vf]) == pytest.approx(
        aikyon.aikyon_lagrangian(cfg, vb, vf), rel=1e-12)


def test_spec_validation():
    poly = OperatorPolynomial.build([(1, ("q_dot", "q_dot", "q_dot"))])
    with pytest.raises(ConfigurationError):
        LagrangianSpec(poly, ("q",), (1,), N4)
    with pytest.raises(ConfigurationError):
        LagrangianSpec(OperatorPolynomial.build([(1, ("x",))]), ("q",), (1,), N4)
    with pytest.raises(ConfigurationError):
        LagrangianSpec(OperatorPolynomial.build([(1, ("q",))]), ("q",), (2,), N4)
    with pytest.raises(ConfigurationError):
        integrate_eom(oscillator_spec(4), point(herm(4, 1), herm(4, 2)), -0.1, 10)


def test_ward_unit_quadratic():
    h = OperatorPolynomial.build([(1, ("q", "q"))])
    rep = ward_equipartition(h, 1.0, 20_000, seed=1, variables=("q",), n=2)
    assert rep.passed
    assert {c.coordinate_class for c in rep.classes} == {"diag", "offdiag-re", "offdiag-im"}
    for c in rep.classes:
        assert abs(c.mean - 1.0) <= 3 * c.sem


def test_ward_temperature_and_coefficient_independence():
    h = OperatorPolynomial.build([(1, ("q", "q")), (2, ("p", "p"))])
    rep = ward_equipartition(h, 2.0, 20_000, seed=2, variables=("q", "p"), n=2)
    for c in rep.classes:
        assert c.expected == 0.5
        assert abs(c.mean - 0.5) <= 3 * c.sem


def test_ward_rejects_unbounded_hamiltonian():
    h = OperatorPolynomial.build([(-1, ("q", "q"))])
    with pytest.raises(ConfigurationError):
        ward_equipartition(h, 1.0, 100, seed=0, variables=("q",), n=2)


def test_ward_worker_invariance():
    h = OperatorPolynomial.build([(1, ("q", "q"))])
    a = ward_equipartition(h, 1.0, 3000, seed=4, variables=("q",), n=2, workers=1)
    b = ward_equipartition(h, 1.0, 3000, seed=4, variables=("q",), n=2, workers=2)
    assert [c.mean for c in a.classes] == [c.mean for c in b.classes]
