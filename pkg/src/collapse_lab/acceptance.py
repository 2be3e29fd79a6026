"""The acceptance criteria as runnable checks.

Each ``criterion_*`` function returns a ``CriterionResult`` whose checks
hold the measured value, the target and the tolerance.  ``run_suite``
runs them in order and ``verify`` adds the determinism check by running
the suite a second time and comparing the CSV bodies.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import stats

from . import aikyon, grw, qmupl, regimes, spectral, units
from .criteria import CRITERION_COLUMNS, CriterionResult, timed, within
from .ensemble import stream
from .graded import GradedDimension, GradedMatrix, OperatorPolynomial
from .io import csv_text
from .qm import Grid, HamiltonianSpec, gaussian
from .trace_dynamics import (LagrangianSpec, PhasePoint, integrate_eom, oscillator_spec,
                             random_hermitian, random_unitary, trace_hamiltonian,
                             trace_lagrangian, solve_velocities, ward_equipartition)


def criterion_heisenberg_floor(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C01", "Heisenberg floor sigma_q sigma_p = hbar/sqrt2", runtime_limit=1e-3)
    masses = [units.M_NUCLEON, units.M_ELECTRON, 1e-3, 1.0]
    with timed(r):
        worst = 0.0
        for m in masses:
            _, sq, sp = qmupl.asymptotic_spreads(m, units.LAMBDA0_SI, units.M_NUCLEON, units.HBAR)
            worst = max(worst, abs(sq * sp * math.sqrt(2) / units.HBAR - 1))
    r.add("max |sigma_q sigma_p sqrt2/hbar - 1|", worst, 0.0, "<= 1e-12", worst <= 1e-12)
    return r


def criterion_spread_stabilization(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C02", "QMUPL free spread stabilisation", runtime_limit=60.0)
    lam = 0.01
    with timed(r):
        grid = Grid(512, -32.0, 32.0)
        h = HamiltonianSpec.free(grid, 1.0, boundary="periodic")
        params = qmupl.QmuplParams(lam=lam, dt=1e-3, n_steps=100_000, seed=seed)
        series = qmupl.run_qmupl(gaussian(grid, 0.0, 1.0), h, params,
                                 rng=stream(seed, "qmupl-free", 0), record_every=1000, comoving=True)
    target = qmupl.asymptotic_sigma_q(lam)
    final = float(series.sigma_q[-1])
    r.add("late-time sigma_q", final, target, "within 10%", within(final, target, 0.10))
    drift = float(np.max(np.abs(series.norm - 1)))
    r.add("max |norm - 1|", drift, 0.0, "<= 1e-8", drift <= 1e-8)
    return r


def criterion_born_rule(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C03", "Born rule in the QMUPL measurement model", runtime_limit=300.0)
    with timed(r):
        res = qmupl.measurement_ensemble(qmupl.MeasurementSetup(), 10_000, seed, workers=workers)
    f, s = res.frequency_plus, res.binomial_sigma
    r.add("plus frequency", f, 0.3, f"within 3 sigma = {3 * s:.4g}", abs(f - 0.3) <= 3 * s)
    frac = res.n_unresolved / len(res.codes)
    r.add("unresolved fraction", frac, 0.0, "<= 0.01", frac <= 0.01)
    return r


def criterion_decoherence(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C04", "Ensemble decoherence rate lam d^2 / 2", runtime_limit=300.0)
    with timed(r):
        res = qmupl.decoherence_ensemble(qmupl.CatDecoherenceSetup(), 1000, seed, workers=workers)
    r.add("fitted rate", res.fitted_rate, res.expected_rate, "within 5%", res.rate_error <= 0.05)
    return r


def grw_centre_histogram(seed: int, n_samples: int = 10_000, n_bins: int = 40):
    """Sampled jump centres vs bin probabilities integrated from ||L(x) psi||^2 by quadrature."""
    setup = grw.CatSetup()
    psi, _, _ = setup.build()
    pdf = grw.jump_pdf(psi, setup.r_c)
    grid = psi.grid
    centres = np.array([grw.sample_from_grid_density(pdf, grid, stream(seed, "grw-centres", i).random())
                        for i in range(n_samples)])
    # Oracle: direct evaluation of ||L(x) psi||^2 on a fine mesh, no convolution.
    x = np.linspace(grid.x_min - grid.dx / 2, grid.x_max + grid.dx / 2, 20 * grid.n_points + 1)
    dens = psi.density()
    kern = np.exp(-((x[:, None] - grid.x[None, :]) ** 2) / setup.r_c**2) / (math.sqrt(math.pi) * setup.r_c)
    p_fine = kern @ dens * grid.dx
    cdf = np.concatenate([[0.0], np.cumsum((p_fine[1:] + p_fine[:-1]) / 2 * np.diff(x))])
    cells_per_bin = grid.n_points // n_bins
    edges = grid.x_min - grid.dx / 2 + grid.dx * cells_per_bin * np.arange(n_bins + 1)
    edges[-1] = x[-1]
    prob = np.diff(np.interp(edges, x, cdf))
    prob /= prob.sum()
    counts = np.histogram(centres, edges)[0]
    expected = prob * n_samples
    keep = expected >= 5
    obs = np.r_[counts[keep], counts[~keep].sum()]
    exp = np.r_[expected[keep], expected[~keep].sum()]
    if exp[-1] < 5:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    chi2, p = stats.chisquare(obs, exp)
    return float(chi2), float(p), int(obs.size)


def criterion_grw_statistics(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C05", "GRW jump statistics", runtime_limit=60.0)
    lam, t_total, n = 1.0, 10.0, 10_000
    with timed(r):
        counts = grw.poisson_count_trials(lam, t_total, n, seed)
        _, p_value, _ = grw_centre_histogram(seed)
        psi, _, _ = grw.CatSetup().build()
        total = float(np.sum(grw.jump_pdf(psi, grw.CatSetup().r_c)) * psi.grid.dx)
    mean, sigma = float(counts.mean()), math.sqrt(lam * t_total / n)
    r.add("mean jump count", mean, lam * t_total, f"within 3 sigma = {3 * sigma:.4g}",
          abs(mean - lam * t_total) <= 3 * sigma)
    r.add("jump-centre chi-square p-value", p_value, 0.01, ">= 0.01", p_value >= 0.01)
    r.add("integral of p(x)", total, 1.0, "within 1e-8", abs(total - 1) <= 1e-8)
    return r


def criterion_amplification(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C06", "Amplification T/N")
    with timed(r):
        t = grw.amplification_time(1e17, 10**23)
    r.add("T/N for T = 1e17 s, N = 1e23", t, 1e-6, "exact", t == 1e-6)
    return r


def _oscillator_run(seed: int, dt: float, n_steps: int):
    rng = stream(seed, "trace-oscillator", 0)
    spec = oscillator_spec(4)
    q0, p0 = random_hermitian(4, rng, 0.5), random_hermitian(4, rng, 0.5)
    point = PhasePoint.from_arrays(spec.dim, [q0], [p0], (1,))
    return integrate_eom(spec, point, dt, n_steps, record_every=50).report


def criterion_trace_conservation(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C07", "Trace-dynamics conservation under RK4", runtime_limit=10.0)
    with timed(r):
        coarse = _oscillator_run(seed, 0.01, 10_000)
        fine = _oscillator_run(seed, 0.005, 20_000)
    e, c = coarse.energy_drift, coarse.charge_relative_drift
    r.add("|dTr H| / |Tr H|", e, 0.0, "<= 1e-8", e <= 1e-8)
    r.add("||dC|| / ||C||", c, 0.0, "<= 1e-8", c <= 1e-8)
    ratio_e = e / fine.energy_drift
    ratio_c = c / fine.charge_relative_drift
    r.add("Tr H drift ratio on halving dt", ratio_e, 16.0, "within 30%", within(ratio_e, 16.0, 0.30))
    r.add("charge drift ratio on halving dt", ratio_c, 16.0, "within 30%", within(ratio_c, 16.0, 0.30))
    return r


def coupled_spec(n: int = 3) -> LagrangianSpec:
    """Two bosonic matrices with a velocity-coordinate coupling and a quartic term."""
    poly = OperatorPolynomial.build([
        (1.0, ("q1_dot", "q1_dot")), (1.0, ("q2_dot", "q2_dot")),
        (0.3, ("q1_dot", "q2", "q2_dot")), (0.3, ("q2_dot", "q2", "q1_dot")),
        (-1.0, ("q1", "q1")), (-1.0, ("q2", "q2")),
        (-0.1, ("q1", "q2", "q1", "q2")),
    ])
    return LagrangianSpec(poly, ("q1", "q2"), (1, 1), GradedDimension(n, 0))


def criterion_unitary_invariance(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C08", "Global unitary invariance of Tr L and Tr H")
    spec = coupled_spec()
    worst_l = worst_h = 0.0
    with timed(r):
        for i in range(100):
            rng = stream(seed, "unitary-invariance", i)
            n = spec.dim.total
            q = [random_hermitian(n, rng, 0.5) for _ in range(2)]
            p = [random_hermitian(n, rng, 0.5) for _ in range(2)]
            point = PhasePoint.from_arrays(spec.dim, q, p, (1, 1))
            u = random_unitary(n, rng)
            moved = point.conjugated(u)
            h0, h1 = trace_hamiltonian(spec, point), trace_hamiltonian(spec, moved)
            v0 = solve_velocities(spec, point)
            v1 = [GradedMatrix(spec.dim, u @ v.full @ u.conj().T) for v in v0]
            l0 = trace_lagrangian(spec, point.q, v0)
            l1 = trace_lagrangian(spec, moved.q, v1)
            worst_h = max(worst_h, abs(h1 - h0) / abs(h0))
            worst_l = max(worst_l, abs(l1 - l0) / abs(l0))
    r.add("max relative change of Tr L", worst_l, 0.0, "<= 1e-12", worst_l <= 1e-12)
    r.add("max relative change of Tr H", worst_h, 0.0, "<= 1e-12", worst_h <= 1e-12)
    return r


def criterion_aikyon_round_trip(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C09", "Aikyon velocity round trip and Legendre consistency")
    from .trace_dynamics import trace_hamiltonian as legendre_h

    worst_rt = worst_h = 0.0
    dim = GradedDimension(2, 2)
    with timed(r):
        for i in range(100):
            rng = stream(seed, "aikyon-solve", i)
            cfg = aikyon.AikyonConfig.random(float(rng.uniform(1.5, 4.0)), 1.0, rng, dim)
            c1, c2 = GradedMatrix.random(dim, 0, rng), GradedMatrix.random(dim, 1, rng)
            vb, vf = aikyon.solve_velocities(cfg, c1, c2)
            pb, pf = aikyon.aikyon_momenta(cfg, vb, vf)
            scale = np.linalg.norm(np.concatenate([c1.full.ravel(), c2.full.ravel()]))
            err = np.linalg.norm(np.concatenate([(pb - c1).full.ravel(), (pf - c2).full.ravel()])) / scale
            worst_rt = max(worst_rt, float(err))
            spec = aikyon.lagrangian_spec(cfg)
            point = PhasePoint((GradedMatrix.random(dim, 0, rng), GradedMatrix.random(dim, 1, rng)),
                               (c1, c2), (1, -1))
            h_closed = aikyon.aikyon_hamiltonian(cfg, c1, c2)
            h_leg = legendre_h(spec, point)
            worst_h = max(worst_h, abs(h_closed - h_leg) / abs(h_leg))
    r.add("max relative round-trip error", worst_rt, 0.0, "<= 1e-12", worst_rt <= 1e-12)
    r.add("max relative Legendre mismatch", worst_h, 0.0, "<= 1e-10", worst_h <= 1e-10)
    return r


def dirac_sweep(seed: int, lengths=None):
    rng = stream(seed, "modified-dirac", 0)
    dim = GradedDimension(2, 2)
    cfg = aikyon.AikyonConfig.random(10.0, 1.0, rng, dim)
    d_b = random_hermitian(dim.total, rng)
    d_f = GradedMatrix.random(dim, 1, rng, hermitian=True)
    lengths = np.logspace(1, 2.5, 7) if lengths is None else np.asarray(lengths)
    k = (1.0 / lengths) ** 2
    im = np.array([aikyon.modified_dirac_eigs(d_b, d_f, cfg.with_length(L)).max_imag for L in lengths])
    return lengths, k, im


def criterion_complex_eigenvalue_scaling(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C10", "Modified Dirac imaginary parts linear in (L_P/L)^2")
    with timed(r):
        _, k, im = dirac_sweep(seed)
        slope = aikyon.loglog_slope(k, im)
    r.add("log-log slope of max |Im lambda|", slope, 1.0, "within 0.05", abs(slope - 1) <= 0.05)
    return r


def criterion_heat_trace(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C11", "Circle heat trace", runtime_limit=1.0)
    ell = 2 * math.pi
    eps = 0.01 * ell / (2 * math.pi)
    with timed(r):
        value = spectral.heat_trace(ell, eps)
        half = spectral.heat_trace(ell, eps / 2)
    lead = spectral.heat_trace_leading(ell, eps)
    r.add("heat trace", value, lead, "within 0.2%", within(value, lead, 0.002))
    r.add("ratio on halving eps", half / value, 2.0, "within 0.5%", within(half / value, 2.0, 0.005))
    return r


def criterion_planck_identities(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C12", "Planck-scale identities")
    with timed(r):
        mp, tp = units.planck_mass(), units.planck_time()
        t_planck = regimes.localisation_rate(mp)
        at = regimes.regime_classify(mp).classification
        below = regimes.regime_classify(mp * (1 - 1e-6)).classification
        above = regimes.regime_classify(mp * (1 + 1e-6)).classification
        t_nuc = regimes.localisation_rate(units.M_NUCLEON)
    rel = abs(t_planck / tp - 1)
    r.add("|T(m_P)/t_P - 1|", rel, 0.0, "<= 1e-12", rel <= 1e-12)
    ok = (at, below, above) == ("planckian", "quantum", "black-hole")
    r.add("classes at m_P(1-1e-6), m_P, m_P(1+1e-6)", f"{below}/{at}/{above}",
          "quantum/planckian/black-hole", "exact", ok)
    r.add("T(m_nucleon) [s]", t_nuc, 1.2e14, "within 1%", within(t_nuc, 1.2e14, 0.01))
    return r


def criterion_ward(seed: int = 0, workers: int = 1) -> CriterionResult:
    r = CriterionResult("C13", "Equipartition Ward identity", runtime_limit=60.0)
    h = OperatorPolynomial.build([(1.0, ("p", "p")), (1.0, ("q", "q"))])
    with timed(r):
        rep = ward_equipartition(h, 1.0, 100_000, seed, ("q", "p"), n=2, workers=workers)
    for c in rep.classes:
        r.add(f"<x dH/dx> {c.variable} {c.coordinate_class}", c.mean, c.expected,
              f"within 3 sigma = {3 * c.sem:.4g}", c.passed)
    return r


CRITERIA: dict[str, Callable[..., CriterionResult]] = {
    "C01": criterion_heisenberg_floor,
    "C02": criterion_spread_stabilization,
    "C03": criterion_born_rule,
    "C04": criterion_decoherence,
    "C05": criterion_grw_statistics,
    "C06": criterion_amplification,
    "C07": criterion_trace_conservation,
    "C08": criterion_unitary_invariance,
    "C09": criterion_aikyon_round_trip,
    "C10": criterion_complex_eigenvalue_scaling,
    "C11": criterion_heat_trace,
    "C12": criterion_planck_identities,
    "C13": criterion_ward,
}


def run_suite(seed: int = 0, workers: int = 1, ids=None, echo: Callable[[str], None] | None = None):
    results = []
    for cid, fn in CRITERIA.items():
        if ids is not None and cid not in ids:
            continue
        res = fn(seed=seed, workers=workers)
        if echo:
            echo(res.summary_line())
        results.append(res)
    return results


def suite_csv(results) -> str:
    rows = [row for r in results for row in r.csv_rows()]
    return csv_text(CRITERION_COLUMNS, rows)


def criterion_determinism(first_csv: str, seed: int = 0, workers: int = 1) -> CriterionResult:
    """Run the suite again and compare the CSV body with ``first_csv``."""
    r = CriterionResult("C14", "Determinism of the verify CSV")
    with timed(r):
        second = suite_csv(run_suite(seed, workers))
    same = second == first_csv
    r.add("CSV bodies byte-identical", str(same).lower(), "true", "exact", same)
    return r
