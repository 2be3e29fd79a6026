"""Named experiments for the command-line runner.

Each experiment declares its parameter defaults; configs may override
any of them and unknown keys are rejected.  An experiment returns its CSV
columns and rows, a JSON-able summary, and the criteria it checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import acceptance, aikyon, grw, qmupl, regimes, spectral, units
from .criteria import CriterionResult, within
from .ensemble import stream
from .errors import ConfigurationError
from .graded import GradedDimension, GradedMatrix, OperatorPolynomial
from .qm import Grid, HamiltonianSpec, cat_state, gaussian
from .trace_dynamics import (PhasePoint, integrate_eom, oscillator_spec, random_hermitian,
                             ward_equipartition)


@dataclass
class ExperimentResult:
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict[str, Any] = field(default_factory=dict)
    criteria: list[CriterionResult] = field(default_factory=list)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict[str, Any]
    run: Callable[[dict, int, int], ExperimentResult]

    def resolve(self, params: dict | None) -> dict:
        params = dict(params or {})
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ConfigurationError(f"{self.name}: unknown parameters {sorted(unknown)}")
        out = dict(self.defaults)
        for k, v in params.items():
            d = self.defaults[k]
            if isinstance(d, bool):
                if not isinstance(v, bool):
                    raise ConfigurationError(f"{self.name}.{k} must be true or false")
            elif isinstance(d, int) and not isinstance(d, bool):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigurationError(f"{self.name}.{k} must be an integer")
            elif isinstance(d, float):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigurationError(f"{self.name}.{k} must be a number")
                v = float(v)
            elif isinstance(d, list):
                if not isinstance(v, list):
                    raise ConfigurationError(f"{self.name}.{k} must be a list")
            elif isinstance(d, str) and not isinstance(v, str):
                raise ConfigurationError(f"{self.name}.{k} must be a string")
            out[k] = v
        return out


def _positive(p: dict, *keys):
    for k in keys:
        if not p[k] > 0:
            raise ConfigurationError(f"{k} must be positive")


# --------------------------------------------------------------------------

def run_grw(p, seed, workers) -> ExperimentResult:
    _positive(p, "r_c", "t_total", "dt", "sigma", "half_width")
    grid = Grid(p["n_points"], -p["half_width"], p["half_width"])
    psi = cat_state(grid, p["separation"], p["sigma"], math.sqrt(p["p_plus"]), math.sqrt(1 - p["p_plus"]))
    if p["mass"] > 0:
        h = HamiltonianSpec.free(grid, p["mass"])
    else:
        h = HamiltonianSpec.zero(grid)
    params = grw.GrwParams(p["lambda_grw"], p["r_c"], p["t_total"], p["dt"])
    tr = grw.run_grw(psi, h, params, stream(seed, "grw-run", 0))
    rows = list(zip(tr.times, tr.mean_q, tr.sigma_q))
    summary = {"n_jumps": len(tr.jumps), "boundary_ok": tr.boundary_ok,
               "jumps": [{"t": j.t, "x": j.x_center, "pre_norm": j.pre_norm} for j in tr.jumps]}
    return ExperimentResult(("t", "mean_q", "sigma_q"), rows, summary)


def run_grw_born(p, seed, workers) -> ExperimentResult:
    setup = grw.CatSetup(p["p_plus"], p["separation"], p["sigma"], p["r_c"], p["lambda_grw"],
                         p["t_total"], p["n_points"], p["half_width"], p["record_dt"] or None)
    res = grw.grw_cat_ensemble(setup, p["n_trajectories"], seed, workers=workers)
    crit = CriterionResult("grw-born", "Born frequency of GRW cat-state outcomes")
    f, s = res.frequency_plus, res.binomial_sigma
    crit.add("plus frequency", f, p["p_plus"], f"within 3 sigma = {3 * s:.4g}", abs(f - p["p_plus"]) <= 3 * s)
    rows = list(zip(res.record_times, res.surviving_fraction))
    summary = {"frequency_plus": f, "binomial_sigma": s, "n_plus": res.n_plus,
               "n_unresolved": res.n_unresolved}
    return ExperimentResult(("t", "two_peak_fraction"), rows, summary, [crit])


def run_qmupl_free(p, seed, workers) -> ExperimentResult:
    _positive(p, "lam", "mass", "hbar", "dt", "sigma0", "half_width")
    grid = Grid(p["n_points"], -p["half_width"], p["half_width"])
    h = HamiltonianSpec.free(grid, p["mass"], hbar=p["hbar"], boundary="periodic")
    params = qmupl.QmuplParams(p["lam"], p["mass"], p["hbar"], p["dt"], p["n_steps"], seed)
    s = qmupl.run_qmupl(gaussian(grid, 0.0, p["sigma0"]), h, params, rng=stream(seed, "qmupl-free", 0),
                        record_every=p["record_every"], comoving=True)
    target = qmupl.asymptotic_sigma_q(p["lam"], p["mass"], p["hbar"])
    crit = CriterionResult("qmupl-free", "Late-time spread vs sqrt(hbar/(m omega))")
    crit.add("late-time sigma_q", float(s.sigma_q[-1]), target, "within 10%",
             within(float(s.sigma_q[-1]), target, 0.10))
    rows = list(zip(s.times, s.mean_q, s.sigma_q, s.sigma_p, s.norm))
    return ExperimentResult(("t", "mean_q", "sigma_q", "sigma_p", "norm"), rows,
                            {"sigma_q_inf": target}, [crit])


def run_qmupl_measure(p, seed, workers) -> ExperimentResult:
    c_plus = math.sqrt(p["p_plus"])
    setup = qmupl.MeasurementSetup(c_plus, math.sqrt(1 - p["p_plus"]), p["pointer_mass"], p["separation"],
                                   p["lambda_pointer"], p["max_time"], p["dt"], p["pointer_width"],
                                   p["decision_ratio"], p["n_points"], p["half_width"])
    res = qmupl.measurement_ensemble(setup, p["n_trajectories"], seed, workers=workers)
    crit = CriterionResult("qmupl-measure", "Born frequency of pointer outcomes")
    f, s = res.frequency_plus, res.binomial_sigma
    crit.add("plus frequency", f, p["p_plus"], f"within 3 sigma = {3 * s:.4g}", abs(f - p["p_plus"]) <= 3 * s)
    label = {1: "plus", -1: "minus", 0: "unresolved"}
    rows = [(i, label[int(c)], t) for i, (c, t) in enumerate(zip(res.codes, res.collapse_times))]
    kappa = res.mean_collapse_time * setup.lambda_pointer * setup.separation**2
    summary = {"frequency_plus": f, "binomial_sigma": s, "n_unresolved": res.n_unresolved,
               "mean_collapse_time": res.mean_collapse_time, "kappa": kappa,
               "si_projection": {
                   "mass_kg": 1e-3,
                   "lambda_si": qmupl.collapse_strength(1e-3, units.LAMBDA0_SI, units.M_NUCLEON),
                   "separation_for_1e-4_s_m": qmupl.implied_pointer_separation(
                       1e-4, kappa, 1e-3, units.LAMBDA0_SI, units.M_NUCLEON)}}
    return ExperimentResult(("trajectory", "outcome", "collapse_time"), rows, summary, [crit])


def run_decoherence(p, seed, workers) -> ExperimentResult:
    setup = qmupl.CatDecoherenceSetup(p["lam"], p["separation"], p["sigma"], p["p_plus"], p["dt"],
                                      p["t_max"], p["record_every"], p["n_points"], p["half_width"])
    res = qmupl.decoherence_ensemble(setup, p["n_trajectories"], seed, workers=workers)
    crit = CriterionResult("decoherence", "Ensemble coherence decay rate")
    crit.add("fitted rate", res.fitted_rate, res.expected_rate, "within 5%", res.rate_error <= 0.05)
    analytic = np.exp(-res.expected_rate * res.times)
    rows = list(zip(res.times, res.ratio, res.ratio_sem, analytic, res.population, res.weight_plus))
    return ExperimentResult(("t", "coherence_ratio", "coherence_sem", "analytic", "population_a",
                             "weight_plus"), rows,
                            {"fitted_rate": res.fitted_rate, "expected_rate": res.expected_rate,
                             "grid_separation": res.grid_separation}, [crit])


def run_trace_oscillator(p, seed, workers) -> ExperimentResult:
    _positive(p, "dt", "init_scale")
    spec = oscillator_spec(p["n"], p["coupling"])
    rng = stream(seed, "trace-oscillator", 0)
    q0, p0 = random_hermitian(p["n"], rng, p["init_scale"]), random_hermitian(p["n"], rng, p["init_scale"])
    point = PhasePoint.from_arrays(spec.dim, [q0], [p0], (1,))
    rep = integrate_eom(spec, point, p["dt"], p["n_steps"], record_every=p["record_every"]).report
    crit = CriterionResult("trace-oscillator", "Conservation of Tr H and the charge")
    crit.add("|dTr H| / |Tr H|", rep.energy_drift, 0.0, "<= 1e-8", rep.energy_drift <= 1e-8)
    crit.add("||dC|| / ||C||", rep.charge_relative_drift, 0.0, "<= 1e-8", rep.charge_relative_drift <= 1e-8)
    scale = rep.charge_norm0 if rep.charge_norm0 > 0 else 1.0
    rows = list(zip(rep.times, rep.trace_h.real, rep.trace_h.imag, rep.charge_drift / scale))
    return ExperimentResult(("tau", "trH_re", "trH_im", "am_drift"), rows,
                            {"convention": rep.convention,
                             "max_anti_hermitian_defect": float(rep.anti_hermitian_defect.max())}, [crit])


def run_ward(p, seed, workers) -> ExperimentResult:
    _positive(p, "beta", "q_coeff", "p_coeff")
    h = OperatorPolynomial.build([(p["p_coeff"], ("p", "p")), (p["q_coeff"], ("q", "q"))])
    rep = ward_equipartition(h, p["beta"], p["n_samples"], seed, ("q", "p"), n=p["n"], workers=workers)
    crit = CriterionResult("ward-check", "Equipartition per coordinate class")
    for c in rep.classes:
        crit.add(f"<x dH/dx> {c.variable} {c.coordinate_class}", c.mean, c.expected,
                 f"within 3 sigma = {3 * c.sem:.4g}", c.passed)
    rows = [(c.variable, c.coordinate_class, c.mean, c.sem, c.expected, c.z_score) for c in rep.classes]
    return ExperimentResult(("variable", "class", "mean", "sem", "expected", "z"), rows, {}, [crit])


def _dim(p) -> GradedDimension:
    return GradedDimension(p["n_even"], p["n_odd"])


def run_aikyon_solve(p, seed, workers) -> ExperimentResult:
    _positive(p, "L_over_LP")
    dim = _dim(p)
    rows = []
    worst_rt = worst_h = 0.0
    for i in range(p["n_configs"]):
        rng = stream(seed, "aikyon-solve", i)
        cfg = aikyon.AikyonConfig.random(p["L_over_LP"], 1.0, rng, dim)
        c1, c2 = GradedMatrix.random(dim, 0, rng), GradedMatrix.random(dim, 1, rng)
        vb, vf = aikyon.solve_velocities(cfg, c1, c2)
        pb, pf = aikyon.aikyon_momenta(cfg, vb, vf)
        scale = math.sqrt(np.linalg.norm(c1.full) ** 2 + np.linalg.norm(c2.full) ** 2)
        rt = math.sqrt(np.linalg.norm((pb - c1).full) ** 2 + np.linalg.norm((pf - c2).full) ** 2) / scale
        h_closed = aikyon.aikyon_hamiltonian(cfg, c1, c2)
        h_lag = aikyon.aikyon_lagrangian(cfg, vb, vf)
        herr = abs(h_closed - h_lag) / abs(h_lag)
        factor, resid = aikyon.closed_form_discrepancy(cfg, c1, c2)
        worst_rt, worst_h = max(worst_rt, rt), max(worst_h, herr)
        rows.append((i, rt, herr, h_closed.real, h_closed.imag, factor, cfg.a / 2, resid))
    crit = CriterionResult("aikyon-solve", "Round trip and Legendre consistency")
    crit.add("max relative round-trip error", worst_rt, 0.0, "<= 1e-12", worst_rt <= 1e-12)
    crit.add("max relative Legendre mismatch", worst_h, 0.0, "<= 1e-10", worst_h <= 1e-10)
    return ExperimentResult(("config", "roundtrip_error", "legendre_error", "H_re", "H_im",
                             "closed_form_factor", "a_over_2", "closed_form_residual"), rows, {}, [crit])


def run_aikyon_flow(p, seed, workers) -> ExperimentResult:
    dim = _dim(p)
    rng = stream(seed, "aikyon-flow", 0)
    base = aikyon.AikyonConfig.random(10.0, 1.0, rng, dim)
    vb, vf = GradedMatrix.random(dim, 0, rng, hermitian=True), GradedMatrix.random(dim, 1, rng, hermitian=True)
    qb, qf = GradedMatrix.random(dim, 0, rng, hermitian=True), GradedMatrix.random(dim, 1, rng, hermitian=True)
    d_b = random_hermitian(dim.total, rng)
    d_f = GradedMatrix.random(dim, 1, rng, hermitian=True)
    state = aikyon.AikyonState(qb, qf, vb, vf)
    rows = []
    for L in p["L_over_LP"]:
        cfg = base.with_length(float(L))
        h = aikyon.aikyon_hamiltonian(cfg, *aikyon.aikyon_momenta(cfg, vb, vf))
        spec = aikyon.modified_dirac_eigs(d_b, d_f, cfg)
        c0 = aikyon.aikyon_adler_millard(state, cfg).full
        c1 = aikyon.aikyon_adler_millard(state.at(p["tau"]), cfg).full
        herm = np.linalg.norm(c0 + c0.conj().T) / np.linalg.norm(c0)
        rows.append((float(L), cfg.k, abs(h.imag) / abs(h.real), spec.max_imag,
                     float(np.max(np.abs(spec.theta))),
                     np.linalg.norm(c1 - c0) / np.linalg.norm(c0), herm))
    arr = np.array(rows)
    slope_h = aikyon.loglog_slope(arr[:, 1], arr[:, 2])
    slope_d = aikyon.loglog_slope(arr[:, 1], arr[:, 3])
    crit = CriterionResult("aikyon-flow", "Imaginary parts scale as (L_P/L)^2")
    crit.add("slope |Im H|/|Re H|", slope_h, 1.0, "within 0.1", abs(slope_h - 1) <= 0.1)
    crit.add("slope max |Im lambda|", slope_d, 1.0, "within 0.05", abs(slope_d - 1) <= 0.05)
    return ExperimentResult(("L_over_LP", "k", "imH_over_reH", "max_im_dirac", "max_theta",
                             "am_relative_change", "am_hermitian_part"), rows, {}, [crit])


def run_spectral_circle(p, seed, workers) -> ExperimentResult:
    _positive(p, "ell")
    if p["chi"] not in spectral.CHI_FUNCTIONS:
        raise ConfigurationError(f"chi must be one of {spectral.CHI_FUNCTIONS}")
    rows = []
    for eps in p["eps"]:
        eps = float(eps)
        if not eps > 0:
            raise ConfigurationError("eps values must be positive")
        n_max = p["n_max"] or spectral.n_max_for(p["ell"], eps)
        spec = spectral.circle_dirac_spectrum(p["ell"], p["spin_structure"], n_max)
        val = spectral.spectral_action(spec, eps, p["chi"])
        lead = spectral.heat_trace_leading(p["ell"], eps)
        rows.append((eps, n_max, val, lead, val / lead - 1))
    crits = []
    if p["chi"] == "gaussian-heat":
        c = CriterionResult("spectral-circle", "Heat trace vs leading term")
        worst = max(abs(r[4]) for r in rows)
        c.add("max relative deviation", worst, 0.0, "<= 0.002", worst <= 0.002)
        crits.append(c)
    return ExperimentResult(("eps", "n_max", "value", "leading_term", "relative_deviation"), rows, {}, crits)


def run_regime_table(p, seed, workers) -> ExperimentResult:
    rows = []
    for entry in p["masses"]:
        if isinstance(entry, str):
            label, mass = entry, NAMED_MASSES.get(entry)
            if mass is None:
                raise ConfigurationError(f"unknown named mass {entry!r}; known: {sorted(NAMED_MASSES)}")
        elif isinstance(entry, (int, float)) and not isinstance(entry, bool):
            label, mass = f"{float(entry):.6g} kg", float(entry)
        else:
            raise ConfigurationError("masses must be names or numbers (kg)")
        rep = regimes.regime_classify(mass)
        rows.append((label, rep.mass, rep.compton, rep.schwarzschild_scale, rep.classification, rep.rate))
    return ExperimentResult(("label", "mass_kg", "compton_m", "schwarzschild_m", "classification",
                             "localisation_time_s"), rows, {"planck_length_m": units.planck_length()})


NAMED_MASSES = {
    "electron": units.M_ELECTRON,
    "nucleon": units.M_NUCLEON,
    "planck": units.planck_mass(),
    "1g": 1e-3,
    "1kg": 1.0,
}

EXPERIMENTS: dict[str, Experiment] = {e.name: e for e in [
    Experiment("grw-run", "single GRW trajectory of a cat state",
               dict(lambda_grw=1.0, r_c=0.5, t_total=10.0, dt=0.1, n_points=256, half_width=12.0,
                    separation=10.0, sigma=0.5, p_plus=0.5, mass=0.0), run_grw),
    Experiment("grw-born", "GRW cat-state ensemble: outcome frequencies",
               dict(p_plus=0.3, separation=10.0, sigma=0.5, r_c=0.5, lambda_grw=1.0, t_total=12.0,
                    n_points=256, half_width=12.0, record_dt=1.0, n_trajectories=10_000), run_grw_born),
    Experiment("qmupl-free", "free QMUPL packet: spread stabilisation",
               dict(lam=0.01, mass=1.0, hbar=1.0, dt=1e-3, n_steps=100_000, record_every=1000,
                    sigma0=1.0, n_points=512, half_width=32.0), run_qmupl_free),
    Experiment("qmupl-measure", "QMUPL pointer measurement ensemble",
               dict(p_plus=0.3, pointer_mass=1e5, separation=1.0, lambda_pointer=1.0, max_time=60.0,
                    dt=0.01, pointer_width=0.08, decision_ratio=1e3, n_points=128, half_width=1.5,
                    n_trajectories=10_000), run_qmupl_measure),
    Experiment("decoherence", "ensemble coherence decay of a QMUPL cat state",
               dict(lam=1.0, separation=1.0, sigma=0.08, p_plus=0.5, dt=0.002, t_max=2.0,
                    record_every=25, n_points=128, half_width=1.5, n_trajectories=1000), run_decoherence),
    Experiment("trace-oscillator", "matrix oscillator under RK4 with conservation report",
               dict(n=4, coupling=0.0, dt=0.01, n_steps=10_000, record_every=10, init_scale=0.5),
               run_trace_oscillator),
    Experiment("ward-check", "equipartition Ward identity for a Gaussian trace Hamiltonian",
               dict(beta=1.0, n_samples=100_000, n=2, q_coeff=1.0, p_coeff=1.0), run_ward),
    Experiment("aikyon-solve", "aikyon velocity solve, Hamiltonian and closed-form factor",
               dict(n_configs=100, L_over_LP=3.0, n_even=2, n_odd=2), run_aikyon_solve),
    Experiment("aikyon-flow", "aikyon (L_P/L)^2 sweep: Im H, modified Dirac spectrum, charge",
               dict(L_over_LP=[10.0, 31.6227766, 100.0, 316.227766, 1000.0, 3162.27766, 10000.0],
                    tau=10.0, n_even=2, n_odd=2), run_aikyon_flow),
    Experiment("spectral-circle", "cutoff spectral action on a circle",
               dict(ell=2 * math.pi, spin_structure="antiperiodic", chi="gaussian-heat",
                    eps=[0.04, 0.02, 0.01, 0.005], n_max=0), run_spectral_circle),
    Experiment("regime-table", "localisation time and regime for a list of masses",
               dict(masses=["electron", "nucleon", "planck", "1g", "1kg"]), run_regime_table),
]}


def get(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise ConfigurationError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}") from None
