"""QMUPL continuous collapse: the position-localising stochastic Schroedinger equation.

    d psi = [ -(i/hbar) H dt + sqrt(lam) (q - <q>) dW - (lam/2) (q - <q>)^2 dt ] psi

Discretisation (one step of length dt, Wiener increment dW):

    psi <- exp(sqrt(lam) A dW - lam A^2 dt) psi,   A = q - <q>_psi
    psi <- exp(-i H dt / hbar) psi
    psi <- psi / ||psi||

The collapse factor is the exact solution of the linear (unnormalised)
equation over one step with <q> frozen at its start value; its Ito
expansion reproduces the drift -(lam/2) A^2 dt, and after renormalisation the
scheme is weak order 1 and exact for H = 0 up to the frozen <q>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ensemble import normal_increments, run_chunked, stream
from .errors import ConfigurationError, IntegrationError, NotNormalizedError, StepSizeError
from .qm import Grid, HamiltonianSpec, WaveFunction, batch_moments, cat_state, make_propagator

# lam * dt * (grid span)^2 above this is rejected (kernel exponent range).
MAX_KERNEL_EXPONENT = 100.0
DECISION_RATIO = 1e3


@dataclass(frozen=True)
class QmuplParams:
    lam: float
    mass: float = 1.0
    hbar: float = 1.0
    dt: float = 1e-3
    n_steps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigurationError("collapse strength lambda must be non-negative")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.mass > 0:
            raise ConfigurationError("mass must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError("n_steps must be a positive integer")


@dataclass(eq=False)
class MomentSeries:
    times: np.ndarray
    mean_q: np.ndarray
    sigma_q: np.ndarray
    sigma_p: np.ndarray
    norm: np.ndarray
    final_state: WaveFunction | None = None


def check_step(lam: float, dt: float, grid: Grid) -> None:
    if lam * dt * grid.span**2 > MAX_KERNEL_EXPONENT:
        raise StepSizeError(
            f"lam*dt*span^2 = {lam * dt * grid.span**2:.3g} exceeds {MAX_KERNEL_EXPONENT}; reduce dt")


def collapse_factor(amps: np.ndarray, grid: Grid, lam: float, dW, dt: float) -> np.ndarray:
    """Apply exp(sqrt(lam) A dW - lam A^2 dt) to amplitude arrays of shape (..., n)."""
    x = grid.x
    dens = np.abs(amps) ** 2
    mq = (dens * x).sum(axis=-1) / dens.sum(axis=-1)
    a = x - np.asarray(mq)[..., None]
    expo = np.sqrt(lam) * a * np.asarray(dW)[..., None] - lam * a**2 * dt
    expo -= expo.max(axis=-1, keepdims=True)
    return amps * np.exp(expo)


def _renormalize(amps: np.ndarray, weights: np.ndarray) -> np.ndarray:
    n = np.sqrt((np.abs(amps) ** 2 * weights).sum(axis=-1, keepdims=True))
    if not np.all(np.isfinite(n)) or np.any(n == 0):
        raise IntegrationError("state vanished or overflowed during a QMUPL step")
    return amps / n


def qmupl_step(psi: WaveFunction, h: HamiltonianSpec, lam: float, dW: float, dt: float) -> WaveFunction:
    if not psi.is_normalized():
        raise NotNormalizedError("qmupl_step expects a normalized state")
    check_step(lam, dt, psi.grid)
    amps = collapse_factor(psi.amplitudes, psi.grid, lam, dW, dt)
    amps = make_propagator(h, dt)(amps)
    return psi.replace(_renormalize(amps, psi.grid.weights))


def _comoving_ok(h: HamiltonianSpec) -> bool:
    return h.boundary == "periodic" and not np.any(h.potential)


def run_qmupl(psi0: WaveFunction, h: HamiltonianSpec, params: QmuplParams,
              rng: np.random.Generator | None = None, record_every: int = 1,
              comoving: bool = False) -> MomentSeries:
    """Integrate one QMUPL trajectory and record its moments.

    ``comoving=True`` (free particle on a periodic grid only) keeps the
    packet centred by rolling the grid an integer number of cells whenever
    <q> wanders; translations commute with the free collapse dynamics, so
    this is exact, and lab-frame <q> is reported.
    """
    if not psi0.is_normalized():
        raise NotNormalizedError("run_qmupl expects a normalized initial state")
    if abs(h.mass - params.mass) > 1e-12 * params.mass or abs(h.hbar - params.hbar) > 1e-12 * params.hbar:
        raise ConfigurationError("Hamiltonian mass/hbar disagree with QmuplParams")
    if comoving and not _comoving_ok(h):
        raise ConfigurationError("comoving frame needs a free Hamiltonian on a periodic grid")
    grid = psi0.grid
    check_step(params.lam, params.dt, grid)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    dws = rng.standard_normal(params.n_steps) * np.sqrt(params.dt)
    prop = make_propagator(h, params.dt)
    center = 0.5 * (grid.x_min + grid.x_max)

    amps = psi0.amplitudes.copy()
    offset = 0.0
    rec_t, rec_a, rec_off = [0.0], [amps], [0.0]
    for k in range(1, params.n_steps + 1):
        amps = collapse_factor(amps, grid, params.lam, dws[k - 1], params.dt)
        amps = _renormalize(prop(amps), grid.weights)
        if comoving:
            dens = np.abs(amps) ** 2
            shift = int(round((np.sum(dens * grid.x * grid.weights) - center) / grid.dx))
            if shift:
                amps = np.roll(amps, -shift)
                offset += shift * grid.dx
        if k % record_every == 0 or k == params.n_steps:
            rec_t.append(k * params.dt)
            rec_a.append(amps)
            rec_off.append(offset)
    mq, sq, _, sp, nrm = batch_moments(np.array(rec_a), grid, h.hbar)
    return MomentSeries(np.array(rec_t), mq + np.array(rec_off), sq, sp, nrm,
                        psi0.replace(amps))


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------

def collapse_strength(mass: float, lambda0: float, m0: float) -> float:
    """Mass-proportional strength lam = (m / m0) lambda0."""
    if not (mass > 0 and lambda0 > 0 and m0 > 0):
        raise ConfigurationError("mass, lambda0 and m0 must be positive")
    return mass / m0 * lambda0


def asymptotic_spreads(mass: float, lambda0: float, m0: float, hbar: float) -> tuple[float, float, float]:
    """Late-time free-particle spreads (omega, sigma_q(inf), sigma_p(inf)).

    With lam = (m/m0) lambda0 the frequency omega = 2 sqrt(hbar lam / m)
    equals 2 sqrt(hbar lambda0 / m0) for every mass.
    """
    if not hbar > 0:
        raise ConfigurationError("hbar must be positive")
    lam = collapse_strength(mass, lambda0, m0)
    omega = 2 * np.sqrt(hbar * lam / mass)
    sigma_q = np.sqrt(hbar / (mass * omega))
    sigma_p = np.sqrt(hbar * mass * omega / 2)
    return float(omega), float(sigma_q), float(sigma_p)


def asymptotic_sigma_q(lam: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    """sqrt(hbar / (m omega)) with omega = 2 sqrt(hbar lam / m)."""
    omega = 2 * np.sqrt(hbar * lam / mass)
    return float(np.sqrt(hbar / (mass * omega)))


def decoherence_ratio(lam: float, n_constituents: float, separation: float, t: float) -> float:
    """Off-diagonal suppression rho_t(x, y) / rho_0(x, y) = exp(-lam N d^2 t / 2)."""
    if min(lam, n_constituents, t) < 0:
        raise ConfigurationError("lam, n_constituents and t must be non-negative")
    return float(np.exp(-lam * n_constituents * separation**2 * t / 2))


# --------------------------------------------------------------------------
# Batched trajectories
# --------------------------------------------------------------------------

def evolve_batch(amps: np.ndarray, h: HamiltonianSpec, lam: float, dws: np.ndarray,
                 dt: float, observe: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Advance a batch of states (B, n) through dws.shape[1] QMUPL steps.

    ``observe(k, amps)`` is called after every step k = 1..n_steps.
    """
    grid = h.grid
    check_step(lam, dt, grid)
    prop = make_propagator(h, dt)
    for k in range(dws.shape[1]):
        amps = collapse_factor(amps, grid, lam, dws[:, k], dt)
        amps = _renormalize(prop(amps), grid.weights)
        if observe is not None:
            observe(k + 1, amps)
    return amps


@dataclass(frozen=True)
class CatDecoherenceSetup:
    """Single-particle cat state with peaks at +-d/2 evolving under QMUPL (H = 0)."""

    lam: float = 1.0
    separation: float = 1.0
    sigma: float = 0.08
    p_plus: float = 0.5
    dt: float = 0.002
    t_max: float = 2.0
    record_every: int = 25
    n_points: int = 128
    half_width: float = 1.5

    def grid(self) -> Grid:
        return Grid(self.n_points, -self.half_width, self.half_width)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


def _decoherence_chunk(indices: range, setup: CatDecoherenceSetup, seed: int, name: str) -> np.ndarray:
    grid = setup.grid()
    psi0 = cat_state(grid, setup.separation, setup.sigma,
                     np.sqrt(setup.p_plus), np.sqrt(1 - setup.p_plus))
    ia, ib = grid.index_of(setup.separation / 2), grid.index_of(-setup.separation / 2)
    dws = normal_increments(seed, name, indices, setup.n_steps, setup.dt)
    amps = np.tile(psi0.amplitudes, (len(indices), 1))
    n_rec = setup.n_steps // setup.record_every + 1
    # columns: coherence psi(a) psi*(b), population |psi(a)|^2, weight of x > 0
    out = np.zeros((len(indices), 3, n_rec), dtype=complex)
    right = grid.x > 0

    def record(col, a):
        out[:, 0, col] = a[:, ia] * np.conj(a[:, ib])
        out[:, 1, col] = np.abs(a[:, ia]) ** 2
        out[:, 2, col] = (np.abs(a[:, right]) ** 2 * grid.weights[right]).sum(axis=1)

    record(0, amps)

    def observe(k, a):
        if k % setup.record_every == 0:
            record(k // setup.record_every, a)

    evolve_batch(amps, HamiltonianSpec.zero(grid), setup.lam, dws, setup.dt, observe)
    return out


@dataclass(eq=False)
class DecoherenceResult:
    times: np.ndarray
    ratio: np.ndarray
    ratio_sem: np.ndarray
    fitted_rate: float
    expected_rate: float
    population: np.ndarray
    population_sem: np.ndarray
    weight_plus: np.ndarray
    weight_plus_sem: np.ndarray
    grid_separation: float

    @property
    def rate_error(self) -> float:
        return abs(self.fitted_rate / self.expected_rate - 1)


def decoherence_ensemble(setup: CatDecoherenceSetup, n_trajectories: int, seed: int,
                         name: str = "decoherence", workers: int = 1,
                         fit_window: float = 1.0) -> DecoherenceResult:
    """Ensemble-averaged off-diagonal element of |psi><psi| between the two peaks.

    The decay rate is fitted by least squares to log E[rho(a, b)] over
    times where the analytic factor exceeds exp(-fit_window).
    """
    data = run_chunked(_decoherence_chunk, n_trajectories, (setup, seed, name), workers=workers)
    grid = setup.grid()
    d = grid.x[grid.index_of(setup.separation / 2)] - grid.x[grid.index_of(-setup.separation / 2)]
    times = setup.dt * setup.record_every * np.arange(data.shape[2])
    coh = data[:, 0, :]
    ratio_samples = (coh / coh[:, :1]).real
    ratio = ratio_samples.mean(axis=0)
    sem = ratio_samples.std(axis=0, ddof=1) / np.sqrt(n_trajectories)
    expected = setup.lam * d**2 / 2
    mask = (expected * times <= fit_window) & (ratio > 0)
    t_fit = times[mask]
    slope = -np.sum(t_fit * np.log(ratio[mask])) / np.sum(t_fit**2)
    pop = data[:, 1, :].real
    w = data[:, 2, :].real
    root = np.sqrt(n_trajectories)
    return DecoherenceResult(times, ratio, sem, float(slope), float(expected),
                             pop.mean(axis=0), pop.std(axis=0, ddof=1) / root,
                             w.mean(axis=0), w.std(axis=0, ddof=1) / root, float(d))


# --------------------------------------------------------------------------
# Measurement model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementSetup:
    """System-pointer state c+ |+> phi_+ + c- |-> phi_- after the premeasurement.

    phi_+- are Gaussians of width ``pointer_width`` centred at +-d/2.  The
    two branches are carried as separate arrays, so they stay orthogonal
    through the spin label even if the pointer packets overlap.
    ``pointer_mass = inf`` switches off free pointer motion.
    """

    c_plus: complex = np.sqrt(0.3)
    c_minus: complex = np.sqrt(0.7)
    pointer_mass: float = 1e5
    separation: float = 1.0
    lambda_pointer: float = 1.0
    max_time: float = 60.0
    dt: float = 0.01
    pointer_width: float = 0.08
    decision_ratio: float = DECISION_RATIO
    n_points: int = 128
    half_width: float = 1.5

    def __post_init__(self):
        if abs(abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2 - 1) > 1e-12:
            raise ConfigurationError("|c+|^2 + |c-|^2 must equal 1")
        if not self.separation > 0:
            raise ConfigurationError("pointer separation must be positive")
        if not self.lambda_pointer >= 0:
            raise ConfigurationError("lambda_pointer must be non-negative")
        if not self.pointer_mass > 0:
            raise ConfigurationError("pointer_mass must be positive")
        if not self.decision_ratio > 1:
            raise ConfigurationError("decision_ratio must exceed 1")
        if not (self.dt > 0 and self.max_time > 0):
            raise ConfigurationError("dt and max_time must be positive")

    def grid(self) -> Grid:
        return Grid(self.n_points, -self.half_width, self.half_width)

    def hamiltonian(self) -> HamiltonianSpec:
        if np.isinf(self.pointer_mass):
            return HamiltonianSpec.zero(self.grid())
        return HamiltonianSpec.free(self.grid(), self.pointer_mass, boundary="periodic")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.max_time / self.dt - 1e-9))


@dataclass(eq=False)
class MeasurementOutcome:
    outcome: str  # "plus", "minus" or "unresolved"
    collapse_time: float
    epsilon_path: np.ndarray | None = None

    @property
    def resolved(self) -> bool:
        return self.outcome != "unresolved"


def _measurement_batch(setup: MeasurementSetup, dws: np.ndarray, keep_path: bool = False):
    """Integrate B pointer trajectories; returns (outcome codes, times, eps paths).

    Outcome codes: +1 plus, -1 minus, 0 unresolved.  Finished trajectories
    are frozen and dropped from the working set.
    """
    grid = setup.grid()
    h = setup.hamiltonian()
    check_step(setup.lambda_pointer, setup.dt, grid)
    prop = make_propagator(h, setup.dt)
    b = dws.shape[0]
    d = setup.separation
    plus = np.exp(-((grid.x - d / 2) ** 2) / (4 * setup.pointer_width**2))
    minus = np.exp(-((grid.x + d / 2) ** 2) / (4 * setup.pointer_width**2))
    plus /= np.sqrt(np.sum(plus**2 * grid.weights))
    minus /= np.sqrt(np.sum(minus**2 * grid.weights))
    # shape (B, 2, n): branch 0 = |+>, branch 1 = |->
    amps = np.empty((b, 2, grid.n_points), dtype=complex)
    amps[:, 0] = setup.c_plus * plus
    amps[:, 1] = setup.c_minus * minus

    codes = np.zeros(b, dtype=int)
    times = np.full(b, np.nan)
    paths = np.full((b, setup.n_steps + 1), np.nan) if keep_path else None
    r = setup.decision_ratio
    active = np.arange(b)

    def classify(active, amps_active, t):
        w = (np.abs(amps_active) ** 2).sum(axis=-1)
        with np.errstate(divide="ignore"):
            eps = np.sqrt(w[:, 1] / w[:, 0])
        if paths is not None:
            paths[active, int(round(t / setup.dt))] = eps
        done_plus = eps < 1 / r
        done_minus = eps > r
        codes[active[done_plus]] = 1
        codes[active[done_minus]] = -1
        done = done_plus | done_minus
        times[active[done]] = t
        return ~done

    keep = classify(active, amps, 0.0)
    active, amps = active[keep], amps[keep]
    lam = setup.lambda_pointer
    sq = np.sqrt(lam)
    x = grid.x
    for k in range(1, setup.n_steps + 1):
        if active.size == 0:
            break
        dens = (np.abs(amps) ** 2).sum(axis=1)
        mq = (dens * x).sum(axis=-1) / dens.sum(axis=-1)
        a = x - mq[:, None]
        expo = sq * a * dws[active, k - 1][:, None] - lam * a**2 * setup.dt
        expo -= expo.max(axis=-1, keepdims=True)
        amps = amps * np.exp(expo)[:, None, :]
        amps = prop(amps)
        nrm = np.sqrt((np.abs(amps) ** 2 * grid.weights).sum(axis=(1, 2)))
        amps = amps / nrm[:, None, None]
        keep = classify(active, amps, k * setup.dt)
        active, amps = active[keep], amps[keep]
    return codes, times, paths


def run_measurement(setup: MeasurementSetup, rng: np.random.Generator,
                    keep_path: bool = True) -> MeasurementOutcome:
    """One measurement trajectory; eps_t = ||minus branch|| / ||plus branch||."""
    dws = rng.standard_normal((1, setup.n_steps)) * np.sqrt(setup.dt)
    codes, times, paths = _measurement_batch(setup, dws, keep_path)
    outcome = {1: "plus", -1: "minus", 0: "unresolved"}[int(codes[0])]
    t = float(times[0]) if outcome != "unresolved" else float("nan")
    path = None
    if paths is not None:
        path = paths[0]
        path = path[~np.isnan(path)]
    return MeasurementOutcome(outcome, t, path)


def _measurement_chunk(indices: range, setup: MeasurementSetup, seed: int, name: str) -> np.ndarray:
    dws = normal_increments(seed, name, indices, setup.n_steps, setup.dt)
    codes, times, _ = _measurement_batch(setup, dws)
    return np.column_stack([codes, times])


@dataclass(eq=False)
class MeasurementEnsembleResult:
    codes: np.ndarray
    collapse_times: np.ndarray
    p_plus: float

    @property
    def n_resolved(self) -> int:
        return int(np.sum(self.codes != 0))

    @property
    def n_unresolved(self) -> int:
        return int(np.sum(self.codes == 0))

    @property
    def frequency_plus(self) -> float:
        return float(np.sum(self.codes == 1) / max(self.n_resolved, 1))

    @property
    def binomial_sigma(self) -> float:
        return float(np.sqrt(self.p_plus * (1 - self.p_plus) / max(self.n_resolved, 1)))

    @property
    def mean_collapse_time(self) -> float:
        return float(np.nanmean(self.collapse_times))


def measurement_ensemble(setup: MeasurementSetup, n_trajectories: int, seed: int,
                         name: str = "qmupl-measure", workers: int = 1) -> MeasurementEnsembleResult:
    data = run_chunked(_measurement_chunk, n_trajectories, (setup, seed, name), workers=workers)
    return MeasurementEnsembleResult(data[:, 0].astype(int), data[:, 1], abs(setup.c_plus) ** 2)


def single_stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    return stream(seed, name, index)


def projected_collapse_time(kappa: float, mass: float, separation: float,
                            lambda0: float, m0: float) -> float:
    """Scale a dimensionless collapse time kappa = t_c * lam d^2 to physical units."""
    lam = collapse_strength(mass, lambda0, m0)
    return kappa / (lam * separation**2)


def scaled_measurement_setup(separation: float, lam: float = 1.0,
                             base: MeasurementSetup | None = None) -> MeasurementSetup:
    """Geometrically similar copy of ``base`` (taken at d = 1) for pointer separation d.

    Pointer width and grid scale with d, times with 1 / (lam d^2), so only
    the free pointer motion breaks exact similarity.
    """
    base = base or MeasurementSetup()
    x = lam * separation**2
    return MeasurementSetup(base.c_plus, base.c_minus, base.pointer_mass, separation, lam,
                            base.max_time / x, base.dt / x, base.pointer_width * separation,
                            base.decision_ratio, base.n_points, base.half_width * separation)


@dataclass(eq=False)
class CollapseScaling:
    strength: np.ndarray  # lam d^2
    mean_time: np.ndarray
    sem: np.ndarray
    unresolved: np.ndarray
    slope: float

    @property
    def kappa(self) -> np.ndarray:
        """Dimensionless collapse times t_c lam d^2."""
        return self.mean_time * self.strength


def collapse_time_scaling(separations, lam: float, n_trajectories: int, seed: int,
                          name: str = "collapse-scaling", workers: int = 1,
                          base: MeasurementSetup | None = None) -> CollapseScaling:
    """Mean collapse time over a sweep of pointer separations; log-log slope against lam d^2."""
    x, t, s, u = [], [], [], []
    for i, d in enumerate(separations):
        setup = scaled_measurement_setup(d, lam, base)
        res = measurement_ensemble(setup, n_trajectories, seed, f"{name}-{i}", workers)
        ok = res.codes != 0
        x.append(lam * d**2)
        t.append(float(res.collapse_times[ok].mean()))
        s.append(float(res.collapse_times[ok].std(ddof=1) / np.sqrt(ok.sum())))
        u.append(res.n_unresolved)
    x, t = np.array(x), np.array(t)
    slope = float(np.polyfit(np.log(x), np.log(t), 1)[0])
    return CollapseScaling(x, t, np.array(s), np.array(u), slope)


def implied_pointer_separation(collapse_time: float, kappa: float, mass: float,
                               lambda0: float, m0: float) -> float:
    """Separation d for which kappa / (lam d^2) equals ``collapse_time``."""
    lam = collapse_strength(mass, lambda0, m0)
    return float(np.sqrt(kappa / (lam * collapse_time)))
