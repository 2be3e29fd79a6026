"""GRW spontaneous localisation on a 1-D grid.

A particle evolves unitarily between jumps that occur as a Poisson process
of rate ``lambda_grw``.  At a jump the state is multiplied by the Gaussian
localisation operator

    L(x) = (pi r_c^2)^(-1/4) exp(-(q - x)^2 / (2 r_c^2))

and renormalised.  The centre ``x`` is drawn from ``p(x) = ||L(x) psi||^2``.
The (pi r_c^2)^(-1/4) prefactor is the one-dimensional version of the
three-dimensional (pi r_c^2)^(-3/4); it makes {L(x)^2} a resolution of the
identity, so p integrates to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .ensemble import run_chunked, stream
from .errors import ConfigurationError, DegenerateJumpError, NotNormalizedError
from .qm import (Grid, HamiltonianSpec, WaveFunction, batch_moments, cat_state,
                 clear_of_boundaries, make_propagator)

MIN_JUMP_NORM = 1e-300


@dataclass(frozen=True)
class GrwParams:
    lambda_grw: float
    r_c: float
    t_total: float
    dt: float

    def __post_init__(self):
        if not self.lambda_grw >= 0:
            raise ConfigurationError("lambda_grw must be non-negative")
        for name in ("r_c", "t_total", "dt"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.dt > self.t_total:
            raise ConfigurationError("dt must not exceed t_total")


@dataclass(frozen=True)
class JumpEvent:
    t: float
    x_center: float
    pre_norm: float


@dataclass(eq=False)
class GrwTrajectory:
    times: np.ndarray
    mean_q: np.ndarray
    sigma_q: np.ndarray
    jumps: list[JumpEvent] = field(default_factory=list)
    final_state: WaveFunction | None = None
    boundary_ok: bool = True


def jump_operator(grid: Grid, x_center: float, r_c: float) -> np.ndarray:
    """Diagonal of L(x_center) on the grid."""
    return (np.pi * r_c**2) ** -0.25 * np.exp(-((grid.x - x_center) ** 2) / (2 * r_c**2))


def apply_jump(psi: WaveFunction, x_center: float, r_c: float) -> WaveFunction:
    out, _ = _apply_jump(psi, x_center, r_c)
    return out


def _apply_jump(psi: WaveFunction, x_center: float, r_c: float) -> tuple[WaveFunction, float]:
    if not psi.is_normalized():
        raise NotNormalizedError("apply_jump expects a normalized state")
    amps = jump_operator(psi.grid, x_center, r_c) * psi.amplitudes
    pre = float(np.sqrt(np.sum(np.abs(amps) ** 2 * psi.grid.weights)))
    if not pre >= MIN_JUMP_NORM:
        raise DegenerateJumpError(f"||L(x)psi|| = {pre:.3e} at x = {x_center}: no support there")
    return psi.replace(amps / pre), pre


def _jump_density(density: np.ndarray, grid: Grid, r_c: float) -> np.ndarray:
    n = grid.n_points
    offsets = grid.dx * np.arange(-(n - 1), n)
    kernel = np.exp(-(offsets**2) / r_c**2) / (np.sqrt(np.pi) * r_c)
    full = fftconvolve(density, kernel, axes=-1)
    return np.maximum(full[..., n - 1:2 * n - 1] * grid.dx, 0.0)


def jump_pdf(psi: WaveFunction, r_c: float) -> np.ndarray:
    """Jump-centre density p(x_i) = ||L(x_i) psi||^2 on the grid points.

    Integrates to one up to the mass lost where the Gaussian of width r_c
    around the state pokes outside the grid.
    """
    if not psi.is_normalized():
        raise NotNormalizedError("jump_pdf expects a normalized state")
    return _jump_density(psi.density(), psi.grid, r_c)


def sample_from_grid_density(p: np.ndarray, grid: Grid, u: float) -> float:
    """Inverse-CDF sample for a density that is constant on each grid cell.

    Cell i is [x_i - dx/2, x_i + dx/2]; ``u`` is a uniform variate in [0, 1).
    """
    mass = p * grid.dx
    cdf = np.cumsum(mass)
    total = cdf[-1]
    target = u * total
    i = int(np.searchsorted(cdf, target, side="right"))
    i = min(i, grid.n_points - 1)
    lo = cdf[i - 1] if i > 0 else 0.0
    frac = (target - lo) / mass[i] if mass[i] > 0 else 0.5
    return float(grid.x[i] + (frac - 0.5) * grid.dx)


def sample_jump_center(psi: WaveFunction, r_c: float, rng: np.random.Generator) -> float:
    return sample_from_grid_density(jump_pdf(psi, r_c), psi.grid, rng.random())


def sample_jump_times(lambda_grw: float, t_total: float, rng: np.random.Generator) -> list[float]:
    """Poisson event times on [0, t_total] built from exponential gaps."""
    if lambda_grw < 0 or t_total < 0:
        raise ConfigurationError("lambda_grw and t_total must be non-negative")
    if lambda_grw == 0:
        return []
    times = []
    t = rng.exponential(1.0 / lambda_grw)
    while t <= t_total:
        times.append(float(t))
        t += rng.exponential(1.0 / lambda_grw)
    return times


def record_times(params: GrwParams, record_every: int = 1) -> np.ndarray:
    """Times at which ``run_grw`` records moments."""
    n_steps = int(np.ceil(params.t_total / params.dt - 1e-9))
    ks = [k for k in range(1, n_steps + 1) if k % record_every == 0 or k == n_steps]
    return np.array([0.0] + [min(k * params.dt, params.t_total) for k in ks])


def run_grw(psi0: WaveFunction, h: HamiltonianSpec, params: GrwParams,
            rng: np.random.Generator, record_every: int = 1) -> GrwTrajectory:
    """Unitary evolution interrupted by GRW jumps at Poisson times.

    Moments are recorded on the grid t_k = k dt (every ``record_every``
    steps, plus the final time).  Jumps falling inside a step split it.
    """
    if not psi0.is_normalized():
        raise NotNormalizedError("run_grw expects a normalized initial state")
    if psi0.grid != h.grid:
        raise ConfigurationError("state and Hamiltonian use different grids")
    n_steps = int(np.ceil(params.t_total / params.dt - 1e-9))
    jump_times = sample_jump_times(params.lambda_grw, params.t_total, rng)
    full = make_propagator(h, params.dt)

    psi = psi0
    t = 0.0
    jumps: list[JumpEvent] = []
    rec_t, rec_psi = [0.0], [psi0.amplitudes]
    boundary_ok = clear_of_boundaries(psi0)
    j = 0
    for k in range(1, n_steps + 1):
        t_next = min(k * params.dt, params.t_total)
        while j < len(jump_times) and jump_times[j] <= t_next:
            tj = jump_times[j]
            if tj > t:
                psi = psi.replace(make_propagator(h, tj - t)(psi.amplitudes))
            t = tj
            x = sample_jump_center(psi, params.r_c, rng)
            try:
                psi, pre = _apply_jump(psi, x, params.r_c)
            except DegenerateJumpError as exc:
                raise DegenerateJumpError(f"jump {j} at t = {tj:.6g}: {exc}") from exc
            jumps.append(JumpEvent(tj, x, pre))
            j += 1
        step = t_next - t
        if step > 0:
            prop = full if abs(step - params.dt) <= 1e-12 * params.dt else make_propagator(h, step)
            psi = psi.replace(prop(psi.amplitudes))
        t = t_next
        if k % record_every == 0 or k == n_steps:
            rec_t.append(t)
            rec_psi.append(psi.amplitudes)
            boundary_ok = boundary_ok and clear_of_boundaries(psi)
    mq, sq, _, _, _ = batch_moments(np.array(rec_psi), psi0.grid, h.hbar)
    return GrwTrajectory(np.array(rec_t), mq, sq, jumps, psi, boundary_ok)


def amplification_time(t_single: float, n_constituents: int | float) -> float:
    """Collapse time T/N of a rigid aggregate of N constituents.

    Division is done in exact rationals and rounded once, so decimal inputs
    such as (1e17, 10**23) give the nearest double to the true quotient.
    """
    if not n_constituents >= 1:
        raise ConfigurationError("n_constituents must be at least 1")
    if not t_single >= 0:
        raise ConfigurationError("t_single must be non-negative")
    return float(Fraction(t_single) / Fraction(n_constituents))


# --------------------------------------------------------------------------
# Ensembles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CatSetup:
    """Two Gaussian peaks at +-d/2 with weights |c+|^2 = p_plus, no free motion."""

    p_plus: float = 0.3
    separation: float = 10.0
    sigma: float = 0.5
    r_c: float = 0.5
    lambda_grw: float = 1.0
    t_total: float = 12.0
    n_points: int = 256
    half_width: float = 12.0
    record_dt: float | None = None

    def __post_init__(self):
        if not 0 <= self.p_plus <= 1:
            raise ConfigurationError("p_plus must lie in [0, 1]")

    def build(self) -> tuple[WaveFunction, HamiltonianSpec, GrwParams]:
        grid = Grid(self.n_points, -self.half_width, self.half_width)
        psi = cat_state(grid, self.separation, self.sigma,
                        np.sqrt(self.p_plus), np.sqrt(1 - self.p_plus))
        dt = self.record_dt or self.t_total
        return psi, HamiltonianSpec.zero(grid), GrwParams(self.lambda_grw, self.r_c, self.t_total, dt)


def _cat_chunk(indices: range, setup: CatSetup, seed: int, name: str) -> np.ndarray:
    """Per trajectory: [final <q>, number of jumps, sigma_q at each record time...]."""
    psi, h, params = setup.build()
    rows = []
    for i in indices:
        tr = run_grw(psi, h, params, stream(seed, name, i))
        rows.append(np.concatenate([[tr.mean_q[-1], len(tr.jumps)], tr.sigma_q]))
    return np.array(rows)


@dataclass(frozen=True)
class CatEnsembleResult:
    p_plus: float
    n_trajectories: int
    n_plus: int
    n_unresolved: int
    record_times: np.ndarray
    surviving_fraction: np.ndarray

    @property
    def frequency_plus(self) -> float:
        resolved = self.n_trajectories - self.n_unresolved
        return self.n_plus / resolved if resolved else float("nan")

    @property
    def binomial_sigma(self) -> float:
        resolved = self.n_trajectories - self.n_unresolved
        return float(np.sqrt(self.p_plus * (1 - self.p_plus) / resolved))


def grw_cat_ensemble(setup: CatSetup, n_trajectories: int, seed: int,
                     name: str = "grw-born", workers: int = 1) -> CatEnsembleResult:
    """Run GRW on a cat state many times; count which peak survives.

    A trajectory is 'plus' if its final <q> is within d/4 of +d/2 and
    'two-peaked' at a record time while sigma_q > d/4.
    """
    data = run_chunked(_cat_chunk, n_trajectories, (setup, seed, name), workers=workers)
    final_q = data[:, 0]
    d = setup.separation
    n_plus = int(np.sum(np.abs(final_q - d / 2) < d / 4))
    n_minus = int(np.sum(np.abs(final_q + d / 2) < d / 4))
    sig = data[:, 2:]
    times = record_times(setup.build()[2])
    surviving = np.mean(sig > d / 4, axis=0)
    return CatEnsembleResult(setup.p_plus, n_trajectories, n_plus,
                             n_trajectories - n_plus - n_minus, times, surviving)


def poisson_count_trials(lambda_grw: float, t_total: float, n_trials: int,
                         seed: int, name: str = "grw-counts") -> np.ndarray:
    """Number of jump times in [0, t_total] for each of ``n_trials`` streams."""
    return np.array([len(sample_jump_times(lambda_grw, t_total, stream(seed, name, i)))
                     for i in range(n_trials)])
