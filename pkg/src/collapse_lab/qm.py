"""Discretised one-dimensional quantum mechanics.

Grids, wavefunctions, Hamiltonians and unitary propagation.  Two kinetic
discretisations are available:

* ``"hard-wall"`` (default): second-order finite differences with Dirichlet
  edges, propagated by Crank-Nicolson (a Cayley transform, hence exactly
  unitary up to round-off and second order in ``dt``);
* ``"periodic"``: spectral kinetic term.  V = 0 is propagated exactly by
  FFT; with a potential the dense Hamiltonian is diagonalised once (grids
  up to ``EIGEN_MAX_POINTS``) and exponentiated exactly, larger grids fall
  back to Strang splitting ``exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2)``.

All propagators accept amplitude arrays of shape ``(..., n_points)`` so the
stochastic modules can advance whole batches of trajectories at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigurationError, IntegrationError, NotNormalizedError

NORM_TOL = 1e-10
EIGEN_MAX_POINTS = 2048

BOUNDARIES = ("hard-wall", "periodic")
KINDS = ("free", "harmonic", "custom-potential")


@dataclass(frozen=True)
class Grid:
    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigurationError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ConfigurationError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers of the discrete Fourier modes (periodic length n*dx)."""
        k = 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.setflags(write=False)
        return k

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights; equal to dx away from the two edges."""
        w = np.full(self.n_points, self.dx)
        w[[0, -1]] = self.dx / 2
        w.setflags(write=False)
        return w

    def index_of(self, x0: float) -> int:
        return int(np.argmin(np.abs(self.x - x0)))


def build_grid(n_points: int, x_min: float, x_max: float) -> Grid:
    return Grid(n_points, float(x_min), float(x_max))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"amplitudes must have shape ({self.grid.n_points},), got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2 * self.grid.weights))

    def normalized(self) -> WaveFunction:
        n = np.sqrt(self.norm_squared())
        if n == 0:
            raise NotNormalizedError("cannot normalize the zero wavefunction")
        return WaveFunction(self.grid, self.amplitudes / n)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def replace(self, amplitudes: np.ndarray) -> WaveFunction:
        return WaveFunction(self.grid, amplitudes)

    def __add__(self, other: WaveFunction) -> WaveFunction:
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar: complex) -> WaveFunction:
        return WaveFunction(self.grid, self.amplitudes * scalar)

    __rmul__ = __mul__


def _check_same_grid(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid:
        raise ConfigurationError("wavefunctions live on different grids")


def gaussian(grid: Grid, x0: float = 0.0, sigma: float = 1.0, k0: float = 0.0) -> WaveFunction:
    """Normalised Gaussian packet with position spread ``sigma`` (std of |psi|^2)."""
    x = grid.x
    amps = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k0 * x)
    return WaveFunction(grid, amps).normalized()


def cat_state(grid: Grid, separation: float, sigma: float,
              c_plus: complex, c_minus: complex, center: float = 0.0) -> WaveFunction:
    """Superposition c+ phi(x - d/2) + c- phi(x + d/2) of two normalised Gaussians.

    The result is renormalised; for well separated peaks the renormalisation
    is a no-op at the 1e-16 level when |c+|^2 + |c-|^2 = 1.
    """
    plus = gaussian(grid, center + separation / 2, sigma).amplitudes
    minus = gaussian(grid, center - separation / 2, sigma).amplitudes
    return WaveFunction(grid, c_plus * plus + c_minus * minus).normalized()


def norm(psi: WaveFunction) -> float:
    return float(np.sqrt(psi.norm_squared()))


Observable = Union[str, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _diagonal(grid: Grid, observable: Observable) -> np.ndarray:
    if isinstance(observable, str):
        if observable == "q":
            return grid.x
        if observable == "q2":
            return grid.x**2
        raise ConfigurationError(f"unknown observable {observable!r}")
    if callable(observable):
        return np.asarray(observable(grid.x))
    values = np.asarray(observable)
    if values.shape != (grid.n_points,):
        raise ConfigurationError("diagonal observable must match the grid length")
    return values


def expectation(psi: WaveFunction, observable: Observable = "q") -> float:
    """<psi|O|psi> for a position-diagonal observable O.

    ``observable`` is ``"q"``, ``"q2"``, an array of diagonal values, or a
    function of position.  ``psi`` must be normalised.
    """
    if not psi.is_normalized():
        raise NotNormalizedError(
            f"expectation needs a normalized state (norm^2 = {psi.norm_squared():.3e})")
    values = _diagonal(psi.grid, observable)
    return float(np.real(np.sum(values * psi.density() * psi.grid.weights)))


@dataclass(frozen=True)
class Moments:
    mean_q: float
    sigma_q: float
    mean_p: float
    sigma_p: float
    norm: float


def batch_moments(amps: np.ndarray, grid: Grid, hbar: float = 1.0):
    """Position and momentum moments of amplitude arrays of shape (..., n).

    Returns ``(mean_q, sigma_q, mean_p, sigma_p, norm)`` arrays.  Amplitudes
    are normalised internally.  Momentum moments use the discrete Fourier
    transform, so the state must be negligible at the grid edges.
    """
    w = grid.weights
    x = grid.x
    dens = np.abs(amps) ** 2 * w
    n2 = dens.sum(axis=-1)
    mq = (dens * x).sum(axis=-1) / n2
    vq = (dens * x**2).sum(axis=-1) / n2 - mq**2
    pk = np.abs(np.fft.fft(amps, axis=-1)) ** 2
    pk_norm = pk.sum(axis=-1)
    p = hbar * grid.k
    mp = (pk * p).sum(axis=-1) / pk_norm
    vp = (pk * p**2).sum(axis=-1) / pk_norm - mp**2
    return mq, np.sqrt(np.maximum(vq, 0.0)), mp, np.sqrt(np.maximum(vp, 0.0)), np.sqrt(n2)


def moments(psi: WaveFunction, hbar: float = 1.0) -> Moments:
    mq, sq, mp, sp, nrm = batch_moments(psi.amplitudes, psi.grid, hbar)
    return Moments(float(mq), float(sq), float(mp), float(sp), float(nrm))


def clear_of_boundaries(psi: WaveFunction, n_sigma: float = 5.0) -> bool:
    """True if <q> +- n_sigma * sigma_q lies inside the grid."""
    m = moments(psi)
    g = psi.grid
    return (m.mean_q - n_sigma * m.sigma_q >= g.x_min) and (m.mean_q + n_sigma * m.sigma_q <= g.x_max)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """H = p^2/2m + V(q) on a grid.

    ``kinetic=False`` drops the p^2 term (used for jump-only and pointer
    models where free spreading is irrelevant on the simulated time scale).
    """

    grid: Grid
    kind: str
    mass: float = 1.0
    potential: np.ndarray = field(default=None)
    hbar: float = 1.0
    boundary: str = "hard-wall"
    kinetic: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not self.mass > 0:
            raise ConfigurationError("mass must be positive")
        if not self.hbar > 0:
            raise ConfigurationError("hbar must be positive")
        pot = np.zeros(self.grid.n_points) if self.potential is None else np.array(self.potential, dtype=float)
        if pot.shape != (self.grid.n_points,):
            raise ConfigurationError("potential array length must equal the grid length")
        pot.setflags(write=False)
        object.__setattr__(self, "potential", pot)

    @classmethod
    def free(cls, grid: Grid, mass: float = 1.0, **kw) -> HamiltonianSpec:
        return cls(grid, "free", mass, None, **kw)

    @classmethod
    def harmonic(cls, grid: Grid, mass: float = 1.0, omega: float = 1.0,
                 center: float = 0.0, **kw) -> HamiltonianSpec:
        pot = 0.5 * mass * omega**2 * (grid.x - center) ** 2
        return cls(grid, "harmonic", mass, pot, **kw)

    @classmethod
    def custom(cls, grid: Grid, potential: np.ndarray, mass: float = 1.0, **kw) -> HamiltonianSpec:
        return cls(grid, "custom-potential", mass, potential, **kw)

    @classmethod
    def zero(cls, grid: Grid, **kw) -> HamiltonianSpec:
        """H = 0: no kinetic and no potential term."""
        return cls(grid, "custom-potential", 1.0, None, kinetic=False, **kw)

    @property
    def is_zero(self) -> bool:
        return not self.kinetic and not np.any(self.potential)

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """(energies, eigenvectors) of the dense periodic Hamiltonian."""
        if self.boundary != "periodic":
            raise ConfigurationError("eigensystem is only built for periodic grids")
        n = self.grid.n_points
        t = self.hbar**2 * self.grid.k**2 / (2 * self.mass) if self.kinetic else np.zeros(n)
        kin = np.fft.ifft(t[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
        mat = 0.5 * (kin + kin.conj().T) + np.diag(self.potential)
        return np.linalg.eigh(mat)


class Propagator:
    """exp(-i H dt / hbar) for a fixed (H, dt), applied to arrays of shape (..., n)."""

    def __init__(self, h: HamiltonianSpec, dt: float):
        if not dt > 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        self.h = h
        self.dt = float(dt)
        g = h.grid
        if h.is_zero:
            self._mode = "identity"
        elif not h.kinetic:
            self._mode = "potential"
            self._vphase = np.exp(-1j * h.potential * dt / h.hbar)
        elif h.boundary == "periodic" and np.any(h.potential) and g.n_points <= EIGEN_MAX_POINTS:
            self._mode = "eigen"
            e, vecs = h.eigensystem
            self._u = (vecs * np.exp(-1j * e * dt / h.hbar)) @ vecs.conj().T
        elif h.boundary == "periodic":
            self._mode = "split"
            self._tphase = np.exp(-1j * h.hbar * g.k**2 * dt / (2 * h.mass))
            self._vhalf = np.exp(-0.5j * h.potential * dt / h.hbar)
            self._has_v = bool(np.any(h.potential))
        else:
            self._mode = "cn"
            t = h.hbar**2 / (2 * h.mass * g.dx**2)
            self._diag = 2 * t + h.potential
            self._off = -t
            alpha = 0.5j * dt / h.hbar
            self._alpha = alpha
            n = g.n_points
            ab = np.zeros((3, n), dtype=complex)
            ab[0, 1:] = alpha * self._off
            ab[1, :] = 1 + alpha * self._diag
            ab[2, :-1] = alpha * self._off
            self._ab = ab

    def __call__(self, amps: np.ndarray) -> np.ndarray:
        amps = np.asarray(amps, dtype=complex)
        if self._mode == "identity":
            out = amps.copy()
        elif self._mode == "potential":
            out = amps * self._vphase
        elif self._mode == "eigen":
            out = amps @ self._u.T
        elif self._mode == "split":
            out = amps * self._vhalf if self._has_v else amps
            out = np.fft.ifft(np.fft.fft(out, axis=-1) * self._tphase, axis=-1)
            if self._has_v:
                out = out * self._vhalf
        else:
            out = self._crank_nicolson(amps)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"unitary step produced non-finite amplitudes (dt={self.dt})")
        return out

    def _crank_nicolson(self, amps: np.ndarray) -> np.ndarray:
        a = self._alpha
        rhs = (1 - a * self._diag) * amps
        rhs[..., 1:] -= a * self._off * amps[..., :-1]
        rhs[..., :-1] -= a * self._off * amps[..., 1:]
        shape = rhs.shape
        flat = rhs.reshape(-1, shape[-1]).T
        try:
            sol = solve_banded((1, 1), self._ab, flat, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise IntegrationError(f"Crank-Nicolson solve failed at dt={self.dt}") from exc
        return sol.T.reshape(shape)


def make_propagator(h: HamiltonianSpec, dt: float) -> Propagator:
    return Propagator(h, dt)


def evolve_unitary(psi: WaveFunction, h: HamiltonianSpec, dt: float) -> WaveFunction:
    """Advance ``psi`` by one unitary step of length ``dt``."""
    if psi.grid != h.grid:
        raise ConfigurationError("wavefunction and Hamiltonian use different grids")
    if not psi.is_normalized():
        raise NotNormalizedError("evolve_unitary expects a normalized state")
    return psi.replace(Propagator(h, dt)(psi.amplitudes))


def free_spread(sigma0: float, t: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    """Analytic position spread of a free minimum-uncertainty Gaussian at time t."""
    return sigma0 * np.sqrt(1 + (hbar * t / (2 * mass * sigma0**2)) ** 2)
