"""Classical dynamics of matrix-valued variables with a trace Lagrangian.

A ``LagrangianSpec`` names coordinates q_r (bosonic or fermionic), their
velocities ``q_r_dot`` and optional constant matrices.  Momenta are trace
derivatives with respect to velocities, the velocity-momentum relation is
inverted numerically (it is affine for Lagrangians quadratic in
velocities), and Hamilton's equations p_r' = dL/dq_r are stepped with
classical RK4.

Charge conventions.  With the ordinary trace the Lagrangian is invariant
under q -> U q U^dagger for every variable without signs, and the
conserved matrix is sum_r [q_r, p_r] ("commutator").  With the supertrace
fermionic terms flip into anticommutators, giving
sum_B [q, p] - sum_F {q, p} ("graded").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .ensemble import run_chunked, stream
from .errors import (ConfigurationError, DegenerateLagrangianError, DimensionMismatchError,
                     IntegrationError, UnboundedHamiltonianError)
from .graded import (GradedDimension, GradedMatrix, OperatorPolynomial, check_mode,
                     derivative_raw, dot, evaluate_raw)

MAX_CONDITION = 1e12
CONVENTIONS = ("graded", "commutator")


def _tr(m: np.ndarray, dim: GradedDimension, mode: str) -> np.ndarray:
    if mode == "ordinary":
        return np.trace(m, axis1=-2, axis2=-1)
    s = dim.grade_sign()
    return np.einsum("...ii,i->...", m, s)


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    poly: OperatorPolynomial
    coords: tuple[str, ...]
    grades: tuple[int, ...]
    dim: GradedDimension
    constants: Mapping[str, GradedMatrix] = field(default_factory=dict)
    trace_mode: str = "ordinary"

    def __post_init__(self):
        check_mode(self.trace_mode)
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "grades", tuple(self.grades))
        if len(self.coords) != len(self.grades):
            raise ConfigurationError("one grade flag per coordinate is required")
        if any(g not in (1, -1) for g in self.grades):
            raise ConfigurationError("grade flags must be +1 (bosonic) or -1 (fermionic)")
        known = set(self.coords) | {dot(c) for c in self.coords} | set(self.constants)
        unknown = self.poly.variables - known
        if unknown:
            raise ConfigurationError(f"Lagrangian uses unbound variables {sorted(unknown)}")
        for k, m in self.constants.items():
            if m.dim != self.dim:
                raise DimensionMismatchError(f"constant {k!r} has dimension {m.dim}")
        if self.poly.degree_in(self.velocities) > 2:
            raise ConfigurationError("only Lagrangians at most quadratic in velocities are supported")

    @property
    def velocities(self) -> tuple[str, ...]:
        return tuple(dot(c) for c in self.coords)

    @property
    def parities(self) -> dict[str, int]:
        out = {k: m.parity for k, m in self.constants.items()}
        for c, g in zip(self.coords, self.grades):
            out[c] = out[dot(c)] = 0 if g == 1 else 1
        return out

    def masks(self) -> np.ndarray:
        """(R, n, n) boolean masks of the entries each coordinate may occupy."""
        return np.array([self.dim.mask(0 if g == 1 else 1) for g in self.grades])

    @property
    def mass_is_constant(self) -> bool:
        vel, crd = set(self.velocities), set(self.coords)
        return all(not (set(w) & crd) for _, w in self.poly.terms if sum(v in vel for v in w) == 2)


@dataclass(frozen=True, eq=False)
class PhasePoint:
    q: tuple[GradedMatrix, ...]
    p: tuple[GradedMatrix, ...]
    grades: tuple[int, ...]
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(self.q))
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "grades", tuple(self.grades))
        if not len(self.q) == len(self.p) == len(self.grades):
            raise ConfigurationError("q, p and grades must have equal length")
        dims = {m.dim for m in self.q + self.p}
        if len(dims) != 1:
            raise DimensionMismatchError("all matrices of a phase point must share one dimension")
        for m, g in zip(self.q + self.p, self.grades * 2):
            want = 0 if g == 1 else 1
            if m.parity not in (want,) and np.any(m.full != 0):
                raise ConfigurationError("matrix parity does not match its grade flag")

    @property
    def dim(self) -> GradedDimension:
        return self.q[0].dim

    @classmethod
    def from_arrays(cls, dim, q, p, grades, tau=0.0) -> PhasePoint:
        return cls(tuple(GradedMatrix(dim, m) for m in q), tuple(GradedMatrix(dim, m) for m in p),
                   grades, tau)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([m.full for m in self.q]), np.array([m.full for m in self.p])

    def conjugated(self, u: np.ndarray) -> PhasePoint:
        """Apply q -> U q U^dagger, p -> U p U^dagger to every variable."""
        ud = u.conj().T
        return PhasePoint(tuple(GradedMatrix(self.dim, u @ m.full @ ud) for m in self.q),
                          tuple(GradedMatrix(self.dim, u @ m.full @ ud) for m in self.p),
                          self.grades, self.tau)


class VelocityMap:
    """Evaluates momenta and forces and inverts p = M(q) v + b(q) for v."""

    def __init__(self, spec: LagrangianSpec):
        self.spec = spec
        self.n = spec.dim.total
        self.R = len(spec.coords)
        self.masks = spec.masks()
        self.idx = np.flatnonzero(self.masks)
        self.parities = spec.parities if spec.trace_mode == "super" else None
        self.consts = {k: m.full for k, m in spec.constants.items()}
        self._lu = None

    def env(self, Q: np.ndarray, V: np.ndarray) -> dict[str, np.ndarray]:
        e = dict(self.consts)
        for r, c in enumerate(self.spec.coords):
            e[c] = Q[..., r, :, :]
            e[dot(c)] = V[..., r, :, :]
        return e

    def _grad(self, names: Sequence[str], Q, V) -> np.ndarray:
        env = self.env(Q, V)
        shape = np.broadcast_shapes(Q.shape, V.shape)
        out = np.zeros(shape, dtype=complex)
        for r, name in enumerate(names):
            if name in self.spec.poly.variables:
                out[..., r, :, :] = derivative_raw(self.spec.poly, name, env, self.spec.trace_mode,
                                                   self.parities)
        return out * self.masks

    def momenta(self, Q, V) -> np.ndarray:
        return self._grad(self.spec.velocities, Q, V)

    def forces(self, Q, V) -> np.ndarray:
        return self._grad(self.spec.coords, Q, V)

    def lagrangian(self, Q, V) -> np.ndarray:
        return _tr(evaluate_raw(self.spec.poly, self.env(Q, V)), self.spec.dim, self.spec.trace_mode)

    def _factor(self, Q):
        k = self.idx.size
        zero = np.zeros_like(Q)
        b = self.momenta(Q, zero).reshape(-1)[self.idx]
        basis = np.zeros((k, self.R * self.n * self.n), dtype=complex)
        basis[np.arange(k), self.idx] = 1.0
        cols = self.momenta(Q[None], basis.reshape(k, self.R, self.n, self.n))
        m = cols.reshape(k, -1)[:, self.idx].T - b[:, None]
        if not np.all(np.isfinite(m)):
            raise IntegrationError("non-finite velocity-momentum matrix")
        cond = np.linalg.cond(m)
        if not cond < MAX_CONDITION:
            raise DegenerateLagrangianError(
                f"velocity-momentum map is singular (condition number {cond:.3g})")
        return lu_factor(m), b

    def velocities(self, Q, P) -> np.ndarray:
        if self.spec.mass_is_constant:
            if self._lu is None:
                self._lu = self._factor(Q)[0]
            lu = self._lu
            b = self.momenta(Q, np.zeros_like(Q)).reshape(-1)[self.idx]
        else:
            lu, b = self._factor(Q)
        x = lu_solve(lu, P.reshape(-1)[self.idx] - b)
        v = np.zeros(self.R * self.n * self.n, dtype=complex)
        v[self.idx] = x
        return v.reshape(self.R, self.n, self.n)

    def hamiltonian(self, Q, P, V=None) -> complex:
        if V is None:
            V = self.velocities(Q, P)
        pv = _tr(P @ V, self.spec.dim, self.spec.trace_mode).sum()
        return complex(pv - self.lagrangian(Q, V))


def canonical_momenta(spec: LagrangianSpec, q: Sequence[GradedMatrix],
                      qdot: Sequence[GradedMatrix]) -> list[GradedMatrix]:
    """p_r = dL/d(q_r_dot) by trace differentiation."""
    vm = VelocityMap(spec)
    Q = np.array([m.full for m in q])
    V = np.array([m.full for m in qdot])
    if Q.shape != V.shape or len(q) != len(spec.coords):
        raise DimensionMismatchError("one coordinate and one velocity per Lagrangian coordinate")
    # Velocities are evaluated unmasked so a caller's off-grade input is not hidden.
    env = vm.env(Q, V)
    out = []
    for name in spec.velocities:
        if name in spec.poly.variables:
            raw = derivative_raw(spec.poly, name, env, spec.trace_mode, vm.parities)
        else:
            raw = np.zeros((vm.n, vm.n))
        out.append(GradedMatrix(spec.dim, raw))
    return out


def solve_velocities(spec: LagrangianSpec, point: PhasePoint) -> list[GradedMatrix]:
    Q, P = point.arrays()
    V = VelocityMap(spec).velocities(Q, P)
    return [GradedMatrix(spec.dim, v) for v in V]


def trace_hamiltonian(spec: LagrangianSpec, point: PhasePoint) -> complex:
    """sum_r Tr(p_r q_r') - Tr L, possibly complex."""
    Q, P = point.arrays()
    return VelocityMap(spec).hamiltonian(Q, P)


def trace_lagrangian(spec: LagrangianSpec, q: Sequence[GradedMatrix], qdot: Sequence[GradedMatrix]) -> complex:
    vm = VelocityMap(spec)
    return complex(vm.lagrangian(np.array([m.full for m in q]), np.array([m.full for m in qdot])))


def _charge_raw(Q, P, grades, convention: str) -> np.ndarray:
    if convention not in CONVENTIONS:
        raise ConfigurationError(f"convention must be one of {CONVENTIONS}")
    out = np.zeros(Q.shape[-2:], dtype=complex)
    for r, g in enumerate(grades):
        qp, pq = Q[r] @ P[r], P[r] @ Q[r]
        if g == -1 and convention == "graded":
            out -= qp + pq
        else:
            out += qp - pq
    return out


def adler_millard(point: PhasePoint, convention: str = "graded") -> GradedMatrix:
    """C = sum_B [q, p] - sum_F {q, p}; ``convention="commutator"`` uses [q, p] for every pair."""
    Q, P = point.arrays()
    return GradedMatrix(point.dim, _charge_raw(Q, P, point.grades, convention))


def consistent_convention(trace_mode: str) -> str:
    """The charge that the trace mode actually conserves."""
    check_mode(trace_mode)
    return "commutator" if trace_mode == "ordinary" else "graded"


@dataclass(eq=False)
class ConservationReport:
    times: np.ndarray
    trace_h: np.ndarray
    charge_drift: np.ndarray
    charge_norm0: float
    convention: str
    anti_hermitian_defect: np.ndarray

    @property
    def energy_drift(self) -> float:
        """max_t |Tr H(t) - Tr H(0)| / |Tr H(0)|."""
        h0 = self.trace_h[0]
        scale = abs(h0) if h0 != 0 else 1.0
        return float(np.max(np.abs(self.trace_h - h0)) / scale)

    @property
    def real_energy_drift(self) -> float:
        h = self.trace_h.real
        scale = abs(h[0]) if h[0] != 0 else 1.0
        return float(np.max(np.abs(h - h[0])) / scale)

    @property
    def charge_relative_drift(self) -> float:
        scale = self.charge_norm0 if self.charge_norm0 > 0 else 1.0
        return float(np.max(self.charge_drift) / scale)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    q: np.ndarray  # (n_rec, R, n, n)
    p: np.ndarray
    grades: tuple[int, ...]
    dim: GradedDimension
    report: ConservationReport

    def point(self, i: int) -> PhasePoint:
        return PhasePoint.from_arrays(self.dim, self.q[i], self.p[i], self.grades, float(self.times[i]))


def rk4_step(vm: VelocityMap, Q, P, h):
    def f(Q, P):
        V = vm.velocities(Q, P)
        return V, vm.forces(Q, V)

    k1q, k1p = f(Q, P)
    k2q, k2p = f(Q + h / 2 * k1q, P + h / 2 * k1p)
    k3q, k3p = f(Q + h / 2 * k2q, P + h / 2 * k2p)
    k4q, k4p = f(Q + h * k3q, P + h * k3p)
    return (Q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
            P + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def integrate_eom(spec: LagrangianSpec, point0: PhasePoint, dt: float, n_steps: int,
                  record_every: int = 1, convention: str | None = None) -> Trajectory:
    """RK4 integration of Hamilton's equations with a conservation report.

    The charge monitored defaults to the convention conserved by the
    spec's trace mode (see ``consistent_convention``).
    """
    if not dt > 0 or n_steps < 1:
        raise ConfigurationError("dt must be positive and n_steps at least 1")
    if point0.grades != spec.grades:
        raise ConfigurationError("phase point grades differ from the Lagrangian's")
    if point0.dim != spec.dim:
        raise DimensionMismatchError("phase point and Lagrangian dimensions differ")
    convention = convention or consistent_convention(spec.trace_mode)
    vm = VelocityMap(spec)
    Q, P = point0.arrays()
    Q, P = Q * vm.masks, P * vm.masks
    c0 = _charge_raw(Q, P, spec.grades, convention)
    times, qs, ps, hs, dc, ah = [], [], [], [], [], []

    def record(k, Q, P):
        c = _charge_raw(Q, P, spec.grades, convention)
        times.append(point0.tau + k * dt)
        qs.append(Q)
        ps.append(P)
        hs.append(vm.hamiltonian(Q, P))
        dc.append(np.linalg.norm(c - c0))
        ah.append(np.linalg.norm(c + c.conj().T))

    record(0, Q, P)
    for k in range(1, n_steps + 1):
        Q, P = rk4_step(vm, Q, P, dt)
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(P))):
            raise IntegrationError(f"non-finite state at step {k}")
        if k % record_every == 0 or k == n_steps:
            record(k, Q, P)
    report = ConservationReport(np.array(times), np.array(hs), np.array(dc),
                                float(np.linalg.norm(c0)), convention, np.array(ah))
    return Trajectory(np.array(times), np.array(qs), np.array(ps), spec.grades, spec.dim, report)


def liouville_jacobian(spec: LagrangianSpec, point: PhasePoint, dt: float, eps: float = 1e-6) -> float:
    """Determinant of the one-step RK4 map on the real phase-space coordinates.

    Coordinates are the real and imaginary parts of every grade-allowed
    entry of every q_r and p_r; derivatives by central differences.
    """
    vm = VelocityMap(spec)
    Q0, P0 = point.arrays()
    idx = vm.idx
    size = vm.R * vm.n * vm.n

    def pack(Q, P):
        z = np.concatenate([Q.reshape(-1)[idx], P.reshape(-1)[idx]])
        return np.concatenate([z.real, z.imag])

    def unpack(x):
        k = idx.size
        z = x[:2 * k] + 1j * x[2 * k:]
        Q, P = np.zeros(size, complex), np.zeros(size, complex)
        Q[idx], P[idx] = z[:k], z[k:]
        return Q.reshape(vm.R, vm.n, vm.n), P.reshape(vm.R, vm.n, vm.n)

    x0 = pack(Q0 * vm.masks, P0 * vm.masks)
    jac = np.empty((x0.size, x0.size))
    for j in range(x0.size):
        e = np.zeros_like(x0)
        e[j] = eps
        plus = pack(*rk4_step(vm, *unpack(x0 + e), dt))
        minus = pack(*rk4_step(vm, *unpack(x0 - e), dt))
        jac[:, j] = (plus - minus) / (2 * eps)
    sign, logdet = np.linalg.slogdet(jac)
    return float(sign * np.exp(logdet))


# --------------------------------------------------------------------------
# Equipartition Ward identity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianBasis:
    """Real coordinates of a Hermitian N x N matrix: diagonal, Re and Im of the upper triangle."""

    n: int

    @property
    def classes(self) -> tuple[str, ...]:
        return ("diag", "offdiag-re", "offdiag-im")

    def index_sets(self):
        iu = np.triu_indices(self.n, 1)
        return np.arange(self.n), iu

    @property
    def size(self) -> int:
        return self.n * self.n

    def class_of(self) -> np.ndarray:
        m = self.n * (self.n - 1) // 2
        return np.r_[np.zeros(self.n, int), np.ones(m, int), 2 * np.ones(m, int)]

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        """x (..., N^2) -> Hermitian (..., N, N); off-diagonal E_ij + E_ji and i(E_ij - E_ji)."""
        n = self.n
        d, (iu, ju) = self.index_sets()
        m = (x.shape[-1] - n) // 2
        out = np.zeros(x.shape[:-1] + (n, n), dtype=complex)
        out[..., d, d] = x[..., :n]
        z = x[..., n:n + m] - 1j * x[..., n + m:]
        out[..., iu, ju] = z
        out[..., ju, iu] = np.conj(z)
        return out

    def gradient(self, grad_matrix: np.ndarray) -> np.ndarray:
        """dF/dx_s = Re Tr(G E_s) for a trace gradient G with dF = Re Tr(G dM)."""
        n = self.n
        d, (iu, ju) = self.index_sets()
        g_diag = grad_matrix[..., d, d].real
        # E_ij + E_ji: G_ji + G_ij ; i(E_ij - E_ji) -> E(x) uses -i on (i<j); Tr(G E) = -i G_ji + i G_ij
        g_re = (grad_matrix[..., ju, iu] + grad_matrix[..., iu, ju]).real
        g_im = (-1j * grad_matrix[..., ju, iu] + 1j * grad_matrix[..., iu, ju]).real
        return np.concatenate([g_diag, g_re, g_im], axis=-1)


@dataclass(frozen=True)
class WardClass:
    variable: str
    coordinate_class: str
    mean: float
    sem: float
    expected: float

    @property
    def z_score(self) -> float:
        return (self.mean - self.expected) / self.sem if self.sem > 0 else float("inf")

    @property
    def passed(self) -> bool:
        return abs(self.mean - self.expected) <= 3 * self.sem


@dataclass(eq=False)
class WardReport:
    beta: float
    n_samples: int
    classes: list[WardClass]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.classes)


class _QuadraticTrace:
    def __init__(self, h: OperatorPolynomial, variables: Sequence[str], n: int):
        self.h, self.vars, self.basis = h, tuple(variables), HermitianBasis(n)
        unknown = h.variables - set(self.vars)
        if unknown:
            raise ConfigurationError(f"Hamiltonian uses unbound variables {sorted(unknown)}")

    def env(self, x: np.ndarray) -> dict[str, np.ndarray]:
        s = self.basis.size
        return {v: self.basis.to_matrix(x[..., i * s:(i + 1) * s]) for i, v in enumerate(self.vars)}

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.trace(evaluate_raw(self.h, self.env(x)), axis1=-2, axis2=-1)

    def grad(self, x: np.ndarray) -> np.ndarray:
        env = self.env(x)
        parts = []
        for v in self.vars:
            g = derivative_raw(self.h, v, env) if v in self.h.variables else np.zeros(x.shape[:-1] + (self.basis.n,) * 2)
            parts.append(self.basis.gradient(g))
        return np.concatenate(parts, axis=-1)


def quadratic_form(h: OperatorPolynomial, variables: Sequence[str], n: int) -> np.ndarray:
    """Matrix K with Tr H(x) = x^T K x / 2 on Hermitian coordinates (polarisation).

    Raises ConfigurationError unless Tr H is a real homogeneous quadratic.
    """
    qt = _QuadraticTrace(h, variables, n)
    dim = qt.basis.size * len(qt.vars)
    eye = np.eye(dim)
    single = qt.value(eye)
    pairs = qt.value(eye[:, None, :] + eye[None, :, :])
    k = (pairs - single[:, None] - single[None, :])
    np.fill_diagonal(k, 2 * single)
    probe = np.random.default_rng(12345).standard_normal(dim)
    v1, v2 = qt.value(probe), qt.value(2 * probe)
    scale = max(1.0, abs(v1))
    if (abs(qt.value(np.zeros(dim))) > 1e-12 or abs(v2 - 4 * v1) > 1e-9 * scale
            or abs(v1 - probe @ k.real @ probe / 2) > 1e-9 * scale):
        raise ConfigurationError("Ward check needs a homogeneous quadratic trace Hamiltonian")
    if np.max(np.abs(k.imag)) > 1e-10 * max(1.0, np.max(np.abs(k.real))):
        raise ConfigurationError("trace Hamiltonian is not real on Hermitian matrices")
    return k.real


def _ward_chunk(indices: range, h, variables, n, beta, chol, seed, name) -> np.ndarray:
    qt = _QuadraticTrace(h, variables, n)
    dim = chol.shape[0]
    z = np.array([stream(seed, name, i).standard_normal(dim) for i in indices])
    # x ~ N(0, (beta K)^-1) with K = L L^T:  x = L^-T z / sqrt(beta)
    x = np.linalg.solve(chol.T, z.T).T / np.sqrt(beta)
    return x * qt.grad(x)


def ward_equipartition(h: OperatorPolynomial, beta: float, n_samples: int, seed: int,
                       variables: Sequence[str] = ("q", "p"), n: int = 2,
                       name: str = "ward-check", workers: int = 1) -> WardReport:
    """Check <x_s dH/dx_s> = 1/beta under exp(-beta Tr H) on Hermitian matrices.

    Samples come from the exact Gaussian of the quadratic form; the
    gradient is computed independently by trace differentiation.
    Results are grouped per variable and coordinate class, each class
    average taken per sample before the Monte-Carlo error is estimated.
    """
    if not beta > 0:
        raise ConfigurationError("beta must be positive")
    if n_samples < 2:
        raise ConfigurationError("need at least two samples")
    k = quadratic_form(h, variables, n)
    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        chol = None
    if chol is None or np.min(np.linalg.eigvalsh(k)) <= 0:
        raise UnboundedHamiltonianError("trace Hamiltonian is not positive definite on Hermitian matrices")
    prod = run_chunked(_ward_chunk, n_samples, (h, tuple(variables), n, beta, chol, seed, name),
                       workers=workers)
    basis = HermitianBasis(n)
    cls = basis.class_of()
    out = []
    for i, v in enumerate(variables):
        block = prod[:, i * basis.size:(i + 1) * basis.size]
        for c, label in enumerate(basis.classes):
            cols = block[:, cls == c]
            if cols.shape[1] == 0:
                continue
            per_sample = cols.mean(axis=1)
            out.append(WardClass(v, label, float(per_sample.mean()),
                                 float(per_sample.std(ddof=1) / np.sqrt(n_samples)), 1.0 / beta))
    return WardReport(beta, n_samples, out)


# --------------------------------------------------------------------------
# Standard Lagrangians
# --------------------------------------------------------------------------

def oscillator_spec(n: int = 4, coupling: float = 0.0) -> LagrangianSpec:
    """L = Tr(q'^2 - q^2 - coupling q^4) for one bosonic n x n matrix."""
    terms = [(1.0, ("q_dot", "q_dot")), (-1.0, ("q", "q"))]
    if coupling:
        terms.append((-coupling, ("q", "q", "q", "q")))
    return LagrangianSpec(OperatorPolynomial.build(terms), ("q",), (1,), GradedDimension(n, 0))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (m + m.conj().T) / 2


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    from scipy.stats import unitary_group

    return unitary_group.rvs(n, random_state=rng)
