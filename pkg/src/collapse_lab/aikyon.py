"""Space-time-matter atom ("aikyon"): constant momenta, velocities, Hamiltonian, charge.

Trace Lagrangian, with k = L_P^2 / L^2 and a = L_P^2 / (L^2 c^2):

    L = (a/2) Tr[(q_B' + k beta1 q_F')(q_B' + k beta2 q_F')]

q_B is even, q_F, beta1 and beta2 are odd graded matrices.  L depends only on
velocities, so the momenta are constants of motion and the coordinates
move linearly in the evolution parameter tau.  Momenta follow from the
ordinary-trace derivative (see ``graded``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateConfigurationError, DimensionMismatchError
from .graded import GradedDimension, GradedMatrix, OperatorPolynomial
from .trace_dynamics import LagrangianSpec

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class AikyonConfig:
    L: float
    L_P: float
    beta1: GradedMatrix
    beta2: GradedMatrix
    c: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.L_P > 0 and self.c > 0):
            raise ConfigurationError("L, L_P and c must be positive")
        if self.beta1.dim != self.beta2.dim:
            raise DimensionMismatchError("beta1 and beta2 have different graded dimensions")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if b.parity != 1:
                raise ConfigurationError(f"{name} must be an odd (fermionic) matrix")
            if np.linalg.norm(b.full - b.full.conj().T) > 1e-10 * max(1.0, np.linalg.norm(b.full)):
                raise ConfigurationError(f"{name} must be self-adjoint")

    @property
    def dim(self) -> GradedDimension:
        return self.beta1.dim

    @property
    def k(self) -> float:
        """L_P^2 / L^2."""
        return (self.L_P / self.L) ** 2

    @property
    def a(self) -> float:
        return self.L_P**2 / (self.L**2 * self.c**2)

    def scaled_betas(self) -> tuple[np.ndarray, np.ndarray]:
        return self.k * self.beta1.full, self.k * self.beta2.full

    def beta_difference_inverse(self) -> np.ndarray:
        """(k beta1 - k beta2)^-1, raising if the difference is singular."""
        b1, b2 = self.scaled_betas()
        diff = b1 - b2
        cond = np.linalg.cond(diff)
        if not cond < MAX_CONDITION:
            raise DegenerateConfigurationError(f"beta1 - beta2 is singular (condition {cond:.3g})")
        return np.linalg.inv(diff)

    @classmethod
    def random(cls, L: float, L_P: float, rng: np.random.Generator,
               dim: GradedDimension = GradedDimension(2, 2), c: float = 1.0) -> AikyonConfig:
        return cls(L, L_P, GradedMatrix.random(dim, 1, rng, hermitian=True),
                   GradedMatrix.random(dim, 1, rng, hermitian=True), c)

    def with_length(self, L: float) -> AikyonConfig:
        return AikyonConfig(L, self.L_P, self.beta1, self.beta2, self.c)


@dataclass(frozen=True, eq=False)
class AikyonState:
    q_B: GradedMatrix
    q_F: GradedMatrix
    qdot_B: GradedMatrix
    qdot_F: GradedMatrix

    def __post_init__(self):
        for name, want in (("q_B", 0), ("qdot_B", 0), ("q_F", 1), ("qdot_F", 1)):
            _require_parity(getattr(self, name), want, name)

    def at(self, tau: float) -> AikyonState:
        """Linear flow q(tau) = q(0) + tau q'."""
        return AikyonState(self.q_B + tau * self.qdot_B, self.q_F + tau * self.qdot_F,
                           self.qdot_B, self.qdot_F)


def _check(cfg: AikyonConfig, *ms: GradedMatrix) -> None:
    for m in ms:
        if m.dim != cfg.dim:
            raise DimensionMismatchError(f"matrix dimension {m.dim} differs from config {cfg.dim}")


def _require_parity(m: GradedMatrix, parity: int, name: str) -> None:
    if m.parity != parity and np.any(m.full != 0):
        raise ConfigurationError(f"{name} must be {'even' if parity == 0 else 'odd'}")


def _momenta_raw(cfg: AikyonConfig, vb: np.ndarray, vf: np.ndarray):
    b1, b2 = cfg.scaled_betas()
    pb = cfg.a / 2 * (2 * vb + (b1 + b2) @ vf)
    pf = cfg.a / 2 * (vb @ (b1 + b2) + b1 @ vf @ b2 + b2 @ vf @ b1)
    return pb, pf


def aikyon_momenta(cfg: AikyonConfig, qdot_B: GradedMatrix, qdot_F: GradedMatrix):
    """(p_B, p_F) for the given velocities."""
    _check(cfg, qdot_B, qdot_F)
    _require_parity(qdot_B, 0, "qdot_B")
    _require_parity(qdot_F, 1, "qdot_F")
    pb, pf = _momenta_raw(cfg, qdot_B.full, qdot_F.full)
    return GradedMatrix(cfg.dim, pb), GradedMatrix(cfg.dim, pf)


def _linear_map(cfg: AikyonConfig):
    """Matrix of (v_B, v_F) -> (p_B, p_F) restricted to grade-allowed entries."""
    dim = cfg.dim
    n = dim.total
    even, odd = np.flatnonzero(dim.mask(0)), np.flatnonzero(dim.mask(1))
    k_e, k_o = even.size, odd.size
    basis_b = np.zeros((k_e + k_o, n * n), dtype=complex)
    basis_f = np.zeros((k_e + k_o, n * n), dtype=complex)
    basis_b[np.arange(k_e), even] = 1.0
    basis_f[k_e + np.arange(k_o), odd] = 1.0
    pb, pf = _momenta_raw(cfg, basis_b.reshape(-1, n, n), basis_f.reshape(-1, n, n))
    cols = np.concatenate([pb.reshape(-1, n * n)[:, even], pf.reshape(-1, n * n)[:, odd]], axis=1)
    return cols.T, even, odd


def solve_velocities(cfg: AikyonConfig, c1: GradedMatrix, c2: GradedMatrix):
    """Velocities whose momenta are (c1, c2), by a linear solve on the block entries."""
    _check(cfg, c1, c2)
    _require_parity(c1, 0, "c1")
    _require_parity(c2, 1, "c2")
    cfg.beta_difference_inverse()
    m, even, odd = _linear_map(cfg)
    cond = np.linalg.cond(m)
    if not cond < MAX_CONDITION:
        raise DegenerateConfigurationError(f"velocity-momentum map is singular (condition {cond:.3g})")
    rhs = np.concatenate([c1.full.reshape(-1)[even], c2.full.reshape(-1)[odd]])
    x = np.linalg.solve(m, rhs)
    n = cfg.dim.total
    vb, vf = np.zeros(n * n, complex), np.zeros(n * n, complex)
    vb[even], vf[odd] = x[:even.size], x[even.size:]
    return GradedMatrix(cfg.dim, vb.reshape(n, n)), GradedMatrix(cfg.dim, vf.reshape(n, n))


def closed_form_velocities(cfg: AikyonConfig, c1: GradedMatrix, c2: GradedMatrix):
    """Reference closed-form velocity expressions, with every beta scaled by k.

    These omit a factor 2/a relative to the momentum definitions; see
    closed_form_discrepancy.

        q_B' = (1/2)[c1 - (b1+b2)(b1-b2)^-1 [2 c2 - c1(b1+b2)] (b2-b1)^-1]
        q_F' = (b1-b2)^-1 [2 c2 - c1(b1+b2)] (b2-b1)^-1
    """
    b1, b2 = cfg.scaled_betas()
    inv = cfg.beta_difference_inverse()
    mid = 2 * c2.full - c1.full @ (b1 + b2)
    vf = inv @ mid @ (-inv)
    vb = 0.5 * (c1.full - (b1 + b2) @ vf)
    return GradedMatrix(cfg.dim, vb), GradedMatrix(cfg.dim, vf)


def closed_form_discrepancy(cfg: AikyonConfig, c1: GradedMatrix, c2: GradedMatrix) -> tuple[float, float]:
    """Best scalar s with closed_form = s * solved, and the relative residual of that fit."""
    sb, sf = solve_velocities(cfg, c1, c2)
    pb, pf = closed_form_velocities(cfg, c1, c2)
    x = np.concatenate([sb.full.ravel(), sf.full.ravel()])
    y = np.concatenate([pb.full.ravel(), pf.full.ravel()])
    s = np.vdot(x, y) / np.vdot(x, x)
    resid = np.linalg.norm(y - s * x) / np.linalg.norm(y)
    return float(s.real), float(resid)


def aikyon_lagrangian(cfg: AikyonConfig, qdot_B: GradedMatrix, qdot_F: GradedMatrix) -> complex:
    b1, b2 = cfg.scaled_betas()
    x = qdot_B.full + b1 @ qdot_F.full
    y = qdot_B.full + b2 @ qdot_F.full
    return complex(cfg.a / 2 * np.trace(x @ y))


def aikyon_hamiltonian(cfg: AikyonConfig, p_B: GradedMatrix, p_F: GradedMatrix) -> complex:
    """Tr (2/a)[(p_B b1 - p_F)(b2 - b1)^-1 (p_B b2 - p_F)(b1 - b2)^-1], b_i = k beta_i."""
    _check(cfg, p_B, p_F)
    b1, b2 = cfg.scaled_betas()
    inv = cfg.beta_difference_inverse()
    pb, pf = p_B.full, p_F.full
    m = (pb @ b1 - pf) @ (-inv) @ (pb @ b2 - pf) @ inv
    return complex(2 / cfg.a * np.trace(m))


def aikyon_adler_millard(state: AikyonState, cfg: AikyonConfig, convention: str = "graded") -> GradedMatrix:
    """(2/a) C with the k factors restored on every beta.

    graded:     [q_B, 2 q_B' + (b1+b2) q_F'] - {q_F, q_B'(b1+b2) + b1 q_F' b2 + b2 q_F' b1}
    commutator: the same with the fermionic anticommutator replaced by a commutator.
    """
    _check(cfg, state.q_B, state.q_F, state.qdot_B, state.qdot_F)
    pb, pf = _momenta_raw(cfg, state.qdot_B.full, state.qdot_F.full)
    pb, pf = pb * 2 / cfg.a, pf * 2 / cfg.a
    qb, qf = state.q_B.full, state.q_F.full
    out = qb @ pb - pb @ qb
    if convention == "graded":
        out = out - (qf @ pf + pf @ qf)
    elif convention == "commutator":
        out = out + (qf @ pf - pf @ qf)
    else:
        raise ConfigurationError("convention must be 'graded' or 'commutator'")
    return GradedMatrix(cfg.dim, out)


def adler_millard_slope(state: AikyonState, cfg: AikyonConfig, convention: str = "graded") -> GradedMatrix:
    """d/dtau of (2/a) C along the linear flow: [q_B', P_B] -+ {q_F', P_F} with P = (2/a) p."""
    pb, pf = _momenta_raw(cfg, state.qdot_B.full, state.qdot_F.full)
    pb, pf = pb * 2 / cfg.a, pf * 2 / cfg.a
    vb, vf = state.qdot_B.full, state.qdot_F.full
    out = vb @ pb - pb @ vb
    if convention == "graded":
        out = out - (vf @ pf + pf @ vf)
    else:
        out = out + (vf @ pf - pf @ vf)
    return GradedMatrix(cfg.dim, out)


def lagrangian_spec(cfg: AikyonConfig) -> LagrangianSpec:
    """The aikyon Lagrangian as a generic trace-dynamics spec (ordinary trace)."""
    a, k = cfg.a, cfg.k
    poly = OperatorPolynomial.build([
        (a / 2, ("qB_dot", "qB_dot")),
        (a / 2 * k, ("qB_dot", "beta2", "qF_dot")),
        (a / 2 * k, ("beta1", "qF_dot", "qB_dot")),
        (a / 2 * k * k, ("beta1", "qF_dot", "beta2", "qF_dot")),
    ])
    return LagrangianSpec(poly, ("qB", "qF"), (1, -1), cfg.dim,
                          {"beta1": cfg.beta1, "beta2": cfg.beta2})


# --------------------------------------------------------------------------
# Modified Dirac operator
# --------------------------------------------------------------------------

@dataclass(eq=False)
class ModifiedDiracSpectrum:
    eigenvalues: np.ndarray
    unperturbed: np.ndarray
    k: float
    theta: np.ndarray  # shift of the real parts divided by k

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))


def modified_dirac_eigs(D_B, D_F, cfg: AikyonConfig) -> ModifiedDiracSpectrum:
    """Eigenvalues of D_B + k ((beta1 + beta2) / 2) D_F, sorted by real part.

    ``theta`` holds (Re lambda - lambda_B) / k with eigenvalues paired by
    order of real part.
    """
    db = D_B.full if isinstance(D_B, GradedMatrix) else np.asarray(D_B, dtype=complex)
    df = D_F.full if isinstance(D_F, GradedMatrix) else np.asarray(D_F, dtype=complex)
    n = cfg.dim.total
    if db.shape != (n, n) or df.shape != (n, n):
        raise DimensionMismatchError("D_B and D_F must match the graded dimension")
    if np.linalg.norm(db - db.conj().T) > 1e-10:
        raise ConfigurationError("D_B must be self-adjoint")
    op = db + cfg.k * (cfg.beta1.full + cfg.beta2.full) / 2 @ df
    ev = np.linalg.eigvals(op)
    ev = ev[np.argsort(ev.real, kind="stable")]
    base = np.sort(np.linalg.eigvalsh(db))
    return ModifiedDiracSpectrum(ev, base, cfg.k, (ev.real - base) / cfg.k)


def fermionic_dirac(qdot_F: GradedMatrix, L: float, c: float = 1.0) -> GradedMatrix:
    """D_F = (1 / (L c)) dq_F / dtau."""
    return GradedMatrix(qdot_F.dim, qdot_F.full / (L * c))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
