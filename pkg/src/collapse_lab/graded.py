"""Z2-graded block matrices and trace derivatives of operator polynomials.

Even (bosonic) matrices are block diagonal, odd (fermionic) ones block
off-diagonal, with blocks of sizes n_even and n_odd.  Odd matrices built
this way are invertible whenever their off-diagonal blocks are, which a
literal finite Grassmann envelope would not allow.

Two trace conventions are supported:

* ``"ordinary"``: tr A + tr D.  Fully cyclic with no signs; trace
  derivatives carry no grading signs.
* ``"super"``: str = tr A - tr D.  Cyclic up to the sign
  (-1)^{|X||Y|} for homogeneous X, Y; trace derivatives pick up that sign
  when the factors after the differentiated occurrence are rotated to
  the front.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError

TRACE_MODES = ("ordinary", "super")


@dataclass(frozen=True)
class GradedDimension:
    n_even: int
    n_odd: int

    def __post_init__(self):
        if self.n_even < 0 or self.n_odd < 0 or self.n_even + self.n_odd < 1:
            raise ConfigurationError("graded dimension needs n_even, n_odd >= 0 with a positive sum")

    @property
    def total(self) -> int:
        return self.n_even + self.n_odd

    def even_mask(self) -> np.ndarray:
        """Boolean (n, n) mask of the block-diagonal entries."""
        g = np.r_[np.zeros(self.n_even, bool), np.ones(self.n_odd, bool)]
        return g[:, None] == g[None, :]

    def mask(self, parity: int) -> np.ndarray:
        m = self.even_mask()
        return m if parity == 0 else ~m

    def grade_sign(self) -> np.ndarray:
        """Diagonal of the grading operator: +1 on even rows, -1 on odd rows."""
        return np.r_[np.ones(self.n_even), -np.ones(self.n_odd)]


class GradedMatrix:
    """A square complex matrix with a Z2-graded block structure.

    Parity is computed from the blocks: 0 (even), 1 (odd), or None (mixed).
    The zero matrix counts as even.
    """

    __slots__ = ("dim", "_m")

    def __init__(self, dim: GradedDimension, full):
        m = np.array(full, dtype=complex)
        if m.shape != (dim.total, dim.total):
            raise DimensionMismatchError(f"expected shape {(dim.total,) * 2}, got {m.shape}")
        m.setflags(write=False)
        self.dim = dim
        self._m = m

    @classmethod
    def from_blocks(cls, dim: GradedDimension, a=None, b=None, c=None, d=None) -> GradedMatrix:
        ne, no = dim.n_even, dim.n_odd
        full = np.zeros((dim.total, dim.total), dtype=complex)
        for blk, sl, shape in ((a, np.s_[:ne, :ne], (ne, ne)), (b, np.s_[:ne, ne:], (ne, no)),
                               (c, np.s_[ne:, :ne], (no, ne)), (d, np.s_[ne:, ne:], (no, no))):
            if blk is not None:
                blk = np.asarray(blk, dtype=complex)
                if blk.shape != shape:
                    raise DimensionMismatchError(f"block shape {blk.shape} != {shape}")
                full[sl] = blk
        return cls(dim, full)

    @classmethod
    def zeros(cls, dim: GradedDimension) -> GradedMatrix:
        return cls(dim, np.zeros((dim.total, dim.total)))

    @classmethod
    def identity(cls, dim: GradedDimension) -> GradedMatrix:
        return cls(dim, np.eye(dim.total))

    @classmethod
    def random(cls, dim: GradedDimension, parity: int, rng: np.random.Generator,
               hermitian: bool = False) -> GradedMatrix:
        n = dim.total
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if hermitian:
            m = (m + m.conj().T) / 2
        return cls(dim, np.where(dim.mask(parity), m, 0))

    @property
    def full(self) -> np.ndarray:
        return self._m

    @property
    def A(self) -> np.ndarray:
        return self._m[:self.dim.n_even, :self.dim.n_even]

    @property
    def B(self) -> np.ndarray:
        return self._m[:self.dim.n_even, self.dim.n_even:]

    @property
    def C(self) -> np.ndarray:
        return self._m[self.dim.n_even:, :self.dim.n_even]

    @property
    def D(self) -> np.ndarray:
        return self._m[self.dim.n_even:, self.dim.n_even:]

    @property
    def parity(self) -> int | None:
        return parity_of(self._m, self.dim)

    def _check(self, other: GradedMatrix):
        if not isinstance(other, GradedMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatchError(f"graded dimensions differ: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return GradedMatrix(self.dim, self._m + other._m)

    def __sub__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return GradedMatrix(self.dim, self._m - other._m)

    def __neg__(self):
        return GradedMatrix(self.dim, -self._m)

    def __mul__(self, s):
        if isinstance(s, GradedMatrix):
            return NotImplemented
        return GradedMatrix(self.dim, self._m * s)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return gmul(self, other)

    def __repr__(self):
        return f"GradedMatrix({self.dim.n_even}|{self.dim.n_odd}, parity={self.parity})"

    def allclose(self, other: GradedMatrix, atol: float = 1e-12) -> bool:
        return self.dim == other.dim and np.allclose(self._m, other._m, rtol=0, atol=atol)


def parity_of(m: np.ndarray, dim: GradedDimension) -> int | None:
    even = dim.even_mask()
    has_even = np.any(m[..., even] != 0)
    has_odd = np.any(m[..., ~even] != 0)
    if has_even and has_odd:
        return None
    return 1 if has_odd else 0


def gmul(a: GradedMatrix, b: GradedMatrix) -> GradedMatrix:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"graded dimensions differ: {a.dim} vs {b.dim}")
    return GradedMatrix(a.dim, a.full @ b.full)


def gtrace(a: GradedMatrix) -> complex:
    """Ordinary trace tr A + tr D."""
    return complex(np.trace(a.full))


def supertrace(a: GradedMatrix) -> complex:
    """tr A - tr D."""
    return complex(np.trace(a.A) - np.trace(a.D))


def trace(a: GradedMatrix, mode: str = "ordinary") -> complex:
    check_mode(mode)
    return gtrace(a) if mode == "ordinary" else supertrace(a)


def adjoint(a: GradedMatrix) -> GradedMatrix:
    """Conjugate transpose of the full block matrix."""
    return GradedMatrix(a.dim, a.full.conj().T)


def check_mode(mode: str) -> None:
    if mode not in TRACE_MODES:
        raise ConfigurationError(f"trace mode must be one of {TRACE_MODES}, got {mode!r}")


# --------------------------------------------------------------------------
# Operator polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorPolynomial:
    """Sum of coefficient x ordered word over named matrix variables.

    ``terms`` is a tuple of ``(coefficient, (name, name, ...))``.  Time
    derivatives are ordinary names, by convention ``"<var>_dot"``.
    """

    terms: tuple[tuple[complex, tuple[str, ...]], ...]

    def __post_init__(self):
        for coeff, word in self.terms:
            if len(word) == 0:
                raise ConfigurationError("operator polynomial words must be non-empty")

    @classmethod
    def build(cls, terms: Iterable[tuple[complex, Sequence[str]]]) -> OperatorPolynomial:
        return cls(tuple((complex(c), tuple(w)) for c, w in terms))

    @property
    def variables(self) -> set[str]:
        return {v for _, w in self.terms for v in w}

    def __add__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        return OperatorPolynomial(self.terms + other.terms)

    def __mul__(self, s) -> OperatorPolynomial:
        return OperatorPolynomial(tuple((c * s, w) for c, w in self.terms))

    __rmul__ = __mul__

    def degree_in(self, names: Iterable[str]) -> int:
        names = set(names)
        return max((sum(v in names for v in w) for _, w in self.terms), default=0)


def dot(name: str) -> str:
    return f"{name}_dot"


def _product(word: Sequence[str], env: Mapping[str, np.ndarray], n: int) -> np.ndarray:
    if not word:
        return np.eye(n, dtype=complex)
    out = env[word[0]]
    for v in word[1:]:
        out = out @ env[v]
    return out


def _unbound(poly: OperatorPolynomial, env: Mapping) -> None:
    missing = poly.variables - set(env)
    if missing:
        raise ConfigurationError(f"unbound variables: {sorted(missing)}")


def evaluate_raw(poly: OperatorPolynomial, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate on raw arrays of shape (..., n, n); batches broadcast through @."""
    _unbound(poly, env)
    first = env[next(iter(poly.variables))]
    out = np.zeros(np.broadcast_shapes(*(np.shape(env[v]) for v in poly.variables)), dtype=complex)
    n = first.shape[-1]
    for coeff, word in poly.terms:
        out = out + coeff * _product(word, env, n)
    return out


def _word_parity(word: Sequence[str], parities: Mapping[str, int]) -> int:
    return sum(parities[v] for v in word) % 2


def derivative_raw(poly: OperatorPolynomial, var: str, env: Mapping[str, np.ndarray],
                   mode: str = "ordinary", parities: Mapping[str, int] | None = None) -> np.ndarray:
    """Trace derivative on raw arrays.

    A word P v S contributes S P: with the trace convention used here,
    Tr(P dv S) = Tr(S P dv), so the gradient X satisfies
    dTr = Tr(X dv).  In super mode the rotation of S to the front costs
    (-1)^{|P v| |S|}; ``parities`` gives the grade of every variable.
    """
    check_mode(mode)
    _unbound(poly, env)
    if mode == "super" and parities is None:
        raise ConfigurationError("super trace derivatives need variable parities")
    shape = np.broadcast_shapes(*(np.shape(env[v]) for v in poly.variables))
    n = shape[-1]
    out = np.zeros(shape, dtype=complex)
    for coeff, word in poly.terms:
        for i, v in enumerate(word):
            if v != var:
                continue
            pre, suf = word[:i], word[i + 1:]
            sign = 1
            if mode == "super":
                sign = (-1) ** (_word_parity(word[:i + 1], parities) * _word_parity(suf, parities))
            out = out + (sign * coeff) * _product(suf + pre, env, n)
    return out


def _env_arrays(env: Mapping[str, GradedMatrix]) -> tuple[GradedDimension, dict[str, np.ndarray]]:
    dims = {m.dim for m in env.values()}
    if len(dims) != 1:
        raise DimensionMismatchError("all environment matrices must share one graded dimension")
    return dims.pop(), {k: m.full for k, m in env.items()}


def _env_parities(env: Mapping[str, GradedMatrix]) -> dict[str, int]:
    out = {}
    for k, m in env.items():
        p = m.parity
        if p is None:
            raise ConfigurationError(f"variable {k!r} has mixed parity; super mode needs homogeneous variables")
        out[k] = p
    return out


def evaluate(poly: OperatorPolynomial, env: Mapping[str, GradedMatrix]) -> GradedMatrix:
    dim, raw = _env_arrays(env)
    return GradedMatrix(dim, evaluate_raw(poly, raw))


def trace_of(poly: OperatorPolynomial, env: Mapping[str, GradedMatrix], mode: str = "ordinary") -> complex:
    return trace(evaluate(poly, env), mode)


def trace_derivative(poly: OperatorPolynomial, var: str, env: Mapping[str, GradedMatrix],
                     mode: str = "ordinary") -> GradedMatrix:
    """d Tr(poly) / d var as a graded matrix (see ``derivative_raw``)."""
    if var not in env:
        raise ConfigurationError(f"unbound variable {var!r}")
    dim, raw = _env_arrays(env)
    parities = _env_parities(env) if mode == "super" else None
    return GradedMatrix(dim, derivative_raw(poly, var, raw, mode, parities))
