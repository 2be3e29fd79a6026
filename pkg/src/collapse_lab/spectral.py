"""Circle Dirac spectra, cutoff spectral actions and the emergent-action bookkeeping."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .units import C, HBAR

CHI_FUNCTIONS = ("gaussian-heat", "sharp", "quadratic")
TAIL_TOLERANCE = 1e-12


class SpectralTruncationWarning(UserWarning):
    """The cutoff function has not decayed at the end of the truncated spectrum."""


@dataclass(frozen=True, eq=False)
class DiracSpectrum:
    ell: float
    spin_structure: str
    n_max: int
    eigenvalues: np.ndarray


def circle_dirac_spectrum(ell: float, spin_structure: str = "antiperiodic", n_max: int = 1000) -> DiracSpectrum:
    """Eigenvalues of -i d/dx on a circle of circumference ell.

    periodic: (2 pi / ell) n for n in [-n_max, n_max].
    antiperiodic: (2 pi / ell)(n + 1/2) for n in [-n_max - 1, n_max], which is
    the symmetric set {+-1/2, ..., +-(n_max + 1/2)} in units of 2 pi / ell.
    """
    if not ell > 0:
        raise ConfigurationError("circumference must be positive")
    if int(n_max) != n_max or n_max < 1:
        raise ConfigurationError("n_max must be a positive integer")
    if spin_structure == "periodic":
        n = np.arange(-n_max, n_max + 1, dtype=float)
    elif spin_structure == "antiperiodic":
        n = np.arange(-n_max - 1, n_max + 1, dtype=float) + 0.5
    else:
        raise ConfigurationError("spin_structure must be 'periodic' or 'antiperiodic'")
    return DiracSpectrum(ell, spin_structure, int(n_max), 2 * np.pi / ell * n)


def chi(u: np.ndarray, kind: str) -> np.ndarray:
    if kind == "gaussian-heat":
        return np.exp(-u)
    if kind == "sharp":
        return (u <= 1.0).astype(float)
    if kind == "quadratic":
        return np.asarray(u, dtype=float)
    raise ConfigurationError(f"chi must be one of {CHI_FUNCTIONS}")


def spectral_action(spectrum: DiracSpectrum | Sequence[float], eps: float, kind: str = "gaussian-heat") -> float:
    """sum_n chi(eps^2 lambda_n^2).

    For decaying chi a SpectralTruncationWarning is issued when chi at the
    largest |lambda| still exceeds 1e-12 of the sum.  ``quadratic`` is
    chi(u) = u and is only meaningful on a finite list.
    """
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    lam = spectrum.eigenvalues if isinstance(spectrum, DiracSpectrum) else np.asarray(spectrum, float)
    u = (eps * lam) ** 2
    vals = chi(u, kind)
    total = float(np.sum(vals))
    if kind != "quadratic" and lam.size:
        edge = float(chi(np.array([u.max()]), kind)[0])
        if edge > TAIL_TOLERANCE * abs(total):
            warnings.warn(f"spectrum truncated where chi = {edge:.3g}; increase n_max",
                          SpectralTruncationWarning, stacklevel=2)
    return total


def heat_trace_leading(ell: float, eps: float) -> float:
    """Leading heat-kernel term ell / (2 sqrt(pi) eps) on the circle."""
    return ell / (2 * math.sqrt(math.pi) * eps)


def n_max_for(ell: float, eps: float, n_sigma: float = 7.0) -> int:
    """Truncation at which exp(-eps^2 lambda^2) < exp(-n_sigma^2)."""
    return int(math.ceil(n_sigma * ell / (2 * math.pi * eps))) + 1


def heat_trace(ell: float, eps: float, spin_structure: str = "antiperiodic") -> float:
    return spectral_action(circle_dirac_spectrum(ell, spin_structure, n_max_for(ell, eps)), eps)


@dataclass(frozen=True, eq=False)
class EmergentReport:
    curvature_term: float
    compton_lengths: np.ndarray
    imaginary_lengths: np.ndarray
    matter_coefficients: np.ndarray
    source_coefficients: np.ndarray
    identity_error: float
    replacement: str = "1/L^3 -> delta^3(x - x0)"


def emergent_action_report(localised_eigenvalues: Sequence[float], masses: Sequence[float],
                           L_P: float, hbar: float = HBAR, c: float = C) -> EmergentReport:
    """Bookkeeping of the curvature and matter sectors after localisation.

    curvature: (hbar/2) L_P^2 sum lambda_R^2.
    matter: per constituent, L = hbar/(m c), L_I = L^3 / L_P^2 and the source
    coefficient hbar L_P^-2 L_I^-1 L^-1 times the volume L^3, which equals
    hbar / L = m c.  ``identity_error`` is the largest relative deviation.
    """
    lam = np.asarray(localised_eigenvalues, dtype=float)
    m = np.asarray(masses, dtype=float)
    if lam.size == 0 or m.size == 0:
        raise ConfigurationError("eigenvalue and mass lists must be non-empty")
    if np.any(m <= 0) or not L_P > 0:
        raise ConfigurationError("masses and L_P must be positive")
    curvature = hbar / 2 * L_P**2 * float(np.sum(lam**2))
    L = hbar / (m * c)
    L_I = L**3 / L_P**2
    source = hbar / (L_P**2 * L_I * L) * L**3
    mc = m * c
    err = float(np.max(np.abs(source / mc - 1)))
    return EmergentReport(curvature, L, L_I, mc, source, err)


def effective_compton(lengths: Sequence[float]) -> float:
    """1 / L_eff = sum 1 / L_i, summed in exact rationals and rounded once."""
    ls = [float(x) for x in lengths]
    if not ls:
        raise ConfigurationError("need at least one Compton length")
    if any(x <= 0 for x in ls):
        raise ConfigurationError("Compton lengths must be positive")
    return float(1 / sum(1 / Fraction(x) for x in ls))
