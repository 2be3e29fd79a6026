"""Localisation rate and the quantum / Planckian / black-hole regime split."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError
from .units import C, G, HBAR, planck_length

PLANCKIAN_RTOL = 1e-9


def localisation_rate(mass: float, hbar: float = HBAR, g: float = G, c: float = C) -> float:
    """T = hbar^2 / (G M^3 c)."""
    if not mass > 0:
        raise ConfigurationError("mass must be positive")
    return hbar**2 / (g * mass**3 * c)


@dataclass(frozen=True)
class RegimeReport:
    mass: float
    compton: float
    schwarzschild_scale: float
    classification: str
    rate: float


def regime_classify(mass: float, hbar: float = HBAR, g: float = G, c: float = C) -> RegimeReport:
    """Compare L = hbar/(M c) with L_P^2 / L.

    Equality within 1e-9 relative (i.e. |L - L_P| small) is 'planckian';
    L > L_P is 'quantum' and L < L_P 'black-hole'.
    """
    if not mass > 0:
        raise ConfigurationError("mass must be positive")
    lp = planck_length(hbar, g, c)
    L = hbar / (mass * c)
    schw = lp**2 / L
    if abs(L - schw) <= PLANCKIAN_RTOL * max(L, schw):
        kind = "planckian"
    elif L > schw:
        kind = "quantum"
    else:
        kind = "black-hole"
    return RegimeReport(mass, L, schw, kind, localisation_rate(mass, hbar, g, c))
