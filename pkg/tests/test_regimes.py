from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab import units
from collapse_lab.errors import ConfigurationError
from collapse_lab.regimes import localisation_rate, regime_classify


def test_planck_mass_gives_planck_time():
    assert localisation_rate(units.planck_mass()) == pytest.approx(units.planck_time(), rel=1e-12)


def test_nucleon_localisation_time():
    # order of magnitude of the quoted 1.2e14 s; the exact CODATA value is 1.188e14 s
    t = localisation_rate(units.M_NUCLEON)
    assert t == pytest.approx(1.2e14, rel=0.02)


@settings(max_examples=50, deadline=None)
@given(log_m=st.floats(-35, 5))
def test_cubic_mass_scaling(log_m):
    m = 10**log_m
    assert localisation_rate(2 * m) == pytest.approx(localisation_rate(m) / 8, rel=1e-12)


def test_regime_examples():
    rep = regime_classify(units.planck_mass())
    assert rep.classification == "planckian"
    assert rep.compton == pytest.approx(units.planck_length(), rel=1e-12)
    assert rep.schwarzschild_scale == pytest.approx(units.planck_length(), rel=1e-12)
    e = regime_classify(units.M_ELECTRON)
    assert e.classification == "quantum" and e.compton == pytest.approx(3.86e-13, rel=1e-2)
    kg = regime_classify(1.0)
    assert kg.classification == "black-hole" and kg.compton == pytest.approx(3.5e-43, rel=1e-2)


@settings(max_examples=50, deadline=None)
@given(f=st.floats(1e-3, 1e3))
def test_crossover_is_at_planck_mass(f):
    kind = regime_classify(f * units.planck_mass()).classification
    if abs(f - 1) < 1e-6:
        return
    assert kind == ("quantum" if f < 1 else "black-hole")


def test_invalid_mass():
    with pytest.raises(ConfigurationError):
        localisation_rate(0.0)
    with pytest.raises(ConfigurationError):
        regime_classify(-1.0)
