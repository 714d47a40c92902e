import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lpmv

from lunar_gnss.astro import DEFAULT_CONSTANTS, CartesianState, Epoch
from lunar_gnss.ephemeris import perturber_position
from lunar_gnss.forces import (
    AccelerationModel,
    ForceModelConfig,
    ImpactError,
    acceleration,
    bundled_coefficients,
    harmonic_acceleration_bodyfixed,
    j2_acceleration,
    normalization_factor,
    read_coefficient_table,
    third_body_acceleration,
)

C = DEFAULT_CONSTANTS
MU, RM = C.mu_moon, C.r_moon_mean


def _potential(r, terms):
    """Disturbing potential sum (mu/r)(R/r)^n P_nm(sin phi)(C cos m lam + S sin m lam), unnormalized."""
    x, y, z = r
    rn = math.sqrt(x * x + y * y + z * z)
    sphi = z / rn
    lam = math.atan2(y, x)
    u = 0.0
    for n, m, c, s in terms:
        # scipy includes the Condon-Shortley phase (-1)^m
        p = (-1) ** m * lpmv(m, n, sphi)
        u += MU / rn * (RM / rn) ** n * p * (c * math.cos(m * lam) + s * math.sin(m * lam))
    return u


def _grad(r, terms, h=1e-3):
    g = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        g[k] = (_potential(r + e, terms) - _potential(r - e, terms)) / (2 * h)
    return g


def test_central_gravity_exact():
    fm = ForceModelConfig.two_body()
    a = acceleration(CartesianState([7000.0, 0.0, 0.0], [0.0, 0.8, 0.0]), Epoch(0.0), fm)
    assert a[0] == -MU / 7000.0**2
    assert a[1] == 0.0 and a[2] == 0.0
    assert a[0] == pytest.approx(-1.00057e-4, rel=1e-5)


def test_empty_table_is_central():
    fm = ForceModelConfig(coefficient_table=(), third_bodies=frozenset(), srp_enabled=False)
    r = np.array([3000.0, -4000.0, 2500.0])
    assert np.array_equal(AccelerationModel(fm)(123.0, r), -MU * r / np.linalg.norm(r) ** 3)


def test_j2_matches_closed_form():
    fm = ForceModelConfig.zonal_j2()
    model = AccelerationModel(fm)
    for r in ([5000.0, 0.0, 0.0], [3000.0, 2000.0, 4000.0], [-2500.0, 1000.0, -3000.0]):
        r = np.array(r)
        ref = j2_acceleration(r, MU, C.J2_moon, RM)
        direct = harmonic_acceleration_bodyfixed(r, fm.active_terms(), MU, RM)
        assert np.allclose(direct, ref, rtol=1e-12, atol=0)
        # subtracting the central term from the full model costs about 1e-12 relative to it
        pert = model(0.0, r) + MU * r / np.linalg.norm(r) ** 3
        assert np.allclose(pert, ref, rtol=0, atol=1e-11 * np.linalg.norm(ref))


def test_j2_no_out_of_plane_component_on_equator():
    a = j2_acceleration(np.array([4000.0, 3000.0, 0.0]), MU, C.J2_moon, RM)
    assert a[2] == 0.0


@pytest.mark.parametrize("n,m", [(2, 0), (2, 2), (3, 1), (4, 3), (6, 6), (8, 5)])
def test_recursion_matches_legendre_potential(n, m):
    terms = [(n, m, 1.3e-5, -0.7e-5)]
    for r in ([2500.0, 700.0, 1400.0], [-1800.0, 2200.0, -900.0]):
        r = np.array(r)
        a = harmonic_acceleration_bodyfixed(r, terms, MU, RM)
        assert np.allclose(a, _grad(r, terms), rtol=1e-6, atol=1e-16)


def test_bundled_table_degree_two():
    rows = {(n, m): (c, s) for n, m, c, s in bundled_coefficients()}
    assert -rows[(2, 0)][0] * normalization_factor(2, 0) == pytest.approx(C.J2_moon, rel=1e-12)
    assert rows[(2, 2)][0] * normalization_factor(2, 2) == pytest.approx(C.C22_moon, rel=1e-12)


def test_read_coefficient_table(tmp_path):
    p = tmp_path / "field.txt"
    p.write_text("# comment\n2 0 -1.0e-4 0.0\n\n3 1 2.0e-6 -1.0e-6\n")
    assert read_coefficient_table(p) == ((2, 0, -1.0e-4, 0.0), (3, 1, 2.0e-6, -1.0e-6))


def test_third_body_vanishes_at_centre():
    r_e = np.array([384400.0, 0.0, 0.0])
    mags = [np.linalg.norm(third_body_acceleration(np.array([d, d, 0.0]), r_e, C.mu_earth)) for d in (1e3, 1e1, 1e-1)]
    assert mags[0] > mags[1] > mags[2]
    # the tidal term is linear in the offset from the centre
    assert mags[1] / mags[0] == pytest.approx(1e-2, rel=1e-2)
    assert mags[2] / mags[1] == pytest.approx(1e-2, rel=1e-2)
    assert np.all(third_body_acceleration(np.zeros(3), r_e, C.mu_earth) == 0.0)


def test_srp_magnitude_and_direction():
    fm = ForceModelConfig(coefficient_table=(), third_bodies=frozenset(), srp_enabled=True, sat_mass=300.0)
    model = AccelerationModel(fm)
    r = np.array([5000.0, 0.0, 0.0])
    a = model(0.0, r) + MU * r / np.linalg.norm(r) ** 3
    d = r - perturber_position(fm.sun, 0.0)
    expected = C.solar_pressure * 1.8 * 3.0 / 300.0 / 1000.0 * (C.au / np.linalg.norm(d)) ** 2
    assert np.linalg.norm(a) == pytest.approx(expected, rel=1e-12)
    assert a @ d > 0


def test_impact_detection():
    with pytest.raises(ImpactError):
        AccelerationModel(ForceModelConfig.two_body())(0.0, np.array([1000.0, 0.0, 0.0]))


@pytest.mark.parametrize("kw", [dict(harmonics_degree=2, harmonics_order=3), dict(cr=2.5), dict(srp_area=0.0),
                                dict(sat_mass=-1.0), dict(third_bodies=frozenset({"Jupiter"}))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ForceModelConfig(**kw)


@settings(max_examples=100, deadline=None)
@given(st.floats(2000.0, 20000.0), st.floats(-1.0, 1.0), st.floats(0.0, 2 * math.pi))
def test_harmonic_terms_small_relative_to_central(r, sphi, lam):
    cphi = math.sqrt(1 - sphi * sphi)
    pos = r * np.array([cphi * math.cos(lam), cphi * math.sin(lam), sphi])
    model = AccelerationModel(ForceModelConfig(third_bodies=frozenset(), srp_enabled=False))
    central = MU / r**2
    pert = np.linalg.norm(model(0.0, pos) + MU * pos / r**3)
    # degree-2 terms scale as (R/r)^2 times a few J2
    assert pert <= 10 * C.J2_moon * (RM / r) ** 2 * central
