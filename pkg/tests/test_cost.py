import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lunar_gnss.cost import (
    CERDomainWarning,
    CostConfig,
    LinkBudgetConfig,
    NonPhysicalMassError,
    PayloadPowerTable,
    cost_objective,
    costs,
    mass_budget,
    max_user_range,
    payload_power,
    transmit_power,
    transmit_power_for_range,
)

pytestmark = pytest.mark.filterwarnings("ignore::lunar_gnss.cost.CERDomainWarning")

COMPONENTS = PayloadPowerTable(thermal_mode="of_components")


def test_max_user_range_examples():
    assert max_user_range(8058.0, 0.0, 1738.1) == pytest.approx(math.sqrt(8058.0**2 - 1738.1**2))
    assert max_user_range(8058.0, 0.0, 1738.1) == pytest.approx(7868.3, abs=0.1)
    assert max_user_range(8058.0, 90.0, 1738.1) == pytest.approx(8058.0 - 1738.1)
    assert max_user_range(1738.1, 0.0, 1738.1) == 0.0


def test_transmit_power_table_rows():
    # the published column follows the semi-major axis as the satellite radius
    assert transmit_power(8025.9, 0.004, radius="sma") == pytest.approx(13.78, abs=0.05)
    assert transmit_power(5701.2, 0.002, radius="sma") == pytest.approx(10.59, abs=0.05)
    assert transmit_power(8025.9, 0.004) > transmit_power(8025.9, 0.004, radius="sma")


def test_free_space_doubling():
    assert transmit_power_for_range(10000.0) - transmit_power_for_range(5000.0) == pytest.approx(20 * math.log10(2), abs=1e-12)


def test_link_budget_validation():
    with pytest.raises(ValueError):
        LinkBudgetConfig(freq_mhz=0.0)
    with pytest.raises(ValueError):
        LinkBudgetConfig(l_ant=-1.0)
    with pytest.raises(ValueError):
        transmit_power(1000.0, 0.0)


def test_payload_power_multiplicative_thermal():
    assert payload_power(13.78, COMPONENTS) == pytest.approx(333.6, abs=0.1)
    assert payload_power(-math.inf, COMPONENTS) == pytest.approx(293.25)


def test_payload_power_share_of_total_thermal():
    assert payload_power(-math.inf) == pytest.approx(255.0 / 0.85)
    assert payload_power(13.78) == pytest.approx(341.63, rel=0.01)


def test_amplifier_term_scales_with_db():
    tbl = PayloadPowerTable(thermal_fraction=0.0)
    amp = lambda p: payload_power(p, tbl) - tbl.fixed_load
    assert amp(20.0) == pytest.approx(10 * amp(10.0), rel=1e-12)


def test_mass_budget_examples():
    mi, mp, md = mass_budget(333.86, 0.0)
    assert mp == 0.0
    assert md == pytest.approx(269.98, abs=0.3)
    mi, mp, md = mass_budget(341.63, 0.7)
    assert mi == pytest.approx(332.5, abs=0.1)
    assert mp == pytest.approx(122.9, abs=0.1)
    assert md == pytest.approx(399.9, abs=0.1)
    assert mass_budget(341.63, 0.7, table_compat=True)[2] == pytest.approx(273.2, abs=0.3)
    assert mass_budget(341.63, 0.0) == mass_budget(341.63, 0.0, table_compat=True)


def test_mass_budget_validation():
    with pytest.raises(ValueError):
        mass_budget(0.0, 0.1)
    with pytest.raises(ValueError):
        mass_budget(300.0, -0.1)


def test_costs_examples():
    t1, dev, prod, total = costs(273.17, 20)
    assert t1 == pytest.approx(16.07, abs=0.02)
    assert total == pytest.approx(189.4, abs=0.5)
    assert costs(269.98, 21)[3] == pytest.approx(193.7, abs=0.5)
    t1, _, prod, _ = costs(300.0, 1)
    assert prod == t1
    assert costs(300.0, 40)[2] / costs(300.0, 20)[2] == pytest.approx(2 ** (1 + math.log2(0.85)), rel=1e-12)
    assert 2 ** (1 + math.log2(0.85)) == pytest.approx(1.700, abs=1e-3)


def test_costs_warn_and_reject():
    with pytest.warns(CERDomainWarning):
        warnings.simplefilter("always")
        costs(100.0, 10)
    with pytest.raises(NonPhysicalMassError):
        costs(-5.0, 10)
    with pytest.raises(ValueError):
        costs(300.0, 0)


def test_cost_objective_table_rows():
    cfg = CostConfig(table_compat=True)
    assert cost_objective(8025.9, 0.004, 20, 0.07, cfg).cost_total == pytest.approx(189.47, rel=0.01)
    assert cost_objective(8669.2, 0.024, 24, 0.07, cfg).cost_total == pytest.approx(215.47, rel=0.01)
    b = cost_objective(8025.9, 0.004, 20, 0.07)
    assert b.cost_total == pytest.approx(b.cost_dev + b.cost_prod)
    assert b.m_prop > 0
    assert all(v >= 0 for v in b.to_dict().values())


def test_large_propellant_load_is_nonphysical():
    with pytest.raises(NonPhysicalMassError):
        cost_objective(8025.9, 0.004, 20, 2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(200.0, 2000.0), st.integers(1, 59))
def test_cost_monotone(m_dry, n):
    assert costs(m_dry, n + 1)[3] > costs(m_dry, n)[3]
    assert costs(m_dry * 1.01, n)[3] > costs(m_dry, n)[3]


@settings(max_examples=200, deadline=None)
@given(st.floats(2000.0, 20000.0), st.floats(1.001, 1.5))
def test_transmit_power_monotone(r_apo, factor):
    assert transmit_power(r_apo * factor, 0.0) > transmit_power(r_apo, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(250.0, 500.0), st.floats(0.0, 3.0))
def test_propellant_zero_iff_no_delta_v(p_pl, dv):
    _, m_prop, _ = mass_budget(p_pl, dv)
    assert (m_prop == 0.0) == (dv == 0.0)
