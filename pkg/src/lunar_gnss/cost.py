"""Space-segment cost: link budget -> payload power -> dry mass -> USCM8 cost.

Costs are FY2010 M$. Two modes are offered:

* default: the chain as written (worst-case range at apoapsis, propellant
  included in the dry-mass relation);
* ``table_compat``: reproduces the published architecture table, whose
  dry masses omit the propellant term and whose transmit-power column
  uses the semi-major axis as the worst-case radius.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from .astro import DEFAULT_CONSTANTS, PhysicalConstants

G0 = 9.8  # m/s^2, as used in the rocket equation here

CER_T1_DOMAIN = (288.0, 7398.0)
CER_DEV_DOMAIN = (114.0, 5127.0)


class NonPhysicalMassError(ValueError):
    """The dry-mass relation returned a non-positive mass (propellant load too large)."""


class CERDomainWarning(UserWarning):
    """Dry mass lies outside the range the cost relationship was fitted on."""


@dataclass(frozen=True)
class LinkBudgetConfig:
    p_received: float = -150.0  # dBW
    freq_mhz: float = 1575.42
    g_tx: float = 13.0  # dBi
    g_rx: float = 0.0  # dBi
    l_ant: float = 2.0  # dB
    l_ex: float = 0.5  # dB
    mask_deg: float = 0.0

    def __post_init__(self):
        if not self.freq_mhz > 0:
            raise ValueError("frequency must be positive")
        if self.l_ant < 0 or self.l_ex < 0:
            raise ValueError("losses must be non-negative")


@dataclass(frozen=True)
class PayloadPowerTable:
    p_phm: float = 54.0
    n_phm: int = 2
    p_rafs: float = 39.0
    n_rafs: int = 2
    p_nsgu: float = 35.0
    p_fguu: float = 22.0
    p_rtu: float = 12.0
    amp_efficiency: float = 0.68
    thermal_fraction: float = 0.15
    # "of_total": thermal is a share of the final payload power, P = sum / (1 - f)
    # "of_components": thermal is a share of the component sum, P = sum * (1 + f)
    thermal_mode: str = "of_total"

    def __post_init__(self):
        if not 0 < self.amp_efficiency <= 1:
            raise ValueError("amplifier efficiency must lie in (0, 1]")
        if not 0 <= self.thermal_fraction < 1:
            raise ValueError("thermal fraction must lie in [0, 1)")
        if self.thermal_mode not in ("of_total", "of_components"):
            raise ValueError("thermal_mode must be 'of_total' or 'of_components'")
        for name in ("p_phm", "p_rafs", "p_nsgu", "p_fguu", "p_rtu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def fixed_load(self) -> float:
        return self.n_phm * self.p_phm + self.n_rafs * self.p_rafs + self.p_nsgu + self.p_fguu + self.p_rtu


@dataclass(frozen=True)
class CostConfig:
    link: LinkBudgetConfig = LinkBudgetConfig()
    payload: PayloadPowerTable = PayloadPowerTable()
    isp: float = 227.0
    learning: float = 0.85
    lifetime_years: float = 10.0
    table_compat: bool = False


@dataclass(frozen=True)
class CostBreakdown:
    r_max: float  # km
    p_t: float  # dBW
    p_pl: float  # W
    m_dry_init: float  # kg
    m_prop: float  # kg
    m_dry: float  # kg
    t1: float  # M$
    cost_dev: float
    cost_prod: float
    cost_total: float

    def to_dict(self) -> dict:
        return asdict(self)


def max_user_range(a_apo: float, eta: float = 0.0, r_m: float = DEFAULT_CONSTANTS.r_moon_mean) -> float:
    """Slant range to a user seeing the satellite at elevation ``eta`` (deg)."""
    e = math.radians(eta)
    return -r_m * math.sin(e) + math.sqrt(max(a_apo**2 - (r_m * math.cos(e)) ** 2, 0.0))


def transmit_power_for_range(r_km: float, lb: LinkBudgetConfig = LinkBudgetConfig(),
                             c_kms: float = DEFAULT_CONSTANTS.c) -> float:
    wavelength_term = c_kms / (4.0 * math.pi * lb.freq_mhz * 1e6 * r_km)
    return lb.p_received - lb.g_tx - lb.g_rx + lb.l_ex + lb.l_ant - 20.0 * math.log10(wavelength_term)


def transmit_power(a: float, e: float, lb: LinkBudgetConfig = LinkBudgetConfig(),
                   consts: PhysicalConstants = DEFAULT_CONSTANTS, radius: str = "apoapsis") -> float:
    """Required transmit power in dBW for the worst-case user range.

    ``radius`` selects the satellite distance used for the worst case:
    "apoapsis" (a(1+e)) or "sma" (a).
    """
    if radius == "apoapsis":
        r_sat = a * (1.0 + e)
    elif radius == "sma":
        r_sat = a
    else:
        raise ValueError(f"unknown radius choice {radius!r}")
    if not r_sat > consts.r_moon_mean:
        raise ValueError("satellite radius must exceed the lunar radius")
    r = max_user_range(r_sat, lb.mask_deg, consts.r_moon_mean)
    return transmit_power_for_range(r, lb, consts.c)


def payload_power(p_t_dbw: float, tbl: PayloadPowerTable = PayloadPowerTable()) -> float:
    p_t_w = 0.0 if p_t_dbw == -math.inf else 10.0 ** (p_t_dbw / 10.0)
    base = p_t_w / tbl.amp_efficiency + tbl.fixed_load
    if tbl.thermal_mode == "of_total":
        return base / (1.0 - tbl.thermal_fraction)
    return base * (1.0 + tbl.thermal_fraction)


def mass_budget(p_pl: float, dv_10yr: float, isp: float = 227.0, table_compat: bool = False) -> tuple[float, float, float]:
    """(initial dry mass, propellant, dry mass) in kg; ``dv_10yr`` in km/s."""
    if not p_pl > 0:
        raise ValueError("payload power must be positive")
    if dv_10yr < 0:
        raise ValueError("delta-v must be non-negative")
    m_dry_init = 7.5 * p_pl**0.65
    m_prop = m_dry_init * math.expm1(dv_10yr * 1000.0 / (G0 * isp))
    m_p = 0.0 if table_compat else m_prop
    m_dry = 38.0 * (0.14 * p_pl + m_p) ** 0.51 - m_p
    return m_dry_init, m_prop, m_dry


def costs(m_dry: float, n_sats: int, learning: float = 0.85) -> tuple[float, float, float, float]:
    """(first-unit cost, development, production, total) in FY2010 M$."""
    if not m_dry > 0:
        raise NonPhysicalMassError(f"dry mass must be positive, got {m_dry:.1f} kg")
    if n_sats < 1:
        raise ValueError("need at least one satellite")
    if not CER_T1_DOMAIN[0] <= m_dry <= CER_T1_DOMAIN[1]:
        warnings.warn(f"dry mass {m_dry:.1f} kg outside first-unit CER domain {CER_T1_DOMAIN}", CERDomainWarning, stacklevel=2)
    if not CER_DEV_DOMAIN[0] <= m_dry <= CER_DEV_DOMAIN[1]:
        warnings.warn(f"dry mass {m_dry:.1f} kg outside development CER domain {CER_DEV_DOMAIN}", CERDomainWarning, stacklevel=2)
    t1 = 289.5 * m_dry**0.716 / 1000.0
    dev = 110.2 * m_dry / 1000.0
    exponent = 1.0 + math.log(learning) / math.log(2.0)
    prod = t1 * n_sats**exponent
    return t1, dev, prod, dev + prod


def cost_objective(sma: float, ecc: float, n_sats: int, dv_per_sat_yr: float, cfg: CostConfig = CostConfig(),
                   consts: PhysicalConstants = DEFAULT_CONSTANTS) -> CostBreakdown:
    """Full cost chain for a constellation of ``n_sats`` identical satellites."""
    p_t = transmit_power(sma, ecc, cfg.link, consts, radius="apoapsis")
    p_pl = payload_power(p_t, cfg.payload)
    dv_life = max(dv_per_sat_yr, 0.0) * cfg.lifetime_years
    m_init, m_prop, m_dry = mass_budget(p_pl, dv_life, cfg.isp, cfg.table_compat)
    t1, dev, prod, total = costs(m_dry, n_sats, cfg.learning)
    reported_p_t = transmit_power(sma, ecc, cfg.link, consts, radius="sma") if cfg.table_compat else p_t
    r_max = max_user_range(sma * (1.0 + ecc), cfg.link.mask_deg, consts.r_moon_mean)
    return CostBreakdown(r_max=r_max, p_t=reported_p_t, p_pl=p_pl, m_dry_init=m_init, m_prop=m_prop, m_dry=m_dry,
                         t1=t1, cost_dev=dev, cost_prod=prod, cost_total=total)


def design_cost(design, dv_per_sat_yr: float, cfg: CostConfig = CostConfig(),
                consts: PhysicalConstants = DEFAULT_CONSTANTS) -> CostBreakdown:
    return cost_objective(design.sma, design.ecc, design.T, dv_per_sat_yr, cfg, consts)
