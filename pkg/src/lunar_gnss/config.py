"""Schema-validated run configuration (JSON) with every model constant spelled out."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .astro import PhysicalConstants
from .cost import CostConfig, LinkBudgetConfig, PayloadPowerTable
from .coverage import CoverageConfig
from .decoder import DecisionBounds
from .ephemeris import PerturberOrbitModel
from .forces import ForceModelConfig, bundled_coefficients, read_coefficient_table
from .moea import MOEAConfig, OperatorParams
from .problem import ProblemSettings
from .propagator import IntegratorConfig
from .stationkeeping import DeadbandConfig


class ConfigError(ValueError):
    """Configuration rejected; the message lists the offending field paths."""


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstantsBlock(_Block):
    mu_moon: float = Field(4902.800, gt=0, description="km^3/s^2")
    r_moon_mean: float = Field(1738.1, gt=0, description="km")
    mu_earth: float = Field(398600.44, gt=0, description="km^3/s^2")
    mu_sun: float = Field(1.32712440018e11, gt=0, description="km^3/s^2")
    a_earth_moon: float = Field(384400.0, gt=0, description="km")
    sidereal_month: float = Field(27.321661, gt=0, description="days")
    c: float = Field(299792.458, gt=0, description="km/s")
    au: float = Field(149597870.7, gt=0, description="km")
    solar_pressure: float = Field(4.56e-6, ge=0, description="N/m^2 at 1 au")


class PerturberBlock(_Block):
    ecc: float = Field(ge=0, lt=1)
    inc_to_frame: float = Field(description="deg")
    period_days: float = Field(gt=0)
    raan: float = 0.0
    argp: float = 0.0
    mean_anomaly_at_epoch: float = 0.0
    node_regression_rate: float = Field(0.0, description="deg/yr")


class ForceBlock(_Block):
    harmonics_degree: int = Field(10, ge=0)
    harmonics_order: int = Field(10, ge=0)
    gravity_file: str | None = Field(None, description="coefficient table; bundled table when null")
    third_bodies: list[Literal["Earth", "Sun"]] = ["Earth", "Sun"]
    srp_enabled: bool = True
    cr: float = Field(1.8, ge=1, le=2)
    srp_area: float = Field(3.0, gt=0, description="m^2")
    earth: PerturberBlock = PerturberBlock(ecc=0.0549, inc_to_frame=6.68, period_days=27.321661)
    sun: PerturberBlock = PerturberBlock(ecc=0.0, inc_to_frame=1.54, period_days=365.25)

    @model_validator(mode="after")
    def _degree_order(self):
        if self.harmonics_order > self.harmonics_degree:
            raise ValueError("harmonics_order must not exceed harmonics_degree")
        return self


class IntegratorBlock(_Block):
    rel_tol: float = Field(1e-11, gt=0)
    abs_tol: float = Field(1e-12, gt=0)
    min_step: float = Field(1e-6, gt=0, description="s")
    max_step: float = Field(3600.0, gt=0, description="s")
    backend: Literal["compiled", "scipy"] = "compiled"

    @model_validator(mode="after")
    def _steps(self):
        if not self.min_step < self.max_step:
            raise ValueError("min_step must be smaller than max_step")
        return self


class BoundsBlock(_Block):
    sma: tuple[float, float] = (3474.0, 17370.0)
    n_sats: tuple[float, float] = (8.0, 30.0)
    planes_alg: tuple[float, float] = (0.0, 1.0)
    phasing_alg: tuple[float, float] = (0.0, 1.0)
    ecc: tuple[float, float] = (0.0, 0.3)
    argp_alg: tuple[float, float] = (0.0, 1.0)

    @model_validator(mode="after")
    def _ordered(self):
        for name in type(self).model_fields:
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: lower bound exceeds upper bound")
        return self


class CoverageBlock(_Block):
    grid_size: int = Field(500, ge=1)
    mask_deg: float = Field(0.0, ge=0, lt=90)
    step_s: float = Field(300.0, gt=0)
    duration_s: float = Field(86400.0, gt=0)
    start_offset_s: float | None = Field(None, description="null means one sidereal month")
    gdop_threshold: float = Field(6.0, gt=0)
    percentile: float = Field(98.0, gt=0, le=100)
    percentile_mode: Literal["filter", "cap"] = "filter"
    rotate_surface: bool = True


class DeadbandBlock(_Block):
    ecc_rel_tol: float = Field(0.008, gt=0)
    ecc_abs_floor: float = Field(0.002, ge=0)
    argp_tol: float = Field(1.0, gt=0, description="deg")
    argp_ecc_threshold: float = Field(0.1, ge=0)
    r_apo_target_tol: float = Field(1.0, gt=0, description="km")
    ecc_target_tol: float = Field(1e-4, gt=0)
    argp_target_tol: float = Field(0.05, gt=0, description="deg")


class StationKeepingBlock(_Block):
    enabled: bool = True
    horizon_days: float = Field(56.0, ge=28)
    all_satellites: bool = False
    deadband: DeadbandBlock = DeadbandBlock()


class LinkBlock(_Block):
    p_received: float = Field(-150.0, description="dBW")
    freq_mhz: float = Field(1575.42, gt=0)
    g_tx: float = Field(13.0, description="dBi")
    g_rx: float = Field(0.0, description="dBi")
    l_ant: float = Field(2.0, ge=0, description="dB")
    l_ex: float = Field(0.5, ge=0, description="dB")
    mask_deg: float = Field(0.0, ge=0, lt=90)


class PayloadBlock(_Block):
    p_phm: float = Field(54.0, gt=0, description="W, passive hydrogen maser")
    n_phm: int = Field(2, gt=0)
    p_rafs: float = Field(39.0, gt=0, description="W, rubidium frequency standard")
    n_rafs: int = Field(2, gt=0)
    p_nsgu: float = Field(35.0, gt=0, description="W, signal generator")
    p_fguu: float = Field(22.0, gt=0, description="W, frequency generator")
    p_rtu: float = Field(12.0, gt=0, description="W, remote terminal")
    amp_efficiency: float = Field(0.68, gt=0, le=1)
    thermal_fraction: float = Field(0.15, ge=0, lt=1)
    thermal_mode: Literal["of_total", "of_components"] = "of_total"


class CostBlock(_Block):
    link: LinkBlock = LinkBlock()
    payload: PayloadBlock = PayloadBlock()
    isp: float = Field(227.0, gt=0, description="s")
    learning: float = Field(0.85, gt=0, le=1)
    lifetime_years: float = Field(10.0, gt=0)
    table_compat: bool = False


class OperatorBlock(_Block):
    sbx_index: float = Field(15.0, gt=0)
    sbx_rate: float = Field(1.0, ge=0, le=1)
    pm_index: float = Field(20.0, gt=0)
    pm_rate: float | None = Field(None, ge=0, le=1, description="null means 1/n_var")
    de_step: float = Field(0.5, ge=0)
    de_crossover: float = Field(0.1, ge=0, le=1)
    pcx_eta: float = Field(0.1, ge=0)
    pcx_zeta: float = Field(0.1, ge=0)
    undx_zeta: float = Field(0.5, ge=0)
    undx_eta: float = Field(0.35, ge=0)
    spx_expansion: float = Field(3.0, gt=0)
    um_rate: float | None = Field(None, ge=0, le=1, description="null means 1/n_var")
    multi_parents: int = Field(10, ge=3)
    mutation: bool = True


class MOEABlock(_Block):
    max_evaluations: int = Field(10_000, ge=1)
    initial_population: int = Field(100, ge=2)
    batch_size: int = Field(8, ge=1)
    gamma: float = Field(4.0, gt=0)
    zeta: float = Field(1.0, gt=0)
    selection_ratio: float = Field(0.02, gt=0, le=1)
    stagnation_window: int = Field(100, ge=1)
    restart_ratio_tol: float = Field(0.25, ge=0)
    hv_interval: int = Field(100, ge=1)
    check_invariants: bool = False
    epsilons: tuple[float, float, float, float] = (0.01, 0.1, 10.0, 0.01)
    operators: OperatorBlock = OperatorBlock()

    @model_validator(mode="after")
    def _budget(self):
        if self.max_evaluations < self.initial_population:
            raise ValueError("max_evaluations must be at least initial_population")
        if min(self.epsilons) <= 0:
            raise ValueError("epsilons must be positive")
        return self


class RunConfig(_Block):
    """Top-level configuration; unknown keys anywhere are rejected."""

    seed: int = Field(42, ge=0)
    tier: Literal["fast", "full"] = "fast"
    output_dir: str = "results"
    workers: int | None = Field(None, ge=1, description="null means one per processor")
    checkpoint_every: int = Field(100, ge=1, description="evaluations between checkpoints")
    extra_j2: float = Field(0.0, description="additional J2 in the frozen-orbit solver")
    constants: ConstantsBlock = ConstantsBlock()
    force: ForceBlock = ForceBlock()
    integrator: IntegratorBlock = IntegratorBlock()
    bounds: BoundsBlock = BoundsBlock()
    coverage: CoverageBlock = CoverageBlock()
    station_keeping: StationKeepingBlock = StationKeepingBlock()
    cost: CostBlock = CostBlock()
    moea: MOEABlock = MOEABlock()

    # -- conversion to the runtime dataclasses ---------------------------------
    def physical_constants(self) -> PhysicalConstants:
        return PhysicalConstants(**self.constants.model_dump())

    def force_model(self, sat_mass: float = 300.0) -> ForceModelConfig:
        c = self.physical_constants()
        f = self.force
        table = read_coefficient_table(f.gravity_file) if f.gravity_file else bundled_coefficients()
        earth = PerturberOrbitModel(body="Earth", mu=c.mu_earth, sma=c.a_earth_moon, **f.earth.model_dump())
        sun = PerturberOrbitModel(body="Sun", mu=c.mu_sun, sma=c.au, **f.sun.model_dump())
        return ForceModelConfig(harmonics_degree=f.harmonics_degree, harmonics_order=f.harmonics_order,
                                coefficient_table=table, third_bodies=frozenset(f.third_bodies),
                                srp_enabled=f.srp_enabled, cr=f.cr, srp_area=f.srp_area, sat_mass=sat_mass,
                                consts=c, earth=earth, sun=sun)

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator.model_dump())

    def coverage_config(self) -> CoverageConfig:
        return CoverageConfig(**self.coverage.model_dump())

    def cost_config(self) -> CostConfig:
        c = self.cost
        return CostConfig(link=LinkBudgetConfig(**c.link.model_dump()),
                          payload=PayloadPowerTable(**c.payload.model_dump()), isp=c.isp, learning=c.learning,
                          lifetime_years=c.lifetime_years, table_compat=c.table_compat)

    def problem_settings(self) -> ProblemSettings:
        sk = self.station_keeping
        return ProblemSettings(
            consts=self.physical_constants(),
            bounds=DecisionBounds(**self.bounds.model_dump()),
            coverage=self.coverage_config(),
            tier=self.tier,
            force=self.force_model(),
            integrator=self.integrator_config(),
            deadband=DeadbandConfig(**sk.deadband.model_dump()),
            sk_horizon_days=sk.horizon_days,
            sk_all_satellites=sk.all_satellites,
            station_keeping=sk.enabled,
            cost=self.cost_config(),
            epsilons=tuple(self.moea.epsilons),
            extra_j2=self.extra_j2,
        )

    def moea_config(self) -> MOEAConfig:
        m = self.moea.model_dump()
        m.pop("epsilons")
        ops = OperatorParams(**m.pop("operators"))
        return MOEAConfig(operators=ops, **m)


def format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data: dict) -> RunConfig:
    """Validate a mapping; raise :class:`ConfigError` naming the failing field paths."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(format_errors(err)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    return parse_config(data)


def default_config_json() -> str:
    return RunConfig().model_dump_json(indent=2) + "\n"
