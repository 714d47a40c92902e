"""The lunar constellation design problem: decision vector -> four objectives."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .astro import DEFAULT_CONSTANTS, PhysicalConstants
from .cost import CERDomainWarning, CostConfig, NonPhysicalMassError, cost_objective, mass_budget, payload_power, transmit_power
from .coverage import CoverageConfig, CoverageResult, evaluate_coverage
from .decoder import ConstellationDesign, DecisionBounds, DecisionVector, decode
from .forces import ForceModelConfig
from .frozen import frozen_inclination
from .pareto import normalize_objectives
from .propagator import IntegratorConfig
from .stationkeeping import DeadbandConfig, StationKeepingResult, annual_delta_v

EPSILONS = (0.01, 0.1, 10.0, 0.01)
PENALTY = (1000.0, 0.0, 1.0e4, 5.0)  # GDOP, availability %, cost M$, delta-v km/s/yr

ARCHIVE_COLUMNS = (
    "id", "sma_km", "n_sats", "n_planes", "phasing", "ecc", "inc_deg", "argp_deg", "gdop_p98", "avail_pct",
    "cost_musd", "dv_kmps_yr", "m_dry_kg", "p_t_dbw", "p_pl_w", "t1_musd",
)


@dataclass(frozen=True)
class ProblemSettings:
    consts: PhysicalConstants = DEFAULT_CONSTANTS
    bounds: DecisionBounds = DecisionBounds()
    coverage: CoverageConfig = CoverageConfig()
    tier: str = "fast"
    force: ForceModelConfig = field(default_factory=ForceModelConfig)
    integrator: IntegratorConfig = IntegratorConfig()
    deadband: DeadbandConfig = DeadbandConfig()
    sk_horizon_days: float = 56.0
    sk_all_satellites: bool = False
    station_keeping: bool = True
    cost: CostConfig = CostConfig()
    epsilons: tuple = EPSILONS
    extra_j2: float = 0.0

    def __post_init__(self):
        if self.tier not in ("fast", "full"):
            raise ValueError("tier must be 'fast' or 'full'")
        if len(self.epsilons) != 4 or min(self.epsilons) <= 0:
            raise ValueError("need four positive epsilon values")


@dataclass
class Evaluation:
    """Objectives in natural sense plus the intermediate quantities behind them."""

    design: ConstellationDesign | None
    gdop_p98: float
    availability_pct: float
    cost_musd: float
    dv_kmps_yr: float
    penalized: bool = False
    reason: str = ""
    coverage: CoverageResult | None = None
    station_keeping: StationKeepingResult | None = None
    breakdown: dict = field(default_factory=dict)

    def objectives(self) -> np.ndarray:
        """Minimization-sense vector (availability negated)."""
        return np.array([self.gdop_p98, -self.availability_pct, self.cost_musd, self.dv_kmps_yr])

    def row(self) -> dict:
        d = self.design
        b = self.breakdown
        nan = math.nan
        return {
            "sma_km": d.sma if d else nan,
            "n_sats": d.T if d else 0,
            "n_planes": d.P if d else 0,
            "phasing": d.F if d else 0,
            "ecc": d.ecc if d else nan,
            "inc_deg": d.inc if d else nan,
            "argp_deg": d.argp if d else nan,
            "gdop_p98": self.gdop_p98,
            "avail_pct": self.availability_pct,
            "cost_musd": self.cost_musd,
            "dv_kmps_yr": self.dv_kmps_yr,
            "m_dry_kg": b.get("m_dry", nan),
            "p_t_dbw": b.get("p_t", nan),
            "p_pl_w": b.get("p_pl", nan),
            "t1_musd": b.get("t1", nan),
            "penalized": self.penalized,
        }


def _penalty(design, reason: str) -> Evaluation:
    g, a, c, dv = PENALTY
    return Evaluation(design, g, a, c, dv, penalized=True, reason=reason)


def evaluate_design(design: ConstellationDesign, settings: ProblemSettings = ProblemSettings(),
                    workers: int = 1) -> Evaluation:
    """Coverage, station-keeping and cost for an already decoded design."""
    s = settings
    try:
        cov = evaluate_coverage(design, s.coverage, s.tier, s.consts, replace(s.force, consts=s.consts),
                                s.integrator, workers=workers)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CERDomainWarning)
            # the initial dry mass depends on payload power only, so delta-v does not feed back
            m_init = cost_objective(design.sma, design.ecc, design.T, 0.0, s.cost, s.consts).m_dry_init
        sk = None
        dv = 0.0
        if s.station_keeping:
            fm = replace(s.force, consts=s.consts, sat_mass=m_init)
            sk = annual_delta_v(design, s.sk_horizon_days, fm, s.integrator, s.deadband, s.sk_all_satellites,
                                workers=workers)
            dv = sk.dv_per_sat_yr
        reason = sk.reason if sk is not None else ""
        penalized = bool(sk is not None and sk.penalized)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CERDomainWarning)
                cb = cost_objective(design.sma, design.ecc, design.T, dv, s.cost, s.consts)
            cost, breakdown = cb.cost_total, cb.to_dict()
        except NonPhysicalMassError as exc:
            # the propellant load drives the dry-mass relation negative; only the cost objective is penalized
            p_t = transmit_power(design.sma, design.ecc, s.cost.link, s.consts, radius="apoapsis")
            p_pl = payload_power(p_t, s.cost.payload)
            m_init, m_prop, m_dry = mass_budget(p_pl, dv * s.cost.lifetime_years, s.cost.isp, s.cost.table_compat)
            cost = PENALTY[2]
            breakdown = {"p_t": p_t, "p_pl": p_pl, "m_dry_init": m_init, "m_prop": m_prop, "m_dry": m_dry}
            penalized = True
            reason = reason or f"cost: {exc}"
    except Exception as exc:  # noqa: BLE001 - any failure becomes the penalty vector
        return _penalty(design, f"{type(exc).__name__}: {exc}")
    return Evaluation(design, cov.gdop_p98, cov.availability_pct, cost, dv, penalized=penalized, reason=reason,
                      coverage=cov, station_keeping=sk, breakdown=breakdown)


def evaluate_vector(x, settings: ProblemSettings = ProblemSettings(), workers: int = 1) -> Evaluation:
    try:
        design = decode(DecisionVector.from_array(x), settings.consts, settings.extra_j2)
    except ValueError as exc:
        return _penalty(None, f"decode: {exc}")
    return evaluate_design(design, settings, workers)


def frozen_deviation(design: ConstellationDesign, settings: ProblemSettings = ProblemSettings()) -> float:
    """|i - i_frozen| in degrees for an explicitly specified design."""
    i_f = frozen_inclination(design.sma, design.ecc, design.argp, settings.consts, extra_j2=settings.extra_j2)
    return abs(design.inc - i_f)


class LunarProblem:
    """Search-engine adapter (picklable, so it can be shipped to worker processes)."""

    n_var = 6
    n_obj = 4

    def __init__(self, settings: ProblemSettings = ProblemSettings()):
        self.settings = settings
        self.lower = settings.bounds.lower
        self.upper = settings.bounds.upper
        self.epsilons = np.asarray(settings.epsilons, dtype=float)
        g, a, c, dv = PENALTY
        self.penalty = np.array([g, -a, c, dv])
        self.hv_reference = np.full(4, 1.01)

    def evaluate(self, x) -> tuple[np.ndarray, dict]:
        ev = evaluate_vector(x, self.settings)
        info = ev.row()
        info["reason"] = ev.reason
        info = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in info.items()}
        return ev.objectives(), info

    def hv_transform(self, F) -> np.ndarray:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        raw = F.copy()
        raw[:, 1] = -raw[:, 1]
        return normalize_objectives(raw)
