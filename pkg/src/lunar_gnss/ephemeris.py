"""Analytic Earth and Sun positions seen from the Moon.

Both bodies move on fixed Keplerian ellipses in the lunar-equatorial
inertial frame. The Moon's body-fixed frame rotates synchronously so that
its prime meridian tracks the Earth's mean direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .astro import DEG, DEFAULT_CONSTANTS, TWO_PI, CartesianState, Epoch, PhysicalConstants, perifocal_basis, solve_kepler

SECONDS_PER_YEAR = 365.25 * 86400.0


@dataclass(frozen=True)
class PerturberOrbitModel:
    body: str
    mu: float
    sma: float
    ecc: float
    inc_to_frame: float
    period_days: float
    raan: float = 0.0
    argp: float = 0.0
    mean_anomaly_at_epoch: float = 0.0
    node_regression_rate: float = 0.0  # deg/yr, negative for regression

    def __post_init__(self):
        if self.body not in ("Earth", "Sun"):
            raise ValueError(f"unknown perturber {self.body!r}")
        if not self.sma > 0:
            raise ValueError("sma must be positive")
        if not 0.0 <= self.ecc < 1.0:
            raise ValueError("ecc must lie in [0, 1)")
        if not self.period_days > 0:
            raise ValueError("period must be positive")

    @property
    def mean_motion(self) -> float:
        return TWO_PI / (self.period_days * 86400.0)


def earth_model(consts: PhysicalConstants = DEFAULT_CONSTANTS, **overrides) -> PerturberOrbitModel:
    params = dict(
        body="Earth",
        mu=consts.mu_earth,
        sma=consts.a_earth_moon,
        ecc=0.0549,
        inc_to_frame=6.68,
        period_days=consts.sidereal_month,
    )
    params.update(overrides)
    return PerturberOrbitModel(**params)


def sun_model(consts: PhysicalConstants = DEFAULT_CONSTANTS, **overrides) -> PerturberOrbitModel:
    params = dict(
        body="Sun",
        mu=consts.mu_sun,
        sma=consts.au,
        ecc=0.0,
        inc_to_frame=1.54,
        period_days=365.25,
    )
    params.update(overrides)
    return PerturberOrbitModel(**params)


def circular_equatorial_earth(consts: PhysicalConstants = DEFAULT_CONSTANTS) -> PerturberOrbitModel:
    """The Earth orbit assumed by the averaged frozen-orbit theory."""
    return earth_model(consts, ecc=0.0, inc_to_frame=0.0)


def perturber_state(model: PerturberOrbitModel, epoch: Epoch) -> CartesianState:
    t = epoch.t if isinstance(epoch, Epoch) else float(epoch)
    n = model.mean_motion
    e = model.ecc
    M = model.mean_anomaly_at_epoch * DEG + n * t
    E = solve_kepler(M, e)
    cE, sE = math.cos(E), math.sin(E)
    b = model.sma * math.sqrt(1.0 - e * e)
    Edot = n / (1.0 - e * cE)
    raan = (model.raan + model.node_regression_rate * t / SECONDS_PER_YEAR) * DEG
    P, Q, _ = perifocal_basis(raan, model.argp * DEG, model.inc_to_frame * DEG)
    pos = model.sma * (cE - e) * P + b * sE * Q
    vel = (-model.sma * sE * P + b * cE * Q) * Edot
    return CartesianState(pos, vel)


def perturber_position(model: PerturberOrbitModel, t: float) -> np.ndarray:
    return perturber_state(model, Epoch(t)).position


def moon_rotation_angle(t: float, consts: PhysicalConstants = DEFAULT_CONSTANTS, earth: PerturberOrbitModel | None = None) -> float:
    """Angle (rad) of the lunar prime meridian from the inertial +x axis."""
    theta0 = 0.0
    if earth is not None:
        theta0 = (earth.raan + earth.argp + earth.mean_anomaly_at_epoch) * DEG
    return theta0 + TWO_PI * t / consts.sidereal_month_s
