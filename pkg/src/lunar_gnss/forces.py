"""Accelerations acting on a lunar orbiter.

Central gravity, lunar spherical harmonics (Cunningham recursion in the
Moon-fixed frame), Earth and Sun third-body tides and cannon-ball solar
radiation pressure without shadowing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .astro import DEFAULT_CONSTANTS, CartesianState, Epoch, PhysicalConstants
from .ephemeris import PerturberOrbitModel, earth_model, moon_rotation_angle, perturber_position, sun_model


class ImpactError(RuntimeError):
    """The trajectory reached the lunar surface."""

    def __init__(self, t: float, radius: float):
        super().__init__(f"impact at t={t:.1f} s (r={radius:.3f} km)")
        self.t = t
        self.radius = radius


def normalization_factor(n: int, m: int) -> float:
    """Multiplier turning a fully normalized coefficient into an unnormalized one."""
    delta = 1.0 if m == 0 else 2.0
    return math.sqrt(math.factorial(n - m) * (2 * n + 1) * delta / math.factorial(n + m))


def read_coefficient_table(path) -> tuple[tuple[int, int, float, float], ...]:
    """Parse rows ``degree order C S`` (fully normalized); '#' starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'degree order C S', got {line!r}")
        n, m = int(parts[0]), int(parts[1])
        if n < 0 or m < 0 or m > n:
            raise ValueError(f"{path}:{lineno}: invalid degree/order {n}/{m}")
        rows.append((n, m, float(parts[2]), float(parts[3])))
    return tuple(rows)


@lru_cache(maxsize=None)
def bundled_coefficients() -> tuple[tuple[int, int, float, float], ...]:
    ref = resources.files("lunar_gnss") / "data" / "moon_gravity.txt"
    with resources.as_file(ref) as p:
        return read_coefficient_table(p)


@dataclass(frozen=True)
class ForceModelConfig:
    harmonics_degree: int = 10
    harmonics_order: int = 10
    coefficient_table: tuple = field(default_factory=bundled_coefficients)
    third_bodies: frozenset = frozenset({"Earth", "Sun"})
    srp_enabled: bool = True
    cr: float = 1.8
    srp_area: float = 3.0  # m^2
    sat_mass: float = 300.0  # kg
    consts: PhysicalConstants = DEFAULT_CONSTANTS
    earth: PerturberOrbitModel = field(default_factory=earth_model)
    sun: PerturberOrbitModel = field(default_factory=sun_model)

    def __post_init__(self):
        if not self.harmonics_degree >= self.harmonics_order >= 0:
            raise ValueError("need degree >= order >= 0")
        if not 1.0 <= self.cr <= 2.0:
            raise ValueError(f"cr must lie in [1, 2], got {self.cr}")
        if not self.srp_area > 0 or not self.sat_mass > 0:
            raise ValueError("srp_area and sat_mass must be positive")
        unknown = set(self.third_bodies) - {"Earth", "Sun"}
        if unknown:
            raise ValueError(f"unknown third bodies {sorted(unknown)}")
        object.__setattr__(self, "third_bodies", frozenset(self.third_bodies))
        object.__setattr__(self, "coefficient_table", tuple(tuple(r) for r in self.coefficient_table))

    @classmethod
    def two_body(cls, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> "ForceModelConfig":
        return cls(harmonics_degree=0, harmonics_order=0, coefficient_table=(), third_bodies=frozenset(),
                   srp_enabled=False, consts=consts)

    @classmethod
    def zonal_j2(cls, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> "ForceModelConfig":
        c20 = -consts.J2_moon / normalization_factor(2, 0)
        return cls(harmonics_degree=2, harmonics_order=0, coefficient_table=((2, 0, c20, 0.0),),
                   third_bodies=frozenset(), srp_enabled=False, consts=consts)

    def active_terms(self) -> list[tuple[int, int, float, float]]:
        """Unnormalized (n, m, C, S) terms within the configured truncation."""
        terms = []
        for n, m, c, s in self.coefficient_table:
            if 2 <= n <= self.harmonics_degree and m <= self.harmonics_order and (c != 0.0 or s != 0.0):
                f = normalization_factor(n, m)
                terms.append((n, m, c * f, s * f))
        return terms


def harmonic_acceleration_bodyfixed(r_bf, terms, mu: float, r_ref: float) -> np.ndarray:
    """Non-central harmonic acceleration in the body-fixed frame (km/s^2)."""
    if not terms:
        return np.zeros(3)
    nmax = max(t[0] for t in terms)
    x, y, z = float(r_bf[0]), float(r_bf[1]), float(r_bf[2])
    r2 = x * x + y * y + z * z
    rho = r_ref * r_ref / r2
    x0, y0, z0 = r_ref * x / r2, r_ref * y / r2, r_ref * z / r2

    size = nmax + 2
    V = [[0.0] * (size + 1) for _ in range(size + 1)]
    W = [[0.0] * (size + 1) for _ in range(size + 1)]
    V[0][0] = r_ref / math.sqrt(r2)
    for m in range(0, size + 1):
        if m > 0:
            V[m][m] = (2 * m - 1) * (x0 * V[m - 1][m - 1] - y0 * W[m - 1][m - 1])
            W[m][m] = (2 * m - 1) * (x0 * W[m - 1][m - 1] + y0 * V[m - 1][m - 1])
        if m + 1 <= size:
            V[m + 1][m] = (2 * m + 1) * z0 * V[m][m]
            W[m + 1][m] = (2 * m + 1) * z0 * W[m][m]
        for n in range(m + 2, size + 1):
            V[n][m] = ((2 * n - 1) * z0 * V[n - 1][m] - (n + m - 1) * rho * V[n - 2][m]) / (n - m)
            W[n][m] = ((2 * n - 1) * z0 * W[n - 1][m] - (n + m - 1) * rho * W[n - 2][m]) / (n - m)

    ax = ay = az = 0.0
    for n, m, C, S in terms:
        if m == 0:
            ax -= C * V[n + 1][1]
            ay -= C * W[n + 1][1]
            az -= (n + 1) * C * V[n + 1][0]
        else:
            fac = 0.5 * (n - m + 1) * (n - m + 2)
            ax += 0.5 * (-C * V[n + 1][m + 1] - S * W[n + 1][m + 1]) + fac * (C * V[n + 1][m - 1] + S * W[n + 1][m - 1])
            ay += 0.5 * (-C * W[n + 1][m + 1] + S * V[n + 1][m + 1]) + fac * (-C * W[n + 1][m - 1] + S * V[n + 1][m - 1])
            az += (n - m + 1) * (-C * V[n + 1][m] - S * W[n + 1][m])
    k = mu / (r_ref * r_ref)
    return np.array([k * ax, k * ay, k * az])


def third_body_acceleration(r, r_body, mu_body: float) -> np.ndarray:
    """Tidal (differential) acceleration of a body at ``r_body`` on a satellite at ``r``."""
    d = r_body - r
    dn = math.sqrt(float(d @ d))
    bn = math.sqrt(float(r_body @ r_body))
    return mu_body * (d / dn**3 - r_body / bn**3)


def srp_acceleration(r, r_sun, fm: ForceModelConfig) -> np.ndarray:
    d = r - r_sun
    dn = math.sqrt(float(d @ d))
    scale = fm.consts.solar_pressure * fm.cr * fm.srp_area / fm.sat_mass / 1000.0
    return scale * (fm.consts.au / dn) ** 2 * d / dn


class AccelerationModel:
    """Callable acceleration with the coefficient bookkeeping done once."""

    def __init__(self, fm: ForceModelConfig):
        self.fm = fm
        self.mu = fm.consts.mu_moon
        self.r_moon = fm.consts.r_moon_mean
        self.terms = fm.active_terms()
        self.use_earth = "Earth" in fm.third_bodies
        self.use_sun = "Sun" in fm.third_bodies
        self.need_sun = self.use_sun or fm.srp_enabled

    def __call__(self, t: float, r: np.ndarray) -> np.ndarray:
        rn = math.sqrt(float(r @ r))
        if rn <= self.r_moon:
            raise ImpactError(t, rn)
        acc = -self.mu * r / rn**3
        fm = self.fm
        if self.terms:
            th = moon_rotation_angle(t, fm.consts, fm.earth)
            c, s = math.cos(th), math.sin(th)
            r_bf = np.array([c * r[0] + s * r[1], -s * r[0] + c * r[1], r[2]])
            a_bf = harmonic_acceleration_bodyfixed(r_bf, self.terms, self.mu, self.r_moon)
            acc = acc + np.array([c * a_bf[0] - s * a_bf[1], s * a_bf[0] + c * a_bf[1], a_bf[2]])
        if self.use_earth:
            acc = acc + third_body_acceleration(r, perturber_position(fm.earth, t), fm.earth.mu)
        if self.need_sun:
            r_sun = perturber_position(fm.sun, t)
            if self.use_sun:
                acc = acc + third_body_acceleration(r, r_sun, fm.sun.mu)
            if fm.srp_enabled:
                acc = acc + srp_acceleration(r, r_sun, fm)
        return acc


def acceleration(state: CartesianState, epoch: Epoch, fm: ForceModelConfig) -> np.ndarray:
    t = epoch.t if isinstance(epoch, Epoch) else float(epoch)
    return AccelerationModel(fm)(t, state.position)


def j2_acceleration(r, mu: float, j2: float, r_ref: float) -> np.ndarray:
    """Closed-form zonal J2 acceleration (independent of the recursion)."""
    x, y, z = r
    rn2 = float(r @ r)
    rn = math.sqrt(rn2)
    k = 1.5 * j2 * mu * r_ref**2 / rn**5
    zz = 5.0 * z * z / rn2
    return -k * np.array([x * (1.0 - zz), y * (1.0 - zz), z * (3.0 - zz)])
