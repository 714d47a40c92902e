"""Time, constants and two-body element/state conversions.

All positions are in km, velocities in km/s, and the working frame is
Moon-centred inertial with the lunar equator as reference plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

DEG = math.pi / 180.0
TWO_PI = 2.0 * math.pi

# Below these values the node or periapsis direction is undefined.
ECC_DEGENERATE = 1e-9
INC_DEGENERATE = 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    mu_moon: float = 4902.800
    r_moon_mean: float = 1738.1
    mu_earth: float = 398600.44
    mu_sun: float = 1.32712440018e11
    a_earth_moon: float = 384400.0
    sidereal_month: float = 27.321661  # days
    c: float = 299792.458
    J2_moon: float = 2.0330e-4
    C22_moon: float = 2.2430e-5
    au: float = 149597870.7
    solar_pressure: float = 4.56e-6  # N/m^2 at 1 au

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"constant {name} must be strictly positive, got {value}")

    @property
    def sidereal_month_s(self) -> float:
        return self.sidereal_month * 86400.0

    def with_overrides(self, **kw) -> "PhysicalConstants":
        return replace(self, **kw)


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True, order=True)
class Epoch:
    """Seconds past the configured reference instant."""

    t: float = 0.0

    def __add__(self, seconds: float) -> "Epoch":
        return Epoch(self.t + float(seconds))

    def __sub__(self, other):
        if isinstance(other, Epoch):
            return self.t - other.t
        return Epoch(self.t - float(other))

    def days(self) -> float:
        return self.t / 86400.0


@dataclass(frozen=True)
class KeplerianElements:
    """Osculating (or mean, depending on context) classical elements.

    Angles are in degrees; ``true_anomaly`` is measured from periapsis, or
    from the ascending node when the orbit is circular.
    """

    sma: float
    ecc: float
    inc: float
    raan: float = 0.0
    argp: float = 0.0
    true_anomaly: float = 0.0

    def __post_init__(self):
        if not self.sma > 0:
            raise ValueError(f"sma must be positive, got {self.sma}")
        if not 0.0 <= self.ecc < 1.0:
            raise ValueError(f"ecc must lie in [0, 1), got {self.ecc}")
        if not 0.0 <= self.inc <= 180.0:
            raise ValueError(f"inc must lie in [0, 180], got {self.inc}")
        object.__setattr__(self, "raan", self.raan % 360.0)
        object.__setattr__(self, "argp", self.argp % 360.0)
        object.__setattr__(self, "true_anomaly", self.true_anomaly % 360.0)

    @property
    def r_apo(self) -> float:
        return self.sma * (1.0 + self.ecc)

    @property
    def r_peri(self) -> float:
        return self.sma * (1.0 - self.ecc)

    def period(self, mu: float) -> float:
        return TWO_PI * math.sqrt(self.sma**3 / mu)

    def to_dict(self) -> dict:
        return {
            "sma": self.sma,
            "ecc": self.ecc,
            "inc": self.inc,
            "raan": self.raan,
            "argp": self.argp,
            "true_anomaly": self.true_anomaly,
        }


@dataclass(frozen=True)
class CartesianState:
    position: np.ndarray
    velocity: np.ndarray
    frame: str = field(default="MCI")

    def __post_init__(self):
        r = np.asarray(self.position, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise ValueError("state components must be finite")
        if not np.linalg.norm(r) > 0:
            raise ValueError("position must be non-zero")
        object.__setattr__(self, "position", r)
        object.__setattr__(self, "velocity", v)

    @classmethod
    def from_vector(cls, y) -> "CartesianState":
        y = np.asarray(y, dtype=float)
        return cls(y[:3], y[3:6])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.position))


def solve_kepler(mean_anomaly: float, ecc: float) -> float:
    """Eccentric anomaly E with E - e sin E = M (radians)."""
    if not 0.0 <= ecc < 1.0:
        raise ValueError(f"ecc must lie in [0, 1), got {ecc}")
    turns = math.floor(mean_anomaly / TWO_PI)
    M = mean_anomaly - turns * TWO_PI
    offset = turns * TWO_PI

    E = math.pi if ecc > 0.8 else M + ecc * math.sin(M)
    for _ in range(50):
        f = E - ecc * math.sin(E) - M
        if abs(f) < 1e-14:
            return E + offset
        step = f / (1.0 - ecc * math.cos(E))
        E -= step
        if abs(step) < 1e-15:
            break
    if abs(E - ecc * math.sin(E) - M) < 1e-12 and 0.0 <= E <= TWO_PI:
        return E + offset

    # Kepler's function is monotone on [0, 2pi], so bisection always works.
    lo, hi = 0.0, TWO_PI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - ecc * math.sin(mid) < M:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi) + offset


def true_to_eccentric(nu: float, ecc: float) -> float:
    return 2.0 * math.atan2(math.sqrt(1.0 - ecc) * math.sin(nu / 2), math.sqrt(1.0 + ecc) * math.cos(nu / 2))


def eccentric_to_true(E: float, ecc: float) -> float:
    return 2.0 * math.atan2(math.sqrt(1.0 + ecc) * math.sin(E / 2), math.sqrt(1.0 - ecc) * math.cos(E / 2))


def true_to_mean(nu: float, ecc: float) -> float:
    E = true_to_eccentric(nu, ecc)
    return E - ecc * math.sin(E)


def mean_to_true(M: float, ecc: float) -> float:
    return eccentric_to_true(solve_kepler(M, ecc), ecc)


def perifocal_basis(raan: float, argp: float, inc: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors P (periapsis), Q and W (orbit normal); angles in radians."""
    cO, sO = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(inc), math.sin(inc)
    P = np.array([cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si])
    Q = np.array([-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si])
    W = np.array([sO * si, -cO * si, ci])
    return P, Q, W


def kepler_to_cartesian(el: KeplerianElements, mu: float) -> CartesianState:
    if el.ecc >= 1.0:
        raise ValueError("only elliptic orbits are supported")
    e = el.ecc
    p = el.sma * (1.0 - e * e)
    nu = el.true_anomaly * DEG
    P, Q, _ = perifocal_basis(el.raan * DEG, el.argp * DEG, el.inc * DEG)
    r = p / (1.0 + e * math.cos(nu))
    vf = math.sqrt(mu / p)
    pos = r * (math.cos(nu) * P + math.sin(nu) * Q)
    vel = vf * (-math.sin(nu) * P + (e + math.cos(nu)) * Q)
    return CartesianState(pos, vel)


def cartesian_to_kepler(state: CartesianState, mu: float) -> KeplerianElements:
    """Classical elements of a bound state.

    Degenerate conventions: circular orbits (e < 1e-9) get argp = 0 and the
    anomaly is measured from the node; equatorial orbits (i < 1e-9 or
    i > 180 - 1e-9) get raan = 0 with the node taken along +x.
    """
    r = state.position
    v = state.velocity
    rn = float(np.linalg.norm(r))
    h = np.cross(r, v)
    hn = float(np.linalg.norm(h))
    if hn <= 1e-12 * rn * float(np.linalg.norm(v)):
        raise ValueError("rectilinear state has no orbital plane")
    energy = 0.5 * float(v @ v) - mu / rn
    if energy >= 0.0:
        raise ValueError("state is not bound (specific energy >= 0)")
    sma = -mu / (2.0 * energy)
    evec = np.cross(v, h) / mu - r / rn
    ecc = float(np.linalg.norm(evec))

    inc = math.acos(max(-1.0, min(1.0, h[2] / hn)))
    node = np.array([-h[1], h[0], 0.0])
    nn = float(np.linalg.norm(node))
    equatorial = inc < INC_DEGENERATE or math.pi - inc < INC_DEGENERATE
    if equatorial:
        raan = 0.0
        node_dir = np.array([1.0, 0.0, 0.0])
    else:
        node_dir = node / nn
        raan = math.atan2(node_dir[1], node_dir[0])
    # in-plane axis 90 deg ahead of the node direction
    w_hat = h / hn
    node_perp = np.cross(w_hat, node_dir)

    def angle_from_node(vec):
        return math.atan2(float(vec @ node_perp), float(vec @ node_dir))

    if ecc < ECC_DEGENERATE:
        ecc_out = 0.0
        argp = 0.0
        nu = angle_from_node(r)
    else:
        ecc_out = ecc
        argp = angle_from_node(evec)
        nu = angle_from_node(r) - argp

    return KeplerianElements(
        sma=sma,
        ecc=ecc_out,
        inc=inc / DEG,
        raan=raan / DEG,
        argp=argp / DEG,
        true_anomaly=nu / DEG,
    )


def angle_diff_deg(a: float, b: float) -> float:
    """Smallest unsigned angular distance between two angles in degrees."""
    d = (a - b) % 360.0
    return min(d, 360.0 - d)


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
