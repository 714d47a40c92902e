"""Decision-vector decoding into frozen Walker-delta constellations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .astro import DEFAULT_CONSTANTS, KeplerianElements, PhysicalConstants
from .frozen import frozen_inclination

VARIABLES = ("sma", "n_sats", "planes_alg", "phasing_alg", "ecc", "argp_alg")


@dataclass(frozen=True)
class DecisionBounds:
    sma: tuple[float, float] = (3474.0, 17370.0)
    n_sats: tuple[float, float] = (8.0, 30.0)
    planes_alg: tuple[float, float] = (0.0, 1.0)
    phasing_alg: tuple[float, float] = (0.0, 1.0)
    ecc: tuple[float, float] = (0.0, 0.3)
    argp_alg: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        for name in VARIABLES:
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"bounds for {name} are inverted: {lo} > {hi}")

    @property
    def lower(self) -> np.ndarray:
        return np.array([getattr(self, n)[0] for n in VARIABLES], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([getattr(self, n)[1] for n in VARIABLES], dtype=float)


@dataclass(frozen=True)
class DecisionVector:
    sma: float
    n_sats: float
    planes_alg: float
    phasing_alg: float
    ecc: float
    argp_alg: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in VARIABLES], dtype=float)

    @classmethod
    def from_array(cls, x) -> "DecisionVector":
        x = [float(v) for v in x]
        if len(x) != len(VARIABLES):
            raise ValueError(f"expected {len(VARIABLES)} decision variables, got {len(x)}")
        return cls(*x)

    def check_bounds(self, bounds: DecisionBounds = DecisionBounds()) -> None:
        for name in VARIABLES:
            lo, hi = getattr(bounds, name)
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ValueError(f"{name}={v} outside bounds [{lo}, {hi}]")


@dataclass(frozen=True)
class ConstellationDesign:
    T: int
    P: int
    F: int
    sma: float
    ecc: float
    inc: float
    argp: float
    satellites: tuple[KeplerianElements, ...] = field(default=())

    def __post_init__(self):
        if self.P < 1 or self.T % self.P:
            raise ValueError(f"number of planes {self.P} must divide {self.T}")
        if not 0 <= self.F < self.P:
            raise ValueError(f"phasing {self.F} must lie in [0, {self.P - 1}]")
        if len(self.satellites) != self.T:
            raise ValueError("satellite list does not match T")

    @property
    def sats_per_plane(self) -> int:
        return self.T // self.P

    def plane_of(self, k: int) -> int:
        return k // self.sats_per_plane

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "P": self.P,
            "F": self.F,
            "sma": self.sma,
            "ecc": self.ecc,
            "inc": self.inc,
            "argp": self.argp,
            "satellites": [s.to_dict() for s in self.satellites],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConstellationDesign":
        sats = d.get("satellites")
        if sats is None:
            return walker_delta(d["sma"], int(d["T"]), int(d["P"]), int(d["F"]), d["ecc"], d["inc"], d["argp"])
        return cls(
            T=int(d["T"]), P=int(d["P"]), F=int(d["F"]), sma=float(d["sma"]), ecc=float(d["ecc"]),
            inc=float(d["inc"]), argp=float(d["argp"]),
            satellites=tuple(KeplerianElements(**s) for s in sats),
        )


def factors(n: int) -> list[int]:
    if n < 1:
        raise ValueError("n must be >= 1")
    small, large = [], []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            small.append(k)
            if k != n // k:
                large.append(n // k)
    return small + large[::-1]


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def pick_index(alg: float, count: int) -> int:
    """1-based option index closest to ``alg * count``, clamped to [1, count]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return min(max(round_half_up(alg * count), 1), count)


def walker_delta(sma: float, T: int, P: int, F: int, ecc: float, inc: float, argp: float) -> ConstellationDesign:
    """T satellites in P planes with inter-plane phasing F pattern units (360/T)."""
    if T < 0 or P < 1 or T % P:
        raise ValueError(f"invalid Walker pattern T={T}, P={P}")
    S = T // P
    pu = 360.0 / T if T else 0.0
    sats = []
    for k in range(P):
        raan = k * 360.0 / P
        for j in range(S):
            nu = j * 360.0 / S + k * F * pu
            sats.append(KeplerianElements(sma=sma, ecc=ecc, inc=inc, raan=raan, argp=argp, true_anomaly=nu))
    return ConstellationDesign(T=T, P=P, F=F, sma=sma, ecc=ecc, inc=inc, argp=argp, satellites=tuple(sats))


def decode(x: DecisionVector, consts: PhysicalConstants = DEFAULT_CONSTANTS, extra_j2: float = 0.0) -> ConstellationDesign:
    T = round_half_up(x.n_sats)
    if T < 1:
        raise ValueError(f"n_sats={x.n_sats} decodes to an empty constellation")
    options = factors(T)
    P = options[pick_index(x.planes_alg, len(options)) - 1]
    F = pick_index(x.phasing_alg, P) - 1
    argp = 90.0 if x.argp_alg < 0.5 else 270.0
    inc = frozen_inclination(x.sma, x.ecc, argp, consts, extra_j2=extra_j2)
    return walker_delta(x.sma, T, P, F, x.ecc, inc, argp)
