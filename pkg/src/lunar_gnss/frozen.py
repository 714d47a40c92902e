"""Doubly-averaged secular dynamics and the frozen-orbit inclination.

The model combines the lunar J2 with the quadrupole tide of an Earth on a
circular orbit in the lunar equatorial plane. At argp = 90 or 270 deg the
eccentricity rate vanishes identically, so freezing the orbit reduces to
finding the inclination where the apsidal rate is zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .astro import DEG, DEFAULT_CONSTANTS, PhysicalConstants


class FrozenOrbitError(ValueError):
    """No frozen inclination exists for the requested (a, e, argp)."""


@dataclass(frozen=True)
class SecularRates:
    de_dt: float  # 1/s
    domega_dt: float  # rad/s
    di_dt: float  # rad/s
    draan_dt: float = 0.0  # rad/s
    dM_dt: float = 0.0  # rad/s, full mean-anomaly rate including n


def secular_rates(a: float, e: float, i: float, omega: float, consts: PhysicalConstants = DEFAULT_CONSTANTS,
                  include_j2: bool = True, include_third_body: bool = True, extra_j2: float = 0.0) -> SecularRates:
    """Averaged element rates; ``i`` and ``omega`` in degrees.

    ``extra_j2`` adds an effective J2-like term (used to fold in an
    averaged C22 contribution when one is available).
    """
    n = math.sqrt(consts.mu_moon / a**3)
    n3sq = consts.mu_earth / consts.a_earth_moon**3
    ir = i * DEG
    wr = omega * DEG
    ci = math.cos(ir)
    si = math.sin(ir)
    s = si * si
    sw2 = math.sin(wr) ** 2
    # exact zero on the frozen family, where sin(2w) would otherwise leave ~1e-16
    s2w = 0.0 if math.fmod(omega, 90.0) == 0.0 else math.sin(2.0 * wr)
    eta2 = 1.0 - e * e
    eta = math.sqrt(eta2)

    de = domega = di = draan = 0.0
    dM = n
    if include_j2:
        j2 = consts.J2_moon + extra_j2
        k = n * j2 * (consts.r_moon_mean / a) ** 2
        domega += 0.75 * k * (5.0 * ci * ci - 1.0) / eta2**2
        draan += -1.5 * k * ci / eta2**2
        dM += 0.75 * k * (3.0 * ci * ci - 1.0) / eta2**1.5
    if include_third_body:
        q = n3sq / n
        domega += 0.75 * q / eta * (2.0 * eta2 + 5.0 * sw2 * (e * e - s))
        de += 15.0 / 8.0 * q * e * eta * s * s2w
        di += -15.0 / 8.0 * q / eta * e * e * si * ci * s2w
        draan += -0.75 * q / eta * ci * (eta2 + 5.0 * e * e * sw2)
        dM += -q / 8.0 * (6.0 * eta2 * (1.0 + s - 5.0 * s * sw2)
                          + 4.0 * (2.0 + 3.0 * e * e - 3.0 * s * (eta2 + 5.0 * e * e * sw2)))
    return SecularRates(de_dt=de, domega_dt=domega, di_dt=di, draan_dt=draan, dM_dt=dM)


def frozen_inclination(a: float, e: float, omega: float, consts: PhysicalConstants = DEFAULT_CONSTANTS,
                       include_j2: bool = True, extra_j2: float = 0.0) -> float:
    """Inclination (deg) that freezes an orbit with argp = 90 or 270 deg."""
    if not (abs(omega - 90.0) < 1e-9 or abs(omega - 270.0) < 1e-9):
        raise ValueError(f"frozen family requires argp of 90 or 270 deg, got {omega}")
    if not 0.0 <= e < 1.0:
        raise ValueError(f"ecc must lie in [0, 1), got {e}")

    def rate(inc_rad):
        return secular_rates(a, e, inc_rad / DEG, omega, consts, include_j2=include_j2, extra_j2=extra_j2).domega_dt

    lo, hi = 1.0 * DEG, 89.0 * DEG
    f_lo, f_hi = rate(lo), rate(hi)
    if f_lo * f_hi > 0:
        raise FrozenOrbitError(f"apsidal rate has no sign change on (1, 89) deg for a={a}, e={e}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        f_mid = rate(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    inc = 0.5 * (lo + hi)

    # Newton polish with a central-difference slope
    for _ in range(3):
        f = rate(inc)
        h = 1e-7
        slope = (rate(inc + h) - rate(inc - h)) / (2 * h)
        if slope == 0.0:
            break
        step = f / slope
        if abs(step) > 1e-9:
            break
        inc -= step
        if abs(step) < 1e-16:
            break
    return inc / DEG
