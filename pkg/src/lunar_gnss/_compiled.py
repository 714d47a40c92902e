"""Compiled force model and DOP853 stepper for the hot propagation loops.

The step-size controller, error norm and Butcher tableau mirror SciPy's
DOP853 exactly; the difference is that output epochs are hit by clipping
steps (no dense interpolation) and that the whole loop runs in machine
code. :func:`lunar_gnss.propagator.integrate` remains the reference path.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

from .ephemeris import SECONDS_PER_YEAR

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1.0 / 8.0

OK, IMPACT, UNDERFLOW, NO_EVENT = 0, 1, 2, 3

# parameter vector layout
_P_MU, _P_RM, _P_TH0, _P_ROT, _P_EARTH, _P_SUN, _P_SRP, _P_SRPK, _P_AU = range(9)
_P_E0 = 9  # Earth block: mu, sma, ecc, n, M0, raan0, raan_rate, argp, inc
_P_S0 = 18  # Sun block, same layout
N_PARAMS = 27


def pack_force_model(fm):
    """Flatten a ForceModelConfig into (params, terms, nmax) for the compiled kernels."""
    from .ephemeris import moon_rotation_angle

    c = fm.consts
    p = np.zeros(N_PARAMS)
    p[_P_MU] = c.mu_moon
    p[_P_RM] = c.r_moon_mean
    p[_P_TH0] = moon_rotation_angle(0.0, c, fm.earth)
    p[_P_ROT] = 2.0 * math.pi / c.sidereal_month_s
    p[_P_EARTH] = 1.0 if "Earth" in fm.third_bodies else 0.0
    p[_P_SUN] = 1.0 if "Sun" in fm.third_bodies else 0.0
    p[_P_SRP] = 1.0 if fm.srp_enabled else 0.0
    p[_P_SRPK] = c.solar_pressure * fm.cr * fm.srp_area / fm.sat_mass / 1000.0
    p[_P_AU] = c.au
    for base, m in ((_P_E0, fm.earth), (_P_S0, fm.sun)):
        p[base:base + 9] = (
            m.mu, m.sma, m.ecc, m.mean_motion, math.radians(m.mean_anomaly_at_epoch), math.radians(m.raan),
            math.radians(m.node_regression_rate) / SECONDS_PER_YEAR, math.radians(m.argp),
            math.radians(m.inc_to_frame),
        )
    terms = fm.active_terms()
    T = np.array(terms, dtype=float).reshape(-1, 4)
    nmax = int(T[:, 0].max()) if len(T) else 0
    return p, T, nmax


@njit(cache=True)
def _body_position(p, base, t, out):
    a = p[base + 1]
    e = p[base + 2]
    M = p[base + 4] + p[base + 3] * t
    M = M % (2.0 * math.pi)
    E = M if e < 0.8 else math.pi
    for _ in range(50):
        dE = (E - e * math.sin(E) - M) / (1.0 - e * math.cos(E))
        E -= dE
        if abs(dE) < 1e-15:
            break
    raan = p[base + 5] + p[base + 6] * t
    w = p[base + 7]
    inc = p[base + 8]
    cO, sO = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(w), math.sin(w)
    ci, si = math.cos(inc), math.sin(inc)
    x = a * (math.cos(E) - e)
    y = a * math.sqrt(1.0 - e * e) * math.sin(E)
    out[0] = x * (cO * cw - sO * sw * ci) + y * (-cO * sw - sO * cw * ci)
    out[1] = x * (sO * cw + cO * sw * ci) + y * (-sO * sw + cO * cw * ci)
    out[2] = x * (sw * si) + y * (cw * si)


@njit(cache=True)
def _harmonics(xb, yb, zb, terms, nmax, mu, rref, out):
    r2 = xb * xb + yb * yb + zb * zb
    rho = rref * rref / r2
    x0 = rref * xb / r2
    y0 = rref * yb / r2
    z0 = rref * zb / r2
    size = nmax + 2
    V = np.zeros((size + 1, size + 1))
    W = np.zeros((size + 1, size + 1))
    V[0, 0] = rref / math.sqrt(r2)
    for m in range(size + 1):
        if m > 0:
            V[m, m] = (2 * m - 1) * (x0 * V[m - 1, m - 1] - y0 * W[m - 1, m - 1])
            W[m, m] = (2 * m - 1) * (x0 * W[m - 1, m - 1] + y0 * V[m - 1, m - 1])
        if m + 1 <= size:
            V[m + 1, m] = (2 * m + 1) * z0 * V[m, m]
            W[m + 1, m] = (2 * m + 1) * z0 * W[m, m]
        for n in range(m + 2, size + 1):
            V[n, m] = ((2 * n - 1) * z0 * V[n - 1, m] - (n + m - 1) * rho * V[n - 2, m]) / (n - m)
            W[n, m] = ((2 * n - 1) * z0 * W[n - 1, m] - (n + m - 1) * rho * W[n - 2, m]) / (n - m)
    ax = 0.0
    ay = 0.0
    az = 0.0
    for k in range(terms.shape[0]):
        n = int(terms[k, 0])
        m = int(terms[k, 1])
        Cn = terms[k, 2]
        Sn = terms[k, 3]
        if m == 0:
            ax -= Cn * V[n + 1, 1]
            ay -= Cn * W[n + 1, 1]
            az -= (n + 1) * Cn * V[n + 1, 0]
        else:
            fac = 0.5 * (n - m + 1) * (n - m + 2)
            ax += 0.5 * (-Cn * V[n + 1, m + 1] - Sn * W[n + 1, m + 1]) + fac * (Cn * V[n + 1, m - 1] + Sn * W[n + 1, m - 1])
            ay += 0.5 * (-Cn * W[n + 1, m + 1] + Sn * V[n + 1, m + 1]) + fac * (-Cn * W[n + 1, m - 1] + Sn * V[n + 1, m - 1])
            az += (n - m + 1) * (-Cn * V[n + 1, m] - Sn * W[n + 1, m])
    k = mu / (rref * rref)
    out[0] = k * ax
    out[1] = k * ay
    out[2] = k * az


@njit(cache=True)
def _third(r, rb, mu, acc):
    dx = rb[0] - r[0]
    dy = rb[1] - r[1]
    dz = rb[2] - r[2]
    dn3 = (dx * dx + dy * dy + dz * dz) ** 1.5
    bn3 = (rb[0] ** 2 + rb[1] ** 2 + rb[2] ** 2) ** 1.5
    acc[0] += mu * (dx / dn3 - rb[0] / bn3)
    acc[1] += mu * (dy / dn3 - rb[1] / bn3)
    acc[2] += mu * (dz / dn3 - rb[2] / bn3)


@njit(cache=True)
def rhs(t, y, p, terms, nmax, dy):
    r = y[:3]
    mu = p[_P_MU]
    rn = math.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    k = -mu / (rn * rn * rn)
    dy[0] = y[3]
    dy[1] = y[4]
    dy[2] = y[5]
    acc = np.empty(3)
    acc[0] = k * r[0]
    acc[1] = k * r[1]
    acc[2] = k * r[2]
    if terms.shape[0] > 0:
        th = p[_P_TH0] + p[_P_ROT] * t
        c = math.cos(th)
        s = math.sin(th)
        xb = c * r[0] + s * r[1]
        yb = -s * r[0] + c * r[1]
        a_bf = np.empty(3)
        _harmonics(xb, yb, r[2], terms, nmax, mu, p[_P_RM], a_bf)
        acc[0] += c * a_bf[0] - s * a_bf[1]
        acc[1] += s * a_bf[0] + c * a_bf[1]
        acc[2] += a_bf[2]
    rb = np.empty(3)
    if p[_P_EARTH] > 0:
        _body_position(p, _P_E0, t, rb)
        _third(r, rb, p[_P_E0], acc)
    if p[_P_SUN] > 0 or p[_P_SRP] > 0:
        _body_position(p, _P_S0, t, rb)
        if p[_P_SUN] > 0:
            _third(r, rb, p[_P_S0], acc)
        if p[_P_SRP] > 0:
            dx = r[0] - rb[0]
            dy_ = r[1] - rb[1]
            dz = r[2] - rb[2]
            dn = math.sqrt(dx * dx + dy_ * dy_ + dz * dz)
            f = p[_P_SRPK] * (p[_P_AU] / dn) ** 2 / dn
            acc[0] += f * dx
            acc[1] += f * dy_
            acc[2] += f * dz
    dy[3] = acc[0]
    dy[4] = acc[1]
    dy[5] = acc[2]


@njit(cache=True)
def _rk_step(t, y, f, h, p, terms, nmax, K, A, B, C, y_new, f_new):
    n = y.shape[0]
    for i in range(n):
        K[0, i] = f[i]
    tmp = np.empty(n)
    for s in range(1, A.shape[0]):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += K[j, i] * A[s, j]
            tmp[i] = y[i] + h * acc
        rhs(t + C[s] * h, tmp, p, terms, nmax, K[s])
    for i in range(n):
        acc = 0.0
        for j in range(B.shape[0]):
            acc += K[j, i] * B[j]
        y_new[i] = y[i] + h * acc
    rhs(t + h, y_new, p, terms, nmax, f_new)
    for i in range(n):
        K[A.shape[0], i] = f_new[i]


@njit(cache=True)
def _error_norm(K, h, y, y_new, rtol, atol, E3, E5):
    n = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for i in range(n):
        sc = atol + max(abs(y[i]), abs(y_new[i])) * rtol
        a5 = 0.0
        a3 = 0.0
        for j in range(K.shape[0]):
            a5 += K[j, i] * E5[j]
            a3 += K[j, i] * E3[j]
        e5 += (a5 / sc) ** 2
        e3 += (a3 / sc) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * n)


@njit(cache=True)
def _initial_step(t0, y0, f0, t_bound, max_step, rtol, atol, p, terms, nmax):
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    interval = abs(t_bound - t0)
    h0 = min(h0, interval)
    y1 = y0 + h0 * f0
    f1 = np.empty(n)
    rhs(t0 + h0, y1, p, terms, nmax, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100 * h0, h1, interval, max_step)


@njit(cache=True)
def integrate_times(y0, t0, t_out, p, terms, nmax, rtol, atol, max_step, min_step, out, A, B, C, E3, E5):
    """Propagate from t0 and store states at the sorted epochs ``t_out`` (all >= t0).

    Returns (status, t_fail, n_steps).
    """
    n = y0.shape[0]
    y = y0.copy()
    t = t0
    f = np.empty(n)
    rhs(t, y, p, terms, nmax, f)
    K = np.empty((A.shape[0] + 1, n))
    y_new = np.empty(n)
    f_new = np.empty(n)
    r_moon = p[_P_RM]
    k_out = 0
    while k_out < t_out.shape[0] and t_out[k_out] <= t:
        out[k_out] = y
        k_out += 1
    if k_out == t_out.shape[0]:
        return OK, t, 0
    h_abs = _initial_step(t, y, f, t_out[-1], max_step, rtol, atol, p, terms, nmax)
    steps = 0
    while k_out < t_out.shape[0]:
        target = t_out[k_out]
        step_min = 10.0 * abs(np.nextafter(t, np.inf) - t)
        if h_abs > max_step:
            h_abs = max_step
        elif h_abs < step_min:
            h_abs = step_min
        rejected = False
        while True:
            if h_abs < step_min:
                return UNDERFLOW, t, steps
            t_new = t + h_abs
            clipped = False
            if t_new >= target:
                t_new = target
                clipped = True
            h = t_new - t
            _rk_step(t, y, f, h, p, terms, nmax, K, A, B, C, y_new, f_new)
            err = _error_norm(K, h, y, y_new, rtol, atol, E3, E5)
            if err < 1.0:
                factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                if not clipped:
                    h_abs = abs(h) * factor
                elif abs(h) * factor < h_abs:
                    h_abs = abs(h) * factor
                break
            h_abs = abs(h) * max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
            rejected = True
        if not clipped and abs(h) < min_step:
            return UNDERFLOW, t, steps
        t = t_new
        y[:] = y_new
        f[:] = f_new
        steps += 1
        if math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) <= r_moon:
            return IMPACT, t, steps
        while k_out < t_out.shape[0] and t_out[k_out] <= t:
            out[k_out] = y
            k_out += 1
    return OK, t, steps


@njit(cache=True)
def integrate_apsis(y0, t0, t_max, direction, p, terms, nmax, rtol, atol, max_step, min_step, A, B, C, E3, E5):
    """Propagate until r.v crosses zero with the given sign change (-1: apoapsis, +1: periapsis).

    Returns (status, t_event, y_event).
    """
    n = y0.shape[0]
    y = y0.copy()
    t = t0
    f = np.empty(n)
    rhs(t, y, p, terms, nmax, f)
    K = np.empty((A.shape[0] + 1, n))
    y_new = np.empty(n)
    f_new = np.empty(n)
    y_ev = np.empty(n)
    f_tmp = np.empty(n)
    r_moon = p[_P_RM]
    h_abs = _initial_step(t, y, f, t_max, max_step, rtol, atol, p, terms, nmax)
    g_old = y[0] * y[3] + y[1] * y[4] + y[2] * y[5]
    while t < t_max:
        step_min = 10.0 * abs(np.nextafter(t, np.inf) - t)
        if h_abs > max_step:
            h_abs = max_step
        rejected = False
        while True:
            if h_abs < step_min:
                return UNDERFLOW, t, y
            t_new = min(t + h_abs, t_max)
            h = t_new - t
            _rk_step(t, y, f, h, p, terms, nmax, K, A, B, C, y_new, f_new)
            err = _error_norm(K, h, y, y_new, rtol, atol, E3, E5)
            if err < 1.0:
                factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_abs = abs(h) * factor
                break
            h_abs = abs(h) * max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
            rejected = True
        if math.sqrt(y_new[0] ** 2 + y_new[1] ** 2 + y_new[2] ** 2) <= r_moon:
            return IMPACT, t_new, y_new
        g_new = y_new[0] * y_new[3] + y_new[1] * y_new[4] + y_new[2] * y_new[5]
        crossed = (direction < 0 and g_old > 0 and g_new <= 0) or (direction > 0 and g_old < 0 and g_new >= 0)
        if crossed:
            # Illinois root search over a single re-taken step of variable length
            lo, hi = 0.0, h
            g_lo, g_hi = g_old, g_new
            side = 0
            tau = hi
            for _ in range(100):
                tau = hi - g_hi * (hi - lo) / (g_hi - g_lo)
                if not (lo < tau < hi):
                    tau = 0.5 * (lo + hi)
                _rk_step(t, y, f, tau, p, terms, nmax, K, A, B, C, y_ev, f_tmp)
                g = y_ev[0] * y_ev[3] + y_ev[1] * y_ev[4] + y_ev[2] * y_ev[5]
                if g == 0.0 or hi - lo < 1e-9:
                    break
                if (g > 0) == (g_lo > 0):
                    lo, g_lo = tau, g
                    if side == -1:
                        g_hi *= 0.5
                    side = -1
                else:
                    hi, g_hi = tau, g
                    if side == 1:
                        g_lo *= 0.5
                    side = 1
            return OK, t + tau, y_ev
        t = t_new
        y[:] = y_new
        f[:] = f_new
        g_old = g_new
    return NO_EVENT, t, y


class CompiledModel:
    """Packed force model with convenience wrappers around the kernels."""

    def __init__(self, fm, integ):
        self.fm = fm
        self.integ = integ
        self.p, self.terms, self.nmax = pack_force_model(fm)

    def _tol(self):
        i = self.integ
        return i.rel_tol, i.abs_tol, i.max_step, i.min_step

    def acceleration(self, t: float, r) -> np.ndarray:
        y = np.zeros(6)
        y[:3] = r
        dy = np.empty(6)
        rhs(float(t), y, self.p, self.terms, self.nmax, dy)
        return dy[3:].copy()

    def states_at(self, y0, t0: float, times) -> tuple[int, float, np.ndarray]:
        times = np.ascontiguousarray(times, dtype=float)
        out = np.zeros((len(times), 6))
        rtol, atol, max_step, min_step = self._tol()
        status, t_fail, _ = integrate_times(np.asarray(y0, dtype=float), float(t0), times, self.p, self.terms,
                                            self.nmax, rtol, atol, max_step, min_step, out, A, B, C, E3, E5)
        return int(status), float(t_fail), out

    def apsis(self, y0, t0: float, t_max: float, direction: int) -> tuple[int, float, np.ndarray]:
        rtol, atol, max_step, min_step = self._tol()
        status, t_ev, y_ev = integrate_apsis(np.asarray(y0, dtype=float), float(t0), float(t_max), int(direction),
                                             self.p, self.terms, self.nmax, rtol, atol, max_step, min_step,
                                             A, B, C, E3, E5)
        return int(status), float(t_ev), np.array(y_ev)
