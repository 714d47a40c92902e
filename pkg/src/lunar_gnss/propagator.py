"""Numerical and secular orbit propagation.

The numerical path integrates the full force model with SciPy's DOP853
(Dormand-Prince 8(5,3) embedded pair with 7th-order dense output). The
secular path is the "fast tier": Keplerian motion whose node, periapsis
and mean anomaly drift at the averaged J2 plus Earth-tide rates.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .astro import DEG, CartesianState, Epoch, KeplerianElements, kepler_to_cartesian, true_to_mean
from .forces import AccelerationModel, ForceModelConfig, ImpactError
from .frozen import secular_rates


class IntegrationError(RuntimeError):
    """The integrator could not meet its tolerances (step-size underflow)."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    min_step: float = 1e-6
    max_step: float = 3600.0
    method: str = "DOP853"
    backend: str = "compiled"  # "compiled" kernels or SciPy's solve_ivp

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step < self.max_step:
            raise ValueError("need 0 < min_step < max_step")
        if self.method != "DOP853":
            raise ValueError("only the DOP853 embedded pair is supported")
        if self.backend not in ("compiled", "scipy"):
            raise ValueError("backend must be 'compiled' or 'scipy'")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray  # seconds past reference, strictly increasing
    states: np.ndarray  # (N, 6)

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory epochs must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[tuple[Epoch, CartesianState]]:
        for t, y in zip(self.times, self.states):
            yield Epoch(float(t)), CartesianState.from_vector(y)

    def state(self, k: int) -> CartesianState:
        return CartesianState.from_vector(self.states[k])

    @property
    def final(self) -> CartesianState:
        return self.state(-1)


class DenseArc:
    """A propagated arc with continuous output between ``t0`` and ``t1``."""

    def __init__(self, sol, t0: float, t1: float):
        self._sol = sol
        self.t0 = t0
        self.t1 = t1
        self.y1 = sol.y[:, -1].copy()
        self.nfev = sol.nfev

    def __call__(self, t) -> np.ndarray:
        return self._sol.sol(t)


def _rhs(model: AccelerationModel):
    def f(t, y):
        a = model(t, y[:3])
        return np.concatenate([y[3:], a])
    return f


def integrate(y0, t0: float, t1: float, fm: ForceModelConfig, integ: IntegratorConfig = IntegratorConfig(),
              events=None, model: AccelerationModel | None = None):
    """Run the embedded pair from t0 to t1 and return SciPy's solution object."""
    model = model or AccelerationModel(fm)
    r_moon = fm.consts.r_moon_mean

    def impact(t, y):
        return math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - r_moon
    impact.terminal = True
    impact.direction = -1

    evs = [impact] + list(events or [])
    span = t1 - t0
    sol = solve_ivp(_rhs(model), (t0, t1), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=integ.rel_tol, atol=integ.abs_tol, max_step=min(integ.max_step, abs(span)),
                    dense_output=True, events=evs)
    if sol.status == -1:
        raise IntegrationError(sol.message)
    if len(sol.t_events[0]):
        te = float(sol.t_events[0][0])
        raise ImpactError(te, r_moon)
    steps = np.abs(np.diff(sol.t))
    if len(steps) > 1 and np.min(steps[:-1]) < integ.min_step:
        raise IntegrationError(f"step size fell below min_step={integ.min_step} s")
    return sol


def propagate_dense(state0: CartesianState, t0: float, t1: float, fm: ForceModelConfig,
                    integ: IntegratorConfig = IntegratorConfig()) -> DenseArc:
    sol = integrate(state0.as_vector(), t0, t1, fm, integ)
    return DenseArc(sol, t0, t1)


def propagate(state0: CartesianState, t0: Epoch, t1: Epoch, fm: ForceModelConfig,
              integ: IntegratorConfig = IntegratorConfig(), output_times: Sequence[float] | None = None) -> Trajectory:
    """Propagate ``state0`` from t0 to t1; sample at ``output_times`` (default: both ends)."""
    t0s = t0.t if isinstance(t0, Epoch) else float(t0)
    t1s = t1.t if isinstance(t1, Epoch) else float(t1)
    if t1s < t0s:
        raise ValueError("t1 must not precede t0")
    if output_times is None:
        output_times = [t0s, t1s] if t1s > t0s else [t0s]
    out = np.array([o.t if isinstance(o, Epoch) else float(o) for o in output_times])
    if np.any(out < t0s) or np.any(out > t1s):
        raise ValueError("output_times must lie within [t0, t1]")
    if t1s == t0s:
        return Trajectory(np.array([t0s]), state0.as_vector()[None, :])
    arc = propagate_dense(state0, t0s, t1s, fm, integ)
    states = np.asarray(arc(out)).T
    # exact endpoints rather than interpolated ones
    states[out == t0s] = state0.as_vector()
    states[out == t1s] = arc.y1
    return Trajectory(out, states)


# --- secular ("fast tier") propagation ------------------------------------


@dataclass(frozen=True)
class SecularElements:
    """Vectorized element set with linear secular drift of raan, argp, M."""

    sma: np.ndarray
    ecc: np.ndarray
    inc: np.ndarray  # rad
    raan0: np.ndarray  # rad
    argp0: np.ndarray  # rad
    mean_anomaly0: np.ndarray  # rad
    raan_rate: np.ndarray  # rad/s
    argp_rate: np.ndarray  # rad/s
    mean_motion: np.ndarray  # rad/s, including secular corrections

    def positions(self, t: float) -> np.ndarray:
        """(N, 3) positions at time ``t`` seconds past the element epoch."""
        e = self.ecc
        M = self.mean_anomaly0 + self.mean_motion * t
        E = M + e * np.sin(M)
        for _ in range(30):
            f = E - e * np.sin(E) - M
            dE = f / (1.0 - e * np.cos(E))
            E = E - dE
            if np.max(np.abs(dE)) < 1e-14:
                break
        raan = self.raan0 + self.raan_rate * t
        argp = self.argp0 + self.argp_rate * t
        cO, sO = np.cos(raan), np.sin(raan)
        cw, sw = np.cos(argp), np.sin(argp)
        ci, si = np.cos(self.inc), np.sin(self.inc)
        P = np.stack([cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si], axis=1)
        Q = np.stack([-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si], axis=1)
        x = self.sma * (np.cos(E) - e)
        y = self.sma * np.sqrt(1.0 - e * e) * np.sin(E)
        return x[:, None] * P + y[:, None] * Q


def secular_elements(elements: Sequence[KeplerianElements], consts, rates: bool = True) -> SecularElements:
    n = len(elements)
    sma = np.array([el.sma for el in elements], dtype=float)
    ecc = np.array([el.ecc for el in elements], dtype=float)
    inc = np.array([el.inc for el in elements], dtype=float) * DEG
    raan = np.array([el.raan for el in elements], dtype=float) * DEG
    argp = np.array([el.argp for el in elements], dtype=float) * DEG
    M0 = np.array([true_to_mean(el.true_anomaly * DEG, el.ecc) for el in elements], dtype=float)
    raan_rate = np.zeros(n)
    argp_rate = np.zeros(n)
    mm = np.sqrt(consts.mu_moon / sma**3)
    if rates:
        for k, el in enumerate(elements):
            r = secular_rates(el.sma, el.ecc, el.inc, el.argp, consts)
            raan_rate[k] = r.draan_dt
            argp_rate[k] = r.domega_dt
            mm[k] = r.dM_dt
    return SecularElements(sma, ecc, inc, raan, argp, M0, raan_rate, argp_rate, mm)


def _propagate_one(args):
    el, times, fm, integ = args
    state0 = kepler_to_cartesian(el, fm.consts.mu_moon)
    t_end = float(times[-1])
    if t_end <= 0:
        return np.repeat(state0.position[None, :], len(times), axis=0)
    if integ.backend == "compiled":
        from ._compiled import IMPACT, UNDERFLOW, CompiledModel

        status, t_fail, out = CompiledModel(fm, integ).states_at(state0.as_vector(), 0.0, times)
        if status == IMPACT:
            raise ImpactError(t_fail, fm.consts.r_moon_mean)
        if status == UNDERFLOW:
            raise IntegrationError(f"step size fell below min_step at t={t_fail:.1f} s")
        return out[:, :3]
    arc = propagate_dense(state0, 0.0, t_end, fm, integ)
    return np.asarray(arc(np.asarray(times)))[:3].T


def numeric_positions(elements: Sequence[KeplerianElements], times: np.ndarray, fm: ForceModelConfig,
                      integ: IntegratorConfig = IntegratorConfig(), workers: int = 1) -> np.ndarray:
    """(T, N, 3) positions from full-force propagation of osculating elements at t=0."""
    jobs = [(el, np.asarray(times, dtype=float), fm, integ) for el in elements]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_sat = list(pool.map(_propagate_one, jobs))
    else:
        per_sat = [_propagate_one(j) for j in jobs]
    if not per_sat:
        return np.zeros((len(times), 0, 3))
    return np.stack(per_sat, axis=1)
