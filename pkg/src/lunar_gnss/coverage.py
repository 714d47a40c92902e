"""Navigation coverage over the lunar surface.

GDOP is sampled on a Fibonacci-lattice grid of surface users. Two
objectives come out of the pooled samples: the 98th percentile of the
GDOP values below the usability threshold, and the availability (share
of samples with at least four satellites in view and GDOP below the
threshold).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .astro import DEFAULT_CONSTANTS, KeplerianElements, PhysicalConstants
from .decoder import ConstellationDesign
from .ephemeris import moon_rotation_angle
from .forces import ForceModelConfig
from .propagator import IntegratorConfig, numeric_positions, secular_elements

GDOP_PENALTY = 1000.0


@dataclass(frozen=True)
class SurfaceGrid:
    points: np.ndarray  # (n, 3) body-fixed, km
    radius: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def unit(self) -> np.ndarray:
        return self.points / self.radius

    @property
    def lat_deg(self) -> np.ndarray:
        return np.degrees(np.arcsin(np.clip(self.unit[:, 2], -1.0, 1.0)))

    @property
    def lon_deg(self) -> np.ndarray:
        return np.degrees(np.arctan2(self.points[:, 1], self.points[:, 0]))


def surface_grid(n: int = 500, radius: float = DEFAULT_CONSTANTS.r_moon_mean) -> SurfaceGrid:
    """Near-equidistant points on a sphere from the golden-angle spiral."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(n)
    rxy = np.sqrt(1.0 - z * z)
    pts = np.stack([rxy * np.cos(phi), rxy * np.sin(phi), z], axis=1)
    return SurfaceGrid(points=radius * pts, radius=radius)


def elevation(sat_pos, user_pos) -> float:
    """Elevation of the satellite above the user's local horizontal plane, degrees."""
    sat_pos = np.asarray(sat_pos, dtype=float)
    user_pos = np.asarray(user_pos, dtype=float)
    los = sat_pos - user_pos
    up = user_pos / np.linalg.norm(user_pos)
    s = float(los @ up) / float(np.linalg.norm(los))
    return math.degrees(math.asin(max(-1.0, min(1.0, s))))


def gdop(sat_positions, user_pos, cond_limit: float = 1e12) -> float:
    """GDOP from the given (already visible) satellites; NaN when undefined."""
    S = np.asarray(sat_positions, dtype=float).reshape(-1, 3)
    if len(S) < 4:
        return math.nan
    los = S - np.asarray(user_pos, dtype=float)
    u = los / np.linalg.norm(los, axis=1)[:, None]
    H = np.hstack([-u, np.ones((len(S), 1))])
    G = H.T @ H
    if not np.isfinite(np.linalg.cond(G)) or np.linalg.cond(G) > cond_limit:
        return math.nan
    return math.sqrt(float(np.trace(np.linalg.inv(G))))


def gdop_field(sat_positions: np.ndarray, users: np.ndarray, mask_deg: float = 0.0,
               cond_limit: float = 1e12) -> tuple[np.ndarray, np.ndarray]:
    """GDOP for every user against every satellite above the mask.

    Returns ``(gdop, n_visible)``; GDOP is NaN where it is undefined.
    """
    users = np.asarray(users, dtype=float)
    n_users = len(users)
    out = np.full(n_users, np.nan)
    S = np.asarray(sat_positions, dtype=float).reshape(-1, 3)
    if len(S) == 0:
        return out, np.zeros(n_users, dtype=int)
    los = S[None, :, :] - users[:, None, :]
    u = los / np.linalg.norm(los, axis=2)[..., None]
    up = users / np.linalg.norm(users, axis=1)[:, None]
    sin_el = np.einsum("uk,usk->us", up, u)
    visible = sin_el >= math.sin(math.radians(mask_deg)) - 1e-12
    n_vis = visible.sum(axis=1)
    ok = n_vis >= 4
    if not np.any(ok):
        return out, n_vis
    w = visible[ok].astype(float)
    H = np.concatenate([-u[ok], np.ones(u[ok].shape[:2] + (1,))], axis=2)
    G = np.matmul(np.swapaxes(H * w[..., None], 1, 2), H)
    # G is symmetric positive semi-definite: its eigenvalues give both the condition number and trace(G^-1)
    lam = np.linalg.eigvalsh(G)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = lam[:, -1] / lam[:, 0]
        tr = np.sum(1.0 / lam, axis=1)
    good = (lam[:, 0] > 0) & np.isfinite(cond) & (cond <= cond_limit)
    vals = np.where(good, np.sqrt(np.where(good, tr, 1.0)), np.nan)
    out[ok] = vals
    return out, n_vis


def percentile(values: Sequence[float], p: float) -> float:
    """Linear-interpolation quantile at 1-based rank h = (n - 1) p / 100 + 1."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        return math.nan
    h = (len(v) - 1) * p / 100.0
    lo = int(math.floor(h))
    if lo >= len(v) - 1:
        return float(v[-1])
    return float(v[lo] + (h - lo) * (v[lo + 1] - v[lo]))


@dataclass(frozen=True)
class CoverageConfig:
    grid_size: int = 500
    mask_deg: float = 0.0
    step_s: float = 300.0
    duration_s: float = 86400.0
    start_offset_s: float | None = None  # default: one sidereal month
    gdop_threshold: float = 6.0
    percentile: float = 98.0
    percentile_mode: str = "filter"  # "filter" (sub-threshold population) or "cap"
    rotate_surface: bool = True
    cond_limit: float = 1e12

    def __post_init__(self):
        if self.percentile_mode not in ("filter", "cap"):
            raise ValueError("percentile_mode must be 'filter' or 'cap'")
        if not (self.step_s > 0 and self.duration_s >= 0):
            raise ValueError("sampling step must be positive and duration non-negative")

    def sample_times(self, consts: PhysicalConstants = DEFAULT_CONSTANTS, t0: float = 0.0) -> np.ndarray:
        start = consts.sidereal_month_s if self.start_offset_s is None else self.start_offset_s
        n = int(math.floor(self.duration_s / self.step_s + 1e-9))
        return t0 + start + self.step_s * np.arange(n + 1)


@dataclass
class CoverageResult:
    gdop_p98: float
    availability_pct: float
    per_location_p98: list = field(default_factory=list)
    samples_evaluated: int = 0

    def to_dict(self) -> dict:
        return {
            "gdop_p98": self.gdop_p98,
            "availability_pct": self.availability_pct,
            "samples_evaluated": self.samples_evaluated,
        }


def _elements_of(design) -> list[KeplerianElements]:
    if isinstance(design, ConstellationDesign):
        return list(design.satellites)
    return list(design)


def constellation_positions(elements: Sequence[KeplerianElements], times: np.ndarray, tier: str,
                            consts: PhysicalConstants = DEFAULT_CONSTANTS, fm: ForceModelConfig | None = None,
                            integ: IntegratorConfig | None = None, workers: int = 1) -> np.ndarray:
    """(T, N, 3) satellite positions at ``times``."""
    if not elements:
        return np.zeros((len(times), 0, 3))
    if tier == "fast":
        sec = secular_elements(elements, consts)
        return np.stack([sec.positions(t) for t in times])
    if tier == "full":
        fm = fm or ForceModelConfig(consts=consts)
        return numeric_positions(elements, times, fm, integ or IntegratorConfig(), workers=workers)
    raise ValueError(f"unknown fidelity tier {tier!r}")


def _user_positions(grid: SurfaceGrid, t: float, cfg: CoverageConfig, consts, fm) -> np.ndarray:
    if not cfg.rotate_surface:
        return grid.points
    th = moon_rotation_angle(t, consts, fm.earth if fm is not None else None)
    c, s = math.cos(th), math.sin(th)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return grid.points @ R.T


def gdop_samples(design, times: np.ndarray, cfg: CoverageConfig, tier: str = "fast",
                 consts: PhysicalConstants = DEFAULT_CONSTANTS, fm: ForceModelConfig | None = None,
                 integ: IntegratorConfig | None = None, grid: SurfaceGrid | None = None,
                 workers: int = 1) -> np.ndarray:
    """(epochs, locations) GDOP matrix, NaN where fewer than four satellites are usable."""
    grid = grid or surface_grid(cfg.grid_size, consts.r_moon_mean)
    elements = _elements_of(design)
    sats = constellation_positions(elements, times, tier, consts, fm, integ, workers)
    out = np.empty((len(times), len(grid)))
    for k, t in enumerate(times):
        users = _user_positions(grid, float(t), cfg, consts, fm)
        out[k], _ = gdop_field(sats[k], users, cfg.mask_deg, cfg.cond_limit)
    return out


def summarize(samples: np.ndarray, cfg: CoverageConfig) -> CoverageResult:
    thr = cfg.gdop_threshold
    usable = np.isfinite(samples) & (samples < thr)
    total = samples.size
    availability = 100.0 * usable.sum() / total if total else 0.0
    if cfg.percentile_mode == "filter":
        pooled = samples[usable]
    else:
        pooled = np.where(usable, samples, thr)
    p98 = percentile(pooled.ravel(), cfg.percentile) if pooled.size else math.nan
    if not math.isfinite(p98):
        p98 = GDOP_PENALTY
    per_loc = []
    for j in range(samples.shape[1]):
        col = samples[:, j]
        m = usable[:, j]
        vals = col[m] if cfg.percentile_mode == "filter" else np.where(m, col, thr)
        v = percentile(vals, cfg.percentile) if len(vals) else math.nan
        per_loc.append(v if math.isfinite(v) else GDOP_PENALTY)
    return CoverageResult(gdop_p98=float(p98), availability_pct=float(availability),
                          per_location_p98=per_loc, samples_evaluated=int(total))


def evaluate_coverage(design, cfg: CoverageConfig = CoverageConfig(), tier: str = "fast",
                      consts: PhysicalConstants = DEFAULT_CONSTANTS, fm: ForceModelConfig | None = None,
                      integ: IntegratorConfig | None = None, grid: SurfaceGrid | None = None,
                      t0: float = 0.0, workers: int = 1) -> CoverageResult:
    times = cfg.sample_times(consts, t0)
    samples = gdop_samples(design, times, cfg, tier, consts, fm, integ, grid, workers)
    return summarize(samples, cfg)


def gdop_map(design, cfg: CoverageConfig = CoverageConfig(), tier: str = "fast",
             consts: PhysicalConstants = DEFAULT_CONSTANTS, fm: ForceModelConfig | None = None,
             integ: IntegratorConfig | None = None, grid: SurfaceGrid | None = None,
             window_s: float | None = None, t0: float = 0.0, workers: int = 1) -> list[tuple[float, float, float]]:
    """Per-location 98th percentile over a window (default one sidereal month from t0)."""
    grid = grid or surface_grid(cfg.grid_size, consts.r_moon_mean)
    window = consts.sidereal_month_s if window_s is None else window_s
    n = int(math.floor(window / cfg.step_s + 1e-9))
    times = t0 + cfg.step_s * np.arange(n + 1)
    samples = gdop_samples(design, times, cfg, tier, consts, fm, integ, grid, workers)
    res = summarize(samples, cfg)
    return list(zip(grid.lat_deg.tolist(), grid.lon_deg.tolist(), res.per_location_p98))
