"""Non-dominated ranking and the hypervolume indicator (minimization sense)."""
from __future__ import annotations

import bisect
import warnings

import numpy as np

# (lower, upper) per lunar objective: GDOP, availability %, cost M$, delta-v km/s/yr
OBJECTIVE_BOUNDS = ((1.0, 20.0), (0.0, 100.0), (0.0, 1000.0), (0.0, 5.0))
REFERENCE = 1.01


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(points: np.ndarray) -> np.ndarray:
    """D[i, j] is True when point i dominates point j."""
    P = np.asarray(points, dtype=float)
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    return le & lt


def pareto_rank(points) -> np.ndarray:
    """Rank 1 for the non-dominated set, then peel and increment."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return np.zeros(0, dtype=int)
    P = P.reshape(len(P), -1)
    D = dominance_matrix(P)
    n_dom = D.sum(axis=0)
    ranks = np.zeros(len(P), dtype=int)
    current = np.flatnonzero(n_dom == 0)
    r = 1
    while current.size:
        ranks[current] = r
        n_dom = n_dom - D[current].sum(axis=0)
        n_dom[ranks > 0] = -1
        current = np.flatnonzero(n_dom == 0)
        r += 1
    return ranks


def nondominated(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if len(P) == 0:
        return P
    return P[pareto_rank(P) == 1]


def normalize_objectives(obj, bounds=OBJECTIVE_BOUNDS) -> np.ndarray:
    """Map lunar objective rows (gdop, avail, cost, dv) to [0, 1], all minimized."""
    O = np.atleast_2d(np.asarray(obj, dtype=float))
    out = np.empty_like(O)
    for k, (lo, hi) in enumerate(bounds):
        out[:, k] = (O[:, k] - lo) / (hi - lo)
    # availability is maximized
    out[:, 1] = 1.0 - out[:, 1]
    return out


class _Staircase:
    """Incrementally maintained 2-D non-dominated front and its dominated area."""

    def __init__(self, ref_x: float, ref_y: float):
        self.rx = ref_x
        self.ry = ref_y
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.area = 0.0

    def insert(self, px: float, py: float) -> None:
        xs, ys = self.xs, self.ys
        i = bisect.bisect_left(xs, px)
        if i > 0 and ys[i - 1] <= py:
            return
        if i < len(xs) and xs[i] == px and ys[i] <= py:
            return
        cur_x = px
        cur_f = ys[i - 1] if i > 0 else self.ry
        gain = 0.0
        j = i
        while j < len(xs) and cur_f > py:
            gain += (xs[j] - cur_x) * (cur_f - py)
            cur_x = xs[j]
            cur_f = min(cur_f, ys[j])
            j += 1
        if cur_f > py:
            gain += (self.rx - cur_x) * (cur_f - py)
        # drop points now dominated by p
        k = i
        while k < len(xs) and ys[k] >= py:
            k += 1
        del xs[i:k]
        del ys[i:k]
        xs.insert(i, px)
        ys.insert(i, py)
        self.area += gain


def _hv2(P: np.ndarray, ref: np.ndarray) -> float:
    st = _Staircase(ref[0], ref[1])
    for x, y in P:
        st.insert(x, y)
    return st.area


def _hv3(P: np.ndarray, ref: np.ndarray) -> float:
    order = np.argsort(P[:, 2], kind="stable")
    P = P[order]
    st = _Staircase(ref[0], ref[1])
    vol = 0.0
    for k in range(len(P)):
        st.insert(P[k, 0], P[k, 1])
        z_next = P[k + 1, 2] if k + 1 < len(P) else ref[2]
        vol += st.area * (z_next - P[k, 2])
    return vol


def _hv(P: np.ndarray, ref: np.ndarray) -> float:
    d = P.shape[1]
    if len(P) == 0:
        return 0.0
    if d == 1:
        return float(ref[0] - P[:, 0].min())
    if d == 2:
        return _hv2(P, ref)
    if d == 3:
        return _hv3(P, ref)
    order = np.argsort(P[:, -1], kind="stable")
    P = P[order]
    vol = 0.0
    for k in range(len(P)):
        nxt = P[k + 1, -1] if k + 1 < len(P) else ref[-1]
        thick = nxt - P[k, -1]
        if thick > 0:
            vol += _hv(P[: k + 1, :-1], ref[:-1]) * thick
    return vol


def _prepare(points, reference, lower, upper, warn=True):
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        return np.zeros((0, 0)), np.zeros(0)
    d = P.shape[1]
    if lower is not None:
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        P = (P - lo) / (hi - lo)
    ref = np.full(d, REFERENCE) if reference is None else np.asarray(reference, dtype=float)
    inside = np.all(P < ref, axis=1)
    if not np.all(inside):
        if warn:
            warnings.warn(f"discarding {int((~inside).sum())} point(s) that do not dominate the reference point",
                          RuntimeWarning, stacklevel=3)
        P = P[inside]
    return P, ref


def hypervolume(points, reference=None, lower=None, upper=None, warn: bool = True) -> float:
    """Exact dominated hypervolume by dimension sweep.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Objective vectors in minimization sense.
    reference : array_like, optional
        Reference point in the (normalized) space; defaults to 1.01 per axis.
    lower, upper : array_like, optional
        Per-objective bounds for normalization to [0, 1].
    warn : bool
        Warn when points outside the reference box are discarded.
    """
    P, ref = _prepare(points, reference, lower, upper, warn)
    if len(P) == 0:
        return 0.0
    # dominated points add no volume in the sweep, so no pre-filter is needed
    return float(_hv(P, ref))


def hypervolume_mc(points, reference=None, lower=None, upper=None, n_samples: int = 1_000_000,
                   rng: np.random.Generator | None = None, chunk: int = 100_000) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate and its standard error."""
    P, ref = _prepare(points, reference, lower, upper)
    if len(P) == 0:
        return 0.0, 0.0
    rng = rng or np.random.default_rng(0)
    P = nondominated(P)
    lo = P.min(axis=0)
    box = float(np.prod(ref - lo))
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        X = lo + rng.random((m, P.shape[1])) * (ref - lo)
        dom = np.zeros(m, dtype=bool)
        for p in P:
            dom |= np.all(X >= p, axis=1)
        hits += int(dom.sum())
        done += m
    frac = hits / n_samples
    return box * frac, box * np.sqrt(frac * (1.0 - frac) / n_samples)


def lunar_hypervolume(objectives) -> float:
    """Hypervolume of raw lunar objective rows under the default normalization."""
    O = np.atleast_2d(np.asarray(objectives, dtype=float))
    if O.size == 0:
        return 0.0
    return hypervolume(normalize_objectives(O))
