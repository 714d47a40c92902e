"""Variation operators acting on decision vectors scaled to the unit hypercube.

Every operator returns a single offspring. Polynomial mutation follows
each recombination operator (not uniform mutation), as in Borg.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OPERATORS = ("SBX", "DE", "PCX", "UNDX", "SPX", "UM")


@dataclass(frozen=True)
class OperatorParams:
    sbx_index: float = 15.0
    sbx_rate: float = 1.0
    pm_index: float = 20.0
    pm_rate: float | None = None  # default 1/n
    de_step: float = 0.5
    de_crossover: float = 0.1
    pcx_eta: float = 0.1
    pcx_zeta: float = 0.1
    undx_zeta: float = 0.5
    undx_eta: float = 0.35
    spx_expansion: float = 3.0
    um_rate: float | None = None  # default 1/n
    multi_parents: int = 10
    mutation: bool = True

    def arity(self, op: str) -> int:
        return {"SBX": 2, "DE": 4, "PCX": self.multi_parents, "UNDX": self.multi_parents,
                "SPX": self.multi_parents, "UM": 1}[op]


def sbx(p1: np.ndarray, p2: np.ndarray, rng: np.random.Generator, eta: float = 15.0, rate: float = 1.0) -> np.ndarray:
    """Bounded simulated binary crossover on [0, 1]; returns the first child."""
    child = p1.copy()
    if rng.random() > rate:
        return child
    for j in range(len(p1)):
        if rng.random() > 0.5:
            continue
        x1, x2 = p1[j], p2[j]
        if abs(x1 - x2) < 1e-14:
            continue
        y1, y2 = min(x1, x2), max(x1, x2)
        u = rng.random()

        def betaq(beta):
            alpha = 2.0 - beta ** (-(eta + 1.0))
            if u <= 1.0 / alpha:
                return (u * alpha) ** (1.0 / (eta + 1.0))
            return (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))

        bq1 = betaq(1.0 + 2.0 * y1 / (y2 - y1))
        c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1))
        bq2 = betaq(1.0 + 2.0 * (1.0 - y2) / (y2 - y1))
        c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1))
        c1 = min(max(c1, 0.0), 1.0)
        c2 = min(max(c2, 0.0), 1.0)
        if rng.random() < 0.5:
            c1, c2 = c2, c1
        child[j] = c1 if x1 <= x2 else c2
    return child


def differential_evolution(parents, rng: np.random.Generator, step: float = 0.5, crossover: float = 0.1) -> np.ndarray:
    """DE/rand/1/bin: target parents[0], base parents[3], difference parents[1] - parents[2]."""
    target, d1, d2, base = parents
    n = len(target)
    child = target.copy()
    jrand = rng.integers(n)
    for j in range(n):
        if rng.random() <= crossover or j == jrand:
            child[j] = base[j] + step * (d1[j] - d2[j])
    return child


def _orthonormal_complement(vectors: list[np.ndarray], n: int) -> np.ndarray:
    """Orthonormal basis (rows) of the complement of span(vectors)."""
    if vectors:
        A = np.array(vectors).T
        q, r = np.linalg.qr(A, mode="complete")
        rank = int(np.sum(np.abs(np.diag(r[: min(r.shape)])) > 1e-12))
        return q[:, rank:].T
    return np.eye(n)


def _gram_schmidt(vectors: list[np.ndarray]) -> list[np.ndarray]:
    basis = []
    for v in vectors:
        w = v.copy()
        for e in basis:
            w = w - (w @ e) * e
        nw = np.linalg.norm(w)
        if nw > 1e-12:
            basis.append(w / nw)
    return basis


def pcx(parents, rng: np.random.Generator, eta: float = 0.1, zeta: float = 0.1) -> np.ndarray:
    """Parent-centric crossover centred on the last parent."""
    P = np.asarray(parents)
    k, n = P.shape
    g = P.mean(axis=0)
    xp = P[-1]
    d = xp - g
    dn = np.linalg.norm(d)
    if dn < 1e-12:
        return xp.copy()
    dh = d / dn
    dists = []
    for i in range(k - 1):
        v = P[i] - g
        perp = v - (v @ dh) * dh
        dists.append(np.linalg.norm(perp))
    dbar = float(np.mean(dists)) if dists else 0.0
    child = xp + rng.normal(0.0, zeta) * d
    for e in _orthonormal_complement([d], n):
        child = child + rng.normal(0.0, eta) * dbar * e
    return child


def undx(parents, rng: np.random.Generator, zeta: float = 0.5, eta: float = 0.35) -> np.ndarray:
    """Unimodal normal distribution crossover (multi-parent form)."""
    P = np.asarray(parents)
    k, n = P.shape
    g = P[:-1].mean(axis=0)
    diffs = [P[i] - g for i in range(k - 1)]
    basis = _gram_schmidt(diffs)
    v = P[-1] - g
    perp = v - sum(((v @ e) * e for e in basis), np.zeros(n))
    D = float(np.linalg.norm(perp))
    child = g.copy()
    for i, e in enumerate(basis):
        child = child + rng.normal(0.0, zeta) * np.linalg.norm(diffs[i]) * e
    for e in _orthonormal_complement(basis, n):
        child = child + rng.normal(0.0, eta / math.sqrt(n)) * D * e
    return child


def spx(parents, rng: np.random.Generator, expansion: float = 3.0) -> np.ndarray:
    """Simplex crossover."""
    P = np.asarray(parents)
    k, n = P.shape
    G = P.mean(axis=0)
    y = G + expansion * (P - G)
    c = np.zeros(n)
    for i in range(1, k):
        r = rng.random() ** (1.0 / i)
        c = r * (y[i - 1] - y[i] + c)
    return y[-1] + c


def uniform_mutation(x: np.ndarray, rng: np.random.Generator, rate: float | None = None) -> np.ndarray:
    n = len(x)
    rate = 1.0 / n if rate is None else rate
    child = x.copy()
    mask = rng.random(n) < rate
    child[mask] = rng.random(int(mask.sum()))
    return child


def polynomial_mutation(x: np.ndarray, rng: np.random.Generator, eta: float = 20.0, rate: float | None = None) -> np.ndarray:
    n = len(x)
    rate = 1.0 / n if rate is None else rate
    child = x.copy()
    for j in range(n):
        if rng.random() >= rate:
            continue
        y = child[j]
        d1 = y
        d2 = 1.0 - y
        u = rng.random()
        mpow = 1.0 / (eta + 1.0)
        if u < 0.5:
            xy = 1.0 - d1
            val = 2.0 * u + (1.0 - 2.0 * u) * xy ** (eta + 1.0)
            dq = val**mpow - 1.0
        else:
            xy = 1.0 - d2
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta + 1.0)
            dq = 1.0 - val**mpow
        child[j] = min(max(y + dq, 0.0), 1.0)
    return child


def variate(op: str, parents, rng: np.random.Generator, params: OperatorParams = OperatorParams()) -> np.ndarray:
    """One offspring in unit-cube coordinates, clipped to [0, 1]."""
    if op not in OPERATORS:
        raise ValueError(f"unknown operator {op!r}")
    parents = [np.asarray(p, dtype=float) for p in parents]
    need = params.arity(op)
    if len(parents) < need:
        raise ValueError(f"{op} needs {need} parents, got {len(parents)}")
    if op == "SBX":
        child = sbx(parents[0], parents[1], rng, params.sbx_index, params.sbx_rate)
    elif op == "DE":
        child = differential_evolution(parents[:4], rng, params.de_step, params.de_crossover)
    elif op == "PCX":
        child = pcx(parents, rng, params.pcx_eta, params.pcx_zeta)
    elif op == "UNDX":
        child = undx(parents, rng, params.undx_zeta, params.undx_eta)
    elif op == "SPX":
        child = spx(parents, rng, params.spx_expansion)
    elif op == "UM":
        return np.clip(uniform_mutation(parents[0], rng, params.um_rate), 0.0, 1.0)
    else:
        raise ValueError(f"unknown operator {op!r}")
    child = np.clip(child, 0.0, 1.0)
    if params.mutation:
        child = polynomial_mutation(child, rng, params.pm_index, params.pm_rate)
    return child


def selection_probabilities(credits, zeta: float = 1.0) -> np.ndarray:
    c = np.asarray(credits, dtype=float) + zeta
    return c / c.sum()


def select_operator(credits, rng: np.random.Generator, zeta: float = 1.0) -> int:
    p = selection_probabilities(credits, zeta)
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, len(p) - 1)
