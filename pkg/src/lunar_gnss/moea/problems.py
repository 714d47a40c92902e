"""Benchmark problems for the search engine."""
from __future__ import annotations

import math

import numpy as np


class DTLZ2:
    """DTLZ2 with ``n_obj`` objectives and ``n_obj + k - 1`` variables in [0, 1]."""

    def __init__(self, n_obj: int = 3, k: int = 9, eps: float = 0.05, reference: float = 1.1):
        self.n_obj = n_obj
        self.n_var = n_obj + k - 1
        self.lower = np.zeros(self.n_var)
        self.upper = np.ones(self.n_var)
        self.epsilons = np.full(n_obj, eps)
        self.penalty = np.full(n_obj, 10.0)
        self.hv_reference = np.full(n_obj, reference)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        m = self.n_obj
        g = float(np.sum((x[m - 1:] - 0.5) ** 2))
        f = np.full(m, 1.0 + g)
        for i in range(m):
            for j in range(m - 1 - i):
                f[i] *= math.cos(0.5 * math.pi * x[j])
            if i > 0:
                f[i] *= math.sin(0.5 * math.pi * x[m - 1 - i])
        return f, {}

    def hv_transform(self, F):
        return np.asarray(F, dtype=float)

    def optimal_hypervolume(self) -> float:
        """Reference-box volume minus the unit-ball orthant (three objectives)."""
        if self.n_obj != 3:
            raise NotImplementedError("closed form only for three objectives")
        return float(self.hv_reference.prod() - math.pi / 6.0)
