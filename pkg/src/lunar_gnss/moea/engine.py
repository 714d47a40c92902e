"""Borg-style steady-state search loop.

Offspring are generated in fixed-size batches so that evaluation can be
farmed out to a worker pool while the archive and population updates
happen in a deterministic order. Batch size, not worker count, shapes the
trajectory, so results are identical for any number of workers.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from ..pareto import hypervolume
from .archive import Archive, Solution, epsilon_box, operator_credits, pareto_compare
from .operators import OPERATORS, OperatorParams, select_operator, selection_probabilities, uniform_mutation, variate


class Problem(Protocol):
    n_var: int
    n_obj: int
    lower: np.ndarray
    upper: np.ndarray
    epsilons: np.ndarray
    penalty: np.ndarray
    hv_reference: np.ndarray

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, dict]: ...

    def hv_transform(self, F: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class MOEAConfig:
    max_evaluations: int = 10_000
    initial_population: int = 100
    batch_size: int = 8
    gamma: float = 4.0
    zeta: float = 1.0
    selection_ratio: float = 0.02
    stagnation_window: int = 100
    restart_ratio_tol: float = 0.25
    hv_interval: int = 100
    check_invariants: bool = False
    operators: OperatorParams = field(default_factory=OperatorParams)

    def __post_init__(self):
        if self.initial_population < 2:
            raise ValueError("population must hold at least two members")
        if self.max_evaluations < self.initial_population:
            raise ValueError("evaluation budget must cover the initial population")
        if self.batch_size < 1 or self.hv_interval < 1 or self.stagnation_window < 1:
            raise ValueError("batch_size, hv_interval and stagnation_window must be positive")
        if not (self.gamma > 0 and self.zeta > 0 and 0 < self.selection_ratio <= 1):
            raise ValueError("gamma and zeta must be positive; selection_ratio in (0, 1]")


@dataclass
class RunState:
    evaluations: int = 0
    restarts: int = 0
    last_progress: int = 0
    tournament: int = 2
    population: list = field(default_factory=list)
    archive: Archive | None = None
    front: list = field(default_factory=list)  # every non-dominated evaluated solution
    history: list = field(default_factory=list)  # (evals, hv, archive_size, restarts)
    rng: np.random.Generator | None = None
    next_hv: int = 0
    pending: list = field(default_factory=list)  # restart members awaiting evaluation


@dataclass
class RunResult:
    archive: Archive
    history: list
    credits: np.ndarray
    evaluations: int
    restarts: int

    def history_csv(self) -> str:
        lines = ["evals,hypervolume,archive_size,restarts"]
        for e, hv, a, r in self.history:
            lines.append(f"{e},{hv!r},{a},{r}")
        return "\n".join(lines) + "\n"


def _evaluate_one(args):
    problem, x = args
    try:
        f, info = problem.evaluate(x)
        f = np.asarray(f, dtype=float)
        if f.shape != (problem.n_obj,) or not np.all(np.isfinite(f)):
            raise ValueError("non-finite objectives")
        return f, info, bool(info.get("penalized", False))
    except Exception as exc:  # noqa: BLE001 - any evaluator failure becomes a penalty
        return np.array(problem.penalty, dtype=float), {"error": f"{type(exc).__name__}: {exc}"}, True


class Borg:
    """Auto-adaptive epsilon-dominance MOEA."""

    def __init__(self, problem: Problem, config: MOEAConfig = MOEAConfig(), seed: int = 0, workers: int = 1,
                 checkpoint_path: str | os.PathLike | None = None, checkpoint_every: int = 500):
        self.problem = problem
        self.cfg = config
        self.seed = seed
        self.workers = workers
        self.checkpoint_path = checkpoint_path
        self.checkpoint_every = checkpoint_every
        self.lo = np.asarray(problem.lower, dtype=float)
        self.hi = np.asarray(problem.upper, dtype=float)
        self.state = RunState(archive=Archive(problem.epsilons), rng=np.random.default_rng(seed))
        self._pool = None

    # -- coordinates ----------------------------------------------------------
    def to_unit(self, x):
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        return (np.asarray(x, dtype=float) - self.lo) / span

    def from_unit(self, u):
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)

    # -- evaluation -----------------------------------------------------------
    def _evaluate(self, xs: list[np.ndarray]) -> list[tuple[np.ndarray, dict, bool]]:
        jobs = [(self.problem, x) for x in xs]
        if self.workers > 1 and len(jobs) > 1:
            if self._pool is None:
                self._pool = ProcessPoolExecutor(max_workers=self.workers)
            return list(self._pool.map(_evaluate_one, jobs))
        return [_evaluate_one(j) for j in jobs]

    # -- bookkeeping ----------------------------------------------------------
    def _add_front(self, sol: Solution) -> None:
        if sol.penalized:
            return
        front = self.state.front
        if front:
            F = np.array([s.f for s in front])
            f = sol.f
            if np.any(np.all(F <= f, axis=1)):
                return
            beaten = np.all(f <= F, axis=1)
            if np.any(beaten):
                front = [s for s, b in zip(front, beaten) if not b]
        front.append(sol)
        self.state.front = front

    def front_hypervolume(self) -> float:
        if not self.state.front:
            return 0.0
        F = np.array([s.f for s in self.state.front])
        return hypervolume(self.problem.hv_transform(F), self.problem.hv_reference, warn=False)

    def _record(self) -> None:
        st = self.state
        if st.evaluations >= st.next_hv:
            st.history.append((st.evaluations, self.front_hypervolume(), len(st.archive), st.restarts))
            st.next_hv = (st.evaluations // self.cfg.hv_interval + 1) * self.cfg.hv_interval

    def _accept(self, sol: Solution, into_population: bool = True) -> None:
        st = self.state
        st.evaluations += 1
        if into_population:
            self._population_add(sol)
        res = st.archive.insert(sol)
        if res.progress:
            st.last_progress = st.evaluations
        if self.cfg.check_invariants:
            st.archive.check_invariants()
        self._add_front(sol)

    def _population_add(self, sol: Solution) -> None:
        pop = self.state.population
        rng = self.state.rng
        F = np.array([p.f for p in pop])
        f = sol.f
        le = np.all(f <= F, axis=1)
        ge = np.all(f >= F, axis=1)
        eq = np.all(f == F, axis=1)
        if np.any(ge & ~eq):
            return
        dominated = np.flatnonzero(le & ~eq)
        if len(dominated):
            pop[int(dominated[int(rng.integers(len(dominated)))])] = sol
        else:
            pop[int(rng.integers(len(pop)))] = sol

    # -- selection ------------------------------------------------------------
    def _tournament(self) -> Solution:
        pop = self.state.population
        rng = self.state.rng
        best = pop[int(rng.integers(len(pop)))]
        for _ in range(self.state.tournament - 1):
            cand = pop[int(rng.integers(len(pop)))]
            c = pareto_compare(cand.f, best.f)
            if c == -1 or (c == 0 and rng.random() < 0.5):
                best = cand
        return best

    def _parents(self, k: int) -> list[np.ndarray]:
        rng = self.state.rng
        arch = self.state.archive.entries
        chosen = []
        if arch:
            chosen.append(arch[int(rng.integers(len(arch)))])
        while len(chosen) < k:
            chosen.append(self._tournament())
        # the archive member goes last so PCX centres on it
        chosen = chosen[1:] + chosen[:1]
        return [self.to_unit(s.x) for s in chosen]

    def credits(self) -> np.ndarray:
        return operator_credits(self.state.archive, len(OPERATORS))

    def _offspring(self) -> tuple[np.ndarray, int]:
        rng = self.state.rng
        op = select_operator(self.credits(), rng, self.cfg.zeta)
        name = OPERATORS[op]
        parents = self._parents(self.cfg.operators.arity(name))
        child = variate(name, parents, rng, self.cfg.operators)
        return self.from_unit(child), op

    # -- restarts -------------------------------------------------------------
    def _needs_restart(self) -> bool:
        st = self.state
        if st.evaluations - st.last_progress >= self.cfg.stagnation_window:
            return True
        target = max(self.cfg.gamma * len(st.archive), self.cfg.initial_population)
        return abs(len(st.population) - target) / target > self.cfg.restart_ratio_tol

    def restart_population(self) -> list[np.ndarray]:
        """Rebuild the population from the archive; returns the new members that need evaluating."""
        st = self.state
        rng = st.rng
        size = int(max(round(self.cfg.gamma * len(st.archive)), self.cfg.initial_population))
        st.population = list(st.archive.entries)
        st.tournament = max(2, int(math.floor(self.cfg.selection_ratio * size)))
        st.restarts += 1
        st.last_progress = st.evaluations
        fresh = []
        for _ in range(size - len(st.population)):
            if st.archive.entries:
                base = st.archive.entries[int(rng.integers(len(st.archive)))]
                fresh.append(self.from_unit(uniform_mutation(self.to_unit(base.x), rng, self.cfg.operators.um_rate)))
            else:
                fresh.append(self.from_unit(rng.random(len(self.lo))))
        return fresh

    # -- main loop ------------------------------------------------------------
    def initialize(self) -> None:
        st = self.state
        n = self.cfg.initial_population
        xs = [self.from_unit(st.rng.random(len(self.lo))) for _ in range(n)]
        results = self._evaluate(xs)
        st.population = []
        for x, (f, info, pen) in zip(xs, results):
            sol = Solution(x, f, -1, pen, info)
            st.population.append(sol)
            self._accept(sol, into_population=False)
        st.tournament = max(2, int(math.floor(self.cfg.selection_ratio * n)))
        self._record()

    def step(self) -> None:
        """Check for a restart, then evaluate one batch of restart members or offspring."""
        st = self.state
        if not st.pending and self._needs_restart():
            st.pending = self.restart_population()
        m = min(self.cfg.batch_size, self.cfg.max_evaluations - st.evaluations)
        if st.pending:
            # restart members join the population directly
            xs, st.pending = st.pending[:m], st.pending[m:]
            for x, (f, info, pen) in zip(xs, self._evaluate(xs)):
                sol = Solution(x, f, len(OPERATORS) - 1, pen, info)
                st.population.append(sol)
                self._accept(sol, into_population=False)
        else:
            kids = [self._offspring() for _ in range(m)]
            results = self._evaluate([x for x, _ in kids])
            for (x, op), (f, info, pen) in zip(kids, results):
                self._accept(Solution(x, f, op, pen, info))
        self._record()

    def run(self) -> RunResult:
        st = self.state
        try:
            if st.evaluations == 0:
                self.initialize()
                self._write_checkpoint()
            last_ck = st.evaluations
            while st.evaluations < self.cfg.max_evaluations:
                self.step()
                if st.evaluations - last_ck >= self.checkpoint_every:
                    self._write_checkpoint()
                    last_ck = st.evaluations
            self._write_checkpoint()
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        history = list(st.history)
        if not history or history[-1][0] != st.evaluations:
            # the closing point is reported but not stored, so a resumed run sees the same state
            history.append((st.evaluations, self.front_hypervolume(), len(st.archive), st.restarts))
        return RunResult(st.archive, history, self.credits(), st.evaluations, st.restarts)

    # -- checkpoints ----------------------------------------------------------
    def checkpoint(self) -> dict:
        st = self.state
        return {
            "seed": self.seed,
            "config": _config_dict(self.cfg),
            "evaluations": st.evaluations,
            "restarts": st.restarts,
            "last_progress": st.last_progress,
            "tournament": st.tournament,
            "next_hv": st.next_hv,
            "rng": st.rng.bit_generator.state,
            "population": [s.to_dict() for s in st.population],
            "pending": [[float(v) for v in x] for x in st.pending],
            "archive": [s.to_dict() for s in st.archive.entries],
            "archive_improvements": st.archive.improvements,
            "front": [s.to_dict() for s in st.front],
            "history": [list(h) for h in st.history],
            "credits": self.credits().tolist(),
            "selection_probabilities": selection_probabilities(self.credits(), self.cfg.zeta).tolist(),
        }

    def _write_checkpoint(self) -> None:
        if self.checkpoint_path is None:
            return
        tmp = f"{self.checkpoint_path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(self.checkpoint(), fh)
        os.replace(tmp, self.checkpoint_path)

    def restore(self, data: dict) -> None:
        st = self.state
        st.evaluations = int(data["evaluations"])
        st.restarts = int(data["restarts"])
        st.last_progress = int(data["last_progress"])
        st.tournament = int(data["tournament"])
        st.next_hv = int(data["next_hv"])
        rng = np.random.default_rng()
        rng.bit_generator.state = data["rng"]
        st.rng = rng
        st.population = [Solution.from_dict(d) for d in data["population"]]
        st.pending = [np.array(x, dtype=float) for x in data.get("pending", [])]
        arch = Archive(self.problem.epsilons)
        for d in data["archive"]:
            s = Solution.from_dict(d)
            arch.entries.append(s)
            arch.boxes.append(epsilon_box(s.f, arch.eps))
        arch.improvements = int(data["archive_improvements"])
        st.archive = arch
        st.front = [Solution.from_dict(d) for d in data["front"]]
        st.history = [(int(h[0]), float(h[1]), int(h[2]), int(h[3])) for h in data["history"]]

    @classmethod
    def resume(cls, problem: Problem, path, config: MOEAConfig | None = None, workers: int = 1,
               checkpoint_every: int = 500) -> "Borg":
        with open(path) as fh:
            data = json.load(fh)
        cfg = config or _config_from_dict(data["config"])
        b = cls(problem, cfg, seed=int(data["seed"]), workers=workers, checkpoint_path=path,
                checkpoint_every=checkpoint_every)
        b.restore(data)
        return b


def _config_dict(cfg: MOEAConfig) -> dict:
    return asdict(cfg)


def _config_from_dict(d: dict) -> MOEAConfig:
    d = dict(d)
    d["operators"] = OperatorParams(**d["operators"])
    return MOEAConfig(**d)


def run(problem: Problem, config: MOEAConfig = MOEAConfig(), seed: int = 0, workers: int = 1,
        checkpoint_path=None, checkpoint_every: int = 500) -> RunResult:
    """Run the search from scratch; see :class:`Borg`."""
    return Borg(problem, config, seed, workers, checkpoint_path, checkpoint_every).run()
