"""Derivative-free search over budget-feasible payoffs of ``(U, U*)``.

A payoff is piecewise constant on the cells of a tensor grid over
``(U, U*) in (0, 1)^2``. Under Q a cell has mass ``dU dU*``; under P its mass
is ``dG dU*`` with ``G(u) = P{U <= u}`` from the kernel's closed form, so
every candidate is an exact discrete law under both measures. The budget
``E_Q[X] = x0`` is restored after each proposal by an additive shift.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .choquet import cpt_value
from .core import CptSpec, ExtendedValue, PreconditionError, RegimeError
from .io import csv_text
from .laws import DiscreteAtoms
from .market import KernelModel, worker_count
from .regime import Verdict, classify
from .witness import WitnessPoint, WitnessReport, witness

#: budget residual allowed on every evaluated profile
BUDGET_TOL = 1e-8


# -- grid and profiles -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class PayoffGrid:
    """Cell edges in ``U`` (with exact complements ``t = 1 - u``) and in ``U*``."""

    u: np.ndarray
    t: np.ndarray
    u_star: np.ndarray

    def __post_init__(self) -> None:
        u, t, s = (np.asarray(a, dtype=float) for a in (self.u, self.t, self.u_star))
        if u.shape != t.shape or u.size < 2 or s.size < 2:
            raise PreconditionError("a grid needs at least one cell per axis")
        if u[0] != 0 or t[-1] != 0 or s[0] != 0 or s[-1] != 1:
            raise PreconditionError("edges must span [0, 1]")
        if np.any(np.diff(u) <= 0) or np.any(np.diff(t) >= 0) or np.any(np.diff(s) <= 0):
            raise PreconditionError("edges must be strictly increasing")
        if np.any(np.abs(u + t - 1.0) > 1e-12):
            raise PreconditionError("t must equal 1 - u")
        for name, arr in (("u", u), ("t", t), ("u_star", s)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def geometric(cls, n_u: int = 16, n_star: int = 2, u_min: float = 1e-4) -> PayoffGrid:
        """``n_u`` U-cells, geometric towards both ends and split at ``1/2``."""
        if n_u < 2 or n_u % 2:
            raise PreconditionError("n_u must be even and at least 2")
        half = np.geomspace(u_min, 0.5, n_u // 2) if n_u > 2 else np.array([0.5])
        lower = np.concatenate([[0.0], half])
        u = np.concatenate([lower, 1.0 - half[::-1][1:], [1.0]])
        t = np.concatenate([1.0 - lower, half[::-1][1:], [0.0]])
        return cls(u, t, np.linspace(0.0, 1.0, n_star + 1))

    @classmethod
    def uniform(cls, n_u: int, n_star: int = 1) -> PayoffGrid:
        k = np.arange(n_u + 1)
        return cls(k / n_u, (n_u - k) / n_u, np.linspace(0.0, 1.0, n_star + 1))

    @classmethod
    def from_edges(cls, u_edges: Sequence[float], n_star: int = 1) -> PayoffGrid:
        u = np.asarray(u_edges, dtype=float)
        return cls(u, 1.0 - u, np.linspace(0.0, 1.0, n_star + 1))

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.size - 1, self.u_star.size - 1

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def _u_masses(self, model: KernelModel) -> tuple[np.ndarray, np.ndarray]:
        lower = self.u[1:] <= 0.5
        q = np.where(lower, np.diff(self.u), -np.diff(self.t))
        G = model.p_cdf_u(self.u)
        S = model.p_sf_u(self.t)
        p = np.where(lower, np.diff(G), -np.diff(S))
        return q, p

    def masses(self, model: KernelModel) -> tuple[np.ndarray, np.ndarray]:
        """``(Q-mass, P-mass)`` arrays of shape :attr:`shape`."""
        q_u, p_u = self._u_masses(model)
        d_star = np.diff(self.u_star)
        return np.outer(q_u, d_star), np.outer(p_u, d_star)


@dataclass(frozen=True, eq=False)
class PayoffProfile:
    grid: PayoffGrid
    node_values: np.ndarray
    budget: float
    kernel: KernelModel
    q_mass: np.ndarray = field(init=False, repr=False)
    p_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.node_values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("node values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "node_values", vals)
        q, p = self.grid.masses(self.kernel)
        object.__setattr__(self, "q_mass", q)
        object.__setattr__(self, "p_mass", p)
        if self.budget_residual > BUDGET_TOL * max(1.0, abs(self.budget)):
            raise PreconditionError(f"E_Q[X] misses the budget by {self.budget_residual!r}")

    @classmethod
    def feasible(cls, grid: PayoffGrid, values, budget: float, kernel: KernelModel) -> PayoffProfile:
        """The profile ``values + c`` with ``c`` chosen so that ``E_Q[X] = budget``."""
        q, _ = grid.masses(kernel)
        return cls(grid, budget_shift(np.asarray(values, dtype=float).reshape(grid.shape), q, budget), budget, kernel)

    @property
    def q_mean(self) -> float:
        return math.fsum((self.node_values * self.q_mass).ravel())

    @property
    def budget_residual(self) -> float:
        return abs(self.q_mean - self.budget)

    def law(self) -> DiscreteAtoms:
        return DiscreteAtoms.from_unsorted(self.node_values.ravel(), self.p_mass.ravel(), self.q_mass.ravel())

    def to_csv(self) -> str:
        n_u, n_s = self.grid.shape
        rows = []
        for i in range(n_u):
            for j in range(n_s):
                rows.append(
                    [
                        self.grid.u[i],
                        self.grid.u[i + 1],
                        self.grid.u_star[j],
                        self.grid.u_star[j + 1],
                        self.node_values[i, j],
                        self.q_mass[i, j],
                        self.p_mass[i, j],
                    ]
                )
        return csv_text(["u_lo", "u_hi", "ustar_lo", "ustar_hi", "value", "q_mass", "p_mass"], rows)


def budget_shift(values: np.ndarray, q_mass: np.ndarray, budget: float) -> np.ndarray:
    """``values + c`` with ``sum(q (values + c)) = budget``; two passes absorb round-off."""
    out = values + (budget - math.fsum((values * q_mass).ravel()))
    return out + (budget - math.fsum((out * q_mass).ravel()))


def evaluate(profile: PayoffProfile, spec: CptSpec) -> ExtendedValue:
    """``V(X)`` of the profile's law under P."""
    return cpt_value(profile.law(), spec)


def monotone_rearrangement(profile: PayoffProfile) -> PayoffProfile:
    """Same Q-law, payoff non-increasing in the kernel (largest values where ``dP/dQ`` is largest).

    Defined for grids whose cells carry equal Q-mass, where the rearrangement
    is a permutation of node values.
    """
    q = profile.q_mass.ravel()
    if np.ptp(q) > 1e-12 * q.max():
        raise PreconditionError("rearrangement needs cells of equal Q-mass")
    ratio = profile.p_mass.ravel() / q
    order = np.argsort(-ratio, kind="stable")
    vals = np.empty(q.size)
    vals[order] = np.sort(profile.node_values.ravel())[::-1]
    return PayoffProfile(profile.grid, vals, profile.budget, profile.kernel)


# -- search ----------------------------------------------------------------


@dataclass(frozen=True)
class SearchResult:
    best: PayoffProfile
    best_value: float
    trace: np.ndarray
    start_values: tuple[float, ...] = ()
    evaluations: int = 0

    def trace_csv(self) -> str:
        return csv_text(["evaluation", "best_value"], enumerate(self.trace.tolist(), start=1))

    def to_json(self) -> dict[str, Any]:
        return {
            "best_value": self.best_value,
            "evaluations": self.evaluations,
            "start_values": list(self.start_values),
            "budget_residual": self.best.budget_residual,
        }


class _Objective:
    """Budget-shifted evaluation with a best-so-far trace."""

    def __init__(self, spec: CptSpec, grid: PayoffGrid, model: KernelModel, x0: float, max_evals: int):
        self.spec, self.grid, self.model, self.x0 = spec, grid, model, x0
        self.q, self.p = (m.ravel() for m in grid.masses(model))
        self.max_evals = max_evals
        self.trace: list[float] = []
        self.best = -math.inf
        self.best_x: np.ndarray | None = None

    @property
    def exhausted(self) -> bool:
        return len(self.trace) >= self.max_evals

    def __call__(self, x: np.ndarray) -> float:
        x = budget_shift(x, self.q, self.x0)
        law = DiscreteAtoms.from_unsorted(x, self.p, self.q)
        val = cpt_value(law, self.spec).estimate
        if val > self.best:
            self.best, self.best_x = val, x
        self.trace.append(self.best)
        return val


def _pattern_search(obj: _Objective, x: np.ndarray, rng: np.random.Generator, step: float, min_step: float) -> None:
    """Coordinate and pairwise pattern search with a halving step."""
    n = x.size
    q = obj.q
    fx = obj(x)
    while not obj.exhausted and step >= min_step:
        improved = False
        for i in rng.permutation(n):
            for sign in (1.0, -1.0):
                if obj.exhausted:
                    return
                y = x.copy()
                y[i] += sign * step
                fy = obj(y)
                if fy > fx:
                    x, fx, improved = budget_shift(y, q, obj.x0), fy, True
                    break
        if n > 1:
            for _ in range(n):
                if obj.exhausted:
                    return
                i, j = rng.choice(n, size=2, replace=False)
                y = x.copy()
                y[i] += step
                y[j] -= step * q[i] / q[j]
                fy = obj(y)
                if fy > fx:
                    x, fx, improved = budget_shift(y, q, obj.x0), fy, True
        if not improved:
            step *= 0.5


def _quantized_search(obj: _Objective, idx: np.ndarray, levels: np.ndarray, rng: np.random.Generator) -> None:
    """Best-improvement search over level indices; moves change one or two nodes to any levels."""
    n, m = idx.size, levels.size
    fx = obj(levels[idx])
    moves: list[tuple[int, ...]] = [(i,) for i in range(n)] + list(itertools.combinations(range(n), 2))
    while not obj.exhausted:
        best_f, best_idx = fx, None
        for move in [moves[k] for k in rng.permutation(len(moves))]:
            for choice in itertools.product(range(m), repeat=len(move)):
                if all(idx[i] == c for i, c in zip(move, choice)):
                    continue
                cand = idx.copy()
                cand[list(move)] = choice
                f = obj(levels[cand])
                if f > best_f:
                    best_f, best_idx = f, cand
                if obj.exhausted:
                    break
        if best_idx is None:
            return
        idx, fx = best_idx, best_f


def _require_well_posed(spec: CptSpec) -> None:
    verdict = classify(spec)
    if verdict.verdict is not Verdict.WELL_POSED:
        raise RegimeError(f"optimize needs a well-posed spec, got {verdict.verdict.value} ({verdict.cause.value})")


def optimize(
    spec: CptSpec,
    model: KernelModel,
    x0: float,
    iters: int = 2000,
    seed: int = 0,
    grid: PayoffGrid | None = None,
    starts: int = 4,
    levels: Sequence[float] | None = None,
    workers: int | None = None,
) -> SearchResult:
    """Multi-start search for a high-value payoff with ``E_Q[X] = x0``.

    ``iters`` caps objective evaluations per start. Start 0 is the constant
    payoff ``x0``; the others are random profiles rearranged to be
    non-increasing in ``U``. With ``levels`` the node values are restricted to
    ``levels + c`` (``c`` the budget shift) and moves jump between levels.
    Starts run concurrently on independent RNG streams spawned from ``seed``;
    the best start wins, lowest index on ties, and the reported trace is the
    running maximum over the starts' traces taken in start order.
    """
    _require_well_posed(spec)
    if iters < 1 or starts < 1:
        raise PreconditionError("iters and starts must be positive")
    grid = grid if grid is not None else PayoffGrid.geometric()
    q_u, p_u = grid.masses(model)
    ratio_order = np.argsort(-(p_u.ravel() / q_u.ravel()), kind="stable")
    streams = np.random.SeedSequence(seed).spawn(starts)
    scale = max(1.0, abs(x0))
    level_arr = None if levels is None else np.asarray(sorted(set(float(v) for v in levels)))

    def run(k: int) -> _Objective:
        rng = np.random.default_rng(streams[k])
        obj = _Objective(spec, grid, model, x0, iters)
        if level_arr is not None:
            if k == 0:
                idx = np.zeros(grid.size, dtype=int)
            else:
                idx = rng.integers(0, level_arr.size, grid.size)
            _quantized_search(obj, idx, level_arr, rng)
            return obj
        x = np.zeros(grid.size)
        if k > 0:
            raw = np.sort(rng.standard_normal(grid.size) * scale * rng.uniform(0.5, 4.0))[::-1]
            x[ratio_order] = raw
        _pattern_search(obj, x, rng, step=scale, min_step=1e-10 * scale)
        return obj

    n_workers = min(worker_count() if workers is None else max(1, workers), starts)
    if n_workers == 1:
        results = [run(k) for k in range(starts)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, range(starts)))

    best_k = 0
    for k, r in enumerate(results):
        if r.best > results[best_k].best:
            best_k = k
    trace = np.maximum.accumulate(np.concatenate([np.asarray(r.trace) for r in results]))
    best_obj = results[best_k]
    profile = PayoffProfile(grid, best_obj.best_x, x0, model)
    return SearchResult(profile, best_obj.best, trace, tuple(r.best for r in results), int(trace.size))


def exhaustive_search(
    spec: CptSpec, model: KernelModel, x0: float, grid: PayoffGrid, levels: Sequence[float]
) -> tuple[float, PayoffProfile]:
    """Best value over every assignment of ``levels`` to the grid nodes (then budget-shifted)."""
    level_arr = np.asarray(sorted(set(float(v) for v in levels)))
    obj = _Objective(spec, grid, model, x0, max_evals=math.inf)
    for combo in itertools.product(range(level_arr.size), repeat=grid.size):
        obj(level_arr[list(combo)])
    return obj.best, PayoffProfile(grid, obj.best_x, x0, model)


# -- divergence ------------------------------------------------------------


@dataclass(frozen=True)
class DivergeResult:
    index: int
    value: float
    target: float
    report: WitnessReport

    def to_json(self) -> dict[str, Any]:
        return {"index": self.index, "value": self.value, "target_M": self.target, "report": self.report.to_json()}


#: largest witness index tried by :func:`diverge`
MAX_INDEX = 2**52


def diverge(
    spec: CptSpec,
    model: KernelModel,
    x0: float,
    target_M: float,
    workers: int | None = None,
) -> DivergeResult:
    """First witness index whose value exceeds ``target_M``.

    Indices ``1, 2, 4, ...`` are tried until one exceeds the target, then the
    last doubling interval is bisected. Past the onset index witness values
    increase with ``n``, which makes the bisection exact there.
    """
    verdict = classify(spec)
    if not verdict.ill_posed:
        raise RegimeError(f"diverge needs an ill-posed spec, got {verdict.verdict.value} ({verdict.cause.value})")
    cache: dict[int, WitnessPoint] = {}
    params: dict[str, Any] = {}

    def value(n: int) -> float:
        if n not in cache:
            rep = witness(verdict.cause, spec, model, x0, [n], workers=1)
            cache[n] = rep.points[0]
            params.update(rep.params)
        return cache[n].numeric

    lo, hi = 0, 1
    while not value(hi) > target_M:
        if hi >= MAX_INDEX:
            raise PreconditionError(f"no witness index up to {MAX_INDEX} exceeds {target_M!r}")
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if value(mid) > target_M:
            hi = mid
        else:
            lo = mid
    points = tuple(cache[n] for n in sorted(cache))
    eff_x0 = x0 - spec.reference_point
    report = WitnessReport(verdict.cause, eff_x0, model.v, points, params)
    return DivergeResult(hi, cache[hi].numeric, float(target_M), report)


__all__ = [
    "BUDGET_TOL",
    "DivergeResult",
    "PayoffGrid",
    "PayoffProfile",
    "SearchResult",
    "budget_shift",
    "diverge",
    "evaluate",
    "exhaustive_search",
    "monotone_rearrangement",
    "optimize",
]
