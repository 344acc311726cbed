"""Diffusion market with deterministic coefficients and its pricing kernel.

Coefficients are piecewise constant on a time grid. Solving ``sigma theta =
-mu`` cell by cell gives the market price of risk; the terminal pricing
kernel ``rho = dQ/dP`` is then log-normal with total log-variance ``v``:

    ln rho ~ N(-v/2, v) under P,      ln rho ~ N(+v/2, v) under Q.

``U = F_rho^Q(rho)`` is uniform under Q and, splitting the stochastic integral
at an intermediate time, one more Gaussian combination yields a uniform
``U*`` independent of ``rho``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, special, stats

from .core import DomainError, PreconditionError
from .laws import PowerTail, QuantileGrid

CHUNK = 65536


def worker_count(default: int | None = None) -> int:
    """Worker cap from ``CPT_LAB_THREADS`` (at least 1)."""
    raw = os.environ.get("CPT_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise DomainError(f"CPT_LAB_THREADS must be an integer, got {raw!r}") from exc
    return default if default is not None else max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True, eq=False)
class MarketSpec:
    d: int
    k: int
    T: float
    grid: np.ndarray
    mu: np.ndarray  # (cells, d)
    sigma: np.ndarray  # (cells, d, k)
    s0: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        cells = grid.size - 1
        mu = np.asarray(self.mu, dtype=float).reshape(cells, self.d) if cells > 0 else None
        sigma = np.asarray(self.sigma, dtype=float)
        s0 = np.asarray(self.s0, dtype=float)
        if self.d < 1 or self.k < self.d:
            raise DomainError("need d >= 1 and k >= d")
        if grid.ndim != 1 or cells < 1:
            raise DomainError("time grid needs at least two points")
        if grid[0] != 0 or abs(grid[-1] - self.T) > 1e-12 * max(1.0, self.T) or np.any(np.diff(grid) <= 0):
            raise DomainError("time grid must increase strictly from 0 to T")
        sigma = sigma.reshape(cells, self.d, self.k)
        if s0.shape != (self.d,) or np.any(s0 <= 0):
            raise DomainError("initial prices must be d positive numbers")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise DomainError("coefficients must be finite")
        for i in range(cells):
            gram = sigma[i] @ sigma[i].T
            if np.linalg.matrix_rank(gram) < self.d:
                raise DomainError(f"sigma sigma^T is singular on cell {i}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "s0", s0)

    @property
    def cells(self) -> int:
        return self.grid.size - 1

    @classmethod
    def constant(cls, mu, sigma, T: float = 1.0, s0=None) -> MarketSpec:
        """Time-homogeneous market on a single cell."""
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        d, k = sigma.shape
        return cls(d, k, T, np.array([0.0, T]), mu[None, :], sigma[None, :, :], np.ones(d) if s0 is None else s0)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> MarketSpec:
        try:
            return cls(
                d=int(obj["d"]),
                k=int(obj["k"]),
                T=float(obj["T"]),
                grid=obj["grid"],
                mu=obj["mu"],
                sigma=obj["sigma"],
                s0=obj["s0"],
            )
        except KeyError as exc:
            raise DomainError(f"market file lacks key {exc.args[0]!r}") from exc

    def to_json(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "k": self.k,
            "T": self.T,
            "grid": self.grid.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "s0": self.s0.tolist(),
        }


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Log-normal pricing kernel with total variance ``v``.

    ``v = 0`` is allowed as the degenerate limit ``rho = 1`` (Q = P); it is
    flagged by :attr:`degenerate` and refused where a continuous kernel law
    is required.
    """

    v: float
    theta: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    theta_bar: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    grid: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    split_time: float | None = None
    split_variance: float | None = None

    def __post_init__(self) -> None:
        if not (self.v >= 0 and math.isfinite(self.v)):
            raise DomainError("total variance must be finite and nonnegative")
        if self.v > 0 and self.split_variance is None:
            object.__setattr__(self, "split_variance", 0.5 * self.v)
            object.__setattr__(self, "split_time", 0.5 * float(self.grid[-1]))
        if self.v > 0 and not (0 < self.split_variance < self.v):
            raise DomainError("split variance must lie strictly between 0 and v")

    @classmethod
    def lognormal(cls, v: float) -> KernelModel:
        """Kernel with variance ``v`` accrued uniformly on ``[0, 1]``."""
        theta = np.array([[math.sqrt(v)]])
        return cls(v=v, theta=theta, theta_bar=theta.copy())

    @property
    def degenerate(self) -> bool:
        return self.v == 0

    @property
    def sqrt_v(self) -> float:
        return math.sqrt(self.v)

    def _need_continuous(self) -> None:
        if self.degenerate:
            raise PreconditionError("the kernel law needs v > 0")

    # laws of U = F^Q_rho(rho)

    def p_cdf_u(self, u):
        """``P{U <= u}``."""
        u = np.asarray(u, dtype=float)
        if self.degenerate:
            return u.copy()
        return special.ndtr(special.ndtri(u) + self.sqrt_v)

    def p_sf_u(self, t):
        """``P{U > 1 - t}``, accurate for small ``t``."""
        t = np.asarray(t, dtype=float)
        if self.degenerate:
            return t.copy()
        return special.ndtr(special.ndtri(t) - self.sqrt_v)

    def rho_of_u(self, u):
        self._need_continuous()
        return np.exp(0.5 * self.v + self.sqrt_v * special.ndtri(np.asarray(u, dtype=float)))

    def u_of_rho(self, rho):
        self._need_continuous()
        return special.ndtr((np.log(np.asarray(rho, dtype=float)) - 0.5 * self.v) / self.sqrt_v)

    def log_mean(self, measure: str) -> float:
        if measure not in ("P", "Q"):
            raise DomainError("measure must be 'P' or 'Q'")
        return -0.5 * self.v if measure == "P" else 0.5 * self.v

    def quantile(self, s, measure: str = "P"):
        """Quantile of ``rho`` under the given measure."""
        self._need_continuous()
        return np.exp(self.log_mean(measure) + self.sqrt_v * special.ndtri(np.asarray(s, dtype=float)))

    def moment_p(self, p: float) -> float:
        """``E_P[rho^p]`` for any real ``p``."""
        return math.exp(p * (p - 1.0) * self.v / 2.0)

    def moment_q(self, p: float) -> float:
        """``E_Q[rho^p] = E_P[rho^(p+1)]``."""
        return self.moment_p(p + 1.0)

    def to_json(self) -> dict[str, Any]:
        return {
            "v": self.v,
            "theta": self.theta.tolist(),
            "theta_bar": self.theta_bar.tolist(),
            "grid": self.grid.tolist(),
            "split_time": self.split_time,
            "split_variance": self.split_variance,
            "degenerate": self.degenerate,
        }


def _lq(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``sigma = L @ Qt`` with ``L`` lower triangular (positive diagonal) and orthonormal rows in ``Qt``."""
    q, r = np.linalg.qr(sigma.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = signs[:, None] * r
    q = q * signs[None, :]
    return r.T, q.T


def solve_market_price_of_risk(market: MarketSpec) -> KernelModel:
    """Solve ``sigma theta = -mu`` per cell and assemble the kernel.

    With more drivers than assets the volatility is rotated, ``sigma = L Qt``,
    so that the first ``d`` rotated drivers carry all the risk; ``theta_bar``
    solves ``L theta_bar = -mu`` (zero-padded to ``k``) and ``theta = Qt^T
    theta_bar`` is the least-norm solution in the original coordinates.
    """
    cells, d, k = market.cells, market.d, market.k
    theta = np.zeros((cells, k))
    theta_bar = np.zeros((cells, k))
    for i in range(cells):
        s, m = market.sigma[i], market.mu[i]
        if k == d:
            th = np.linalg.solve(s, -m)
            theta[i] = th
            theta_bar[i] = th
        else:
            low, qt = _lq(s)
            tb = np.linalg.solve(low, -m)
            theta_bar[i, :d] = tb
            theta[i] = qt.T @ tb
    dt = np.diff(market.grid)
    cell_var = np.sum(theta**2, axis=1) * dt
    v = math.fsum(cell_var)
    if v == 0:
        return KernelModel(v=0.0, theta=theta, theta_bar=theta_bar, grid=market.grid)
    partial = np.cumsum(cell_var)
    split_time = split_var = None
    for i in range(cells - 1):
        if 0 < partial[i] < v and partial[i] < v * (1 - 1e-12):
            split_time, split_var = float(market.grid[i + 1]), float(partial[i])
            break
    if split_time is None:
        i = int(np.argmax(cell_var > 0))
        before = float(partial[i - 1]) if i > 0 else 0.0
        split_time = float(0.5 * (market.grid[i] + market.grid[i + 1]))
        split_var = before + 0.5 * float(cell_var[i])
    return KernelModel(
        v=v,
        theta=theta,
        theta_bar=theta_bar,
        grid=market.grid,
        split_time=split_time,
        split_variance=split_var,
    )


def kernel_law(model: KernelModel, measure: str = "P", grid_size: int = 400) -> QuantileGrid:
    """Quantile-grid law of ``rho_T`` under ``measure``.

    Nodes are dense in both tails. The lower end is anchored at zero; the
    right tail gets the local power fit at the last node, which the
    log-normal eventually beats, so the law is flagged as having all
    moments finite.
    """
    model._need_continuous()
    if grid_size < 8:
        raise DomainError("grid_size must be at least 8")
    half = grid_size // 2
    lower = np.unique(np.concatenate([np.geomspace(1e-12, 0.5, half - half // 2), np.linspace(0.02, 0.5, half // 2)]))
    s = np.concatenate([lower, 1.0 - lower[::-1][1:]])
    uppers = np.concatenate([1.0 - lower, lower[::-1][1:]])
    m, sd = model.log_mean(measure), model.sqrt_v
    z_low = special.ndtri(s)
    z = np.where(s < 0.5, z_low, -special.ndtri(uppers))
    values = np.exp(m + sd * z)
    z_last = z[-1]
    hazard = math.exp(stats.norm.logpdf(z_last) - stats.norm.logsf(z_last))
    k = hazard / sd
    s_last = float(uppers[-1])
    tail = PowerTail(s_last * float(values[-1]) ** k, k)
    return QuantileGrid(
        levels=np.concatenate([[0.0], s]),
        uppers=np.concatenate([[1.0], uppers]),
        values=np.concatenate([[0.0], values]),
        measure=measure,
        right_tail=tail,
        all_moments_finite=True,
    )


# -- sampling --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointSample:
    rho: np.ndarray
    U: np.ndarray
    U_star: np.ndarray

    def to_csv(self) -> str:
        from .io import format_float

        lines = ["rho,U,U_star"]
        lines.extend(
            f"{format_float(r)},{format_float(u)},{format_float(w)}" for r, u, w in zip(self.rho, self.U, self.U_star)
        )
        return "\n".join(lines) + "\n"


def _sample_chunk(model: KernelModel, measure: str, size: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    v, v1 = model.v, model.split_variance
    z = rng.standard_normal((2, size))
    i_split = math.sqrt(v1) * z[0]
    i_total = i_split + math.sqrt(v - v1) * z[1]
    if measure == "Q":
        # W = W~ + int theta ds, so both integrals pick up their variance as drift
        i_split = i_split + v1
        i_total = i_total + v
    log_rho = i_total - 0.5 * v
    rho = np.exp(log_rho)
    u = special.ndtr((log_rho - 0.5 * v) / math.sqrt(v))
    # the drifts cancel in this combination, so its law is the same under P and Q
    g_star = (v / v1) * i_split - i_total
    u_star = special.ndtr(g_star / math.sqrt(v * (v - v1) / v1))
    return rho, u, u_star


def sample_joint(model: KernelModel, measure: str, n: int, seed: int, workers: int | None = None) -> JointSample:
    """Draw ``(rho, U, U*)`` under P or Q.

    Draws are produced in fixed chunks, each from its own child of
    ``SeedSequence(seed)``, so the output does not depend on the number of
    worker threads.
    """
    model._need_continuous()
    if measure not in ("P", "Q"):
        raise DomainError("measure must be 'P' or 'Q'")
    if n < 0:
        raise DomainError("n must be nonnegative")
    chunks = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(chunks))
    jobs = list(zip(chunks, seqs))
    workers = min(worker_count() if workers is None else max(1, workers), max(1, len(jobs)))
    if workers == 1:
        parts = [_sample_chunk(model, measure, size, seq) for size, seq in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _sample_chunk(model, measure, *job), jobs))
    if not parts:
        empty = np.empty(0)
        return JointSample(empty, empty, empty)
    return JointSample(*(np.concatenate([p[i] for p in parts]) for i in range(3)))


# -- assumption checks -----------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    expected: float | None = None
    observed: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    items: tuple[CheckItem, ...]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def to_json(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "items": [
                {"name": i.name, "passed": i.passed, "expected": i.expected, "observed": i.observed, "detail": i.detail}
                for i in self.items
            ],
        }


def _moment_by_quadrature(model: KernelModel, p: float) -> float:
    m, sd = model.log_mean("P"), model.sqrt_v

    def f(z):
        return math.exp(p * (m + sd * z) - 0.5 * z * z) / math.sqrt(2 * math.pi)

    return integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]


def verify_assumptions(
    model: KernelModel,
    x0: float = 10.0,
    n_mc: int = 100_000,
    seed: int = 0,
    powers=(1, 2, 4, 8),
) -> AssumptionReport:
    """Check continuity of the kernel law, moment finiteness and the budget identity."""
    items = [
        CheckItem(
            "continuity",
            model.v > 0,
            detail="log-normal law is continuous" if model.v > 0 else "degenerate kernel has an atom",
        )
    ]
    if model.v == 0:
        return AssumptionReport(tuple(items))
    for p in powers:
        for sign in (1, -1):
            exact = model.moment_p(sign * p)
            numeric = _moment_by_quadrature(model, sign * p)
            ok = math.isfinite(exact) and abs(numeric - exact) <= 1e-8 * exact
            items.append(CheckItem(f"E_P[rho^{sign * p}]", ok, exact, numeric))
    closed = x0 * model.moment_q(-1.0)
    items.append(CheckItem("budget closed form", abs(closed - x0) <= 1e-12 * max(1.0, abs(x0)), x0, closed))
    draws = sample_joint(model, "Q", n_mc, seed)
    payoff = x0 / draws.rho
    mean = float(np.mean(payoff))
    se = float(np.std(payoff, ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else math.inf
    items.append(
        CheckItem("budget Monte Carlo", abs(mean - x0) <= 3 * se, x0, mean, detail=f"standard error {se:.3g}")
    )
    return AssumptionReport(tuple(items))
