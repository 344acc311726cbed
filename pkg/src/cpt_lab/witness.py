"""Diverging feasible payoff sequences for the three ill-posed regimes.

Every witness is a function of ``U = F^Q_rho(rho)``, which is uniform under Q.
Its law under P follows from ``P{U <= u} = Phi(Phi^-1(u) + sqrt(v))``, so
both laws are tabulated exactly at the chosen U-knots and no sampling is
involved.

* ``a_ge_b`` (alpha >= beta): two-point payoffs ``m`` on ``A`` and ``-c_m``
  on the complement, with ``A = {U >= 1/2}``.
* ``bd_lt_1`` (beta < delta): ``Y_n = min(U^(-1/xi), n)`` on ``U < 1/2``
  financed by ``min((1-U)^(-1/chi), a_n)`` on ``U >= 1/2``.
* ``ag_gt_1`` (alpha > gamma): the same gains financed by the constant loss
  ``2 C_n`` on ``U >= 1/2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import special

from .choquet import choquet_minus, choquet_plus, cpt_value, expectation, truncation_level
from .core import CptSpec, Form, PreconditionError, distortion_minus, distortion_plus
from .io import csv_text
from .laws import DiscreteAtoms, PowerTail, QuantileGrid
from .market import KernelModel, worker_count
from .regime import Cause

#: U-knots per unit of log-scale in the tabulated witness laws
KNOTS_PER_EFOLD = 24


@dataclass(frozen=True)
class WitnessPoint:
    n: int
    closed_form: float | None
    numeric: float
    budget_residual: float
    truncation_level: float | None = None


@dataclass(frozen=True)
class WitnessReport:
    cause: Cause
    x0: float
    v: float
    points: tuple[WitnessPoint, ...]
    params: dict[str, float] = field(default_factory=dict)

    @property
    def indices(self) -> list[int]:
        return [p.n for p in self.points]

    @property
    def numeric_values(self) -> np.ndarray:
        return np.array([p.numeric for p in self.points])

    @property
    def closed_form_values(self) -> list[float | None]:
        return [p.closed_form for p in self.points]

    @property
    def budget_residuals(self) -> np.ndarray:
        return np.array([p.budget_residual for p in self.points])

    @property
    def truncation_levels(self) -> list[float | None]:
        return [p.truncation_level for p in self.points]

    def onset_index(self) -> int | None:
        """Smallest listed n after which the numeric values increase strictly."""
        vals = self.numeric_values
        onset = None
        for i in range(len(vals) - 1, 0, -1):
            if vals[i] > vals[i - 1]:
                onset = self.points[i - 1].n
            else:
                break
        return onset

    def to_json(self) -> dict[str, Any]:
        return {
            "cause": self.cause.value,
            "x0": self.x0,
            "v": self.v,
            "params": dict(sorted(self.params.items())),
            "indices": self.indices,
            "closed_form": self.closed_form_values,
            "numeric": self.numeric_values.tolist(),
            "budget_residual": self.budget_residuals.tolist(),
            "truncation_levels": self.truncation_levels,
            "onset_index": self.onset_index(),
        }

    def to_csv(self) -> str:
        return csv_text(
            ["n", "closed_form", "numeric", "budget_residual"],
            ((p.n, p.closed_form, p.numeric, p.budget_residual) for p in self.points),
        )


def index_set(n_max: int, points: int = 40) -> list[int]:
    """Log-spaced integer indices ``1 .. n_max`` (both ends included)."""
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    grid = np.unique(np.round(np.geomspace(1, n_max, points)).astype(int))
    return sorted(set(grid.tolist()) | {1, int(n_max)})


# -- U-profile laws --------------------------------------------------------


@dataclass(frozen=True)
class Knot:
    """A point of a payoff profile non-increasing in U: ``X(U) = x`` at ``U = u``, ``t = 1 - u``."""

    u: float
    t: float
    x: float


def u_profile_laws(knots: Sequence[Knot], model: KernelModel) -> tuple[QuantileGrid, QuantileGrid]:
    """P- and Q-laws of a payoff that is a non-increasing function of U.

    ``knots`` are ordered by increasing payoff (hence decreasing U). Two knots
    at the same U with different payoffs form a jump; two knots with the
    same payoff at different U form an atom.
    """
    u = np.array([k.u for k in knots], dtype=float)
    t = np.array([k.t for k in knots], dtype=float)
    x = np.array([k.x for k in knots], dtype=float)
    q_law = QuantileGrid(levels=t, uppers=u, values=x, measure="Q")
    p_law = QuantileGrid(levels=model.p_sf_u(t), uppers=model.p_cdf_u(u), values=x, measure="P")
    return p_law, q_law


def _geometric(lo: float, hi: float) -> np.ndarray:
    """Points from ``lo`` to ``hi`` (inclusive), evenly spaced in log-scale."""
    count = max(2, int(math.ceil(KNOTS_PER_EFOLD * math.log(hi / lo))) + 1)
    pts = np.geomspace(lo, hi, count)
    pts[0], pts[-1] = lo, hi
    return pts


def _gain_knots(n: float, xi: float) -> list[Knot]:
    """``min(U^(-1/xi), n)`` on ``U < 1/2``, listed by increasing payoff."""
    start = 2.0 ** (1.0 / xi)
    if n <= start:
        return [Knot(0.5, 0.5, n), Knot(0.0, 1.0, n)]
    u_lo = n ** (-xi)
    us = _geometric(u_lo, 0.5)[::-1]
    knots = [Knot(float(ui), 1.0 - float(ui), float(ui) ** (-1.0 / xi)) for ui in us]
    knots[0] = Knot(0.5, 0.5, start)
    knots[-1] = Knot(u_lo, 1.0 - u_lo, n)
    knots.append(Knot(0.0, 1.0, n))
    return knots


def _loss_knots_power(a: float, chi: float) -> list[Knot]:
    """``-min((1-U)^(-1/chi), a)`` on ``U >= 1/2``, listed by increasing payoff."""
    start = 2.0 ** (1.0 / chi)
    if a <= start:
        return [Knot(1.0, 0.0, -a), Knot(0.5, 0.5, -a)]
    t_lo = a ** (-chi)
    ts = _geometric(t_lo, 0.5)
    knots = [Knot(1.0, 0.0, -a)]
    knots.extend(Knot(1.0 - float(ti), float(ti), -(float(ti) ** (-1.0 / chi))) for ti in ts)
    knots[1] = Knot(1.0 - t_lo, t_lo, -a)
    knots[-1] = Knot(0.5, 0.5, -start)
    return knots


# -- closed-form pieces ----------------------------------------------------


def capped_power_mean(n: float, xi: float) -> float:
    """``E_Q[min(U^(-1/xi), n) 1{U < 1/2}]`` in closed form."""
    if n <= 2.0 ** (1.0 / xi):
        return n / 2.0
    log_lo = -xi * math.log(n)
    p = 1.0 / xi
    L = -math.log(2.0) - log_lo
    if abs(1.0 - p) * L < 1.0:
        body = math.exp((1.0 - p) * log_lo) * L * float(special.exprel((1.0 - p) * L))
    else:
        # the cap sits so far out that u_lo = n^(-xi) may underflow; stay in logs
        body = (0.5 ** (1.0 - p) - math.exp((1.0 - p) * log_lo)) / (1.0 - p)
    return math.exp((1.0 - xi) * math.log(n)) + body


def _capped_power_choquet(n: float, xi: float, exponent: float, weight_exponent: float, mass: float = 0.5) -> float:
    """``int_0^inf S(x)^g d(x^e)`` when ``S = mass`` below ``2^(1/xi)`` and ``x^(-xi)`` above, capped at n.

    This is the Choquet value of ``min(U^(-1/xi), n)`` with a pure power
    weighting in the degenerate market where P = Q.
    """
    e, g = exponent, weight_exponent
    start = 2.0 ** (1.0 / xi)
    if n <= start:
        return n**e * mass**g
    r = g * xi / e
    L = math.log(n / start)
    return start**e * mass**g + start ** (e * (1 - r)) * e * L * float(special.exprel(e * (1 - r) * L))


# -- constructions ---------------------------------------------------------


def _check_x0_zero(x0: float) -> None:
    if x0 != 0:
        raise PreconditionError("this construction is defined for zero initial capital")


def _evaluate(spec, p_law, q_law, x0):
    numeric = cpt_value(p_law, spec)
    residual = abs(expectation(q_law, "Q") - x0)
    return numeric.estimate, residual


def _map_indices(fn, n_list: Sequence[int], workers: int | None) -> list[WitnessPoint]:
    n_list = [int(n) for n in n_list]
    if any(n < 0 for n in n_list):
        raise PreconditionError("indices must be nonnegative")
    w = min(worker_count() if workers is None else max(1, workers), max(1, len(n_list)))
    if w == 1:
        return [fn(n) for n in n_list]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, n_list))


def _two_point_bracket(spec: CptSpec, p_a, p_ac, q_a, q_ac):
    """Leading coefficient of ``m^alpha`` in ``V(X_n)`` when ``alpha == beta``."""
    return spec.c_plus * distortion_plus(spec, p_a) - spec.c_minus * (q_a / q_ac) ** spec.a * distortion_minus(spec, p_ac)


def _balanced_event(spec: CptSpec, model: KernelModel) -> tuple[float, float, float, float, str]:
    """``(P(A), P(A^c), Q(A), Q(A^c), label)`` for the gain event of the first construction.

    The default is ``A = {U >= 1/2}``. When ``alpha == beta`` the value grows
    only if ``c1 w+(P(A)) > c2 (Q(A)/Q(A^c))^alpha w-(P(A^c))``; if the default
    fails this, ``A = {U < s}`` is used with ``s`` maximising the left side
    minus the right side over a fixed grid.
    """
    p_a, p_ac = float(model.p_sf_u(0.5)), float(model.p_cdf_u(0.5))
    if spec.alpha != spec.beta or _two_point_bracket(spec, p_a, p_ac, 0.5, 0.5) > 0:
        return p_a, p_ac, 0.5, 0.5, "U>=1/2"
    base = np.geomspace(1e-9, 0.5, 400)
    s = np.concatenate([base, 1.0 - base[::-1][1:]])
    t = np.concatenate([1.0 - base, base[::-1][1:]])
    g = model.p_cdf_u(s)
    gc = model.p_sf_u(t)
    score = _two_point_bracket(spec, g, gc, s, t)
    i = int(np.argmax(score))
    if not score[i] > 0:
        raise PreconditionError("no two-point event makes the value grow for these parameters")
    return float(g[i]), float(gc[i]), float(s[i]), float(t[i]), f"U<{s[i]!r}"


def witness_alpha_ge_beta(
    spec: CptSpec,
    model: KernelModel,
    x0: float,
    n_list: Sequence[int],
    workers: int | None = None,
) -> WitnessReport:
    """Two-point witnesses ``X_n = m 1_A - c_m 1_{A^c}`` with ``m = n0 + n``.

    ``c_m = (m Q(A) - x0) / Q(A^c)`` keeps ``E_Q[X_n] = x0``; with ``Q(A) =
    1/2`` this is ``m - 2 x0``. ``n0`` is the least nonnegative integer with
    ``c_{n0} >= 0``.
    """
    if not spec.alpha >= spec.beta:
        raise PreconditionError("construction requires alpha >= beta")
    if spec.reference_point != 0:
        spec, x0 = spec.with_reference_removed(), x0 - spec.reference_point
    p_a, p_ac, q_a, q_ac, event = _balanced_event(spec, model)
    n0 = max(0, math.ceil(x0 / q_a - 1e-12))

    def point(n: int) -> WitnessPoint:
        m = n0 + n
        c = (m * q_a - x0) / q_ac
        if m == 0 and c == 0:
            law = DiscreteAtoms.constant(0.0)
        elif c == 0:
            law = DiscreteAtoms.from_unsorted([0.0, m], [p_ac, p_a], [q_ac, q_a])
        else:
            law = DiscreteAtoms.from_unsorted([-c, float(m)], [p_ac, p_a], [q_ac, q_a])
        closed = (
            spec.c_plus * m**spec.a * float(distortion_plus(spec, p_a))
            - spec.c_minus * max(c, 0.0) ** spec.b * float(distortion_minus(spec, p_ac))
        )
        numeric = cpt_value(law, spec).estimate
        residual = abs(math.fsum(law.values * law.p_Q) - x0)
        return WitnessPoint(n, closed, numeric, residual)

    return WitnessReport(
        Cause.ALPHA_GE_BETA,
        x0,
        model.v,
        tuple(_map_indices(point, n_list, workers)),
        {"n0": float(n0), "P_A": p_a, "Q_A": q_a, "event": event},
    )


def beta_delta_exponents(spec: CptSpec) -> tuple[float, float]:
    """``(xi, chi)``: midpoints of ``(0, alpha/gamma)`` and ``(beta/delta, 1)``."""
    return spec.a / (2.0 * spec.g), 0.5 * (spec.b / spec.d + 1.0)


def loss_tail_law(chi: float) -> QuantileGrid:
    """Q-law of ``Z = (1-U)^(-1/chi) 1{U >= 1/2}``: infinite mean for ``chi < 1``."""
    start = 2.0 ** (1.0 / chi)
    return QuantileGrid(
        levels=[0.0, 0.5, 0.5],
        values=[0.0, 0.0, start],
        measure="Q",
        right_tail=PowerTail(1.0, chi),
    )


def beta_delta_laws(spec: CptSpec, model: KernelModel, n: int) -> tuple[QuantileGrid, QuantileGrid, float]:
    """P-law, Q-law and truncation level ``a_n`` of the n-th witness."""
    xi, chi = beta_delta_exponents(spec)
    b_n = capped_power_mean(n, xi)
    a_n = truncation_level(loss_tail_law(chi), b_n, measure="Q")
    p_law, q_law = u_profile_laws(_loss_knots_power(a_n, chi) + _gain_knots(n, xi), model)
    return p_law, q_law, a_n


def witness_beta_delta(
    spec: CptSpec,
    model: KernelModel,
    n_list: Sequence[int],
    x0: float = 0.0,
    workers: int | None = None,
) -> WitnessReport:
    if not spec.beta < spec.delta:
        raise PreconditionError("construction requires beta/delta < 1")
    _check_x0_zero(x0 - spec.reference_point)
    spec = spec.with_reference_removed()
    xi, chi = beta_delta_exponents(spec)
    closed_ok = model.degenerate and spec.form is Form.POWER

    def point(n: int) -> WitnessPoint:
        if n == 0:
            return WitnessPoint(0, 0.0 if closed_ok else None, 0.0, 0.0, 0.0)
        p_law, q_law, a_n = beta_delta_laws(spec, model, n)
        numeric, residual = _evaluate(spec, p_law, q_law, 0.0)
        closed = None
        if closed_ok:
            closed = _capped_power_choquet(n, xi, spec.a, spec.g) - _capped_power_choquet(a_n, chi, spec.b, spec.d)
        return WitnessPoint(n, closed, numeric, residual, a_n)

    return WitnessReport(
        Cause.BETA_DELTA_BELOW_ONE,
        0.0,
        model.v,
        tuple(_map_indices(point, n_list, workers)),
        {"xi": xi, "chi": chi, "loss_tail_ratio": chi * spec.d / spec.b},
    )


def alpha_gamma_exponent(spec: CptSpec) -> float:
    """``xi``: midpoint of ``(1, alpha/gamma)``."""
    return 0.5 * (1.0 + spec.a / spec.g)


def alpha_gamma_laws(spec: CptSpec, model: KernelModel, n: int) -> tuple[QuantileGrid, QuantileGrid, float]:
    """P-law, Q-law and ``C_n`` of the n-th witness."""
    xi = alpha_gamma_exponent(spec)
    c_n = capped_power_mean(n, xi)
    loss = [Knot(1.0, 0.0, -2.0 * c_n), Knot(0.5, 0.5, -2.0 * c_n)]
    p_law, q_law = u_profile_laws(loss + _gain_knots(n, xi), model)
    return p_law, q_law, c_n


def witness_alpha_gamma(
    spec: CptSpec,
    model: KernelModel,
    n_list: Sequence[int],
    x0: float = 0.0,
    workers: int | None = None,
) -> WitnessReport:
    if not spec.alpha > spec.gamma:
        raise PreconditionError("construction requires alpha/gamma > 1")
    _check_x0_zero(x0 - spec.reference_point)
    spec = spec.with_reference_removed()
    xi = alpha_gamma_exponent(spec)
    p_ac = float(model.p_sf_u(0.5))
    closed_ok = model.degenerate and spec.form is Form.POWER

    def point(n: int) -> WitnessPoint:
        if n == 0:
            return WitnessPoint(0, 0.0 if closed_ok else None, 0.0, 0.0)
        p_law, q_law, c_n = alpha_gamma_laws(spec, model, n)
        numeric, residual = _evaluate(spec, p_law, q_law, 0.0)
        closed = None
        if closed_ok:
            closed = _capped_power_choquet(n, xi, spec.a, spec.g) - (2 * c_n) ** spec.b * p_ac**spec.d
        return WitnessPoint(n, closed, numeric, residual)

    return WitnessReport(
        Cause.ALPHA_GAMMA_ABOVE_ONE,
        0.0,
        model.v,
        tuple(_map_indices(point, n_list, workers)),
        {"xi": xi, "E_Q_Y": 0.5 ** (1.0 - 1.0 / xi) / (1.0 - 1.0 / xi)},
    )


def loss_value_alpha_gamma(spec: CptSpec, model: KernelModel, n: int) -> tuple[float, float]:
    """``V-(Z_n)`` from the closed form and from the Choquet engine."""
    p_law, _, c_n = alpha_gamma_laws(spec, model, n)
    closed = spec.c_minus * (2 * c_n) ** spec.b * float(distortion_minus(spec, float(model.p_sf_u(0.5))))
    return closed, choquet_minus(p_law.negative_part(), spec).estimate


def gain_value(spec: CptSpec, p_law: QuantileGrid) -> float:
    return choquet_plus(p_law.positive_part(), spec).estimate


def witness(cause: Cause, spec: CptSpec, model: KernelModel, x0: float, n_list: Sequence[int], workers: int | None = None) -> WitnessReport:
    if cause is Cause.ALPHA_GE_BETA:
        return witness_alpha_ge_beta(spec, model, x0, n_list, workers)
    if cause is Cause.BETA_DELTA_BELOW_ONE:
        return witness_beta_delta(spec, model, n_list, x0, workers)
    if cause is Cause.ALPHA_GAMMA_ABOVE_ONE:
        return witness_alpha_gamma(spec, model, n_list, x0, workers)
    raise PreconditionError(f"no construction for cause {cause.value}")
