"""Choquet integrals of power utilities against distorted probabilities.

The central primitive is :func:`distorted_integral`, which evaluates

    integral over y >= 0 of  w(M{ scale * X**exponent > y }) dy

for a nonnegative law and a :class:`~cpt_lab.core.Side`. The CPT values
``V+``, ``V-`` and ``V``, plain and truncated expectations, and the audit
integrals are all special cases.

On atoms the integral is a finite telescoping sum. On quantile grids each
segment between nodes is integrated in closed form when the weighting is a
pure power and the tail probability is log-log linear there; other segments
go to QUADPACK. Power tails beyond the grid are integrated analytically and
divergence is certified from the exponents alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .core import (
    CptError,
    CptSpec,
    DomainError,
    ExtendedValue,
    Side,
    ValueKind,
    gain_side,
    loss_side,
)
from .laws import DiscreteAtoms, Law, NegativeSupportError, QuantileGrid, _interpolate_node

QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)

#: relative margin above the divergence threshold below which a finite
#: tail integral is reported as DivergenceSuspected
SUSPECT_MARGIN = 0.02


class UndefinedFunctional(CptError):
    """V(X) is undefined because V-(X^-) is infinite."""


@dataclass(frozen=True)
class TailIntegral:
    value: float  # +inf when divergent
    exponent: float | None = None  # decay rate of the integrand in x, if a tail exists
    margin: float | None = None  # exponent ratio minus one; <= 0 means divergent


def _quad(f, lo: float, hi: float) -> float:
    """Adaptive quadrature; if QUADPACK reports trouble, retry on 32 equal pieces."""
    out = integrate.quad(f, lo, hi, full_output=1, **QUAD_OPTS)
    if len(out) == 3 or math.isinf(hi):
        return out[0]
    edges = np.linspace(lo, hi, 33)
    return math.fsum(
        integrate.quad(f, e0, e1, full_output=1, **QUAD_OPTS)[0] for e0, e1 in zip(edges[:-1], edges[1:])
    )


def _identity_side(exponent: float = 1.0) -> Side:
    return Side(exponent, 1.0)


# -- atoms -----------------------------------------------------------------


def _atoms_integral(law: DiscreteAtoms, side: Side, measure: str) -> float:
    x = law.values
    p = law.probs(measure)
    if x[0] < 0:
        raise NegativeSupportError("law must be nonnegative")
    # P{X >= x_i}, summed from the top so small tails keep their precision
    tail = np.cumsum(p[::-1])[::-1]
    tail = np.clip(tail, 0.0, 1.0)
    u = side.scale * np.power(x, side.exponent)
    du = np.diff(np.concatenate([[0.0], u]))
    return math.fsum(du * side.weight(tail))


# -- quantile grids --------------------------------------------------------


def _segment_loglog_power(x0, x1, s0, s1, side: Side) -> float:
    """Closed form for ``S(x) = s0 (x/x0)^-k`` and ``w(p) = p^g``."""
    L = math.log(x1 / x0)
    k = -math.log(s1 / s0) / L
    r = side.exponent - k * side.distortion_exponent
    return side.scale * side.exponent * s0**side.distortion_exponent * x0**side.exponent * L * float(special.exprel(r * L))


def _segment_loglog_quad(x0, x1, s0, s1, side: Side) -> float:
    L = math.log(x1 / x0)
    k = -math.log(s1 / s0) / L
    a = side.exponent
    c = side.scale * a * x0**a

    def f(t):
        return c * math.exp(a * t) * float(side.weight(s0 * math.exp(-k * t)))

    return _quad(f, 0.0, L)


def _segment_linear(x0, x1, s0, s1, side: Side) -> float:
    """Linear tail probability, integrated in utility coordinates."""
    a, c = side.exponent, side.scale
    y0, y1 = c * x0**a, c * x1**a

    def f(y):
        x = (y / c) ** (1.0 / a)
        t = min(max((x - x0) / (x1 - x0), 0.0), 1.0)
        return float(side.weight(s0 + t * (s1 - s0)))

    return _quad(f, y0, y1)


def _tail_integral(x_last: float, tail, side: Side, suspect_margin: float) -> TailIntegral:
    k = tail.exp
    a, g = side.exponent, side.distortion_exponent
    threshold = a / g
    if k <= threshold:
        return TailIntegral(math.inf, k, k / threshold - 1.0)
    margin = k / threshold - 1.0
    if side.power_weight:
        val = side.scale * a * tail.coef**g * x_last ** (a - k * g) / (k * g - a)
    else:
        c = side.scale * a * x_last**a
        s_last = tail.coef * x_last ** (-k)

        def f(t):
            return c * math.exp(a * t) * float(side.weight(s_last * math.exp(-k * t)))

        val = _quad(f, 0.0, math.inf)
    return TailIntegral(val, k, margin)


def _grid_integral(law: QuantileGrid, side: Side, suspect_margin: float, cap: float = math.inf) -> TailIntegral:
    """Distorted integral of ``min(X, cap)`` on the grid's own interpolation rule.

    A segment cut at ``cap`` keeps the rule of the full segment, so capping
    never changes the law below ``cap``.
    """
    if law.values[0] < 0:
        raise NegativeSupportError("law must be nonnegative")
    x, up = law.values, law.uppers
    # below the smallest value the tail probability is up[0] (= 1 without a left tail)
    parts = [float(side.weight(up[0])) * side.scale * min(x[0], cap) ** side.exponent]
    for i in range(len(x) - 1):
        x0, x1 = x[i], x[i + 1]
        if x0 >= cap:
            break
        if x1 <= x0:
            continue
        s0, s1 = up[i], up[i + 1]
        loglog = x0 > 0 and s1 > 0
        if x1 > cap:
            _, s_cap = _interpolate_node(x0, x1, law.levels[i], law.levels[i + 1], s0, s1, cap)
            x1, s1 = cap, s_cap
        if s0 == s1:
            parts.append(float(side.weight(s0)) * side.scale * (x1**side.exponent - x0**side.exponent))
        elif loglog:
            if side.power_weight:
                parts.append(_segment_loglog_power(x0, x1, s0, s1, side))
            else:
                parts.append(_segment_loglog_quad(x0, x1, s0, s1, side))
        else:
            parts.append(_segment_linear(x0, x1, s0, s1, side))
    body = math.fsum(parts)
    if law.right_tail is None or cap <= x[-1]:
        return TailIntegral(body)
    if math.isfinite(cap):
        # the power tail is a straight line in log-log coordinates
        s_cap = min(float(law.right_tail.prob(cap)), float(up[-1]))
        if side.power_weight:
            return TailIntegral(body + _segment_loglog_power(x[-1], cap, up[-1], s_cap, side))
        return TailIntegral(body + _segment_loglog_quad(x[-1], cap, up[-1], s_cap, side))
    tail = _tail_integral(x[-1], law.right_tail, side, suspect_margin)
    return TailIntegral(body + tail.value, tail.exponent, tail.margin)


def distorted_integral_detail(law: Law, side: Side, measure: str = "P", suspect_margin: float = SUSPECT_MARGIN) -> TailIntegral:
    if isinstance(law, DiscreteAtoms):
        return TailIntegral(_atoms_integral(law, side, measure))
    if law.measure != measure:
        raise DomainError(f"grid is tabulated under {law.measure}, not {measure}")
    return _grid_integral(law, side, suspect_margin)


def distorted_integral(law: Law, side: Side, measure: str = "P") -> float:
    """``int_0^inf w(M{scale X^exponent > y}) dy`` for nonnegative X; ``inf`` if divergent."""
    return distorted_integral_detail(law, side, measure).value


# -- CPT values ------------------------------------------------------------


def _to_extended(res: TailIntegral, suspect_margin: float, side: Side) -> ExtendedValue:
    if math.isinf(res.value):
        return ExtendedValue.infinite(
            res.exponent,
            f"tail exponent {res.exponent!r} <= utility/distortion ratio {side.exponent / side.distortion_exponent!r}",
        )
    if res.margin is not None and res.margin < suspect_margin:
        return ExtendedValue.suspected(res.value, res.exponent)
    return ExtendedValue.finite(res.value)


def _check_p_law(law: Law) -> None:
    if isinstance(law, QuantileGrid) and law.measure != "P":
        raise DomainError("CPT values need the law under P")


def choquet_plus(law: Law, spec: CptSpec, suspect_margin: float = SUSPECT_MARGIN) -> ExtendedValue:
    """``V+(X)`` for a nonnegative law under P."""
    _check_p_law(law)
    side = gain_side(spec)
    return _to_extended(distorted_integral_detail(law, side, "P", suspect_margin), suspect_margin, side)


def choquet_minus(law: Law, spec: CptSpec, suspect_margin: float = SUSPECT_MARGIN) -> ExtendedValue:
    """``V-(X)`` for a nonnegative law under P."""
    _check_p_law(law)
    side = loss_side(spec)
    return _to_extended(distorted_integral_detail(law, side, "P", suspect_margin), suspect_margin, side)


def cpt_value(law: Law, spec: CptSpec, suspect_margin: float = SUSPECT_MARGIN) -> ExtendedValue:
    """``V(X) = V+(X^+) - V-(X^-)``; raises :class:`UndefinedFunctional` if ``V-(X^-)`` is infinite.

    A nonzero reference point in ``spec`` is subtracted from the payoff first.
    """
    if spec.reference_point != 0:
        law = shift(law, -spec.reference_point)
        spec = spec.with_reference_removed()
    vp = choquet_plus(law.positive_part(), spec, suspect_margin)
    vm = choquet_minus(law.negative_part(), spec, suspect_margin)
    if vm.is_infinite:
        raise UndefinedFunctional("V-(X^-) is infinite")
    if vp.is_infinite:
        return vp
    if vp.kind is ValueKind.FINITE and vm.kind is ValueKind.FINITE:
        return ExtendedValue.finite(vp.value - vm.value)
    flagged = vp if vp.kind is ValueKind.DIVERGENCE_SUSPECTED else vm
    return ExtendedValue.suspected(vp.estimate - vm.estimate, flagged.tail_exponent)


def shift(law: Law, c: float) -> Law:
    """Law of ``X + c``."""
    if isinstance(law, DiscreteAtoms):
        return DiscreteAtoms(law.values + c, law.p_P, law.p_Q)
    if law.right_tail is not None or law.left_tail is not None:
        raise DomainError("shifting a grid with power tails is not supported")
    return QuantileGrid(levels=law.levels, uppers=law.uppers, values=law.values + c, measure=law.measure)


# -- expectations ----------------------------------------------------------


def expectation(law: Law, measure: str = "P") -> float:
    """``E_M[X]``; ``inf``/``-inf`` when one side diverges, error if both do."""
    pos = distorted_integral(law.positive_part(), _identity_side(), measure)
    neg = distorted_integral(law.negative_part(), _identity_side(), measure)
    if math.isinf(pos) and math.isinf(neg):
        raise UndefinedFunctional("both parts of the expectation diverge")
    return pos - neg


def moment(law: Law, s: float, measure: str = "P") -> float:
    """``E_M[X^s]`` for a nonnegative law."""
    return distorted_integral(law, _identity_side(s), measure)


def truncated_mean(law: Law, a: float, measure: str = "P") -> float:
    """``E_M[min(X, a)]`` for a nonnegative law."""
    if a <= 0:
        return 0.0
    if isinstance(law, DiscreteAtoms):
        p = law.probs(measure)
        return math.fsum(p * np.minimum(law.values, a))
    if law.values[0] < 0:
        raise NegativeSupportError("law must be nonnegative")
    if a <= law.values[0]:
        return float(a)
    if law.measure != measure:
        raise DomainError(f"grid is tabulated under {law.measure}, not {measure}")
    return _grid_integral(law, _identity_side(), SUSPECT_MARGIN, cap=a).value


def truncation_level(
    law: Law,
    b: float,
    measure: str = "P",
    tol: float = 1e-10,
    max_iter: int = 2000,
) -> float:
    """Smallest ``a >= 0`` with ``E_M[min(X, a)] = b`` (to absolute ``tol``).

    ``a -> E[min(X, a)]`` is continuous and non-decreasing, so bisection on a
    bracket with ``f(lo) < b <= f(hi)`` converges to the smallest root. Wide
    brackets are bisected geometrically so that roots far out in a heavy
    tail are reached in a few dozen steps.
    """
    if not (b >= 0 and math.isfinite(b)):
        raise DomainError("b must be a finite nonnegative number")
    if law.values[0] < 0:
        raise NegativeSupportError("law must be nonnegative")
    if b == 0:
        return 0.0
    mean = expectation(law, measure)
    if mean < b - tol:
        raise DomainError(f"infeasible: E[X] = {mean!r} < b = {b!r}")

    def f(a: float) -> float:
        return truncated_mean(law, a, measure)

    lo, hi = 0.0, max(b, 1.0)
    while f(hi) < b:
        if math.isinf(hi * 2):
            raise DomainError("root bracket overflowed")
        lo, hi = hi, hi * 2.0 if hi < 1e3 else hi * hi
    for _ in range(max_iter):
        f_hi = f(hi)
        if f_hi - b <= tol and (hi - lo) <= max(tol, 1e-15 * hi):
            return hi
        if lo > 0 and hi / lo > 4.0:
            mid = math.sqrt(lo * hi)
        else:
            mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            if abs(f_hi - b) <= tol:
                return hi
            break
        if f(mid) < b:
            lo = mid
        else:
            hi = mid
    if abs(f(hi) - b) <= tol:
        return hi
    raise CptError(f"truncation_level did not converge within {max_iter} iterations")


__all__ = [
    "UndefinedFunctional",
    "choquet_plus",
    "choquet_minus",
    "cpt_value",
    "distorted_integral",
    "distorted_integral_detail",
    "expectation",
    "moment",
    "shift",
    "truncated_mean",
    "truncation_level",
]
