"""Scalar probability laws.

Two representations are supported.

:class:`DiscreteAtoms`
    Finitely many values with weights under both the physical measure P and
    the pricing measure Q. The ratio ``p_Q / p_P`` is the pricing kernel on
    each atom.

:class:`QuantileGrid`
    A monotone quantile function tabulated at nodes ``(level, value)`` for a
    single measure, with optional power tails outside the tabulated range.
    Between two nodes with distinct values the tail probability is
    interpolated as follows:

    * both values positive and both tail probabilities ``P{X > x}`` positive:
      ``log P{X > x}`` is linear in ``log x`` (exact for power laws);
    * both values negative and both ``P{X <= x}`` positive: ``log P{X <= x}``
      is linear in ``log |x|``;
    * otherwise the probabilities are linear in ``x``.

    Equal levels with different values encode a gap in the support; equal
    values with different levels encode an atom. The complement ``1 - level``
    is stored separately (``uppers``) so that tiny tail probabilities keep
    full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .core import DomainError

MEASURES = ("P", "Q")


class InconsistentTailError(DomainError):
    pass


class NegativeSupportError(DomainError):
    pass


def _check_measure(measure: str) -> str:
    if measure not in MEASURES:
        raise DomainError(f"measure must be 'P' or 'Q', got {measure!r}")
    return measure


# -- discrete laws ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteAtoms:
    """Sorted atoms with P- and Q-probabilities."""

    values: np.ndarray
    p_P: np.ndarray
    p_Q: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        p_P = np.array(self.p_P, dtype=float)
        p_Q = np.array(self.p_Q, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("atoms need a non-empty 1-d array of values")
        if p_P.shape != values.shape or p_Q.shape != values.shape:
            raise DomainError("values and probabilities must have equal length")
        if not np.all(np.isfinite(values)):
            raise DomainError("atom values must be finite")
        if np.any(np.diff(values) <= 0):
            raise DomainError("atom values must be strictly increasing")
        for name, p in (("p_P", p_P), ("p_Q", p_Q)):
            if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
                raise DomainError(f"{name} entries must lie in [0, 1]")
            if abs(math.fsum(p) - 1.0) > 1e-12:
                raise DomainError(f"{name} must sum to 1, got {math.fsum(p)!r}")
        for name, arr in (("values", values), ("p_P", p_P), ("p_Q", p_Q)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def constant(cls, c: float) -> DiscreteAtoms:
        return cls(np.array([float(c)]), np.ones(1), np.ones(1))

    @classmethod
    def from_unsorted(cls, values: Iterable[float], p_P: Iterable[float], p_Q: Iterable[float] | None = None) -> DiscreteAtoms:
        """Sort, merge equal values, drop atoms null under both measures and renormalise round-off."""
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        p_P = np.asarray(list(p_P) if not isinstance(p_P, np.ndarray) else p_P, dtype=float)
        p_Q = p_P.copy() if p_Q is None else np.asarray(list(p_Q) if not isinstance(p_Q, np.ndarray) else p_Q, dtype=float)
        if values.shape != p_P.shape or values.shape != p_Q.shape:
            raise DomainError("values and probabilities must have equal length")
        uniq, inverse = np.unique(values, return_inverse=True)
        mP = np.zeros(uniq.size)
        mQ = np.zeros(uniq.size)
        np.add.at(mP, inverse, p_P)
        np.add.at(mQ, inverse, p_Q)
        keep = (mP > 0) | (mQ > 0)
        uniq, mP, mQ = uniq[keep], mP[keep], mQ[keep]
        sP, sQ = math.fsum(mP), math.fsum(mQ)
        if abs(sP - 1) > 1e-9 or abs(sQ - 1) > 1e-9:
            raise DomainError("probabilities must sum to 1")
        return cls(uniq, mP / sP, mQ / sQ)

    def probs(self, measure: str = "P") -> np.ndarray:
        return self.p_P if _check_measure(measure) == "P" else self.p_Q

    @property
    def is_nonnegative(self) -> bool:
        return bool(self.values[0] >= 0)

    def positive_part(self) -> DiscreteAtoms:
        return DiscreteAtoms.from_unsorted(np.maximum(self.values, 0.0), self.p_P, self.p_Q)

    def negative_part(self) -> DiscreteAtoms:
        return DiscreteAtoms.from_unsorted(np.maximum(-self.values, 0.0), self.p_P, self.p_Q)

    def mirror(self) -> DiscreteAtoms:
        return DiscreteAtoms(-self.values[::-1], self.p_P[::-1], self.p_Q[::-1])

    def map_increasing(self, fn) -> DiscreteAtoms:
        return DiscreteAtoms.from_unsorted(fn(self.values), self.p_P, self.p_Q)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "atoms",
            "atoms": [[float(x), float(p), float(q)] for x, p, q in zip(self.values, self.p_P, self.p_Q)],
        }


# -- quantile grids --------------------------------------------------------


@dataclass(frozen=True)
class PowerTail:
    """Tail probability ``coef * y**(-exp)`` beyond the last tabulated value."""

    coef: float
    exp: float

    def __post_init__(self) -> None:
        if not (self.coef > 0 and math.isfinite(self.coef)):
            raise DomainError("tail coefficient must be positive")
        if not (self.exp > 0 and math.isfinite(self.exp)):
            raise DomainError("tail exponent must be positive")

    def prob(self, y):
        return self.coef * np.power(y, -self.exp)


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    """Tabulated quantile function under one measure.

    ``levels[i]`` is ``M{X <= values[i]}`` approached from the left node of a
    segment, ``uppers[i] = 1 - levels[i]`` carried at full precision.
    ``right_tail`` gives ``M{X > y}`` for ``y >= values[-1]``;
    ``left_tail`` gives ``M{X < -y}`` for ``-y <= values[0]``.
    """

    levels: np.ndarray
    values: np.ndarray
    uppers: np.ndarray | None = None
    measure: str = "P"
    right_tail: PowerTail | None = None
    left_tail: PowerTail | None = None
    tail_tol: float = 1e-6
    all_moments_finite: bool = field(default=False)

    def __post_init__(self) -> None:
        levels = np.array(self.levels, dtype=float)
        values = np.array(self.values, dtype=float)
        uppers = 1.0 - levels if self.uppers is None else np.array(self.uppers, dtype=float)
        _check_measure(self.measure)
        if levels.ndim != 1 or levels.size < 2:
            raise DomainError("a quantile grid needs at least two nodes")
        if values.shape != levels.shape or uppers.shape != levels.shape:
            raise DomainError("levels, uppers and values must have equal length")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(levels)) and np.all(np.isfinite(uppers))):
            raise DomainError("grid entries must be finite")
        if np.any(levels < 0) or np.any(levels > 1) or np.any(uppers < 0) or np.any(uppers > 1):
            raise DomainError("levels must lie in [0, 1]")
        if np.any(np.abs(levels + uppers - 1.0) > 1e-12):
            raise DomainError("uppers must equal 1 - levels")
        if np.any(np.diff(levels) < 0) or np.any(np.diff(uppers) > 0):
            raise DomainError("levels must be non-decreasing")
        if np.any(np.diff(values) < 0):
            raise DomainError("quantile values must be non-decreasing")
        if uppers[-1] > 0:
            if self.right_tail is None:
                raise DomainError("grid ends below level 1 without a right tail")
            if values[-1] <= 0:
                raise DomainError("a right tail needs a positive last value")
            self._check_tail(self.right_tail, values[-1], uppers[-1], "right")
        elif self.right_tail is not None:
            raise DomainError("right tail given but the grid reaches level 1")
        if levels[0] > 0:
            if self.left_tail is None:
                raise DomainError("grid starts above level 0 without a left tail")
            if values[0] >= 0:
                raise DomainError("a left tail needs a negative first value")
            self._check_tail(self.left_tail, -values[0], levels[0], "left")
        elif self.left_tail is not None:
            raise DomainError("left tail given but the grid starts at level 0")
        for name, arr in (("levels", levels), ("values", values), ("uppers", uppers)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _check_tail(self, tail: PowerTail, y: float, prob: float, side: str) -> None:
        fitted = float(tail.prob(y))
        if abs(fitted - prob) > self.tail_tol * prob:
            raise InconsistentTailError(
                f"{side} tail gives {float(fitted)!r} at the grid edge but the grid has {float(prob)!r}"
            )

    # construction helpers

    @classmethod
    def from_nodes(cls, nodes: Iterable[tuple[float, float, float]], **kwargs) -> QuantileGrid:
        """Build from ``(level, upper, value)`` triples."""
        arr = np.asarray(list(nodes), dtype=float)
        return cls(levels=arr[:, 0], uppers=arr[:, 1], values=arr[:, 2], **kwargs)

    @classmethod
    def constant(cls, c: float, measure: str = "P") -> QuantileGrid:
        return cls(levels=[0.0, 1.0], values=[c, c], measure=measure)

    @classmethod
    def pareto(cls, kappa: float, scale: float = 1.0, measure: str = "P") -> QuantileGrid:
        """``M{X > y} = (y/scale)^(-kappa)`` for ``y >= scale``."""
        return cls(
            levels=[0.0, 0.0],
            values=[scale, scale],
            measure=measure,
            right_tail=PowerTail(scale**kappa, kappa),
        )

    # structural transforms

    @property
    def is_nonnegative(self) -> bool:
        return bool(self.values[0] >= 0)

    def _replace(self, levels, uppers, values, right_tail, left_tail) -> QuantileGrid:
        return QuantileGrid(
            levels=levels,
            uppers=uppers,
            values=values,
            measure=self.measure,
            right_tail=right_tail,
            left_tail=left_tail,
            tail_tol=self.tail_tol,
            all_moments_finite=self.all_moments_finite,
        )

    def mirror(self) -> QuantileGrid:
        """Law of ``-X``."""
        return self._replace(
            levels=self.uppers[::-1],
            uppers=self.levels[::-1],
            values=-self.values[::-1],
            right_tail=self.left_tail,
            left_tail=self.right_tail,
        )

    def positive_part(self) -> QuantileGrid:
        """Law of ``max(X, 0)``."""
        v, lo, up = self.values, self.levels, self.uppers
        if v[0] >= 0:
            return self
        if v[-1] <= 0:
            return QuantileGrid.constant(0.0, self.measure)
        k = int(np.argmax(v > 0))
        if v[k - 1] == 0:
            l0, u0 = lo[k - 1], up[k - 1]
        else:
            frac = -v[k - 1] / (v[k] - v[k - 1])
            l0 = lo[k - 1] + frac * (lo[k] - lo[k - 1])
            u0 = up[k - 1] - frac * (up[k - 1] - up[k])
        levels = np.concatenate([[0.0, l0], lo[k:]])
        uppers = np.concatenate([[1.0, u0], up[k:]])
        values = np.concatenate([[0.0, 0.0], v[k:]])
        return self._replace(levels, uppers, values, self.right_tail, None)

    def negative_part(self) -> QuantileGrid:
        """Law of ``max(-X, 0)``."""
        return self.mirror().positive_part()

    def truncate_above(self, a: float) -> QuantileGrid:
        """Law of ``min(X, a)`` for ``a >= values[0]``.

        The segment that crosses ``a`` is re-read with the grid rule of the
        result. When that segment was linear because it ended at upper 0,
        the cut piece becomes log-log and differs slightly from the original
        law there. ``choquet.truncated_mean`` integrates the uncut grid and
        has no such error.
        """
        v, lo, up = self.values, self.levels, self.uppers
        if a >= v[-1]:
            if self.right_tail is None:
                return self
            s_a = min(float(self.right_tail.prob(a)), float(up[-1])) if a > v[-1] else float(up[-1])
            levels = np.concatenate([lo, [max(1.0 - s_a, float(lo[-1])), 1.0]])
            uppers = np.concatenate([up, [s_a, 0.0]])
            values = np.concatenate([v, [a, a]])
            return self._replace(levels, uppers, values, None, self.left_tail)
        if a < v[0]:
            raise DomainError("truncation level below the support is not supported")
        k = int(np.argmax(v > a))
        la, ua = _interpolate_node(v[k - 1], v[k], lo[k - 1], lo[k], up[k - 1], up[k], a)
        levels = np.concatenate([lo[:k], [la, 1.0]])
        uppers = np.concatenate([up[:k], [ua, 0.0]])
        values = np.concatenate([v[:k], [a, a]])
        return self._replace(levels, uppers, values, None, self.left_tail)

    def survival(self, x) -> np.ndarray:
        """``M{X > x}`` evaluated with the interpolation rule of this class."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        v, lo, up = self.values, self.levels, self.uppers
        for j, xx in enumerate(x):
            if xx >= v[-1]:
                out[j] = float(self.right_tail.prob(xx)) if self.right_tail is not None else 0.0
            elif xx < v[0]:
                out[j] = 1.0 - float(self.left_tail.prob(-xx)) if self.left_tail is not None else 1.0
            else:
                k = int(np.searchsorted(v, xx, side="right"))
                _, out[j] = _interpolate_node(v[k - 1], v[k], lo[k - 1], lo[k], up[k - 1], up[k], xx)
        return out

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": "quantile",
            "measure": self.measure,
            "grid": [[float(s), float(x)] for s, x in zip(self.levels, self.values)],
        }
        if self.right_tail is not None:
            out["tail"] = {"coef": self.right_tail.coef, "exp": self.right_tail.exp}
        if self.left_tail is not None:
            out["left_tail"] = {"coef": self.left_tail.coef, "exp": self.left_tail.exp}
        return out


def _interpolate_node(x0, x1, l0, l1, u0, u1, x) -> tuple[float, float]:
    """Level and upper at ``x`` inside the segment ``[x0, x1]``."""
    if x <= x0:
        return float(l0), float(u0)
    if x >= x1:
        return float(l1), float(u1)
    if x0 > 0 and u0 > 0 and u1 > 0:
        t = math.log(x / x0) / math.log(x1 / x0)
        u = math.exp(math.log(u0) + t * (math.log(u1) - math.log(u0)))
        low = 1.0 - u
    elif x1 < 0 and l0 > 0 and l1 > 0:
        t = math.log(x / x0) / math.log(x1 / x0)
        low = math.exp(math.log(l0) + t * (math.log(l1) - math.log(l0)))
        u = 1.0 - low
    else:
        t = (x - x0) / (x1 - x0)
        low, u = l0 + t * (l1 - l0), u0 - t * (u0 - u1)
    # rounding in exp/log must not push the result outside the segment
    return float(min(max(low, l0), l1)), float(min(max(u, u1), u0))


Law = DiscreteAtoms | QuantileGrid


# -- JSON ------------------------------------------------------------------


def law_from_json(obj: dict[str, Any]) -> Law:
    kind = obj.get("kind")
    if kind == "atoms":
        rows = np.asarray(obj["atoms"], dtype=float)
        if rows.ndim != 2 or rows.shape[1] not in (2, 3):
            raise DomainError("atoms must be [value, pP] or [value, pP, pQ] rows")
        pQ = rows[:, 2] if rows.shape[1] == 3 else rows[:, 1]
        return DiscreteAtoms(rows[:, 0], rows[:, 1], pQ)
    if kind == "quantile":
        rows = np.asarray(obj["grid"], dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise DomainError("grid must be a list of [level, value] pairs")
        tail = obj.get("tail")
        left = obj.get("left_tail")
        return QuantileGrid(
            levels=rows[:, 0],
            values=rows[:, 1],
            measure=obj.get("measure", "P"),
            right_tail=PowerTail(float(tail["coef"]), float(tail["exp"])) if tail else None,
            left_tail=PowerTail(float(left["coef"]), float(left["exp"])) if left else None,
        )
    raise DomainError(f"unknown law kind {kind!r}")
