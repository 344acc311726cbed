"""Preference parameters, utilities, distortions and extended values.

Everything here is immutable and vectorised over numpy arrays where that
makes sense. Exponents may be given as floats or as :class:`fractions.Fraction`;
the regime classifier compares them in whatever type they arrive in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Real
from typing import Any

import numpy as np


class CptError(Exception):
    """Base class for all library errors."""


class DomainError(CptError, ValueError):
    pass


class PreconditionError(CptError, ValueError):
    pass


class RegimeError(PreconditionError):
    pass


class Form(enum.Enum):
    POWER = "power"
    TK = "tk"


@dataclass(frozen=True)
class CptSpec:
    """Piecewise-power CPT preferences.

    ``alpha``/``beta`` are the gain/loss utility exponents, ``gamma``/``delta``
    the gain/loss distortion exponents. ``c_plus``/``c_minus`` scale the
    utilities and are only meaningful for the Tversky-Kahneman form; the pure
    power form fixes them at 1.
    """

    alpha: Real
    beta: Real
    gamma: Real
    delta: Real
    form: Form = Form.POWER
    c_plus: float = 1.0
    c_minus: float = 1.0
    reference_point: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.form, str):
            object.__setattr__(self, "form", Form(self.form))
        for name in ("alpha", "beta", "gamma", "delta"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Real):
                raise DomainError(f"{name} must be a real number, got {value!r}")
            if not (0 < value <= 1):
                raise DomainError(f"{name} must lie in (0, 1], got {value}")
        for name in ("c_plus", "c_minus"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value}")
        if self.form is Form.POWER and (self.c_plus != 1 or self.c_minus != 1):
            raise DomainError("the pure power form has unit scale constants")
        if not math.isfinite(self.reference_point):
            raise DomainError("reference_point must be finite")

    # float views for numerics; the exact values stay on the instance
    @property
    def a(self) -> float:
        return float(self.alpha)

    @property
    def b(self) -> float:
        return float(self.beta)

    @property
    def g(self) -> float:
        return float(self.gamma)

    @property
    def d(self) -> float:
        return float(self.delta)

    def with_reference_removed(self) -> CptSpec:
        return replace(self, reference_point=0.0)

    def to_json(self) -> dict[str, Any]:
        return {
            "alpha": _jsonable(self.alpha),
            "beta": _jsonable(self.beta),
            "gamma": _jsonable(self.gamma),
            "delta": _jsonable(self.delta),
            "form": self.form.value,
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "reference_point": self.reference_point,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> CptSpec:
        known = {"alpha", "beta", "gamma", "delta", "form", "c_plus", "c_minus", "reference_point"}
        unknown = set(obj) - known
        if unknown:
            raise DomainError(f"unknown CptSpec keys: {sorted(unknown)}")
        missing = {"alpha", "beta", "gamma", "delta"} - set(obj)
        if missing:
            raise DomainError(f"missing CptSpec keys: {sorted(missing)}")
        return cls(
            alpha=parse_exponent(obj["alpha"]),
            beta=parse_exponent(obj["beta"]),
            gamma=parse_exponent(obj["gamma"]),
            delta=parse_exponent(obj["delta"]),
            form=Form(obj.get("form", "power")),
            c_plus=float(obj.get("c_plus", 1.0)),
            c_minus=float(obj.get("c_minus", 1.0)),
            reference_point=float(obj.get("reference_point", 0.0)),
        )


def parse_exponent(raw: Any) -> Real:
    """Read an exponent exactly: ``"1/3"`` and ``"0.35"`` become Fractions."""
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse exponent {raw!r}") from exc
    if isinstance(raw, bool) or not isinstance(raw, Real):
        raise DomainError(f"cannot parse exponent {raw!r}")
    return float(raw)


def _jsonable(x: Real) -> float | str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else float(x)
    return float(x)


def reduce_reference(spec: CptSpec, x0: float) -> tuple[CptSpec, float]:
    """Shift a deterministic reference point into the budget.

    With wealth ``W`` and reference ``B`` the objective is ``V(W - B)`` and the
    budget ``E_Q[W] = x0`` becomes ``E_Q[W - B] = x0 - B``.
    """
    return spec.with_reference_removed(), x0 - spec.reference_point


# -- utilities -------------------------------------------------------------


def _power(x, exponent: float, scale: float, name: str):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} is defined on [0, inf)")
    out = scale * np.power(arr, exponent)
    return float(out) if out.ndim == 0 else out


def utility_plus(spec: CptSpec, x):
    return _power(x, spec.a, spec.c_plus, "utility_plus")


def utility_minus(spec: CptSpec, x):
    return _power(x, spec.b, spec.c_minus, "utility_minus")


# -- distortions -----------------------------------------------------------


def power_distortion(p, exponent: float):
    return np.power(p, exponent)


def tk_distortion(p, exponent: float):
    """``p^g / (p^g + (1-p)^g)^(1/g)`` evaluated in log-space."""
    p = np.asarray(p, dtype=float)
    if exponent == 1:
        return p.copy()
    out = np.empty_like(p)
    inner = (p > 0) & (p < 1)
    out[p <= 0] = 0.0
    out[p >= 1] = 1.0
    q = p[inner]
    lp = np.log(q)
    lq = np.log1p(-q)
    log_den = np.logaddexp(exponent * lp, exponent * lq) / exponent
    out[inner] = np.exp(exponent * lp - log_den)
    return out


def _distort(p, exponent: float, form: Form, name: str):
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"{name} is defined on [0, 1]")
    out = power_distortion(arr, exponent) if form is Form.POWER else tk_distortion(arr, exponent)
    return float(out) if np.ndim(out) == 0 else out


def distortion_plus(spec: CptSpec, p):
    return _distort(p, spec.g, spec.form, "distortion_plus")


def distortion_minus(spec: CptSpec, p):
    return _distort(p, spec.d, spec.form, "distortion_minus")


@dataclass(frozen=True)
class Side:
    """One side (gains or losses) of a preference: ``scale * x^exponent`` and a distortion."""

    exponent: float
    distortion_exponent: float
    scale: float = 1.0
    form: Form = Form.POWER

    def weight(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        if self.form is Form.POWER:
            return power_distortion(p, self.distortion_exponent)
        return tk_distortion(p, self.distortion_exponent)

    @property
    def power_weight(self) -> bool:
        return self.form is Form.POWER or self.distortion_exponent == 1


def gain_side(spec: CptSpec) -> Side:
    return Side(spec.a, spec.g, spec.c_plus, spec.form)


def loss_side(spec: CptSpec) -> Side:
    return Side(spec.b, spec.d, spec.c_minus, spec.form)


# -- extended values -------------------------------------------------------


class ValueKind(enum.Enum):
    FINITE = "Finite"
    POS_INFINITE = "PosInfinite"
    DIVERGENCE_SUSPECTED = "DivergenceSuspected"


@dataclass(frozen=True)
class ExtendedValue:
    """A Choquet-integral result that may be certified infinite."""

    kind: ValueKind
    value: float | None = None
    lower_bound: float | None = None
    tail_exponent: float | None = None
    reason: str = field(default="", compare=False)

    @classmethod
    def finite(cls, value: float) -> ExtendedValue:
        if not math.isfinite(value):
            raise ValueError(f"finite value expected, got {value}")
        return cls(ValueKind.FINITE, value=float(value))

    @classmethod
    def infinite(cls, tail_exponent: float, reason: str) -> ExtendedValue:
        return cls(ValueKind.POS_INFINITE, tail_exponent=tail_exponent, reason=reason)

    @classmethod
    def suspected(cls, lower_bound: float, tail_exponent: float) -> ExtendedValue:
        return cls(ValueKind.DIVERGENCE_SUSPECTED, lower_bound=float(lower_bound), tail_exponent=tail_exponent)

    @property
    def is_finite(self) -> bool:
        return self.kind is ValueKind.FINITE

    @property
    def is_infinite(self) -> bool:
        return self.kind is ValueKind.POS_INFINITE

    @property
    def estimate(self) -> float:
        """Best numeric estimate: the value, the lower bound, or +inf."""
        if self.kind is ValueKind.FINITE:
            return self.value
        if self.kind is ValueKind.DIVERGENCE_SUSPECTED:
            return self.lower_bound
        return math.inf

    def __float__(self) -> float:
        return self.estimate

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.value is not None:
            out["value"] = self.value
        if self.lower_bound is not None:
            out["lower_bound"] = self.lower_bound
        if self.tail_exponent is not None:
            out["tail_exponent"] = self.tail_exponent
        if self.reason:
            out["reason"] = self.reason
        return out
