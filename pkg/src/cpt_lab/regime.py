"""Well-posedness verdicts from the four exponents.

Comparisons are done on the exponents as given: Fractions compare exactly,
floats compare with IEEE semantics and no tolerance, so boundary points are
a verdict of their own rather than an artefact of rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator

from .core import CptSpec, Form


class Verdict(enum.Enum):
    WELL_POSED = "WellPosed"
    ILL_POSED = "IllPosed"
    BOUNDARY = "Boundary"


class Cause(enum.Enum):
    ALPHA_GE_BETA = "AlphaGeBeta"
    BETA_DELTA_BELOW_ONE = "BetaDeltaBelowOne"
    ALPHA_GAMMA_ABOVE_ONE = "AlphaGammaAboveOne"
    SUFFICIENT_HOLDS = "SufficientHolds"
    ALPHA_EQ_GAMMA = "AlphaEqGamma"
    BETA_EQ_DELTA = "BetaEqDelta"


#: CLI spelling of the three constructive causes
CAUSE_KEYS = {
    "a_ge_b": Cause.ALPHA_GE_BETA,
    "bd_lt_1": Cause.BETA_DELTA_BELOW_ONE,
    "ag_gt_1": Cause.ALPHA_GAMMA_ABOVE_ONE,
}


@dataclass(frozen=True)
class RegimeVerdict:
    verdict: Verdict
    cause: Cause
    tk_caveat: bool = False

    @property
    def ill_posed(self) -> bool:
        return self.verdict is Verdict.ILL_POSED

    def to_json(self) -> dict:
        out = {"verdict": self.verdict.value, "cause": self.cause.value}
        if self.tk_caveat:
            out["tk_caveat"] = True
        return out


def classify(spec: CptSpec) -> RegimeVerdict:
    """Classify problem well-posedness.

    Ratios are compared as ``beta < delta`` and ``alpha > gamma``, which is
    exact for Fractions and avoids a rounding step for floats. When both
    ``alpha == gamma`` and ``beta == delta`` hold, the alpha/gamma equality is
    reported.
    """
    a, b, g, d = spec.alpha, spec.beta, spec.gamma, spec.delta
    tk = spec.form is Form.TK
    if a >= b:
        return RegimeVerdict(Verdict.ILL_POSED, Cause.ALPHA_GE_BETA, tk)
    if b < d:
        return RegimeVerdict(Verdict.ILL_POSED, Cause.BETA_DELTA_BELOW_ONE, tk)
    if a > g:
        return RegimeVerdict(Verdict.ILL_POSED, Cause.ALPHA_GAMMA_ABOVE_ONE, tk)
    if a < g and b > d:
        return RegimeVerdict(Verdict.WELL_POSED, Cause.SUFFICIENT_HOLDS, tk)
    cause = Cause.ALPHA_EQ_GAMMA if a == g else Cause.BETA_EQ_DELTA
    return RegimeVerdict(Verdict.BOUNDARY, cause, tk)


def rational_grid(step: Fraction) -> list[Fraction]:
    """``step, 2 step, ..., 1``; ``step`` must divide 1."""
    step = Fraction(step)
    if step <= 0 or step > 1 or (1 / step).denominator != 1:
        raise ValueError("step must be 1/m for a positive integer m")
    m = int(1 / step)
    return [Fraction(i, m) for i in range(1, m + 1)]


def sweep(step: Fraction) -> Iterator[tuple[CptSpec, RegimeVerdict]]:
    """Classify every point of the rational grid on ``(0, 1]^4``."""
    axis = rational_grid(step)
    for a, b, g, d in product(axis, repeat=4):
        spec = CptSpec(a, b, g, d)
        yield spec, classify(spec)
