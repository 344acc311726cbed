"""Numerical audits of three moment/Choquet inequalities.

* ``eleql``: ``E[X^s] <= 1 + D (int P{X^b > y}^a dy)^(1/a)`` for ``b/(s a) > 1``.
* ``lemeta``: ``int P{(X+)^alpha > y}^gamma dy <= L1 + L2 int P{(X-)^eta > y}^delta dy``
  for every X with ``E_Q[X] = x0`` in the well-posed regime.
* ``l1l2``: ``int P{X^a > y}^s dy <= R1 + R2 (int P{X^b > y}^s dy)^zeta``.

All constants are assembled from the chain of elementary inequalities that
proves each bound, with free exponents at the midpoints of their admissible
intervals and kernel moments from the closed-form log-normal expressions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from .choquet import distorted_integral, expectation
from .core import CptSpec, Form, PreconditionError, Side, reduce_reference
from .io import csv_text
from .laws import DiscreteAtoms, Law, QuantileGrid
from .market import KernelModel
from .witness import Knot, u_profile_laws

#: relative slack granted to lhs <= rhs for quadrature round-off
AUDIT_RTOL = 1e-9


class Lemma(enum.Enum):
    ELEQL = "eleql"
    LEMETA = "lemeta"
    L1L2 = "l1l2"


class Status(enum.Enum):
    PASS = "pass"
    VACUOUS = "vacuous"
    VIOLATION = "violation"


@dataclass(frozen=True)
class AuditCase:
    lemma: Lemma
    exponents: dict[str, float]
    law_kind: str
    lhs: float
    rhs: float
    constants: dict[str, float] = field(default_factory=dict)

    @property
    def status(self) -> Status:
        if math.isinf(self.rhs):
            return Status.VACUOUS
        if self.lhs <= self.rhs + AUDIT_RTOL * max(1.0, abs(self.rhs)):
            return Status.PASS
        return Status.VIOLATION

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status is not Status.VIOLATION


# -- constants -------------------------------------------------------------


def _mid(lo: float, hi: float) -> float:
    return 0.5 * (lo + hi)


def eleql_constant(a: float, b: float, s: float) -> float:
    """``D = int_1^inf t^(-b/(s a)) dt``."""
    if not (a > 0 and b > 0 and s > 0):
        raise PreconditionError("exponents must be positive")
    k = b / (s * a)
    if not k > 1:
        raise PreconditionError("need b/(s a) > 1")
    return 1.0 / (k - 1.0)


@dataclass(frozen=True)
class L1L2Constants:
    chi: float
    xi: float
    D: float
    C1: float
    C2: float
    zeta: float
    R1: float
    R2: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def l1l2_constants(a: float, b: float, s: float) -> L1L2Constants:
    if not (0 < s < a < b and s <= 1):
        raise PreconditionError("need 0 < s < a < b and s <= 1")
    chi = _mid(1.0 / s, b / (s * a))
    xi = _mid(chi * a, b / s)
    D = eleql_constant(s, b, xi)
    C1 = D**s
    C2 = 1.0 / (s * chi - 1.0)
    zeta = a * chi / xi
    return L1L2Constants(chi, xi, D, C1, C2, zeta, 1.0 + C2, C2 * C1**zeta)


@dataclass(frozen=True)
class LemetaConstants:
    eta: float
    lam: float
    p: float
    q: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    D1: float
    M1: float
    M2: float
    L1: float
    L2: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _moment_power(model: KernelModel, p: float, r: float) -> float:
    """``E_P[rho^p]^r`` from the log-normal closed form; ``inf`` on overflow."""
    log_value = r * p * (p - 1.0) * model.v / 2.0
    return math.exp(log_value) if log_value < 700.0 else math.inf


def lemeta_constants(spec: CptSpec, x0: float, model: KernelModel) -> LemetaConstants:
    a, b, g, d = spec.a, spec.b, spec.g, spec.d
    if not (spec.alpha < spec.beta and spec.alpha < spec.gamma and spec.delta < spec.beta):
        raise PreconditionError("need alpha < beta and alpha/gamma < 1 < beta/delta")
    eta = _mid(max(a, d), b)
    lam = _mid(1.0 / g, min(1.0 / a, eta / (a * g)))
    p = _mid(1.0, 1.0 / (lam * a))
    q = _mid(max(1.0, a * lam * g / d), eta / d)
    alg = a * lam * g
    C1 = 1.0 / (lam * g - 1.0)
    C2 = _moment_power(model, -1.0 / (p - 1.0), (p - 1.0) / p)
    C3 = C2**g
    C4 = C3 * abs(x0) ** alg
    C5 = _moment_power(model, q / (q - 1.0), alg * (q - 1.0) / q)
    C6 = C4 + 2.0 * C3 * C5
    C7 = C3 * C5
    D1 = eleql_constant(d, eta, q)
    M1 = C6 + C7
    M2 = C7 * D1**d
    return LemetaConstants(eta, lam, p, q, C1, C2, C3, C4, C5, C6, C7, D1, M1, M2, 1.0 + C1 * M1, C1 * M2)


# -- single audits ---------------------------------------------------------


def _kind(law: Law) -> str:
    return "atoms" if isinstance(law, DiscreteAtoms) else "quantile"


def _require_nonnegative(law: Law) -> None:
    if law.values[0] < 0:
        raise PreconditionError("law must be nonnegative")


def audit_eleql(a: float, b: float, s: float, law: Law) -> AuditCase:
    D = eleql_constant(a, b, s)
    _require_nonnegative(law)
    lhs = distorted_integral(law, Side(s, 1.0))
    integral = distorted_integral(law, Side(b, a))
    rhs = 1.0 + D * integral ** (1.0 / a)
    return AuditCase(Lemma.ELEQL, {"a": a, "b": b, "s": s}, _kind(law), lhs, rhs, {"D": D})


def audit_l1l2(a: float, b: float, s: float, law: Law) -> AuditCase:
    c = l1l2_constants(a, b, s)
    _require_nonnegative(law)
    lhs = distorted_integral(law, Side(a, s))
    rhs = c.R1 + c.R2 * distorted_integral(law, Side(b, s)) ** c.zeta
    return AuditCase(Lemma.L1L2, {"a": a, "b": b, "s": s}, _kind(law), lhs, rhs, c.as_dict())


def audit_lemeta(
    spec: CptSpec,
    x0: float,
    law: Law,
    model: KernelModel,
    q_law: QuantileGrid | None = None,
    budget_tol: float = 1e-8,
) -> AuditCase:
    """Audit one payoff. Atoms carry their own Q-weights; a P-grid needs its Q-grid."""
    c = lemeta_constants(spec, x0, model)
    if isinstance(law, DiscreteAtoms):
        mean_q = math.fsum(law.values * law.p_Q)
    elif q_law is not None:
        mean_q = expectation(q_law, "Q")
    else:
        raise PreconditionError("a quantile-grid payoff needs its Q-law to check the budget")
    if abs(mean_q - x0) > budget_tol * max(1.0, abs(x0)):
        raise PreconditionError(f"E_Q[X] = {mean_q!r} differs from x0 = {x0!r}")
    lhs = distorted_integral(law.positive_part(), Side(spec.a, spec.g))
    rhs = c.L1 + c.L2 * distorted_integral(law.negative_part(), Side(c.eta, spec.d))
    exps = {"alpha": spec.a, "beta": spec.b, "gamma": spec.g, "delta": spec.d, "eta": c.eta, "x0": x0}
    return AuditCase(Lemma.LEMETA, exps, _kind(law), lhs, rhs, c.as_dict())


# -- analytic bound on the well-posed value --------------------------------


@dataclass(frozen=True)
class ValueBound:
    """``sup V <= A + max_K (B K^zeta - c' K)`` over the budget set, kept in logs."""

    lemeta: LemetaConstants
    l1l2: L1L2Constants
    A: float
    B: float
    loss_scale: float
    log_argmax: float
    log_value: float

    @property
    def value(self) -> float:
        """The bound as a float; ``inf`` when it exceeds the float range."""
        return math.exp(self.log_value) if self.log_value < 709.0 else math.inf

    def to_json(self) -> dict[str, Any]:
        return {
            "A": self.A,
            "B": self.B,
            "loss_scale": self.loss_scale,
            "log_argmax": self.log_argmax,
            "log_value": self.log_value,
            "value": self.value,
            "lemeta": self.lemeta.as_dict(),
            "l1l2": self.l1l2.as_dict(),
        }


def value_bound(spec: CptSpec, x0: float, model: KernelModel) -> ValueBound:
    """Upper bound on ``V(X)`` over ``E_Q[X] = x0`` for a well-posed spec.

    Lemeta bounds the gain integral by ``L1 + L2 J_eta``; L1L2 with
    ``(a, b, s) = (eta, beta, delta)`` bounds ``J_eta <= R1 + R2 K^zeta`` where
    ``K`` is the power-weighted loss integral. The loss term is at least
    ``c' K``: ``c' = c-`` for power weights and ``c- 2^(-(1-delta)/delta)`` for
    the TK weight, which satisfies ``p^d 2^(-(1-d)/d) <= w(p) <= p^d``. The
    gain weight is bounded above by ``p^gamma`` in both forms.
    """
    spec, x0 = reduce_reference(spec, x0)
    lem = lemeta_constants(spec, x0, model)
    l12 = l1l2_constants(lem.eta, spec.b, spec.d)
    A = spec.c_plus * (lem.L1 + lem.L2 * l12.R1)
    B = spec.c_plus * lem.L2 * l12.R2
    c_loss = spec.c_minus
    if spec.form is Form.TK:
        c_loss *= 2.0 ** (-(1.0 - spec.d) / spec.d)
    z = l12.zeta
    # the maximiser K* = (z B / c')^(1/(1-z)) overflows for z near 1, so work in logs
    log_k = math.log(z * B / c_loss) / (1.0 - z)
    log_value = float(np.logaddexp(math.log(A), math.log(c_loss) + log_k + math.log(1.0 / z - 1.0)))
    return ValueBound(lem, l12, A, B, c_loss, log_k, log_value)


# -- random corpora --------------------------------------------------------


def random_nonnegative_law(rng: np.random.Generator) -> Law:
    """Atoms, truncated or full Pareto, and truncated log-normal transforms."""
    kind = rng.integers(0, 5)
    if kind == 0:
        m = int(rng.integers(1, 21))
        values = rng.exponential(rng.uniform(0.1, 20.0), m) * (rng.random(m) < 0.9)
        probs = rng.dirichlet(np.full(m, rng.uniform(0.2, 3.0)))
        return DiscreteAtoms.from_unsorted(values, probs)
    if kind == 1:
        return DiscreteAtoms.constant(float(rng.choice([0.0, rng.uniform(0.0, 50.0)])))
    if kind == 2:
        kappa, scale = rng.uniform(0.3, 6.0), rng.uniform(0.05, 10.0)
        return QuantileGrid.pareto(kappa, scale)
    if kind == 3:
        kappa, scale = rng.uniform(0.2, 4.0), rng.uniform(0.05, 5.0)
        cap = scale * rng.uniform(1.5, 1e4)
        s_cap = (cap / scale) ** (-kappa)
        return QuantileGrid.from_nodes([(0.0, 1.0, scale), (1.0 - s_cap, s_cap, cap), (1.0, 0.0, cap)])
    mu, sd = rng.uniform(-2.0, 3.0), rng.uniform(0.1, 2.0)
    z = np.linspace(-6.0, 6.0, 121)
    s = special.ndtr(z)
    up = special.ndtr(-z)
    vals = np.exp(mu + sd * z)
    nodes = [(0.0, 1.0, 0.0)] + list(zip(s, up, vals)) + [(1.0, 0.0, vals[-1])]
    return QuantileGrid.from_nodes(nodes)


def random_eleql_exponents(rng: np.random.Generator) -> tuple[float, float, float]:
    while True:
        a, b, s = rng.uniform(0.1, 1.5), rng.uniform(0.1, 2.0), rng.uniform(0.1, 1.5)
        if b / (s * a) > 1.05:
            return a, b, s


def random_l1l2_exponents(rng: np.random.Generator) -> tuple[float, float, float]:
    s = rng.uniform(0.1, 1.0)
    a = rng.uniform(s * 1.02, 2.0)
    b = rng.uniform(a * 1.02, 3.0)
    return a, b, s


def random_well_posed_spec(rng: np.random.Generator) -> CptSpec:
    while True:
        a, b, g, d = rng.uniform(0.05, 1.0, 4)
        if a < b and a < g * 0.98 and d < b * 0.98:
            return CptSpec(float(a), float(b), float(g), float(d))


def random_budget_law(rng: np.random.Generator, model: KernelModel, x0: float) -> tuple[Law, QuantileGrid | None]:
    """A payoff of U with ``E_Q[X] = x0``: cell atoms or a continuous profile."""
    if rng.random() < 0.5:
        m = int(rng.integers(2, 21))
        cuts = np.sort(rng.random(m - 1))
        lo = np.concatenate([[0.0], cuts])
        hi = np.concatenate([cuts, [1.0]])
        q = hi - lo
        p = np.diff(np.concatenate([[0.0], model.p_cdf_u(cuts), [1.0]]))
        raw = rng.standard_cauchy(m) * rng.uniform(0.1, 10.0)
        values = raw - math.fsum(raw * q) + x0
        return DiscreteAtoms.from_unsorted(values, p, q), None
    k_gain, k_loss = rng.uniform(0.6, 4.0, 2)
    cap_gain, cap_loss = rng.uniform(2.0, 1e3, 2)
    scale = rng.uniform(0.1, 5.0)
    return budget_profile(model, x0, k_gain, cap_gain, k_loss, cap_loss, scale)


def budget_profile(
    model: KernelModel, x0: float, k_gain: float, cap_gain: float, k_loss: float, cap_loss: float, scale: float
) -> tuple[QuantileGrid, QuantileGrid]:
    """``scale (min(U^(-1/k_gain), cap_gain) - min((1-U)^(-1/k_loss), cap_loss) + c)``.

    The shift ``c`` is found by a short fixed-point iteration on the engine's
    own Q-mean, so the budget holds to round-off for the tabulated law.
    """
    u_lo, t_lo = cap_gain ** (-k_gain), cap_loss ** (-k_loss)
    us = np.geomspace(u_lo, 0.5, 160)
    ts = np.geomspace(t_lo, 0.5, 160)[:-1]
    pairs = [(1.0, 0.0)] + [(1.0 - t, t) for t in ts] + [(u, 1.0 - u) for u in us[::-1]] + [(0.0, 1.0)]

    def profile(u: float, t: float) -> float:
        gain = cap_gain if u <= u_lo else min(u ** (-1.0 / k_gain), cap_gain)
        loss = cap_loss if t <= t_lo else min(t ** (-1.0 / k_loss), cap_loss)
        return gain - loss

    base = np.maximum.accumulate(np.array([profile(u, t) for u, t in pairs]))
    c = x0 / scale
    for _ in range(50):
        knots = [Knot(u, t, scale * (x + c)) for (u, t), x in zip(pairs, base)]
        p_law, q_law = u_profile_laws(knots, model)
        err = expectation(q_law, "Q") - x0
        if abs(err) <= 1e-13 * max(1.0, abs(x0)):
            break
        c -= err / scale
    return p_law, q_law


def run_corpus(
    lemma: Lemma,
    size: int,
    seed: int,
    model: KernelModel | None = None,
    x0: float | None = None,
) -> list[AuditCase]:
    """Audit ``size`` random laws; the stream depends only on ``(lemma, seed)``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, list(Lemma).index(lemma)]))
    cases = []
    for _ in range(size):
        if lemma is Lemma.ELEQL:
            a, b, s = random_eleql_exponents(rng)
            cases.append(audit_eleql(a, b, s, random_nonnegative_law(rng)))
        elif lemma is Lemma.L1L2:
            a, b, s = random_l1l2_exponents(rng)
            cases.append(audit_l1l2(a, b, s, random_nonnegative_law(rng)))
        else:
            spec = random_well_posed_spec(rng)
            kern = model if model is not None else KernelModel.lognormal(float(rng.choice([0.01, 0.04, 0.16, 0.64])))
            budget = float(rng.uniform(-5.0, 5.0)) if x0 is None else x0
            law, q_law = random_budget_law(rng, kern, budget)
            cases.append(audit_lemeta(spec, budget, law, kern, q_law))
    return cases


def corpus_csv(cases: list[AuditCase]) -> str:
    header = ["case", "lemma", "law", "p1", "p2", "p3", "p4", "lhs", "rhs", "slack", "status"]
    rows = []
    for i, c in enumerate(cases):
        exps = list(c.exponents.values())[:4]
        exps += [None] * (4 - len(exps))
        rows.append([i, c.lemma.value, c.law_kind, *exps, c.lhs, c.rhs, c.slack, c.status.value])
    return csv_text(header, rows)


def summarize(cases: list[AuditCase]) -> dict[str, Any]:
    counts = {s.value: 0 for s in Status}
    for c in cases:
        counts[c.status.value] += 1
    zetas = [c.constants["zeta"] for c in cases if "zeta" in c.constants]
    out: dict[str, Any] = {"cases": len(cases), **counts}
    if zetas:
        out["zeta_min"] = min(zetas)
        out["zeta_max"] = max(zetas)
    return out


__all__ = [
    "AuditCase",
    "Lemma",
    "Status",
    "audit_eleql",
    "audit_l1l2",
    "audit_lemeta",
    "corpus_csv",
    "eleql_constant",
    "l1l2_constants",
    "lemeta_constants",
    "run_corpus",
    "summarize",
    "value_bound",
    "ValueBound",
]
