"""Cumulative prospect theory portfolio objective in a log-normal kernel market.

The package evaluates the distorted objective, classifies well-posedness
from the four power exponents, builds diverging payoff sequences for the
ill-posed regimes, audits the moment inequalities behind the well-posed
case and searches for high-value budget-feasible payoffs.
"""

from .audit import AuditCase, Lemma, Status, audit_eleql, audit_l1l2, audit_lemeta, run_corpus, value_bound
from .choquet import (
    UndefinedFunctional,
    choquet_minus,
    choquet_plus,
    cpt_value,
    distorted_integral,
    expectation,
    truncated_mean,
    truncation_level,
)
from .core import (
    CptError,
    CptSpec,
    DomainError,
    ExtendedValue,
    Form,
    PreconditionError,
    RegimeError,
    ValueKind,
    distortion_minus,
    distortion_plus,
    utility_minus,
    utility_plus,
)
from .laws import DiscreteAtoms, Law, PowerTail, QuantileGrid, law_from_json
from .market import KernelModel, MarketSpec, kernel_law, sample_joint, solve_market_price_of_risk, verify_assumptions
from .optimizer import PayoffGrid, PayoffProfile, diverge, evaluate, exhaustive_search, optimize
from .regime import Cause, RegimeVerdict, Verdict, classify, sweep
from .witness import WitnessReport, witness, witness_alpha_gamma, witness_alpha_ge_beta, witness_beta_delta

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
