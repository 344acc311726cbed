"""
Which preferences make the portfolio problem blow up?
=====================================================

A CPT investor values a payoff X through power utilities with exponents
(alpha, beta) on gains and losses and probability distortions with exponents
(gamma, delta). The classifier decides from these four numbers alone whether
the supremum over budget-feasible payoffs is finite. For every ill-posed
verdict a witness family X_n is built whose value grows without bound while
E_Q[X_n] stays equal to the initial capital.

Run with ``python3 demos/01_regimes_and_witnesses.py``.
"""

from fractions import Fraction

import numpy as np

from cpt_lab import CptSpec, KernelModel, Verdict, classify, sweep, witness
from cpt_lab.witness import index_set

# A few preferences and what the classifier says about them.
examples = {
    "well-posed": CptSpec(0.5, 0.8, 0.6, 0.7),
    "alpha >= beta": CptSpec(0.9, 0.5, 1.0, 1.0),
    "beta < delta": CptSpec(0.9, 0.95, 0.9, 1.0),
    "alpha > gamma": CptSpec(0.9, 0.95, 0.3, 0.5),
    "alpha = gamma": CptSpec(0.5, 0.6, 0.5, 0.5),
}
print("Classifier verdicts")
for name, spec in examples.items():
    v = classify(spec)
    print(f"  {name:14s} {spec.alpha, spec.beta, spec.gamma, spec.delta}  ->  {v.verdict.value} ({v.cause.value})")

# The same question over a whole grid of exponents. Exact rational arithmetic
# means points on the boundary are classified as Boundary, never misfiled.
counts = {v: 0 for v in Verdict}
for _, v in sweep(Fraction(1, 10)):
    counts[v.verdict] += 1
print("\nSweep over {1/10, ..., 1}^4:", {k.value: n for k, n in counts.items()})

# Now the witnesses. The market is a log-normal pricing kernel with
# variance v; v = 0 is the degenerate case rho = 1.
print("\nWitness values V(X_n) with zero initial capital")
n_list = [1, 10, 100, 1000, 10000]
for name in ("alpha >= beta", "beta < delta", "alpha > gamma"):
    spec = examples[name]
    cause = classify(spec).cause
    for v in (0.0, 0.16):
        model = KernelModel(v=0.0) if v == 0 else KernelModel.lognormal(v)
        r = witness(cause, spec, model, 0.0, n_list)
        row = "  ".join(f"{x:10.3f}" for x in r.numeric_values)
        print(f"  {cause.value:20s} v={v:4.2f}  {row}   max budget residual {r.budget_residuals.max():.1e}")

# For the first construction V grows like n^alpha; the fitted log-log slope
# between n = 1e3 and 1e4 sits close to alpha = 0.9.
spec = examples["alpha >= beta"]
r = witness(classify(spec).cause, spec, KernelModel.lognormal(0.16), 0.0, index_set(10_000, 40))
idx = np.array(r.indices)
sel = idx >= 1000
slope = np.polyfit(np.log(idx[sel]), np.log(r.numeric_values[sel]), 1)[0]
print(f"\nFitted growth exponent of the first witness: {slope:.3f} (alpha = 0.9)")
