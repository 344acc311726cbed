"""
Auditing the bounding inequalities on random laws
=================================================

The finite-value bound in the well-posed regime is built from three
inequalities. Each is evaluated here on a seeded corpus of random laws:
discrete atoms, Pareto tails and mixtures. A case passes when the left side
does not exceed the right side, and is vacuous when the right side is
infinite.

Run with ``python3 demos/03_inequality_audits.py``.
"""

from cpt_lab import CptSpec, KernelModel, Lemma, run_corpus, value_bound
from cpt_lab.audit import summarize

for lemma in Lemma:
    s = summarize(run_corpus(lemma, 300, seed=42))
    extra = f", zeta in [{s['zeta_min']:.3f}, {s['zeta_max']:.3f}]" if "zeta_min" in s else ""
    print(f"{lemma.value:7s} {s['cases']} cases: {s['pass']} pass, {s['vacuous']} vacuous, {s['violation']} violations{extra}")

# The assembled bound is astronomically loose but finite. It is reported in
# logs because it often overflows a double.
model = KernelModel.lognormal(0.16)
for spec in (CptSpec(0.5, 0.8, 0.6, 0.7), CptSpec(0.3, 0.9, 0.8, 0.4)):
    b = value_bound(spec, 1.0, model)
    print(f"\nbound for {spec.alpha, spec.beta, spec.gamma, spec.delta}: log V <= {b.log_value:.1f}  (value {b.value:.3g})")
