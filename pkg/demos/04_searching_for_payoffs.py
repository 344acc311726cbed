"""
Searching for good payoffs, bounded and unbounded
=================================================

Payoffs are piecewise constant in (U, U*). The optimizer runs a seeded
multi-start pattern search under the budget constraint and records the best
value found so far. For a well-posed preference the trace levels off. For an
ill-posed one, ``diverge`` walks the witness family until the value passes
any target.

Run with ``python3 demos/04_searching_for_payoffs.py``.
"""

from cpt_lab import CptSpec, KernelModel, PayoffGrid, diverge, exhaustive_search, optimize

model = KernelModel.lognormal(0.16)
well = CptSpec(0.5, 0.8, 0.6, 0.7)

res = optimize(well, model, 1.0, iters=1500, seed=0, grid=PayoffGrid.geometric(8, 2), starts=4)
checkpoints = [0, len(res.trace) // 10, len(res.trace) // 2, len(res.trace) - 1]
print("Well-posed search, best value so far:")
for i in checkpoints:
    print(f"  evaluation {i:5d}: {res.trace[i]:.6f}")
print(f"  constant payoff x0 = 1 would give {1.0:.6f}")
print("  best payoff by cell (rows U, columns U*):")
print(res.best.node_values.round(3))

# On a small grid with quantized values the search can be checked exhaustively.
grid = PayoffGrid.from_edges([0.0, 0.25, 0.5, 1.0])
levels = [-2.0, -1.0, 0.0, 1.0, 3.0]
best, _ = exhaustive_search(well, model, 1.0, grid, levels)
quick = optimize(well, model, 1.0, iters=2000, seed=1, grid=grid, starts=3, levels=levels)
print(f"\nQuantized search {quick.best_value:.12f} vs exhaustive {best:.12f}")

# Ill-posed: pick the smallest witness index whose value beats each target.
ill = CptSpec(0.9, 0.95, 0.3, 0.5)
print("\nIll-posed preference: the value passes any target")
for target in (10.0, 100.0, 1000.0):
    r = diverge(ill, model, 0.0, target)
    print(f"  target {target:7.0f}: witness index {r.index:8d} gives V = {r.value:.2f}")
