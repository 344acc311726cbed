"""Command-line entry point ``cpt-lab``.

Every subcommand prints one JSON document on stdout and writes its CSV
artifacts under ``--output-dir``. Exit codes: 0 on success, 2 on
precondition, regime, domain or input errors, 3 when an audit finds a
violation.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import audit as audit_mod
from .choquet import SUSPECT_MARGIN, choquet_minus, choquet_plus, cpt_value, shift
from .core import CptError, CptSpec, Form, parse_exponent
from .io import csv_text, json_text, read_json
from .laws import law_from_json
from .market import KernelModel, MarketSpec, sample_joint, solve_market_price_of_risk, verify_assumptions
from .optimizer import PayoffGrid, diverge, optimize
from .regime import CAUSE_KEYS, classify, sweep
from .witness import index_set, witness

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_VIOLATION = 3

#: spec used by ``witness`` for each cause when no spec is given
DEFAULT_WITNESS_SPECS = {
    "a_ge_b": CptSpec(0.9, 0.5, 1.0, 1.0),
    "bd_lt_1": CptSpec(0.9, 0.95, 0.9, 1.0),
    "ag_gt_1": CptSpec(0.9, 0.95, 0.3, 0.5),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors share the precondition exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec-file", type=Path, help="CptSpec JSON file")
    for name in ("alpha", "beta", "gamma", "delta"):
        p.add_argument(f"--{name}", type=str, help="exponent in (0, 1]; decimals or fractions like 3/4")
    p.add_argument("--form", choices=[f.value for f in Form], default="power")


def _spec_from_args(args: argparse.Namespace, default: CptSpec | None = None) -> CptSpec:
    """Spec from ``--spec-file``, else from the four exponent flags, else ``default``."""
    if args.spec_file is not None:
        obj = read_json(args.spec_file)
        if not isinstance(obj, dict):
            raise ValueError(f"{args.spec_file}: expected a JSON object")
        return CptSpec.from_json(obj)
    names = ("alpha", "beta", "gamma", "delta")
    flags = [getattr(args, k) for k in names]
    if all(v is not None for v in flags):
        return CptSpec(*(parse_exponent(v) for v in flags), form=Form(args.form))
    if default is not None and all(v is None for v in flags):
        return default
    raise ValueError("give --spec-file or all of --alpha --beta --gamma --delta")


def _model_from_args(args: argparse.Namespace) -> KernelModel:
    market_file = getattr(args, "market_file", None)
    if market_file is not None:
        return solve_market_price_of_risk(MarketSpec.from_json(read_json(market_file)))
    return KernelModel.lognormal(float(args.v))


def _write(out_dir: Path, name: str, text: str) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _emit(obj: Any) -> None:
    sys.stdout.write(json_text(obj) + "\n")


# -- subcommands -----------------------------------------------------------


def cmd_classify(args: argparse.Namespace) -> int:
    _emit(classify(_spec_from_args(args)).to_json())
    return EXIT_OK


def cmd_classify_grid(args: argparse.Namespace) -> int:
    step = Fraction(args.step)
    rows, counts = [], {}
    for spec, verdict in sweep(step):
        exps = [str(x) for x in (spec.alpha, spec.beta, spec.gamma, spec.delta)]
        rows.append([*exps, verdict.verdict.value, verdict.cause.value])
        counts[verdict.verdict.value] = counts.get(verdict.verdict.value, 0) + 1
    path = _write(args.output_dir, "classify_grid.csv", csv_text(["alpha", "beta", "gamma", "delta", "verdict", "cause"], rows))
    _emit({"step": str(step), "points": len(rows), "counts": counts, "csv_path": path})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    obj = read_json(args.law_file)
    if not isinstance(obj, dict):
        raise ValueError(f"{args.law_file}: expected a JSON object")
    law = law_from_json(obj)
    value = cpt_value(law, spec, args.suspect_margin)
    shifted = spec.with_reference_removed()
    base = shift(law, -spec.reference_point) if spec.reference_point != 0 else law
    _emit(
        {
            "value": value.to_json(),
            "v_plus": choquet_plus(base.positive_part(), shifted, args.suspect_margin).to_json(),
            "v_minus": choquet_minus(base.negative_part(), shifted, args.suspect_margin).to_json(),
        }
    )
    return EXIT_OK


def cmd_witness(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args, DEFAULT_WITNESS_SPECS[args.cause])
    model = _model_from_args(args)
    report = witness(CAUSE_KEYS[args.cause], spec, model, args.x0, index_set(args.n_max, args.points))
    csv_path = _write(args.output_dir, f"witness_{args.cause}.csv", report.to_csv())
    _emit({"spec": spec.to_json(), "report": report.to_json(), "csv_path": csv_path})
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    lemma = audit_mod.Lemma(args.lemma)
    model = KernelModel.lognormal(args.v) if args.v is not None else None
    cases = audit_mod.run_corpus(lemma, args.corpus_size, args.seed, model=model)
    path = _write(args.output_dir, f"audit_{lemma.value}.csv", audit_mod.corpus_csv(cases))
    summary = audit_mod.summarize(cases)
    _emit({"lemma": lemma.value, "seed": args.seed, "csv_path": path, **summary})
    return EXIT_VIOLATION if summary["violation"] else EXIT_OK


def cmd_market(args: argparse.Namespace) -> int:
    market = MarketSpec.from_json(read_json(args.market_file))
    model = solve_market_price_of_risk(market)
    out: dict[str, Any] = {"kernel": model.to_json()}
    if not model.degenerate:
        out["assumptions"] = verify_assumptions(model, x0=args.x0, n_mc=args.check_samples, seed=args.seed).to_json()
    if args.samples:
        sample = sample_joint(model, args.measure, args.samples, args.seed)
        out["sample_csv_path"] = _write(args.output_dir, f"sample_{args.measure}.csv", sample.to_csv())
    _emit(out)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    model = _model_from_args(args)
    grid = PayoffGrid.geometric(args.n_u, args.n_star)
    result = optimize(spec, model, args.x0, iters=args.iters, seed=args.seed, grid=grid, starts=args.starts)
    bound = audit_mod.value_bound(spec, args.x0, model)
    _emit(
        {
            "best_value": result.best_value,
            "trace_csv_path": _write(args.output_dir, "optimize_trace.csv", result.trace_csv()),
            "profile_csv_path": _write(args.output_dir, "optimize_profile.csv", result.best.to_csv()),
            "evaluations": result.evaluations,
            "start_values": list(result.start_values),
            "budget_residual": result.best.budget_residual,
            "analytic_bound": bound.value,
            "analytic_bound_log": bound.log_value,
        }
    )
    return EXIT_OK


def cmd_diverge(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    model = _model_from_args(args)
    result = diverge(spec, model, args.x0, args.target_M)
    csv_path = _write(args.output_dir, "diverge.csv", result.report.to_csv())
    _emit({**result.to_json(), "csv_path": csv_path})
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=Path("."), help="directory for CSV artifacts")

    parser = _Parser(prog="cpt-lab", description="CPT portfolio objective: evaluation, regimes, witnesses, audits, search.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common], help="well-posedness verdict for one spec")
    _add_spec_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("classify-grid", parents=[common], help="verdicts on the rational grid of (0, 1]^4")
    p.add_argument("--step", default="1/20", help="grid step 1/m")
    p.set_defaults(func=cmd_classify_grid)

    p = sub.add_parser("evaluate", parents=[common], help="V(X) for a law given as JSON")
    _add_spec_args(p)
    p.add_argument("--law-file", type=Path, required=True)
    p.add_argument("--suspect-margin", type=float, default=SUSPECT_MARGIN)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("witness", parents=[common], help="diverging payoff sequence for an ill-posed cause")
    _add_spec_args(p)
    p.add_argument("--cause", choices=sorted(CAUSE_KEYS), required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--v", type=float, default=0.0, help="kernel log-variance")
    p.add_argument("--market-file", type=Path, help="derive the kernel from a market instead of --v")
    p.add_argument("--points", type=int, default=40, help="number of log-spaced indices")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("audit", parents=[common], help="random-corpus audit of one inequality")
    p.add_argument("--lemma", choices=[m.value for m in audit_mod.Lemma], required=True)
    p.add_argument("--corpus-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--v", type=float, default=None, help="fix the kernel variance of lemeta cases")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("market", parents=[common], help="kernel of a market and its assumption checks")
    p.add_argument("--market-file", type=Path, required=True)
    p.add_argument("--samples", type=int, default=0, help="draws of (rho, U, U*) to write")
    p.add_argument("--measure", choices=["P", "Q"], default="P")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=float, default=10.0, help="capital used by the budget check")
    p.add_argument("--check-samples", type=int, default=100_000)
    p.set_defaults(func=cmd_market)

    p = sub.add_parser("optimize", parents=[common], help="search a well-posed problem for a high-value payoff")
    _add_spec_args(p)
    p.add_argument("--market-file", type=Path)
    p.add_argument("--v", type=float, default=0.16, help="kernel log-variance when no market file is given")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--iters", type=int, default=2000, help="objective evaluations per start")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=4)
    p.add_argument("--n-u", type=int, default=16)
    p.add_argument("--n-star", type=int, default=2)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("diverge", parents=[common], help="first witness index whose value exceeds a target")
    _add_spec_args(p)
    p.add_argument("--market-file", type=Path)
    p.add_argument("--v", type=float, default=0.0, help="kernel log-variance when no market file is given")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--target-M", dest="target_M", type=float, required=True)
    p.set_defaults(func=cmd_diverge)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CptError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"cpt-lab {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
