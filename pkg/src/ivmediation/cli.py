"""Command-line interface.

Exit codes: 0 success, 2 input error (bad file, bad arguments, invalid
population), 3 statistical degeneracy (weak instrument, empty cell,
singular design).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import oracle
from .errors import DegeneracyError, InputError
from .estimators import bootstrap, estimate_effects_iv, estimate_effects_si
from .harness import McConfig, run_mc
from .population import build_paper_counterexample
from .sampler import Dataset, draw
from .scenario import load_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


def _clean(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return 0.0 if obj == 0 else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _error_payload(exc: Exception) -> dict:
    payload = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("d", "z", "first_stage"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    return payload


def cmd_oracle(args) -> int:
    pop = load_scenario(args.scenario).population()
    report, err = oracle.full_report(pop)
    if err is not None:
        report["error"] = _error_payload(err)
    _emit(dumps(report), args.out)
    return EXIT_DEGENERATE if err is not None else EXIT_OK


def cmd_sample(args) -> int:
    pop = load_scenario(args.scenario).population()
    ds = draw(pop, args.n, args.seed)
    _emit(ds.to_csv(), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    ds = Dataset.read_csv(args.csv)
    out = {"n": ds.n}
    for name in args.estimator or ["iv"]:
        if name == "iv":
            out["iv"] = estimate_effects_iv(ds).to_dict()
        else:
            out["si"] = estimate_effects_si(ds).to_dict()
        if args.bootstrap_reps:
            out[name]["bootstrap"] = bootstrap(ds, name, args.bootstrap_reps, args.seed).to_dict()
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    scen = load_scenario(args.scenario)
    pop = scen.population()
    if scen.mc is None and args.n is None:
        raise InputError(f"{args.scenario}: no 'mc' block and no --n given")
    mc = scen.mc
    cfg = McConfig(
        population=pop,
        n_grid=args.n or mc.n_grid,
        reps=args.reps if args.reps is not None else (mc.reps if mc else 200),
        seed=args.seed if args.seed is not None else (mc.seed if mc else 0),
        estimators=args.estimator or (mc.estimators if mc else ["iv"]),
    )
    report = run_mc(cfg)
    outputs = scen.outputs
    if args.out:
        base = Path(args.out)
        base.mkdir(parents=True, exist_ok=True)
        json_path, csv_path = base / "mc_report.json", base / "mc_report.csv"
    else:
        json_path = outputs.json_path if outputs and outputs.json_path else None
        csv_path = outputs.csv_path if outputs and outputs.csv_path else None
    if json_path:
        Path(json_path).write_text(dumps(report.to_dict()) + "\n")
    if csv_path:
        Path(csv_path).write_text(report.to_csv())
    if not json_path:
        _emit(dumps(report.to_dict()), None)
    return EXIT_OK


def paper_example_report(alpha: float) -> dict:
    pop = build_paper_counterexample(alpha)
    truth = oracle.true_effect_set(pop)
    theta = oracle.population_theta_iv(pop, strict=False)
    iv = oracle.iv_mediation_estimands(theta, pop.p_z)
    checks = oracle.assumption_report(pop)
    groups = oracle.complier_means(pop)
    return {
        "alpha": alpha,
        "q1": checks.q1,
        "q2": checks.q2,
        "subgroup_means": {"complier": groups.d0_up, "defier": groups.d0_down},
        "beta1_iv": theta.beta1,
        "nie0_iv": iv.nie0_iv,
        "nie0": truth.nie0,
        "assumptions": checks.to_dict(),
        "verdict": (
            "IV estimand of NIE0 is 0 although both instrument-response groups have "
            "positive mediator effects; instrument monotonicity fails in the untreated arm"
        ),
    }


def cmd_paper_example(args) -> int:
    _emit(dumps(paper_example_report(args.alpha)), args.out)
    return EXIT_OK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivmed", description="Instrumental-variable mediation: oracle, sampler, estimators, Monte Carlo")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact population effects, IV estimands and diagnostics")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sample", help="draw a dataset as CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate effects from a d,z,m,y CSV")
    p.add_argument("csv")
    p.add_argument("--estimator", choices=("iv", "si"), action="append")
    p.add_argument("--bootstrap-reps", type=_positive_int, default=0)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mc", help="Monte Carlo study from a scenario's mc block")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=_positive_int, action="append", help="override n_grid (repeatable)")
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--seed", type=_nonneg_int)
    p.add_argument("--estimator", choices=("iv", "si"), action="append")
    p.add_argument("--out", help="directory for mc_report.json and mc_report.csv")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("paper-example", help="complier/defier cancellation example")
    p.add_argument("--alpha", type=_positive_float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_paper_example)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(dumps({"error": _error_payload(exc)}) + "\n")
        return EXIT_INPUT
    except DegeneracyError as exc:
        sys.stderr.write(dumps({"error": _error_payload(exc)}) + "\n")
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
