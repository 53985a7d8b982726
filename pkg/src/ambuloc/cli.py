"""Command-line entry point: ``ambuloc <command> ...``.

Every command writes its artifacts plus a ``manifest.json`` into ``--out`` and
exits with 0 (ok), 2 (invalid input), 3 (infeasible) or 4 (time limit hit).
With ``--quiet`` only the artifact paths are printed.

Relative ``--config`` paths that do not exist in the working directory are looked
up in ``$AMBULOC_CONFIG_DIR`` (default ``~/.config/ambuloc``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .coverage import build_coverage_sets, build_reliability_table, dump_reliability_csv
from .formulation import (
    DETERMINISTIC,
    PROBABILISTIC,
    ModelError,
    add_epsilon_constraint,
    build_model,
    require_open,
)
from .generator import GeneratorConfig, generate_instance
from .instance import InstanceFormatError, InstanceValidationError, Instance, load_instance, save_instance
from .pareto import (
    compute_eps_min,
    default_knee_threshold,
    knee_point,
    sweep,
    write_front_csv,
)
from .plan import Plan, PlanError, baseline_plan_load, save_plan
from .scenario import SCENARIOS, ScenarioError, compare, deltas_markdown, run_scenarios, to_csv, to_markdown
from .solver import INFEASIBLE, TIME_LIMIT, AuditError, SolverConfig, decode, export_mps, import_solution, solve
from .solver.mps import SolutionParseError

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_TIME_LIMIT = 0, 2, 3, 4
CONFIG_ENV = "AMBULOC_CONFIG_DIR"
MODEL_ALIASES = {
    "deterministic": DETERMINISTIC,
    "det": DETERMINISTIC,
    "fleet": DETERMINISTIC,
    "probabilistic": PROBABILISTIC,
    "prob": PROBABILISTIC,
    "lr-mexclp": PROBABILISTIC,
}


class InputError(Exception):
    pass


# -- helpers ---------------------------------------------------------------


def config_dir() -> Path:
    return Path(os.environ.get(CONFIG_ENV) or Path.home() / ".config" / "ambuloc")


def resolve_config(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    return config_dir() / p


def _model_kind(text: str) -> str:
    try:
        return MODEL_ALIASES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown model {text!r}; use deterministic or probabilistic") from None


def _load(path: str) -> Instance:
    try:
        return load_instance(path)
    except FileNotFoundError as exc:
        raise InputError(f"instance file not found: {path}") from exc
    except (InstanceFormatError, InstanceValidationError) as exc:
        raise InputError(f"invalid instance {path}: {exc}") from exc


def _rate(r) -> str:
    return "n/a" if r is None else f"{float(r * 100):.2f}%"


def coverage_report(plan: Plan, instance: Instance, model_name: str, status: str) -> str:
    lines = [
        f"model: {model_name}",
        f"status: {status}",
        f"objective: {float(plan.objective):.6f} ({plan.objective})",
        f"stations opened: {plan.stations}",
    ]
    for u, amb in enumerate(instance.ambulance_types):
        lines.append(f"coverage {amb.label}: {_rate(plan.rate_by_type.get(u))}")
    lines.append(f"coverage total: {_rate(plan.total_rate)}")
    return "\n".join(lines) + "\n"


class Run:
    """Collects artifacts of one command and writes the manifest."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.start = time.perf_counter()
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[Path] = []
        self.fingerprint: str | None = None

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(p)
        return p

    def say(self, text: str) -> None:
        if not self.args.quiet:
            print(text)

    def finish(self) -> None:
        settings = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("out", "quiet", "func")}
        blob = json.dumps(settings, sort_keys=True, default=str).encode()
        manifest = {
            "command_line": ["ambuloc", *self.argv],
            "config_hash": hashlib.sha256(blob).hexdigest(),
            "instance_fingerprint": self.fingerprint,
            "seed": getattr(self.args, "seed", None),
            "tool_version": __version__,
            "wall_time_s": round(time.perf_counter() - self.start, 3),
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        if self.args.quiet:
            for p in self.artifacts:
                print(p)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        method=args.method if args.method != "export" else "exact",
        time_limit=args.time_limit,
        seed=args.seed,
        budget=args.budget,
        warm_start=not getattr(args, "no_warm_start", False),
        jobs=args.jobs,
    )


def _model(args, instance: Instance):
    sets = build_coverage_sets(instance)
    table = build_reliability_table(instance, sets) if args.model == PROBABILISTIC else None
    model = build_model(instance, args.model, static=args.static, sets=sets, table=table)
    model = require_open(model, args.mandatory or ())
    if args.epsilon is not None:
        model = add_epsilon_constraint(model, args.epsilon)
    return model, table


# -- commands --------------------------------------------------------------


def cmd_generate(args, run: Run) -> int:
    doc = {}
    if args.config:
        path = resolve_config(args.config)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise InputError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    overrides = {
        "num_demand_points": args.points,
        "num_sites": args.sites,
        "num_periods": args.periods,
        "demand_profile": args.profile,
        "spatial_model": args.spatial,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    doc["seed"] = args.seed
    try:
        cfg = GeneratorConfig.full_scale(**doc) if args.full_scale else GeneratorConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid generator configuration: {exc}") from exc
    instance = generate_instance(cfg)
    run.fingerprint = instance.fingerprint
    save_instance(instance, run.path("instance.json"))
    run.say(f"generated {instance.n_points} points, {instance.n_sites} sites, {instance.num_periods} periods")
    return EXIT_OK


def cmd_solve(args, run: Run) -> int:
    instance = _load(args.instance)
    run.fingerprint = instance.fingerprint
    model, table = _model(args, instance)
    if args.dump_reliability and table is not None:
        dump_reliability_csv(table, run.path("reliability.csv"))
    if args.method == "export":
        export_mps(model, run.path("model.mps"))
        run.say(f"wrote {model.name} with {len(model.variables)} variables, {len(model.constraints)} constraints")
        return EXIT_OK
    sol = solve(model, _solver_config(args))
    if sol.status == INFEASIBLE or not sol.has_incumbent:
        run.say(f"status: {sol.status}")
        return EXIT_INFEASIBLE if sol.status == INFEASIBLE else EXIT_TIME_LIMIT
    plan = decode(sol, instance, model)
    save_plan(plan, run.path("plan.json"), instance)
    report = coverage_report(plan, instance, model.name, sol.status)
    if sol.bound is not None and sol.status == TIME_LIMIT:
        report += f"bound: {float(sol.bound):.6f}\n"
    run.path("report.txt").write_text(report, encoding="utf-8")
    run.say(report.rstrip())
    return EXIT_TIME_LIMIT if sol.status == TIME_LIMIT else EXIT_OK


def cmd_sweep(args, run: Run) -> int:
    instance = _load(args.instance)
    run.fingerprint = instance.fingerprint
    eps_min = args.eps_min if args.eps_min is not None else compute_eps_min(instance)
    eps_max = args.eps_max if args.eps_max is not None else instance.n_sites
    if eps_min > eps_max:
        raise InputError(f"--eps-min {eps_min} exceeds --eps-max {eps_max}")
    front = sweep(
        instance, args.model, eps_min, eps_max, _solver_config(args),
        mandatory_sites=args.mandatory or (), static=args.static,
    )
    write_front_csv(front.points, instance, run.path("front.csv"))
    write_front_csv(front.raw, instance, run.path("raw.csv"))
    for p in front.raw:
        if p.plan is not None:
            save_plan(p.plan, run.path(f"plans/eps_{p.epsilon:04d}.json"), instance)
    knee = knee_point(front, default_knee_threshold(instance, args.knee_share))
    summary = {
        "model": front.model_name,
        "eps_min": eps_min,
        "eps_max": eps_max,
        "front_size": len(front.points),
        "failed_epsilons": [{"epsilon": p.epsilon, "status": p.status, "error": p.error} for p in front.failed],
        "monotonicity_violations": front.monotonicity_violations(),
        "knee": None if knee is None else {"epsilon": knee.epsilon, "stations_used": knee.stations_used},
        "knee_share": args.knee_share,
    }
    run.path("summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    run.say(f"{front.model_name}: {len(front.points)} front points over eps {eps_min}..{eps_max}")
    if knee is not None:
        run.say(f"knee at {knee.stations_used} stations (eps {knee.epsilon})")
    if not front.points:
        return EXIT_INFEASIBLE
    if any(p.status == TIME_LIMIT for p in front.raw):
        return EXIT_TIME_LIMIT
    return EXIT_OK


def cmd_scenario(args, run: Run) -> int:
    instance = _load(args.instance)
    run.fingerprint = instance.fingerprint
    ids = [s.strip().upper() for s in args.scenarios.split(",") if s.strip()]
    bad = [s for s in ids if s not in SCENARIOS]
    if bad:
        raise InputError(f"unknown scenario(s) {bad}; choose from {', '.join(SCENARIOS)}")
    baseline = None
    if args.baseline:
        try:
            baseline = baseline_plan_load(args.baseline, instance)
        except FileNotFoundError as exc:
            raise InputError(f"baseline file not found: {args.baseline}") from exc
    kinds = [_model_kind(k) for k in args.models.split(",")]
    rows = run_scenarios(
        instance, ids, kinds, baseline, _solver_config(args),
        epsilon=args.epsilon, mandatory_sites=args.mandatory or (),
    )
    run.path("scenarios.csv").write_text(to_csv(rows, instance), encoding="utf-8")
    md = to_markdown(rows, instance)
    run.path("scenarios.md").write_text(md, encoding="utf-8")
    run.path("comparison.md").write_text(deltas_markdown(compare(rows)), encoding="utf-8")
    for r in rows:
        save_plan(r.plan, run.path(f"plans/{r.model_kind}_{r.scenario}.json"), instance)
    run.say(md.rstrip())
    return EXIT_TIME_LIMIT if any(r.status == TIME_LIMIT for r in rows) else EXIT_OK


def cmd_export_mps(args, run: Run) -> int:
    instance = _load(args.instance)
    run.fingerprint = instance.fingerprint
    model, _ = _model(args, instance)
    export_mps(model, run.path("model.mps"))
    run.say(f"wrote {model.name}: {len(model.variables)} variables, {len(model.constraints)} constraints")
    return EXIT_OK


def cmd_import_solution(args, run: Run) -> int:
    instance = _load(args.instance)
    run.fingerprint = instance.fingerprint
    model, _ = _model(args, instance)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sol = import_solution(args.solution, model)
    except FileNotFoundError as exc:
        raise InputError(f"solution file not found: {args.solution}") from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    plan = decode(sol, instance, model)
    save_plan(plan, run.path("plan.json"), instance)
    report = coverage_report(plan, instance, model.name, sol.status)
    run.path("report.txt").write_text(report, encoding="utf-8")
    run.say(report.rstrip())
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="single source of randomness")
    p.add_argument("--quiet", action="store_true", help="print only artifact paths")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent solves")


def _model_args(p: argparse.ArgumentParser, epsilon_help: str = "station cap") -> None:
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--model", type=_model_kind, default=DETERMINISTIC, help="deterministic | probabilistic")
    p.add_argument("--static", action="store_true", help="single-period model over aggregated demand")
    p.add_argument("--epsilon", type=int, default=None, help=epsilon_help)
    p.add_argument("--mandatory", type=int, nargs="*", help="site ids that must stay open")


def _solver_args(p: argparse.ArgumentParser, methods=("exact", "heuristic")) -> None:
    p.add_argument("--method", choices=methods, default="exact")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per solve")
    p.add_argument("--budget", type=int, default=20000, help="heuristic move evaluations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ambuloc", description="Multi-period ambulance location models")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance")
    _common(p, "out/generate")
    p.add_argument("--config", help=f"generator JSON (relative names also searched in ${CONFIG_ENV})")
    p.add_argument("--full-scale", action="store_true", help="427 points, 1527 sites, 24 periods")
    p.add_argument("--points", type=int)
    p.add_argument("--sites", type=int)
    p.add_argument("--periods", type=int)
    p.add_argument("--profile", choices=("uniform", "two-peak-diurnal"))
    p.add_argument("--spatial", choices=("uniform-square", "clustered"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one model")
    _common(p, "out/solve")
    _model_args(p)
    _solver_args(p, ("exact", "heuristic", "export"))
    p.add_argument("--dump-reliability", action="store_true", help="write the b/q table as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="epsilon-constraint sweep over station counts")
    _common(p, "out/sweep")
    _model_args(p, argparse.SUPPRESS)
    _solver_args(p)
    p.add_argument("--eps-min", type=int, help="default: fewest stations hosting the whole fleet")
    p.add_argument("--eps-max", type=int, help="default: number of sites")
    p.add_argument("--knee-share", type=float, default=0.005,
                   help="knee when gain per station falls below this share of total demand")
    p.add_argument("--no-warm-start", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scenario", help="run the S1-S5 scenario ladder")
    _common(p, "out/scenario")
    p.add_argument("instance")
    p.add_argument("--baseline", help="plan JSON with the fixed configuration (needed for S1-S3)")
    p.add_argument("--scenarios", default="S1,S2,S3,S4,S5")
    p.add_argument("--models", default="deterministic,probabilistic")
    p.add_argument("--epsilon", type=int, default=None, help="station cap for S4 and S5")
    p.add_argument("--mandatory", type=int, nargs="*", help="site ids always open in S4 and S5")
    _solver_args(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("export-mps", help="write a model in MPS format")
    _common(p, "out/export")
    _model_args(p)
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("import-solution", help="audit and decode an external solver's solution")
    _common(p, "out/import")
    _model_args(p)
    p.add_argument("solution", help="file of 'name value' lines")
    p.set_defaults(func=cmd_import_solution)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "epsilon", None) is not None and args.epsilon < 0:
        print("error: --epsilon must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    run = Run(args, argv)
    try:
        code = args.func(args, run)
    except (InputError, PlanError, ModelError, ScenarioError, SolutionParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INFEASIBLE
    run.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
