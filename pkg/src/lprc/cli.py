"""Command-line front end.

Every command prints one JSON report (or writes it to ``--out``) holding the
tool version, the fully resolved configuration and the result.  Exit codes:
0 on success, 1 on invalid input or a failed validation, 2 when a search or
enumeration limit aborts the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .composite import DEFAULT_ENUM_CAP, EnumerationCapExceeded
from .genbench import (
    ALGORITHMS, GenConfig, KCoverSpec, gen_kcover_instance, gen_random_instance, max_k_cover_value,
    prepare, random_kcover_spec, run_trials,
)
from .instance import InstanceFormatError, load_instance, save_instance, validate
from .oracle import Limits, OracleLimitExceeded, solve_exact
from .relaxation import Fixed, Full, LowCost, Modified, RestrictionError, solve_relaxation
from .rounding import AssumptionViolation, RoundingParams, frac

log = logging.getLogger("lprc")

EXIT_OK, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _report(command: str, config: dict, result) -> dict:
    return {"tool": "lprc", "version": __version__, "command": command,
            "config": config, "result": result}


def _load_valid(path: str):
    instance = load_instance(_read(path))
    problems = validate(instance)
    if problems:
        raise UsageError("invalid instance: " + "; ".join(v.message for v in problems))
    return instance


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    try:
        instance = load_instance(_read(args.path))
    except InstanceFormatError as exc:
        _emit(_dump(_report("validate", {"path": args.path},
                            {"valid": False, "violations": [{"code": "format", "message": str(exc)}]})),
              args.out)
        return EXIT_INVALID
    problems = validate(instance)
    _emit(_dump(_report("validate", {"path": args.path},
                        {"valid": not problems, "violations": [v.to_json() for v in problems]})),
          args.out)
    return EXIT_OK if not problems else EXIT_INVALID


def _restriction(args, instance):
    kind = args.restriction
    omega = {}
    for item in args.omega or []:
        if "=" not in item:
            raise UsageError(f"--omega expects bus=line, got {item!r}")
        b, l = item.split("=", 1)
        omega[b] = l
    delta = None
    if kind in ("low-cost", "modified"):
        if args.delta is not None:
            delta = frac(args.delta)
        elif args.eta is not None:
            delta = RoundingParams(args.eta, instance.K).delta
        else:
            raise UsageError("--delta or --eta is required for this restriction")
    if kind == "full":
        return Full()
    if kind == "fixed":
        return Fixed(omega)
    if kind == "low-cost":
        return LowCost(delta)
    if args.tau is None:
        raise UsageError("--tau is required for the modified restriction")
    tau = frac(args.tau)
    if kind == "modified" and args.eta is not None and args.delta is None:
        delta = delta * tau
    return Modified(delta, tau, omega)


def cmd_relax(args) -> int:
    instance = _load_valid(args.path)
    restriction = _restriction(args, instance)
    plan = solve_relaxation(instance, restriction, exact=args.lp_mode == "exact")
    config = {"path": args.path, "restriction": restriction.to_json(), "lp_mode": args.lp_mode}
    _emit(_dump(_report("relax", config, plan.to_json())), args.out)
    return EXIT_OK


def _check_ranges(args):
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.algorithm in ("LC", "C", "C-Tol") and args.eta is None:
        raise UsageError(f"--eta is required for {args.algorithm}")
    if args.algorithm == "C-Tol" and args.tau is None:
        raise UsageError("--tau is required for C-Tol")
    if args.eta is not None:
        upper = Fraction(1, 4) if args.algorithm == "C" else Fraction(1, 2)
        if not 0 < frac(args.eta) < upper:
            raise UsageError(f"--eta must lie in (0, {upper}) for {args.algorithm}")
    if args.tau is not None and not 0 < frac(args.tau) < Fraction(1, 2):
        raise UsageError("--tau must lie in (0, 1/2)")


def _budget(text):
    if text in (None, "auto"):
        return "auto"
    if text in ("inf", "none"):
        return None
    return frac(text)


def cmd_round(args) -> int:
    _check_ranges(args)
    instance = _load_valid(args.path)
    exact = args.lp_mode == "exact"
    prepared = prepare(instance, args.algorithm, eta=args.eta, tau=args.tau, exact=exact,
                       cap=args.enum_cap)
    opt = None
    if args.with_oracle:
        opt = solve_exact(instance).opt_value
    stats = run_trials(instance, prepared, args.trials, args.seed, opt=opt,
                       budget=_budget(args.budget_audit), jobs=args.jobs)
    config = {"path": args.path, "algorithm": args.algorithm, "eta": args.eta, "tau": args.tau,
              "trials": args.trials, "seed": args.seed, "lp_mode": args.lp_mode,
              "enum_cap": args.enum_cap, "budget_audit": args.budget_audit,
              "with_oracle": args.with_oracle}
    _emit(_dump(_report("round", config, stats.to_json())), args.out)
    if args.csv:
        Path(args.csv).write_text(stats.to_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = _load_valid(args.path)
    limits = Limits(max_assignments=args.max_assignments, max_nodes=args.max_nodes)
    result = solve_exact(instance, limits, prune=not args.no_prune)
    config = {"path": args.path, "max_assignments": args.max_assignments,
              "max_nodes": args.max_nodes, "prune": not args.no_prune}
    _emit(_dump(_report("oracle", config, result.to_json())), args.out)
    return EXIT_OK


def _parse_sets(text: str):
    return tuple(frozenset(int(x) for x in part.split(",") if x.strip())
                 for part in text.split(";") if part.strip())


def cmd_gen(args) -> int:
    if args.kind == "kcover":
        if args.sets:
            spec = KCoverSpec(args.n, _parse_sets(args.sets), args.k)
        else:
            spec = random_kcover_spec(np.random.default_rng(args.seed))
        instance = gen_kcover_instance(spec)
    else:
        doc = json.loads(Path(args.config).read_text()) if args.config else {}
        for key in ("n_buses", "n_nodes", "n_lines", "n_od", "K", "cost_regime"):
            val = getattr(args, key, None)
            if val is not None:
                doc[key] = val
        instance = gen_random_instance(GenConfig.from_dict(doc), args.seed)
    data = save_instance(instance)
    if args.out in (None, "-"):
        sys.stdout.buffer.write(data)
    else:
        Path(args.out).write_bytes(data)
    return EXIT_OK


SUITES = {
    "kcover": ("NC",),
    "zero": ("NC", "LC"),
    "small": ("LC", "C", "C-Tol"),
    "general": ("C", "C-Tol"),
}


def _suite_instance(suite: str, rng_seed: int, overrides: dict):
    if suite == "kcover":
        spec = random_kcover_spec(np.random.default_rng(rng_seed))
        return gen_kcover_instance(spec), {"kcover_value": max_k_cover_value(spec)}
    base = {"zero": {"cost_regime": "ZERO"},
            "small": {"cost_regime": "SMALL"},
            "general": {"cost_regime": "GENERAL"}}[suite]
    cfg = GenConfig.from_dict({**base, **overrides})
    return gen_random_instance(cfg, rng_seed), {}


def cmd_bench(args) -> int:
    overrides = json.loads(Path(args.config).read_text()) if args.config else {}
    algorithms = SUITES[args.suite]
    exact = args.lp_mode == "exact"
    rows = []
    for i in range(args.instances):
        inst_seed = args.seed + 1000 * i
        instance, extra = _suite_instance(args.suite, inst_seed, overrides)
        opt = solve_exact(instance).opt_value
        for alg in algorithms:
            eta = args.eta if alg != "NC" else None
            if alg == "C" and eta is not None and frac(eta) >= Fraction(1, 4):
                eta = 0.2
            prepared = prepare(instance, alg, eta=eta, tau=args.tau, exact=exact,
                               cap=args.enum_cap)
            stats = run_trials(instance, prepared, args.trials, args.seed, opt=opt, jobs=args.jobs)
            rows.append({
                "instance": i, "instance_seed": inst_seed, "algorithm": alg,
                "gamma": stats.gamma, "opt": float(opt), "mean": stats.mean,
                "stderr": stats.stderr, "best": stats.best, "bound": stats.bound,
                "bound_label": stats.bound_label,
                "mean_minus_bound_sigmas": None if stats.bound is None or stats.stderr == 0
                else (stats.mean - stats.bound) / stats.stderr,
                "best_over_opt": stats.best / float(opt) if opt else None,
                "discard_rate": stats.discard_count / stats.T, **extra,
            })
    config = {"suite": args.suite, "instances": args.instances, "trials": args.trials,
              "seed": args.seed, "eta": args.eta, "tau": args.tau, "lp_mode": args.lp_mode,
              "enum_cap": args.enum_cap, "overrides": overrides}
    _emit(_dump(_report("bench", config, {"rows": rows})), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lprc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lprc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, path=True):
        if path:
            sp.add_argument("path", help="instance JSON file, or - for stdin")
        sp.add_argument("--out", default="-", help="output file (default stdout)")

    sp = sub.add_parser("validate", help="check an instance file")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("relax", help="solve the LP relaxation by column generation")
    common(sp)
    sp.add_argument("--restriction", choices=["full", "fixed", "low-cost", "modified"],
                    default="full")
    sp.add_argument("--omega", action="append", metavar="BUS=LINE")
    sp.add_argument("--delta")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--lp-mode", choices=["float", "exact"], default="float")
    sp.set_defaults(func=cmd_relax)

    sp = sub.add_parser("round", help="run seeded rounding trials")
    common(sp)
    sp.add_argument("--algorithm", choices=ALGORITHMS, default="NC")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lp-mode", choices=["float", "exact"], default="float")
    sp.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    sp.add_argument("--budget-audit", default="auto",
                    help="per-resource audit budget: a number, 'inf', or 'auto'")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--csv", help="also write one CSV row per trial here")
    sp.add_argument("--with-oracle", action="store_true",
                    help="compute OPT exactly so OPT-relative bounds can be reported")
    sp.set_defaults(func=cmd_round)

    sp = sub.add_parser("oracle", help="exact optimum by exhaustive search")
    common(sp)
    sp.add_argument("--max-assignments", type=int, default=10**5)
    sp.add_argument("--max-nodes", type=int, default=10**7)
    sp.add_argument("--no-prune", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="generate an instance")
    sp.add_argument("kind", choices=["random", "kcover"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="-")
    sp.add_argument("--config", help="JSON file with generator options")
    sp.add_argument("--n-buses", dest="n_buses", type=int)
    sp.add_argument("--n-nodes", dest="n_nodes", type=int)
    sp.add_argument("--n-lines", dest="n_lines", type=int)
    sp.add_argument("--n-od", dest="n_od", type=int)
    sp.add_argument("--K", dest="K", type=int)
    sp.add_argument("--cost-regime", dest="cost_regime", choices=["ZERO", "SMALL", "GENERAL"])
    sp.add_argument("--n", type=int, help="k-cover: number of elements")
    sp.add_argument("--sets", help="k-cover: sets as '1,3,9;2,4'")
    sp.add_argument("--k", type=int, help="k-cover: number of sets to pick")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run a benchmark suite against the exact oracle")
    sp.add_argument("--suite", choices=sorted(SUITES), default="kcover")
    sp.add_argument("--instances", type=int, default=5)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eta", type=float, default=0.2)
    sp.add_argument("--tau", type=float, default=0.1)
    sp.add_argument("--lp-mode", choices=["float", "exact"], default="float")
    sp.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--config", help="JSON generator overrides for random suites")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OracleLimitExceeded, EnumerationCapExceeded) as exc:
        sys.stderr.write(f"lprc: limit exceeded: {exc}\n")
        return EXIT_LIMIT
    except (UsageError, InstanceFormatError, RestrictionError, AssumptionViolation,
            ValueError, OSError) as exc:
        sys.stderr.write(f"lprc: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
