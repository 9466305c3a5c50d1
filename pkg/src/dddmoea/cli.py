"""Command-line entry point: ``dddmoea run|compare|pof|knees``.

Exit codes: 0 on success, 2 for configuration errors, 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys

import numpy as np

from .core import make_rng
from .knee import extract_knee, partition
from .moead import optimize, weight_vectors
from .problems import TimeContext, get_problem, sample_true_pof, time_of
from .response import STRATEGIES, new_history, record_truth, respond
from .runner import (
    ConfigError,
    build_config,
    compare,
    emit_csv,
    ensure_parent,
    output_prefix,
    read_config,
    run_experiment,
    write_config,
    write_table,
)

log = logging.getLogger("dddmoea")

# CLI flag -> (config section, key)
_FLAG_KEYS = {
    "problem": ("experiment", "problem"),
    "nt": ("experiment", "nt"),
    "taut": ("experiment", "taut"),
    "changes": ("experiment", "changes"),
    "runs": ("experiment", "runs"),
    "strategy": ("experiment", "strategy"),
    "seed": ("experiment", "seed"),
    "jobs": ("experiment", "jobs"),
    "pop_size": ("experiment", "N"),
    "dim": ("experiment", "n"),
    "K": ("ddm", "K"),
    "deterministic_theta": ("knee", "deterministic_theta"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _experiment_flags(p: argparse.ArgumentParser, strategy: bool = True) -> None:
    p.add_argument("--problem", help="DF1..DF14, a comma list, or 'all'")
    p.add_argument("--nt", type=int, help="change severity n_t")
    p.add_argument("--taut", type=int, help="change frequency tau_t (generations per environment)")
    p.add_argument("--changes", type=int, help="number of environments (default 30)")
    p.add_argument("--runs", type=int, help="independent runs (default 20)")
    if strategy:
        p.add_argument("--strategy", choices=STRATEGIES + ("random_restart",))
    p.add_argument("--seed", type=int, help="base seed; run r uses splitmix64(seed + r)")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--pop-size", dest="pop_size", type=int, help="population size N")
    p.add_argument("--dim", type=int, help="decision dimension n (default 10)")
    p.add_argument("--K", type=int, help="denoising steps")
    p.add_argument("--deterministic-theta", action="store_const", const=True, default=None,
                   help="use zero deflection instead of sampling it")
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--out", required=True, help="output path prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dddmoea", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _experiment_flags(sub.add_parser("run", help="run an experiment and write CSV files"))

    cmp_ = sub.add_parser("compare", help="rank-sum comparison of strategies")
    _experiment_flags(cmp_, strategy=False)
    cmp_.add_argument("--strategies", required=True, help="comma list; the first is the reference")
    cmp_.add_argument("--settings", help="extra (n_t,tau_t) pairs such as '10:10,5:10'")

    pof = sub.add_parser("pof", help="dump a reference front as CSV")
    pof.add_argument("--problem", required=True)
    pof.add_argument("--t", type=float, required=True)
    pof.add_argument("--count", type=int, default=None)
    pof.add_argument("--dim", type=int, default=10)
    pof.add_argument("--out", required=True)

    kn = sub.add_parser("knees", help="dump predicted and extracted knees per environment")
    kn.add_argument("--problem", required=True)
    kn.add_argument("--nt", type=int, default=10)
    kn.add_argument("--taut", type=int, default=10)
    kn.add_argument("--changes", type=int, default=30)
    kn.add_argument("--seed", type=int, default=0)
    kn.add_argument("--dim", type=int, default=10)
    kn.add_argument("--strategy", choices=("ddm", "v1"), default="ddm")
    kn.add_argument("--deterministic-theta", action="store_const", const=True, default=None)
    kn.add_argument("--config", help="INI file with module settings")
    kn.add_argument("--out", required=True)
    return parser


def _merged_config(args):
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for flag, (section, key) in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values.setdefault(section, {})[key] = v
    return build_config(values)


def _parse_settings(text: str | None, cfg) -> list[tuple[int, int]]:
    if not text:
        return [(cfg.n_t, cfg.tau_t)]
    out = []
    for item in text.split(","):
        try:
            a, b = item.split(":")
            out.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(f"bad setting {item!r}; expected n_t:tau_t") from None
    return out


def cmd_run(args) -> int:
    cfg = _merged_config(args)
    ensure_parent(args.out)
    problems = cfg.problems()
    records = run_experiment(cfg)
    for pid in problems:
        prefix = output_prefix(args.out, pid, len(problems) > 1)
        written = emit_csv([r for r in records if r.problem == pid], prefix)
        written.append(write_config(dataclasses.replace(cfg, problem=pid), prefix))
        for path in written:
            print(path)
    return 0


def cmd_compare(args) -> int:
    cfg = _merged_config(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    settings = _parse_settings(args.settings, cfg)
    ensure_parent(args.out)
    rows = compare(strategies, cfg, settings)
    print(write_table(rows, f"{args.out}.compare.csv"))
    return 0


def cmd_pof(args) -> int:
    try:
        p = get_problem(args.problem, args.dim)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    front = sample_true_pof(p, args.t, args.count)
    ensure_parent(args.out)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j + 1}" for j in range(p.m)])
        for row in front.points:
            w.writerow([repr(float(v)) for v in row])
    print(args.out)
    return 0


def cmd_knees(args) -> int:
    """Replay one run and record, per environment and subspace, the predicted
    knee next to the knee extracted from the front that was then found."""
    values = read_config(args.config) if args.config else {}
    values.setdefault("experiment", {}).update(
        problem=args.problem, nt=args.nt, taut=args.taut, changes=args.changes, seed=args.seed, n=args.dim,
        strategy=args.strategy, runs=1,
    )
    if args.deterministic_theta:
        values.setdefault("knee", {})["deterministic_theta"] = True
    cfg = build_config(values)
    p = get_problem(cfg.problem, cfg.n)
    rng = make_rng(cfg.seed)
    N = cfg.population_size(p.m)
    weights = weight_vectors(N, p.m, cfg.moead.T)
    rcfg = cfg.response
    hist = new_history(rcfg)
    ensure_parent(args.out)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["env", "t", "subspace", "kind", "error"] + [f"x{j + 1}" for j in range(p.n)]
                   + [f"f{j + 1}" for j in range(p.m)])
        for env in range(cfg.changes):
            t = time_of(TimeContext(cfg.n_t, cfg.tau_t, env * cfg.tau_t))
            init = respond(cfg.strategy, hist, p, t, N, rng, rcfg)
            predicted = list(hist.predicted)
            pos = optimize(init, p, t, cfg.tau_t, rng, cfg.moead, weights)
            record_truth(hist, pos, rcfg)
            for i, x in enumerate(predicted):
                if x is not None:
                    f = p.evaluate(x, t)
                    err = hist.errors[i]
                    w.writerow([env, repr(t), i, "predicted", "" if err is None else repr(err)]
                               + [repr(float(v)) for v in x] + [repr(float(v)) for v in f])
            if len(pos) >= rcfg.N_s:
                part = partition(pos, rcfg.N_s)
                for i in range(rcfg.N_s):
                    k = extract_knee(pos[part.members(i)])
                    if k is not None:
                        w.writerow([env, repr(t), i, "extracted", ""]
                                   + [repr(float(v)) for v in k.x] + [repr(float(v)) for v in k.f])
    print(args.out)
    return 0


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "pof": cmd_pof, "knees": cmd_knees}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"dddmoea: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"dddmoea: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report, don't trace, on the CLI
        log.debug("failure", exc_info=True)
        print(f"dddmoea: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
