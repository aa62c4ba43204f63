"""Command-line entry point: ``swarm-opt <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 1 runtime error.  Results go to
``--output`` (``-`` is standard output); logs go to standard error.  Wall-clock
timings are written to a ``<output>.meta.json`` sidecar so that the primary
output depends only on the arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .analysis import (
    assemble,
    check_rank_lemma,
    check_theorem_hypotheses,
    spectral_report,
)
from .config import WORKERS_ENV, RunConfig
from .graph import build_graph, laplacian, load_graph
from .objectives import get_objective, objective_names
from .swarm import CoeffSample, run

log = logging.getLogger("swarm_opt")

_DEFAULTS = RunConfig.__dataclass_fields__


class UsageError(Exception):
    pass


def _default(key):
    return _DEFAULTS[key].default


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so that a config file can fill them in
    p.add_argument("--config", help="YAML file with run settings (flags override it)")
    p.add_argument("--objective", help=f"benchmark name (default: {_default('objective')})")
    p.add_argument("--n", type=int, help=f"dimension (default: {_default('n')})")
    p.add_argument("--q", type=int, help=f"number of agents (default: {_default('q')})")
    p.add_argument("--algo", "--algorithm", dest="algorithm", choices=["mco", "pso"],
                   help=f"optimizer (default: {_default('algorithm')})")
    p.add_argument("--topology", choices=["complete", "ring", "star", "erdos-renyi"],
                   help=f"graph kind (default: {_default('topology')})")
    p.add_argument("--topology-file", help="JSON graph file; overrides --topology")
    p.add_argument("--schedule", choices=["static", "seeded-random"],
                   help=f"topology over time (default: {_default('schedule')})")
    p.add_argument("--edge-prob", type=float,
                   help=f"edge probability for random graphs (default: {_default('edge_prob')})")
    p.add_argument("--seed", type=int, help=f"random seed (default: {_default('seed')})")
    p.add_argument("--iters", type=int, help=f"maximum iterations (default: {_default('iters')})")
    p.add_argument("--h", type=float, help=f"step size (default: {_default('h')})")
    p.add_argument("--coeff-mode", choices=["shared", "per-agent"],
                   help=f"coefficient sampling (default: {_default('coeff_mode')})")
    p.add_argument("--omega", type=lambda s: [float(v) for v in s.split(",")],
                   help="comma-separated finite coefficient set (default: uniform on [0, 1))")
    p.add_argument("--eval-cost", type=float,
                   help=f"busy-wait seconds added per evaluation (default: {_default('eval_cost')})")
    p.add_argument("--workers", type=int,
                   help=f"evaluation processes (default: ${WORKERS_ENV} or the CPU count)")
    p.add_argument("--stagnation-window", type=int,
                   help=f"stop after this many flat iterations (default: {_default('stagnation_window')})")
    p.add_argument("--clamp-velocity", action="store_true", default=None,
                   help="clip velocities to the box width (default: off)")
    p.add_argument("--clamp-position", action="store_true", default=None,
                   help="clip positions to the box (default: off)")
    p.add_argument("--raw-alg1-sign", action="store_true", default=None,
                   help="flip the sign of the neighbour terms (default: off)")


def _add_output_flags(p: argparse.ArgumentParser, default_fmt: str) -> None:
    p.add_argument("--output", "-o", default="-", help="output file or - for stdout (default: -)")
    p.add_argument("--format", choices=["json", "csv"],
                   help=f"output format (default: from the file suffix, else {default_fmt})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarm-opt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one optimization run -> RunRecord")
    _add_run_flags(p)
    _add_output_flags(p, "json")

    p = sub.add_parser("bench", help="statistics over consecutive seeds")
    _add_run_flags(p)
    p.add_argument("--runs", type=int, default=20, help="number of seeds (default: 20)")
    p.add_argument("--seeds-from", type=int, default=1, help="first seed (default: 1)")
    _add_output_flags(p, "csv")

    p = sub.add_parser("compare", help="MCO and PSO statistics side by side")
    _add_run_flags(p)
    p.add_argument("--runs", type=int, default=20, help="number of seeds (default: 20)")
    p.add_argument("--seeds-from", type=int, default=1, help="first seed (default: 1)")
    _add_output_flags(p, "csv")

    p = sub.add_parser("sweep", help="serial vs parallel timing over worker counts")
    _add_run_flags(p)
    p.add_argument("--workers-list", default="1,2,4",
                   type=lambda s: [int(v) for v in s.split(",")],
                   help="comma-separated worker counts (default: 1,2,4)")
    _add_output_flags(p, "csv")

    p = sub.add_parser("analyze", help="spectral report and hypothesis verdict of the linear model")
    p.add_argument("--mu", type=float, required=True, help="position coupling gain")
    p.add_argument("--eta", type=float, required=True, help="velocity coupling gain")
    p.add_argument("--kappa", type=float, required=True, help="attraction to the network best")
    p.add_argument("--h", type=float, required=True, help="step size")
    p.add_argument("--n", type=int, default=1, help="dimension (default: 1)")
    p.add_argument("--q", type=int, default=2, help="number of agents (default: 2)")
    p.add_argument("--topology", default="complete",
                   choices=["complete", "ring", "star", "erdos-renyi"], help="graph kind (default: complete)")
    p.add_argument("--topology-file", help="JSON graph file; overrides --topology")
    p.add_argument("--seed", type=int, default=0, help="seed for random graphs (default: 0)")
    p.add_argument("--j", type=int, default=None,
                   help="leader index 1..q (default: check every leader, report leader 1)")
    p.add_argument("--verbatim", action="store_true",
                   help="use the uncorrected candidate sets (cubic B branch, unconditional pairs)")
    p.add_argument("--dump-matrices", metavar="DIR", help="write A, Ac, B as CSV files into DIR")
    p.add_argument("--output", "-o", default="-", help="output file or - for stdout (default: -)")

    sub.add_parser("list-objectives", help="table of the registered benchmarks")
    return parser


def _config_from(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in RunConfig.keys()}
    try:
        if args.config:
            return RunConfig.load(args.config, overrides)
        return RunConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _fmt(args, fallback):
    if getattr(args, "format", None):
        return args.format
    suffix = Path(args.output).suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json") else fallback


def _emit(args, text: str, meta: dict | None = None) -> None:
    if args.output == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        if meta:
            log.info("timing: %s", json.dumps(meta))
        return
    experiments.write_atomic(args.output, text)
    if meta:
        experiments.write_atomic(f"{args.output}.meta.json", json.dumps(meta, indent=2) + "\n")
    log.info("wrote %s", args.output)


def cmd_run(args) -> int:
    cfg = _config_from(args)
    sched = cfg.topology_schedule() if cfg.algorithm == "mco" else None
    rec = run(cfg.params(), cfg.objective_spec(), sched, cfg.seed, workers=cfg.resolved_workers)
    text = rec.to_csv() if _fmt(args, "json") == "csv" else rec.to_json(include_timing=False)
    _emit(args, text, {"duration": rec.duration, "workers": cfg.resolved_workers})
    return 0


def _seeds(args):
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    return list(range(args.seeds_from, args.seeds_from + args.runs))


def cmd_bench(args) -> int:
    cfg = _config_from(args)
    seeds = _seeds(args)
    summary = experiments.run_trials(cfg, seeds)
    _emit(args, experiments.render(summary, _fmt(args, "csv")))
    return 0


def cmd_compare(args) -> int:
    cfg = _config_from(args)
    seeds = _seeds(args)
    out = [experiments.run_trials(replace(cfg, algorithm=a), seeds) for a in ("mco", "pso")]
    _emit(args, experiments.render(out, _fmt(args, "csv")))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    if any(w < 1 for w in args.workers_list):
        raise UsageError("worker counts must be >= 1")
    reports = experiments.scalability_sweep(cfg, args.workers_list)
    _emit(args, experiments.render(reports, _fmt(args, "csv")))
    return 0


def cmd_analyze(args) -> int:
    try:
        c = CoeffSample(args.eta, args.mu, args.kappa, args.h)
        if args.topology_file:
            g = load_graph(args.topology_file)
        else:
            g = build_graph(args.topology, args.q, args.seed)
        if args.n < 1 or g.q < 2:
            raise ValueError("analysis needs n >= 1 and q >= 2")
        if args.j is not None and not 1 <= args.j <= g.q:
            raise ValueError(f"--j must lie in 1..{g.q}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    L = laplacian(g)
    sm = assemble(args.j or 1, c, L, args.n)
    verdict = check_theorem_hypotheses(c, L, args.n, args.j, verbatim=args.verbatim)
    report = {
        "input": {"mu": args.mu, "eta": args.eta, "kappa": args.kappa, "h": args.h,
                  "n": args.n, "q": g.q, "j": args.j, "graph": g.to_dict()},
        "spectral": {
            "A": spectral_report(sm.A).to_dict(),
            "A_plus_hAc": spectral_report(sm.a_family()).to_dict(),
            "B_plus_h2Ac": spectral_report(sm.b_family()).to_dict(),
        },
        "rank_lemma": check_rank_lemma(sm).to_dict(),
        "verdict": verdict.to_dict(),
    }
    if args.dump_matrices:
        out = Path(args.dump_matrices)
        out.mkdir(parents=True, exist_ok=True)
        for name, M in (("A", sm.A), ("Ac", sm.Ac), ("B", sm.B)):
            np.savetxt(out / f"{name}.csv", M, delimiter=",", fmt="%.17g")
    _emit(args, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_list(args) -> int:
    default_n = RunConfig().n
    lines = [f"{'name':<15}{'bounds':>12}{'f*':>8}{'min n':>7}{'default n':>11}"]
    for name in objective_names():
        obj = get_objective(name, 2)
        fstar = "-" if obj.f_star is None else f"{obj.f_star:g}"
        lines.append(f"{name:<15}{'+-' + format(obj.upper[0], 'g'):>12}{fstar:>8}{obj.min_n:>7}{default_n:>11}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "compare": cmd_compare, "sweep": cmd_sweep,
            "analyze": cmd_analyze, "list-objectives": cmd_list}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"swarm-opt: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
