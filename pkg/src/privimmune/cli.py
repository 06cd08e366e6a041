"""``privimmune`` command line: private and baseline runs, SIR evaluation, CSV output.

Exit status 0 on success, 1 for configuration errors, 2 for runtime failures.
Error lines start with ``error:``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .dp import PrivacyBudget, derive_seed
from .epidemic import SirConfig, simulate_sir
from .fileio import ExperimentRecord, format_records, load_edge_list, read_node_list, save_edge_list, write_node_list
from .generators import generate, parse_generator
from .graph import ConvergenceError, max_degree, remove_nodes, spectral_radius
from .maxdeg import MaxDegTask, build_maxdeg_instance, privmaxdeg_explicit, privmaxdeg_implicit
from .multicover import InfeasibleError, brute_force_opt, greedy_cover
from .spectral import (
    SpectralCoverTask,
    SpectralWalkTask,
    build_spectral_instance,
    greedy_walk_hitting,
    privminsr_multiset,
    privminsr_walks,
    residual_neighbor_degree_bound,
)

SEED_ENV = "PRIVIMMUNE_SEED"


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _epsilons(text: str) -> List[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("every epsilon must be positive")
    return vals


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _add_graph_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", metavar="FILE", help="edge list, one 'u v' pair per line")
    src.add_argument("--generate", metavar="KIND:PARAMS", help="e.g. chung-lu:n=1000,gamma=2.5,dmin=3,dmax=120,seed=1")


def _add_common(p, budget=True):
    _add_graph_source(p)
    if budget:
        p.add_argument("--epsilon", type=_epsilons, default=[1.0], help="one value or a comma-separated sweep")
        p.add_argument("--delta", type=float, default=1e-3)
        p.add_argument("--epsilon1", type=float, default=0.0, help="budget of the sparse-vector stop rule")
    p.add_argument("--trials", type=int, default=1, help="seeded repetitions per epsilon")
    p.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", metavar="FILE", help="CSV of experiment records (default: stdout)")
    p.add_argument("--report", metavar="FILE", help="append one JSON privacy report per run")
    p.add_argument("--timing", action="store_true", help="record wall time (otherwise written as 0)")
    p.add_argument("--sir-p", type=float, default=0.2, help="SIR transmission probability")
    p.add_argument("--sir-initial", type=int, default=20)
    p.add_argument("--sir-trials", type=int, default=20)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="privimmune", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("maxdeg", help="private max-degree reduction")
    _add_common(p)
    p.add_argument("--target", type=int, required=True, help="target max degree D")
    p.add_argument("--mode", choices=("implicit", "explicit", "both"), default="implicit")
    p.add_argument("--threshold-scale", type=float, default=6.0)
    p.add_argument("--save-solution", metavar="FILE", help="node list of the last run")

    p = sub.add_parser("spectral", help="private spectral-radius reduction")
    _add_common(p)
    p.add_argument("--mode", choices=("walks", "multiset"), default="multiset")
    p.add_argument("--target", type=float, default=None, help="D for multiset mode, T override for walks mode")
    p.add_argument("--theta", type=float, default=None, help="walks mode threshold override")
    p.add_argument("--save-solution", metavar="FILE", help="node list of the last run")

    p = sub.add_parser("simulate", help="SIR spread on the graph with a node list removed")
    _add_common(p, budget=False)
    p.add_argument("--solution", metavar="FILE", required=True, help="vaccinated node ids, one per line")

    p = sub.add_parser("baseline", help="non-private greedy (and exact optimum on small inputs)")
    _add_common(p, budget=False)
    p.add_argument("--problem", choices=("maxdeg", "spectral", "walks"), default="maxdeg")
    p.add_argument("--target", type=float, required=True, help="D, or the 4-walk target for walks")
    p.add_argument("--opt-limit", type=int, default=20, help="largest n for exact enumeration")

    p = sub.add_parser("generate", help="write a synthetic graph as an edge list")
    p.add_argument("--generate", metavar="KIND:PARAMS", required=True)
    p.add_argument("--out", metavar="FILE", required=True)
    return parser


class _Run:
    """Shared plumbing: graph loading, seeding, evaluation and record output."""

    def __init__(self, args):
        self.args = args
        self.seed = args.seed if args.seed is not None else _default_seed()
        if args.trials < 1:
            raise ConfigError("--trials must be at least 1")
        if not 0 <= args.sir_p <= 1:
            raise ConfigError("--sir-p must lie in [0, 1]")
        if args.sir_initial < 0 or args.sir_trials < 1:
            raise ConfigError("--sir-initial must be >= 0 and --sir-trials >= 1")
        if getattr(args, "delta", 0.5) is not None and not 0 < getattr(args, "delta", 0.5) < 1:
            raise ConfigError("--delta must lie in (0, 1)")
        if getattr(args, "epsilon1", 0.0) < 0:
            raise ConfigError("--epsilon1 must be non-negative")
        self.graph, self.label = load_graph(args)
        self.records: List[ExperimentRecord] = []
        self.reports: List[str] = []

    def run_seed(self, trial: int) -> int:
        return derive_seed(self.seed, trial)

    def record(self, algorithm, nodes, run_seed, elapsed_ms, *, epsilon=0.0, delta=0.0, epsilon1=0.0, target=0.0):
        g = self.graph
        removed = remove_nodes(g, nodes)
        cfg = SirConfig(self.args.sir_p, self.args.sir_initial, self.args.sir_trials, run_seed)
        rec = ExperimentRecord(
            graph=self.label,
            algorithm=algorithm,
            epsilon=epsilon,
            delta=delta,
            epsilon1=epsilon1,
            target=float(target),
            budget=len(nodes),
            residual_max_degree=max_degree(g, removed),
            residual_spectral_radius=spectral_radius(g, removed),
            mean_sir_spread=simulate_sir(g, nodes, cfg).mean_final_size,
            seed=run_seed,
            wall_time_ms=round(elapsed_ms, 3) if self.args.timing else 0.0,
        )
        self.records.append(rec)
        print(
            f"{algorithm} eps={epsilon:g} seed={run_seed}: budget={rec.budget} "
            f"residual_max_degree={rec.residual_max_degree} "
            f"residual_spectral_radius={rec.residual_spectral_radius:.6g}",
            file=sys.stderr,
        )
        return rec

    def report(self, rep, run_seed):
        d = rep.to_dict()
        d["seed"] = run_seed
        d["graph"] = self.label
        self.reports.append(json.dumps(d, sort_keys=True))

    def finish(self):
        text = format_records(self.records)
        if self.args.out:
            Path(self.args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        if self.args.report and self.reports:
            with open(self.args.report, "a", encoding="utf-8") as fh:
                fh.write("\n".join(self.reports) + "\n")
        return 0


def load_graph(args):
    if getattr(args, "graph", None):
        loaded = load_edge_list(args.graph)
        if loaded.self_loops or loaded.duplicates:
            print(
                f"warning: dropped {loaded.self_loops} self-loops and {loaded.duplicates} duplicate edges",
                file=sys.stderr,
            )
        return loaded.graph, Path(args.graph).name
    try:
        spec = parse_generator(args.generate)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return generate(spec), spec.label


def _timed(fn: Callable):
    t0 = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - t0) * 1e3


def cmd_maxdeg(args) -> int:
    run = _Run(args)
    if args.target < 0:
        raise ConfigError("--target must be non-negative")
    modes = ("implicit", "explicit") if args.mode == "both" else (args.mode,)
    if "explicit" in modes and not args.epsilon1 > 0:
        raise ConfigError("explicit mode needs --epsilon1 > 0 (the stop rule is budgeted separately)")
    last = []
    for eps in args.epsilon:
        task = MaxDegTask(run.graph, args.target, PrivacyBudget(eps, args.delta, args.epsilon1))
        for t in range(args.trials):
            s = run.run_seed(t)
            for mode in modes:
                if mode == "implicit":
                    res, ms = _timed(lambda: privmaxdeg_implicit(task, np.random.default_rng(s)))
                    nodes, rep = res.nodes, res.report
                else:
                    res, ms = _timed(
                        lambda: privmaxdeg_explicit(task, np.random.default_rng(s), threshold_scale=args.threshold_scale)
                    )
                    nodes, rep = res.nodes, res.report
                run.record(
                    f"privmaxdeg-{mode}", nodes, s, ms,
                    epsilon=eps, delta=args.delta, epsilon1=args.epsilon1, target=args.target,
                )
                run.report(rep, s)
                last = nodes
    if args.save_solution:
        write_node_list(last, args.save_solution)
    return run.finish()


def cmd_spectral(args) -> int:
    run = _Run(args)
    if args.mode == "walks" and not args.epsilon1 > 0:
        raise ConfigError("walks mode needs --epsilon1 > 0 for its stop rule")
    if args.mode == "multiset" and args.target is None:
        raise ConfigError("multiset mode needs --target D")
    if args.target is not None and args.target <= 0 and args.mode == "walks":
        raise ConfigError("--target (T) must be positive")
    last = []
    for eps in args.epsilon:
        budget = PrivacyBudget(eps, args.delta, args.epsilon1)
        for t in range(args.trials):
            s = run.run_seed(t)
            rng = np.random.default_rng(s)
            if args.mode == "walks":
                task = SpectralWalkTask(run.graph, budget, T=args.target, theta=args.theta)
                res, ms = _timed(lambda: privminsr_walks(task, rng))
                target = task.resolved_theta
            else:
                D = int(args.target)
                task = SpectralCoverTask(run.graph, D, budget)
                res, ms = _timed(lambda: privminsr_multiset(task, rng))
                bound = residual_neighbor_degree_bound(run.graph, res.nodes)
                print(f"certificate: max neighbor-degree sum {bound} <= {D}: {bound <= D}", file=sys.stderr)
                target = D
            run.record(
                f"privminsr-{args.mode}", res.nodes, s, ms,
                epsilon=eps, delta=args.delta, epsilon1=args.epsilon1, target=target,
            )
            run.report(res.report, s)
            last = res.nodes
    if args.save_solution:
        write_node_list(last, args.save_solution)
    return run.finish()


def cmd_simulate(args) -> int:
    run = _Run(args)
    nodes = read_node_list(args.solution)
    bad = [v for v in nodes if not 0 <= v < run.graph.n]
    if bad:
        raise ConfigError(f"solution lists node {bad[0]} outside [0, {run.graph.n})")
    for t in range(args.trials):
        s = run.run_seed(t)
        run.record("simulate", nodes, s, 0.0)
        out = simulate_sir(run.graph, nodes, SirConfig(args.sir_p, args.sir_initial, args.sir_trials, s))
        print(f"final size: mean={out.mean_final_size:.6g} std={out.std_final_size:.6g}", file=sys.stderr)
    return run.finish()


def cmd_baseline(args) -> int:
    run = _Run(args)
    g = run.graph
    if args.target < 0:
        raise ConfigError("--target must be non-negative")
    s = run.run_seed(0)
    if args.problem == "walks":
        nodes, ms = _timed(lambda: greedy_walk_hitting(g, args.target))
        run.record("greedy-walks", nodes, s, ms, target=args.target)
        return run.finish()
    build = build_maxdeg_instance if args.problem == "maxdeg" else build_spectral_instance
    inst = build(g, int(args.target))
    nodes, ms = _timed(lambda: greedy_cover(inst))
    run.record(f"greedy-{args.problem}", nodes, s, ms, target=args.target)
    if g.n <= args.opt_limit:
        (_, witness), ms = _timed(lambda: brute_force_opt(inst, max_sets=args.opt_limit))
        run.record(f"opt-{args.problem}", witness, s, ms, target=args.target)
    return run.finish()


def cmd_generate(args) -> int:
    try:
        spec = parse_generator(args.generate)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    g = generate(spec)
    save_edge_list(g, args.out)
    print(f"wrote {g.n} nodes, {g.num_edges} edges to {args.out}", file=sys.stderr)
    return 0


COMMANDS = {
    "maxdeg": cmd_maxdeg,
    "spectral": cmd_spectral,
    "simulate": cmd_simulate,
    "baseline": cmd_baseline,
    "generate": cmd_generate,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleError, ConvergenceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
