"""Command-line pipeline: generate -> simulate -> detect -> evaluate, plus ``tsp``.

Exit codes: 0 success, 1 invalid input, 2 no botnet found under
``detect --expect-botnet``, 3 brute-force cap exceeded.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import botnet_sim as sim
from . import detector
from .graph import GraphError, random_metric_instance, read_graph_file, write_graph_file
from .tsp import (
    BRUTE_FORCE_CAP,
    CapExceededError,
    DegenerateInstanceError,
    TourError,
    TspDecision,
    decide_tsp,
    exact_tour_bruteforce,
    mst_double_tour,
    nn_tour,
    tour_cost,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_BOTNET = 2
EXIT_CAP = 3


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def cmd_generate(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    if not args.scale > 0:
        raise UsageError(f"--scale must be > 0, got {args.scale}")
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    g = random_metric_instance(args.n, args.seed, args.scale, integer=args.integer)
    write_graph_file(g, out / "graph.txt")
    config = sim.ScenarioConfig.uniform(
        g, p_attack=0.8, defense=0.0, cnc_vertex=0, strategy=sim.Strategy.NEAREST_NEIGHBOR,
        seed=args.seed, noise_rate=args.noise_rate,
    )
    sim.save_scenario(config, out / "scenario.json", "graph.txt")
    print(f"wrote {out / 'graph.txt'} and {out / 'scenario.json'} (n={args.n})")
    return EXIT_OK


def _summary_line(log: sim.EventLog) -> str:
    targets = max(log.n - 1, 0)
    return f"infected={len(log.infected)}/{targets} tour_cost={_fmt(log.tour_cost)}"


def cmd_simulate(args: argparse.Namespace) -> int:
    config = sim.load_scenario(args.scenario)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out or "events.jsonl")
    if args.runs <= 1:
        log = sim.run_simulation(config)
        sim.write_event_log(log, out)
        print(_summary_line(log))
        return EXIT_OK
    # Monte Carlo sweep: run i uses seed + i
    out.mkdir(parents=True, exist_ok=True)
    counts = []
    for i in range(args.runs):
        run_cfg = dataclasses.replace(config, seed=config.seed + i)
        log = sim.run_simulation(run_cfg)
        sim.write_event_log(log, out / f"run_{i:04d}.jsonl")
        counts.append(len(log.infected))
        print(f"run={i} seed={run_cfg.seed} {_summary_line(log)}")
    print(f"mean_infected={sum(counts) / len(counts)!r} runs={args.runs}")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    g = read_graph_file(args.graph)
    flows = detector.read_flows(args.log)
    report = detector.classify_hosts(flows, g, args.tau, args.min_visits, args.min_beacons)
    out = Path(args.out or "report.json")
    if args.with_truth:
        log = sim.read_event_log(args.log)
        if log.n != g.n:
            raise UsageError(f"log has n={log.n} but graph has n={g.n}")
        report = report.with_metrics(log.ground_truth)
        out.with_suffix(".csv").write_text(report.metrics.csv())
    out.write_text(report.to_json())
    score = "n/a" if report.traversal_score is None else f"{report.traversal_score:.6f}"
    print(f"cnc={report.cnc_candidate} fan_in={report.fan_in_score} score={score} bots={len(report.bots)}/{g.n}")
    if report.metrics is not None:
        m = report.metrics
        print(f"accuracy={m.accuracy!r} precision={m.precision!r} recall={m.recall!r} fpr={m.false_positive_rate!r}")
    if args.expect_botnet and not report.bots:
        return EXIT_NO_BOTNET
    return EXIT_OK


def _read_truth(path: Path) -> set[int]:
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return set(sim.read_event_log(path).ground_truth)
    if isinstance(data, dict) and data.get("kind") == "Summary":
        return set(sim.read_event_log(path).ground_truth)
    if isinstance(data, dict) and "truth" in data:
        return {int(v) for v in data["truth"]}
    if isinstance(data, list):
        return {int(v) for v in data}
    raise UsageError(f"{path}: unrecognised truth file")


def cmd_evaluate(args: argparse.Namespace) -> int:
    report = detector.DetectionReport.from_dict(json.loads(Path(args.report).read_text()))
    truth = _read_truth(Path(args.truth))
    metrics = detector.evaluate(report.verdicts, truth)
    text = metrics.csv()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_tsp(args: argparse.Namespace) -> int:
    g = read_graph_file(args.graph)
    if args.solver == "exact":
        tour, cost = exact_tour_bruteforce(g, args.cap)
    elif args.solver == "nn":
        tour = nn_tour(g, args.start)
        cost = tour_cost(g, tour)
    else:
        tour = mst_double_tour(g)
        cost = tour_cost(g, tour)
    print(" ".join(map(str, tour.order)))
    print(f"cost={_fmt(cost)}")
    if args.threshold is not None:
        yes = decide_tsp(TspDecision(g, args.threshold), args.cap)
        print(f"decision={'yes' if yes else 'no'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--out", default=default, help="output path (directory for generate and multi-run simulate)")
        p.add_argument("--seed", type=int, default=default, help="RNG seed")
        return p

    # accepted before or after the subcommand; SUPPRESS keeps a value given up front
    common = global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="botnet-tsp", description=__doc__.splitlines()[0], parents=[global_flags(None)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="random metric graph + default scenario")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--integer", action="store_true", help="round distances up to integers")
    p.add_argument("--noise-rate", type=float, default=0.5)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario and write the event log")
    p.add_argument("--scenario", required=True)
    p.add_argument("--runs", type=int, default=1, help="Monte Carlo runs with seeds seed, seed+1, ...")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", parents=[common], help="run the detector on an event log or flow file")
    p.add_argument("--log", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--tau", type=float, default=detector.DEFAULT_TAU)
    p.add_argument("--min-visits", type=int, default=detector.DEFAULT_MIN_VISITS)
    p.add_argument("--min-beacons", type=int, default=detector.DEFAULT_MIN_BEACONS)
    p.add_argument("--with-truth", action="store_true", help="score against the log's ground truth")
    p.add_argument("--expect-botnet", action="store_true", help="exit 2 when no host is labelled Bot")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", parents=[common], help="metrics from a report and a truth file")
    p.add_argument("--report", required=True)
    p.add_argument("--truth", required=True, help="event log, or JSON list / {'truth': [...]} of bot vertices")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tsp", parents=[common], help="solve or decide a TSP instance")
    p.add_argument("--graph", required=True)
    p.add_argument("--solver", choices=("exact", "nn", "mst2"), default="exact")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None, help="also answer the decision question")
    p.add_argument("--cap", type=int, default=BRUTE_FORCE_CAP)
    p.set_defaults(func=cmd_tsp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.command == "generate" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, GraphError, TourError, DegenerateInstanceError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
