"""Command-line entry point: ``aifedge run|suite|inspect|replay|trace``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from aifedge import harness
from aifedge.errors import AifEdgeError
from aifedge.sim import load_scenario


def _apply_overrides(cfg: harness.ExperimentConfig, args) -> harness.ExperimentConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.cycles is not None:
        cfg = replace(cfg, cycles=args.cycles)
    if args.out is not None:
        cfg = replace(cfg, out_dir=Path(args.out))
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir=Path("runs") / cfg.name)
    return cfg


def _print_result(result: harness.ExperimentResult) -> None:
    status = f"converged at cycle {result.converged_at}" if result.converged else "not converged"
    print(f"{result.config.service} on {result.config.device}: chose {result.space.label(result.chosen)} ({status})")
    for name, path in result.files.items():
        print(f"  {name}: {path}")


def cmd_run(args) -> int:
    cfg = _apply_overrides(harness.load_experiment(args.config), args)
    _print_result(harness.run_experiment(cfg))
    return 0


def cmd_replay(args) -> int:
    cfg = harness.load_experiment(args.config)
    cfg = replace(cfg, mode="replay", trace=Path(args.trace))
    cfg = _apply_overrides(cfg, args)
    _print_result(harness.run_experiment(cfg))
    return 0


def cmd_suite(args) -> int:
    out = Path(args.out or "runs/suite")
    if args.config:
        configs = harness.load_suite(args.config)
    else:
        configs = harness.default_suite()
    configs = [
        replace(
            c,
            seed=c.seed if args.seed is None else args.seed,
            cycles=c.cycles if args.cycles is None else args.cycles,
        )
        for c in configs
    ]
    configs = [replace(c, out_dir=out / c.name) for c in configs]
    rows = harness.run_suite(configs, harness.worker_count(args.parallel), out)
    sys.stdout.write(harness.summary_csv(rows))
    matched = sum(r.optimal_match for r in rows)
    print(f"# {matched}/{len(rows)} experiments matched the true optimum; summary in {out / 'summary.csv'}")
    return 0 if not any(r.error for r in rows) else 1


def cmd_inspect(args) -> int:
    report = harness.inspect_model(args.model)
    sys.stdout.write(report)
    if args.dot:
        from aifedge.bayesnet import dag_to_dot, load_model

        Path(args.dot).write_text(dag_to_dot(load_model(args.model).dag))
    return 0


def cmd_trace(args) -> int:
    scenario = load_scenario(args.service, args.device, args.seed or 0)
    path = harness.record_trace(scenario, args.windows, args.out)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aifedge", description="Active-inference agent for adaptive edge stream processing")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment or suite JSON")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--cycles", type=int)

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="run one experiment on a recorded metric trace")
    common(p)
    p.add_argument("--trace", required=True, help="metric CSV")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("suite", help="run many experiments and write summary.csv")
    common(p, config_required=False)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("inspect", help="print a saved model")
    p.add_argument("model")
    p.add_argument("--dot", help="also write the graph as DOT to this path")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("trace", help="record a simulated metric trace for replay")
    p.add_argument("--service", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--windows", type=int, default=3, help="windows per configuration")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except AifEdgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
