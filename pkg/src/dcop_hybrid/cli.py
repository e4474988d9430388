"""Command-line front end.

    dcop-hybrid generate  --config gen.json --out problem.json
    dcop-hybrid run       --config exp.json --out results/ [--trace]
    dcop-hybrid campaign  --config exp.json --out results/ [--jobs 4]
    dcop-hybrid reproduce table1 --out results/ [--scale 0.25]

``--seed`` overrides the config seed; ``DCOP_HYBRID_SEED`` is used when the
flag is absent.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ._validation import load_json
from .engine import write_cost_trace, write_cpa_trace
from .experiments import (
    REPRODUCTIONS,
    ExperimentConfig,
    explored_space_size,
    result_row,
    run_campaign,
    run_hybrid,
    write_results_csv,
)
from .problems import GeneratorConfig, find_bridges, generate

log = logging.getLogger("dcop_hybrid")

SEED_ENV = "DCOP_HYBRID_SEED"


class UsageError(Exception):
    pass


def _seed_arg(text: str) -> int:
    seed = int(text)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return seed


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return _seed_arg(raw)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"{SEED_ENV}={raw!r} is not a 64-bit unsigned integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcop-hybrid", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", type=Path, required=config_required)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--seed", type=_seed_arg, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--scale", type=float, default=1.0)
        p.add_argument("--trace", action="store_true")

    common(sub.add_parser("generate", help="write a benchmark problem as JSON"))
    common(sub.add_parser("run", help="one hybrid run"))
    common(sub.add_parser("campaign", help="many seeded runs plus a summary"))
    rep = sub.add_parser("reproduce", help="re-run a canned experiment")
    rep.add_argument("name", choices=sorted(REPRODUCTIONS))
    common(rep, config_required=False)
    return parser


def _load_experiment(path: Path, seed) -> ExperimentConfig:
    cfg = ExperimentConfig.from_dict(load_json(path))
    if seed is not None:
        cfg = cfg.replace(base_seed=seed)
    return cfg


def _load_generator(path: Path, seed) -> GeneratorConfig:
    doc = load_json(path)
    if "generator" in doc:
        doc = doc["generator"]
    cfg = GeneratorConfig.from_dict(doc)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_generator(args.config, args.seed)
    inst = generate(cfg)
    out = args.out
    if out.suffix != ".json":
        out = out / "problem.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(inst.to_json())
    bridges = find_bridges(inst)
    shown = ", ".join(f"{{{a},{b}}}" for a, b in bridges[:10])
    print(f"wrote {out}: {inst.agent_count} agents, {inst.edge_count} edges, "
          f"density {inst.density:.4f}")
    print(f"bridges: {len(bridges)}" + (f" [{shown}]" if bridges else ""))
    return 0


def cmd_run(args) -> int:
    cfg = _load_experiment(args.config, args.seed)
    seed = cfg.base_seed
    inst = generate(cfg.generator.with_seed(seed))
    trace_cpa = cfg.tracing or args.trace
    record = run_hybrid(cfg.init, cfg.solver, inst, seed, cfg.stop, cfg.params,
                        cfg.hold_bound, trace_cpa)
    args.out.mkdir(parents=True, exist_ok=True)
    write_results_csv(args.out / "results.csv", [result_row(cfg, 0, record)])
    write_cost_trace(args.out / "trace.csv", record)
    if trace_cpa:
        write_cpa_trace(args.out / "cpa_trace.csv", record)
        print(f"explored assignments: {explored_space_size(record)}")
    print(f"{cfg.init}_{cfg.solver}: I={record.I} S={record.S} M={record.M} E={record.E} "
          f"initial={record.initial_cost}")
    return 0


def cmd_campaign(args) -> int:
    cfg = _load_experiment(args.config, args.seed)
    if args.trace:
        cfg = cfg.replace(tracing=True)
    result = run_campaign(cfg, jobs=args.jobs, out_dir=args.out)
    for row in result.summary.rows():
        print(f"{row['metric']}: mean={row['mean']} min={row['min']} max={row['max']} "
              f"std={row['std']} n={row['count']}")
    return 0


def cmd_reproduce(args) -> int:
    seed = 0 if args.seed is None else args.seed
    rep = REPRODUCTIONS[args.name](scale=args.scale, base_seed=seed, jobs=args.jobs)
    rep.write(args.out)
    for v in rep.verdicts:
        print(v.line())
    return 0 if rep.passed else 1


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "campaign": cmd_campaign,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if args.scale <= 0:
            raise UsageError("--scale must be > 0")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
