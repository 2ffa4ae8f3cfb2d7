"""Command-line entry point: ``python -m uavsem <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 audit violation,
4 I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from .audit import audit_trace
from .config import ConfigError, config_to_dict, load_config, write_layout_csv
from .ddqn import DDQNAgent, train
from .env import EpisodeTrace, UAVDataCollectionEnv, device_layout
from .plotting import sweep_svg, trajectory_svg

EXIT_OK, EXIT_CONFIG, EXIT_AUDIT, EXIT_IO, EXIT_USAGE = 0, 2, 3, 4, 64
LOG_ENV = "UAVSEM_LOG_LEVEL"
PRESETS = {"field": ex.field_scenario, "corridor": ex.corridor_scenario}

log = logging.getLogger("uavsem")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        return [float(v.strip().lower().replace("k", "e3")) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _scenario(args):
    cfg = load_config(args.config) if args.config else ex.field_scenario()
    changes = {}
    if getattr(args, "bandwidth", None) is not None:
        changes["device_bandwidth"] = args.bandwidth
    if getattr(args, "layout_seed", None) is not None:
        changes["layout_seed"] = args.layout_seed
    return cfg.replace(**changes) if changes else cfg


def _pin_layout(cfg):
    if cfg.device_positions is None:
        cfg = cfg.replace(device_positions=tuple(map(tuple, device_layout(cfg))))
    return cfg


def _load_agent(path) -> DDQNAgent:
    try:
        return DDQNAgent.load(path)
    except (ValueError, KeyError) as exc:
        raise OSError(f"unreadable checkpoint {path}: {exc}") from exc


def cmd_scenario(args) -> int:
    cfg = PRESETS[args.preset]()
    if args.preset == "field" or cfg.device_positions is None:
        cfg = cfg.replace(layout_seed=args.seed, device_positions=None)
        cfg = cfg.replace(device_positions=tuple(map(tuple, device_layout(cfg, args.seed))))
    out = Path(args.out)
    layout = out.with_suffix(".layout.csv")
    write_layout_csv(cfg.device_positions, layout)
    data = config_to_dict(cfg)
    data.pop("device_positions")
    data["layout_file"] = layout.name
    out.write_text(yaml.safe_dump(data, sort_keys=True))
    print(f"wrote {out} and {layout}")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.resume:
        agent = _load_agent(args.resume)
        cfg = _scenario(args) if args.config or agent.scenario() is None else agent.scenario()
    else:
        cfg = _scenario(args)
        agent = DDQNAgent(cfg.state_dim, cfg.n_actions, cfg.train, seed=args.seed, dtype=np.dtype(args.dtype))
    cfg = _pin_layout(cfg)
    env = UAVDataCollectionEnv(cfg, record_trace=False)

    def report(row):
        if "eval_return" in row:
            log.info("episode %d eval_return %.1f eval_psnr_all %.2f", row["episode"], row["eval_return"], row["eval_mean_psnr_all"])

    curve = train(env, agent, episodes=args.episodes, stop_after=args.stop_after, on_episode=report)
    agent.save(args.out, scenario=cfg)
    curve_path = Path(args.curve) if args.curve else Path(str(args.out) + ".curve.csv")
    fields = list(dict.fromkeys(k for row in curve for k in row))
    with open(curve_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(curve)
    print(f"wrote {args.out} and {curve_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.policy == "ddqn":
        if not args.ckpt:
            raise UsageError("--policy ddqn needs --ckpt")
        agent = _load_agent(args.ckpt)
        cfg = _scenario(args) if args.config else agent.scenario()
        outcome = ex.run_agent(cfg, agent)
    else:
        cfg = _scenario(args)
        outcome = ex.run_baseline(cfg, args.policy, args.speed)
    trace_path = out / f"{args.policy}.trace.jsonl"
    outcome.trace.save(trace_path)
    summary = {"policy": args.policy, **outcome.summary()}
    if args.policy != "ddqn":
        summary["speed"] = args.speed
    (out / f"{args.policy}.summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _scenario(args)
    values = args.values or list(ex.BANDWIDTH_GRID if args.axis == "bandwidth" else ex.VELOCITY_GRID)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        if p not in ("greedy", "tsp", "straight", "ddqn"):
            raise UsageError(f"unknown policy {p!r}")
    points = ex.sweep(cfg, args.axis, values, policies, args.replicates, args.seed,
                      speed=args.speed, episodes=args.episodes, dtype=args.dtype, workers=args.workers)
    ex.write_sweep_csv(points, args.out)
    print(f"wrote {args.out} ({len(points)} rows)")
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.kind == "sweep":
        if len(args.inputs) != 1:
            raise UsageError("plot sweep takes exactly one --in CSV")
        try:
            rows = ex.read_sweep_csv(args.inputs[0])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad sweep CSV: {exc}") from exc
        svg = sweep_svg(rows, args.metric)
    else:
        traces = [EpisodeTrace.load(p) for p in args.inputs]
        svg = trajectory_svg(traces, labels=[Path(p).name.split(".")[0] for p in args.inputs])
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    try:
        report = audit_trace(EpisodeTrace.load(args.trace))
    except ValueError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    for v in report.violations:
        print(v)
    print("audit ok" if report.ok else f"audit failed: {len(report.violations)} violation(s)")
    return EXIT_OK if report.ok else EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uavsem", description="UAV semantic data-collection simulator, DDQN trainer and baselines.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scenario", help="generate scenario files")
    s.add_argument("action", choices=["gen"])
    s.add_argument("--seed", type=int, default=0, help="device layout seed")
    s.add_argument("--preset", choices=sorted(PRESETS), default="field")
    s.add_argument("--out", required=True, help="YAML path; the layout CSV is written next to it")
    s.set_defaults(func=cmd_scenario)

    def scenario_args(sp):
        sp.add_argument("--config", help="scenario YAML (default: built-in preset)")
        sp.add_argument("--bandwidth", type=float, help="override device bandwidth (Hz)")
        sp.add_argument("--layout-seed", type=int, help="override layout seed")

    t = sub.add_parser("train", help="train a DDQN agent")
    scenario_args(t)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--episodes", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    t.add_argument("--curve", help="learning-curve CSV (default: CKPT.curve.csv)")
    t.add_argument("--resume", help="continue from this checkpoint")
    t.add_argument("--stop-after", type=int, help="stop after this many more episodes (resumable)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="run one evaluation episode and write its trace")
    scenario_args(e)
    e.add_argument("--policy", choices=["ddqn", "greedy", "tsp", "straight"], required=True)
    e.add_argument("--ckpt", help="checkpoint for --policy ddqn")
    e.add_argument("--speed", type=float, default=ex.BASELINE_SPEED, help="baseline cruise speed (m/s)")
    e.add_argument("--out", default=".", help="output directory")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="sweep device bandwidth or baseline speed")
    w.add_argument("axis", choices=["bandwidth", "velocity"])
    scenario_args(w)
    w.add_argument("--values", type=_floats, help="comma-separated values, e.g. 5k,10k,20k")
    w.add_argument("--policies", default="greedy,tsp")
    w.add_argument("--replicates", type=int, default=3)
    w.add_argument("--seed", type=int, default=0, help="master seed for learned-policy training")
    w.add_argument("--speed", type=float, default=ex.BASELINE_SPEED)
    w.add_argument("--episodes", type=int, help="training episodes for ddqn")
    w.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--out", required=True, help="sweep CSV")
    w.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="render SVG from a sweep CSV or trace files")
    pl.add_argument("kind", choices=["sweep", "trajectory"])
    pl.add_argument("--in", dest="inputs", nargs="+", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--metric", default="mean_psnr_all")
    pl.set_defaults(func=cmd_plot)

    a = sub.add_parser("audit", help="check a trace for physical and causal consistency")
    a.add_argument("--trace", required=True)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
