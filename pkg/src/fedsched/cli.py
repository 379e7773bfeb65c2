"""Command-line front end.

Subcommands: run (one experiment), regret (oracle-mode run plus regret
report), sweep (vary one config field over several values), compare
(same config under several policies). Configs are JSON objects whose
keys are ExperimentConfig fields; outputs land under --out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace

from .harness import (
    ExperimentConfig,
    compute_regret,
    emit,
    run_experiment,
    run_many,
)

PARAM_ALIASES = {
    "V": "tradeoff_v",
    "T0": "explore_t0",
    "d_max": "d_max_s",
    "eps": "epsilon",
    "T": "rounds",
}


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)


def _resolve_param(name: str) -> str:
    name = PARAM_ALIASES.get(name, name)
    if name not in {f.name for f in fields(ExperimentConfig)}:
        raise ValueError(f"unknown config field {name!r}")
    return name


def _coerce(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "bool":
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"cannot parse {raw!r} as bool")
    return raw


def _seeds(args, config: ExperimentConfig) -> list:
    if args.seeds:
        return [int(s) for s in args.seeds.split(",")]
    return [config.seed]


def cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    result = run_experiment(config)
    paths = emit(result, args.out)
    last = result.metrics[-1]
    print(
        f"{config.policy}: {config.rounds} rounds, "
        f"cum_delay={last.cum_delay_s:.3f}s, accuracy={last.accuracy:.4f}"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_regret(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if config.env_mode != "oracle-stationary":
        raise ValueError("regret needs env_mode = oracle-stationary")
    result = run_experiment(config)
    report = compute_regret(result)
    paths = emit(result, args.out, regret=report)
    bound = "inapplicable" if report.bound is None else f"{report.bound:.2f}"
    print(
        f"{config.policy}: cumulative regret {report.cumulative[-1]:.3f} "
        f"over {config.rounds} rounds (bound {bound}, "
        f"delta_min={report.delta_min:.3f})"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    param = _resolve_param(args.param)
    values = [_coerce(param, v) for v in args.values.split(",")]
    if not values:
        raise ValueError("need at least one value")
    seeds = _seeds(args, config)
    combos = [(v, s) for v in values for s in seeds]
    configs = [replace(config, **{param: v}, seed=s) for v, s in combos]
    results = run_many(configs, jobs=args.jobs)
    index = {}
    for (v, s), result in zip(combos, results):
        sub = os.path.join(args.out, f"{param}={v}", f"seed={s}")
        emit(result, sub)
        last = result.metrics[-1]
        index.setdefault(str(v), {})[str(s)] = {
            "cum_delay_s": last.cum_delay_s,
            "accuracy": last.accuracy,
            "min_sel_frac": float(min(last.sel_frac)),
        }
        print(
            f"{param}={v} seed={s}: cum_delay={last.cum_delay_s:.3f}s, "
            f"accuracy={last.accuracy:.4f}"
        )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "sweep.json"), "w") as fh:
        json.dump({"param": param, "results": index}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_compare(args) -> int:
    config = _load_config(args.config)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if not policies:
        raise ValueError("need at least one policy")
    seeds = _seeds(args, config)
    combos = [(p, s) for p in policies for s in seeds]
    configs = [replace(config, policy=p, seed=s) for p, s in combos]
    results = run_many(configs, jobs=args.jobs)
    index = {}
    for (p, s), result in zip(combos, results):
        sub = os.path.join(args.out, f"policy={p}", f"seed={s}")
        emit(result, sub)
        last = result.metrics[-1]
        index.setdefault(p, {})[str(s)] = {
            "cum_delay_s": last.cum_delay_s,
            "accuracy": last.accuracy,
            "min_sel_frac": float(min(last.sel_frac)),
        }
    for p in policies:
        delays = [index[p][str(s)]["cum_delay_s"] for s in seeds]
        mean = sum(delays) / len(delays)
        print(f"{p}: mean cum_delay {mean:.3f}s over {len(seeds)} seed(s)")
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "compare.json"), "w") as fh:
        json.dump({"results": index}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsched",
        description="Scheduling simulator for private federated learning "
        "over shared wireless channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default="fedsched_out", help="output directory")

    p_run = sub.add_parser("run", help="run one experiment")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(fn=cmd_run)

    p_reg = sub.add_parser("regret", help="oracle-mode run with regret report")
    common(p_reg)
    p_reg.add_argument("--seed", type=int, default=None)
    p_reg.set_defaults(fn=cmd_regret)

    p_sw = sub.add_parser("sweep", help="vary one config field")
    common(p_sw)
    p_sw.add_argument("--param", required=True, help="config field (V, T0, ...)")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_sw.add_argument("--jobs", type=int, default=None)
    p_sw.set_defaults(fn=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="run several policies")
    common(p_cmp)
    p_cmp.add_argument(
        "--policies",
        default="mamab-om,mamab-gmba,random,round-robin,single-ucb",
        help="comma-separated policy names",
    )
    p_cmp.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_cmp.add_argument("--jobs", type=int, default=None)
    p_cmp.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
