"""Command-line surface: generate, train, evaluate, predict, export-plots.

Exit codes are a stable contract for harnesses: 0 success, 1 usage error,
2 data error (unreadable/invalid inputs), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, resolve_config
from .metrics import evaluate_scenarios, write_scenario_csv
from .model import forward
from .qdecoder import confidence_order
from .scenario import build_example, inverse_transform_positions, read_scenarios, write_scenarios
from .synth import synth_generate
from .training import (
    NonFiniteLossError,
    load_checkpoint,
    read_train_log,
    save_checkpoint,
    train,
    write_train_log,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        raise UsageError(message)


def _common_flags(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--workers", type=int, help="parallel workers for evaluation/prediction")


def build_parser() -> _Parser:
    parser = _Parser(prog="laneq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic scenarios as JSONL")
    _common_flags(gen)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--out", required=True, help="output JSONL path")

    tr = sub.add_parser("train", help="train from scratch, writing checkpoints and a log")
    _common_flags(tr)
    tr.add_argument("--data", help="scenario JSONL path or synthetic:<count>")
    tr.add_argument("--out", default="out", help="output directory")

    ev = sub.add_parser("evaluate", help="score a checkpoint on a scenario split")
    _common_flags(ev)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", help="scenario JSONL path or synthetic:<count>")
    ev.add_argument("--out", help="report JSON path (default: stdout)")
    ev.add_argument("--per-scenario", help="optional per-mode CSV dump path")

    pr = sub.add_parser("predict", help="dump all mode trajectories per scenario")
    _common_flags(pr)
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--data", help="scenario JSONL path or synthetic:<count>")
    pr.add_argument("--out", required=True, help="output JSONL path")

    xp = sub.add_parser("export-plots", help="tidy per-figure tables plus rendered PNGs")
    _common_flags(xp)
    xp.add_argument("--train-log", help="training log CSV")
    xp.add_argument("--report", action="append", default=[], help="EvalReport JSON (repeatable)")
    xp.add_argument("--out", default="plots", help="output directory")
    xp.add_argument("--no-figures", action="store_true", help="write tables only")
    return parser


def _resolve(args) -> RunConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "data", None):
        overrides["scenario_source"] = args.data
    try:
        return resolve_config(args.config, overrides)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {exc.filename}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_scenarios(config: RunConfig):
    source = config.scenario_source
    if not source:
        raise UsageError("no scenario source: pass --data or set scenario_source in the config")
    if source.startswith("synthetic:"):
        count = int(source.split(":", 1)[1])
        return synth_generate(config.synth(count), config.seed)
    return read_scenarios(source)


def _build_examples(scenarios, config: RunConfig):
    examples, skipped = [], 0
    for scenario in scenarios:
        try:
            examples.append(
                build_example(scenario, scale=config.scale, lane_radius=config.lane_radius)
            )
        except ValueError as exc:
            skipped += 1
            print(f"warning: skipping {scenario.scenario_id}: {exc}", file=sys.stderr)
    return examples, skipped


def cmd_generate(args) -> int:
    config = _resolve(args)
    scenarios = synth_generate(config.synth(args.count), config.seed)
    write_scenarios(args.out, scenarios)
    kinds = {}
    speeds = []
    for scenario in scenarios:
        kinds[scenario.scenario_id.rsplit("-", 2)[0]] = (
            kinds.get(scenario.scenario_id.rsplit("-", 2)[0], 0) + 1
        )
        speeds.append(scenario.current.speed)
    print(f"wrote {len(scenarios)} scenarios to {args.out}")
    for kind in sorted(kinds):
        print(f"  {kind}: {kinds[kind]}")
    if speeds:
        print(f"  mean speed: {np.mean(speeds):.2f} m/s")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _resolve(args)
    config_hash = config.fingerprint()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenarios = _load_scenarios(config)
    examples, skipped = _build_examples(scenarios, config)
    if not examples:
        raise ValueError("no usable training scenarios")
    if skipped:
        print(f"warning: skipped {skipped} scenarios during preprocessing", file=sys.stderr)

    result = train(
        examples,
        config.spsa(),
        config.architecture(),
        checkpoint_dir=str(out_dir),
        config_hash=config_hash,
    )
    write_train_log(out_dir / "trainlog.csv", result.log, config_hash)
    save_checkpoint(
        out_dir / "best.ckpt", result.best_params, config.seed, result.best_epoch, config_hash
    )
    if result.log:
        last = result.log[-1]
        print(
            f"trained {len(result.log)} epochs; best epoch {result.best_epoch} "
            f"(val minADE@16 {last.best_val_min_ade_16:.3f} m); outputs in {out_dir}"
        )
    else:
        print(f"epochs=0: wrote initial checkpoint to {out_dir / 'best.ckpt'}")
    return EXIT_OK


def _load_params(checkpoint, config: RunConfig):
    theta, header = load_checkpoint(checkpoint, config.architecture())
    expected = config.fingerprint()
    if header.get("config_hash") and header["config_hash"] != expected:
        print(
            f"warning: checkpoint config hash {header['config_hash']} does not match "
            f"the resolved config {expected}",
            file=sys.stderr,
        )
    return theta


def cmd_evaluate(args) -> int:
    config = _resolve(args)
    theta = _load_params(args.checkpoint, config)
    scenarios = _load_scenarios(config)
    report, evaluations = evaluate_scenarios(
        scenarios,
        theta,
        config.architecture(),
        scale=config.scale,
        lane_radius=config.lane_radius,
        config_hash=config.fingerprint(),
        workers=config.workers,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        print(f"wrote report for {report.n_scenarios} scenarios to {args.out}")
    else:
        sys.stdout.write(report.to_json())
    if args.per_scenario:
        write_scenario_csv(evaluations, args.per_scenario, config.fingerprint())
    return EXIT_OK


def _predict_line(task) -> str:
    scenario, theta, config = task
    example = build_example(scenario, scale=config.scale, lane_radius=config.lane_radius)
    modes = forward(example, theta, config.architecture())
    entries = []
    for mode in confidence_order(modes.confidences):
        lane = modes.trajectories[mode]
        world = inverse_transform_positions(
            lane, example.origin[:2], example.lane_yaw, example.scale
        )
        entries.append(
            {
                "mode": int(mode),
                "confidence": float(modes.confidences[mode]),
                "lane_frame": lane.tolist(),
                "world": world.tolist(),
            }
        )
    baseline_world = inverse_transform_positions(
        example.baseline, example.origin[:2], example.lane_yaw, example.scale
    )
    return json.dumps(
        {
            "id": example.scenario_id,
            "baseline_kind": example.baseline_kind,
            "baseline_world": baseline_world.tolist(),
            "modes": entries,
            "config_hash": config.fingerprint(),
        },
        sort_keys=True,
    )


def cmd_predict(args) -> int:
    config = _resolve(args)
    theta = _load_params(args.checkpoint, config)
    scenarios = _load_scenarios(config)
    tasks = [(scenario, theta, config) for scenario in scenarios]
    if config.workers > 1 and len(tasks) >= 4:
        from multiprocessing import Pool

        with Pool(config.workers) as pool:
            lines = pool.map(_predict_line, tasks)  # order preserved
    else:
        lines = [_predict_line(task) for task in tasks]
    with open(args.out, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    print(f"wrote predictions for {len(scenarios)} scenarios to {args.out}")
    return EXIT_OK


def _read_log_hash(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("# config_hash="):
        return first.split("=", 1)[1]
    return ""


def cmd_export_plots(args) -> int:
    from . import plots

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_rows, log_hash = [], ""
    if args.train_log:
        log_rows = read_train_log(args.train_log)
        log_hash = _read_log_hash(args.train_log)
    reports = []
    for path in args.report:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        payload["source"] = Path(path).stem
        reports.append(payload)
    if not log_rows and not reports:
        raise UsageError("export-plots needs --train-log and/or --report inputs")
    written = plots.export_all(
        log_rows, log_hash, reports, str(out_dir), figures=not args.no_figures
    )
    print(f"wrote {len(written)} files to {out_dir}: {', '.join(written)}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "export-plots": cmd_export_plots,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLossError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
