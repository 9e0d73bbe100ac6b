"""Command-line scenario runner.

    consensuslab run <config.json | bundled-name> [--out DIR] [--step D] [--plots]
    consensuslab list
    consensuslab batch <dir> [--out DIR] [--step D] [--plots]

Exit codes: 0 all checks passed, 2 at least one check failed, 1 error.
The output root can also be set with the CONSENSUSLAB_OUT environment
variable.  Plots are optional SVG renderings; a missing plotting backend
never breaks the CSV/JSON outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .scenarios import ScenarioResult, bundled_configs, list_scenarios, run_config

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _load_config(target: str) -> dict:
    bundled = bundled_configs()
    if target in bundled:
        return bundled[target]
    path = Path(target)
    if not path.exists():
        raise FileNotFoundError(f"{target}: no such config file or bundled scenario")
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{target}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(config, dict):
        raise ValueError(f"{target}:1:1: scenario config must be a JSON object")
    for ref_key in ("schedule_file", "delays_file"):
        ref = config.get(ref_key)
        if ref and not Path(ref).is_absolute():
            config[ref_key] = str(path.parent / ref)
    return config


def _output_dir(config: dict, out_flag: str | None) -> Path:
    root = out_flag or config.get("out") or os.environ.get("CONSENSUSLAB_OUT") or "runs"
    return Path(root) / config.get("name", "scenario")


def _write_plots(result: ScenarioResult, out: Path) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    if result.diameter is not None:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(result.diameter.times, result.diameter.values)
        ax.set_xlabel("t")
        ax.set_ylabel("window diameter")
        ax.set_title(result.name)
        fig.tight_layout()
        fig.savefig(out / "diameter.svg")
        plt.close(fig)
    if result.trajectory is not None:
        traj = result.trajectory
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for agent in range(traj.agent_count):
            ax.plot(traj.times, traj.states[:, agent, 0], label=f"agent {agent}")
        ax.set_xlabel("t")
        ax.set_ylabel("value (coord 0)")
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(out / "trajectory.svg")
        plt.close(fig)


def _run_one(target: str, out_flag: str | None, step: float | None, plots: bool) -> int:
    config = dict(_load_config(target))
    if step is not None:
        config["step"] = step
    result = run_config(config)
    out = _output_dir(config, out_flag)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(result.report_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.trajectory is not None:
        result.trajectory.to_csv(out / "trajectory.csv")
    if result.diameter is not None:
        result.diameter.to_csv(out / "diameter.csv")
    if plots:
        _write_plots(result, out)
    for name, check in sorted(result.checks.items()):
        status = "pass" if check.passed else "FAIL"
        print(f"[{status}] {result.name}: {name} (value={check.value:.6g}, need {check.direction} {check.threshold:.6g})")
    print(f"{result.name}: {'all checks passed' if result.passed else 'CHECKS FAILED'} -> {out}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="consensuslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario config or bundled scenario")
    run_p.add_argument("config", help="path to a scenario JSON or a bundled scenario name")
    run_p.add_argument("--out", help="output root directory")
    run_p.add_argument("--step", type=float, help="override the sampling step")
    run_p.add_argument("--plots", action="store_true", help="also write SVG plots")

    sub.add_parser("list", help="list bundled scenarios")

    batch_p = sub.add_parser("batch", help="run every *.json config in a directory")
    batch_p.add_argument("directory")
    batch_p.add_argument("--out", help="output root directory")
    batch_p.add_argument("--step", type=float, help="override the sampling step")
    batch_p.add_argument("--plots", action="store_true")

    args = parser.parse_args(argv)

    try:
        if args.command == "list":
            for name, summary, claim in list_scenarios():
                print(f"{name:28s} {summary}")
                print(f"{'':28s}   {claim}")
            return EXIT_OK
        if args.command == "run":
            return _run_one(args.config, args.out, args.step, args.plots)
        if args.command == "batch":
            directory = Path(args.directory)
            configs = sorted(directory.glob("*.json"))
            if not configs:
                print(f"{directory}: no *.json configs found", file=sys.stderr)
                return EXIT_ERROR
            worst = EXIT_OK
            for cfg in configs:
                code = _run_one(str(cfg), args.out, args.step, args.plots)
                worst = max(worst, code)
            return worst
    except BrokenPipeError:
        return EXIT_ERROR
    except Exception as exc:  # config and IO problems end with a message, not a trace
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
