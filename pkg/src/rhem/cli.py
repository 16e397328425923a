"""Batch command-line driver.

Subcommands: simulate, panel, stats, fit, study. Every stochastic
subcommand requires an explicit --seed; no OS entropy is ever used, so
re-running a command reproduces its outputs byte for byte. Exit codes:
0 success, 2 invalid input, 3 numerical diagnostic.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .censoring import CensoredPanel, WaveGrid, build_panel, DEFAULT_STRATEGY, STRATEGIES
from .errors import FitDiagnosticError, InvalidInputError
from .events import Actor, enumerate_risk_set
from .fitting import fit_model
from .simulate import (
    SimConfig,
    intensity_model_from_dict,
    simulate_gillespie,
    simulate_tau_leap,
)
from .statistics import STATISTIC_NAMES
from . import studies

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIAGNOSTIC = 3


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FitDiagnosticError as exc:
        print(f"diagnostic: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rhem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="parallel replicates")

    p = sub.add_parser("simulate", parents=[common], help="generate event histories")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--study", choices=("study1", "study2"), help="built-in study model")
    p.add_argument("--model", type=Path, help="intensity model JSON")
    p.add_argument("--actors", type=Path, help="actors CSV (required with --model)")
    p.add_argument("--lambda0", type=float, default=0.25, help="study1 baseline rate")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--horizon", type=float, default=6.0)
    p.add_argument("--max-sender-size", type=int, default=3)
    p.add_argument("--tau", type=float, help="tau-leap step; exact sampling when omitted")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("panel", parents=[common], help="censored panel from a history")
    _panel_arguments(p)
    p.add_argument("--out", type=Path, default=None, help="output CSV (default panel.csv)")
    p.set_defaults(handler=cmd_panel)

    p = sub.add_parser("stats", parents=[common], help="covariate export, no outcomes")
    _panel_arguments(p)
    p.add_argument("--out", type=Path, default=None, help="output CSV (default stats.csv)")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("fit", parents=[common], help="fit a model spec to a panel")
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True, help="model spec JSON")
    p.add_argument("--stem", default="fit", help="output file stem")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("study", parents=[common], help="replicate a simulation study")
    p.add_argument("--name", choices=("study1", "study2"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, default=100)
    p.set_defaults(handler=cmd_study)
    return parser


def _panel_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--history", type=Path, required=True)
    p.add_argument("--actors", type=Path, help="actors CSV with attributes")
    p.add_argument("--waves", required=True, help="comma-separated boundaries, e.g. 0,2,8,20,32")
    p.add_argument("--specs", default="", help=f"comma-separated from {STATISTIC_NAMES}")
    p.add_argument("--strategy", choices=STRATEGIES, default=DEFAULT_STRATEGY)
    p.add_argument("--max-sender-size", type=int, default=3)


def cmd_simulate(args) -> int:
    if args.reps < 0:
        raise InvalidInputError("--reps must be >= 0")
    if args.reps == 0:
        print("warning: --reps 0, nothing to simulate", file=sys.stderr)
        return EXIT_OK
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.study == "study1":
        model_payload = {"study": "study1", "lambda0": args.lambda0}
    elif args.study == "study2":
        model_payload = {"study": "study2"}
    elif args.model is not None:
        if args.actors is None:
            raise InvalidInputError("--model needs --actors for the universe attributes")
        with open(args.model, encoding="utf-8") as fh:
            model_payload = json.load(fh)
    else:
        raise InvalidInputError("choose --study or provide --model/--actors")

    tau = args.tau
    if args.study == "study2" and tau is None:
        tau = studies.DEFAULT_TAU

    start = time.perf_counter()
    paths = []
    for rep in range(args.reps):
        write_actors = False
        if args.study == "study1":
            rng = np.random.default_rng(np.random.SeedSequence([args.seed, rep, 1]))
            universe = studies.study1_universe(rng)
            model = studies.study1_model(args.lambda0)
            write_actors = True  # attributes are per-replicate draws
        elif args.study == "study2":
            universe = tuple(Actor(id=f"a{i}") for i in range(studies.NUM_ACTORS))
            model = studies.study2_model()
        else:
            universe = io.read_actors_csv(args.actors)
            model = intensity_model_from_dict(model_payload)
        config = SimConfig(
            horizon=args.horizon,
            max_sender_size=args.max_sender_size,
            seed=args.seed,
            tau=tau,
            replicate=rep,
        )
        if tau is not None or model.time_varying:
            if tau is None:
                raise InvalidInputError("time-varying model needs --tau")
            history = simulate_tau_leap(universe, model, config)
        else:
            history = simulate_gillespie(universe, model, config)
        path = out_dir / f"history_rep{rep:03d}.csv"
        io.write_history_csv(history, path)
        if write_actors:
            io.write_actors_csv(universe, out_dir / f"actors_rep{rep:03d}.csv")
        paths.append(str(path))
    io.write_run_metadata(
        out_dir / "simulate_metadata.json",
        model=model_payload,
        seed=args.seed,
        reps=args.reps,
        horizon=args.horizon,
        max_sender_size=args.max_sender_size,
        tau=tau,
        histories=paths,
        wall_time_s=round(time.perf_counter() - start, 3),
    )
    print(f"wrote {len(paths)} histories to {out_dir}")
    return EXIT_OK


def _load_panel(args) -> CensoredPanel:
    universe = io.read_actors_csv(args.actors) if args.actors else None
    history = io.read_history_csv(args.history, universe=universe)
    boundaries = tuple(float(b) for b in str(args.waves).split(","))
    grid = WaveGrid(boundaries)
    risk_set = enumerate_risk_set(history.universe, args.max_sender_size)
    specs = tuple(s for s in str(args.specs).split(",") if s)
    return build_panel(history, grid, risk_set, specs=specs, strategy=args.strategy)


def cmd_panel(args) -> int:
    panel = _load_panel(args)
    out = args.out or (args.out_dir / "panel.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_panel_csv(panel, out)
    print(f"wrote {len(panel)} rows to {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    panel = _load_panel(args)
    out = args.out or (args.out_dir / "stats.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    specs = [s for s in str(args.specs).split(",") if s]
    io.write_statistics_csv(panel, out, specs)
    print(f"wrote {len(panel)} rows to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    panel = io.read_panel_csv(args.panel)
    spec = io.read_model_spec(args.model)
    result = fit_model(panel, spec)
    written = io.write_fit_result(result, args.out_dir, stem=args.stem)
    print("\n".join(str(p) for p in written))
    return EXIT_OK


def cmd_study(args) -> int:
    if args.name == "study1":
        result = studies.run_study1(replicates=args.reps, seed=args.seed, threads=args.threads)
    else:
        result = studies.run_study2(replicates=args.reps, seed=args.seed, threads=args.threads)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    estimates_path = args.out_dir / f"{args.name}_estimates.csv"
    summary_path = args.out_dir / f"{args.name}_summary.csv"
    result.estimates.to_csv(estimates_path, index=False)
    result.summary.to_csv(summary_path, index=False)
    print(f"wrote {estimates_path} and {summary_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
