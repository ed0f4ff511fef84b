"""Command-line entry points.

Subcommands: truth (training trajectory to a snapshot file), reduce (basis
file from snapshots), lyapunov (exponent spectrum and attractor dimension),
assimilate (per-trial metrics CSV), sweep (summary CSV over parameter lists).
Set PROJDA_LOG=debug|info|warning to control logging.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .errors import ConfigError, ProjdaError, ReductionError
from .experiments import load_config, replace, run_point, run_sweep
from .experiments.sweep import write_summary_csv, write_trial_csv
from .experiments.trial import _initial_state, training_trajectory
from .models import load_snapshots, save_snapshots
from .numerics import RngStream
from .reduction import dmd, dmd_basis, kaplan_yorke, lyapunov_spectrum, pod_basis, save_basis

logger = logging.getLogger("projda.cli")


def _cmd_truth(args, config):
    states, meta = training_trajectory(config)
    save_snapshots(args.out, states, meta)
    print(f"wrote {states.shape[0]} snapshots of dimension {states.shape[1]} to {args.out}")
    return 0


def _cmd_reduce(args, config):
    kind = (args.kind or config.reduction_kind).lower()
    if kind not in ("pod", "dmd"):
        raise ConfigError(
            f"reduce builds pod or dmd bases; {kind!r} bases are not precomputable "
            "(the unstable-subspace basis is rebuilt every assimilation cycle)"
        )
    rank = args.r if args.r is not None else config.r_p
    snapshot_file = config.snapshot_file or "truth.bin"
    snapshots, sidecar = load_snapshots(snapshot_file)
    if kind == "pod":
        basis = pod_basis(snapshots.T, rank)
        parameters = {"rank": rank}
    else:
        dt = float(sidecar.get("dt", 1.0))
        result = dmd(snapshots.T, rank=config.dmd_rank or None, dt=dt)
        basis = dmd_basis(result, rank)
        parameters = {"rank": rank, "svd_rank": config.dmd_rank or 0, "dt": dt}
    save_basis(args.out, basis, source_snapshot_file=snapshot_file,
               parameters=parameters)
    print(f"wrote a {basis.state_dim}x{basis.rank} {kind} basis to {args.out}")
    return 0


def _cmd_lyapunov(args, config):
    model = config.build_model()
    rng = RngStream(config.base_seed).child(0)
    x = _initial_state(config, model, rng)
    for _ in range(config.burn_in):
        x = model.step(x)
    exponents = lyapunov_spectrum(
        model, x, config.lyapunov_steps,
        min(config.lyapunov_exponents, model.dimension),
        eps=config.lyapunov_eps, qr_interval=config.lyapunov_qr_interval,
    )
    try:
        dimension = kaplan_yorke(exponents)
        note = ""
    except ReductionError as exc:
        dimension = float("nan")
        note = f" ({exc})"
    for i, value in enumerate(exponents):
        print(f"lambda_{i + 1} = {value: .6f}")
    print(f"kaplan_yorke = {dimension:.4f}{note}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "exponent"])
            for i, value in enumerate(exponents):
                writer.writerow([i + 1, f"{value:.10g}"])
            writer.writerow(["kaplan_yorke", f"{dimension:.10g}"])
        print(f"wrote {args.out}")
    return 0


def _cmd_assimilate(args, config):
    records = run_point(config, jobs=args.jobs)
    write_trial_csv(args.out, records, config.build_model().cycle_dt)
    ok = [rec for rec in records if not rec.failed]
    failed = len(records) - len(ok)
    if ok:
        mean_rmse = float(np.mean([rec.mean_rmse for rec in ok]))
        resamp = float(100.0 * np.mean([rec.resample_fraction for rec in ok]))
        print(f"{len(ok)} trials: mean rmse {mean_rmse:.4g}, "
              f"resampled {resamp:.1f}% of steps, {failed} failed")
    else:
        print(f"all {failed} trials failed; see {args.out} and the log")
    print(f"wrote {args.out}")
    return 0 if ok else 1


def _cmd_sweep(args, config):
    rows = run_sweep(config, jobs=args.jobs)
    write_summary_csv(args.out, rows, config.model_kind)
    print(f"wrote {len(rows)} summary rows to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projda",
        description="Twin experiments for projected particle filters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_out):
        p.add_argument("--config", required=True, help="INI experiment configuration")
        p.add_argument("--out", default=default_out, help=f"output path (default {default_out})")
        p.add_argument("--seed", type=int, default=None, help="override [experiment] base_seed")

    p_truth = sub.add_parser("truth", help="generate a training trajectory snapshot file")
    common(p_truth, "truth.bin")
    p_truth.set_defaults(handler=_cmd_truth)

    p_reduce = sub.add_parser("reduce", help="build a reduction basis from snapshots")
    common(p_reduce, "basis.bin")
    p_reduce.add_argument("--kind", choices=("pod", "dmd", "aus"), default=None,
                          help="basis kind (default from config)")
    p_reduce.add_argument("--r", type=int, default=None, help="basis rank (default r_p)")
    p_reduce.set_defaults(handler=_cmd_reduce)

    p_lyap = sub.add_parser("lyapunov", help="Lyapunov spectrum and Kaplan-Yorke dimension")
    common(p_lyap, "")
    p_lyap.set_defaults(handler=_cmd_lyapunov)

    p_assim = sub.add_parser("assimilate", help="run trials, write per-trial metrics CSV")
    common(p_assim, "metrics.csv")
    p_assim.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_assim.add_argument("--kind", choices=("pod", "dmd", "aus"), default=None)
    p_assim.add_argument("--r", type=int, default=None, help="override r_p")
    p_assim.add_argument("--rd", type=int, default=None, help="override r_d")
    p_assim.set_defaults(handler=_cmd_assimilate)

    p_sweep = sub.add_parser("sweep", help="run the configured sweep, write summary CSV")
    common(p_sweep, "summary.csv")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--kind", choices=("pod", "dmd", "aus"), default=None)
    p_sweep.add_argument("--r", type=int, default=None, help="override r_p")
    p_sweep.add_argument("--rd", type=int, default=None, help="override r_d")
    p_sweep.set_defaults(handler=_cmd_sweep)
    return parser


def _apply_overrides(args, config):
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "kind", None) is not None and args.command in ("assimilate", "sweep"):
        overrides["reduction_kind"] = args.kind
    if getattr(args, "r", None) is not None and args.command in ("assimilate", "sweep"):
        overrides["r_p"] = args.r
    if getattr(args, "rd", None) is not None:
        overrides["r_d"] = args.rd
    return replace(config, **overrides) if overrides else config


def dispatch(argv) -> int:
    level = os.environ.get("PROJDA_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        config = _apply_overrides(args, config)
        return args.handler(args, config)
    except ProjdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
