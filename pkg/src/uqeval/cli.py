"""Command-line interface.

Four subcommands: eval scores a prediction table, recalibrate fits an
isotonic map on one table and applies it to another, case-study runs the
full synthetic study, and plot re-renders figures from persisted plot data
without recomputing anything.

Exit codes are a stable scripting contract: 0 success, 2 for anything
wrong with the inputs (bad flags, malformed files, validation failures),
1 for internal or numeric failures.  All output files are deterministic
functions of the inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .calibration import AdvConfig
from .casestudy import format_aggregate_table, run_case_study
from .core import ProbGrid, UQError, ValidationError
from .fileio import read_prediction_file, report_to_dict, write_report
from .plotting import build_plot_bundle, read_plot_data, render_svg, write_plot_data
from .pnn import LOSS_KINDS
from .recalibration import recalibration_pipeline
from .scoring import metric_report

__all__ = ["build_parser", "main", "entry"]


def _grid_step(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {raw!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"grid step must be in (0, 1), got {raw}")
    return value


def _seed_list(raw: str) -> list[int]:
    try:
        seeds = [int(part) for part in raw.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"seeds must be comma-separated integers, got {raw!r}"
        ) from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _loss_list(raw: str) -> list[str]:
    losses = [part.strip() for part in raw.split(",") if part.strip()]
    for kind in losses:
        if kind not in LOSS_KINDS:
            raise argparse.ArgumentTypeError(
                f"unknown loss {kind!r}, expected a subset of {','.join(LOSS_KINDS)}"
            )
    if not losses:
        raise argparse.ArgumentTypeError("at least one loss is required")
    return losses


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqeval",
        description="Assess, visualize, and improve per-point Gaussian "
        "uncertainty estimates for regression models.",
    )
    parser.add_argument("--version", action="version", version=f"uqeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser(
        "eval", help="score a prediction table and write a metric report"
    )
    p_eval.add_argument("input", help="prediction file (columns y, mu, sigma, x0..xk)")
    p_eval.add_argument("--grid-step", type=_grid_step, default=0.01,
                        help="spacing of the probability grid (default 0.01)")
    p_eval.add_argument("--adv", action="store_true",
                        help="also run the adversarial group-calibration search")
    p_eval.add_argument("--seed", type=int, default=0,
                        help="seed for the adversarial subset draws (default 0)")
    p_eval.add_argument("--out", default=None,
                        help="report path (default: print JSON to stdout)")
    p_eval.add_argument("--plot-data", default=None, metavar="DIR",
                        help="also write plot-data files for the plot command")
    p_eval.set_defaults(func=cmd_eval)

    p_recal = sub.add_parser(
        "recalibrate",
        help="fit an isotonic recalibration map on one table, apply to another",
    )
    p_recal.add_argument("recal", help="prediction file the map is fitted on")
    p_recal.add_argument("test", help="prediction file the map is applied to")
    p_recal.add_argument("--out-map", required=True,
                         help="where to write the fitted map (JSON)")
    p_recal.add_argument("--out-report", required=True,
                         help="where to write the before/after report pair (JSON)")
    p_recal.add_argument("--grid-step", type=_grid_step, default=0.01,
                         help="spacing of the probability grid (default 0.01)")
    p_recal.set_defaults(func=cmd_recalibrate)

    p_case = sub.add_parser(
        "case-study", help="run the synthetic heteroscedastic training study"
    )
    p_case.add_argument("--losses", type=_loss_list, default=list(LOSS_KINDS),
                        help="comma-separated training losses "
                        f"(default {','.join(LOSS_KINDS)})")
    p_case.add_argument("--seeds", type=_seed_list, default=[0, 1, 2, 3, 4],
                        help="comma-separated integer seeds (default 0,1,2,3,4)")
    p_case.add_argument("--out-dir", required=True,
                        help="artifact tree root (reports, plot data, figures)")
    p_case.add_argument("--epochs", type=int, default=2000,
                        help="training epochs per model (default 2000)")
    p_case.add_argument("--resample-probs", action=argparse.BooleanOptionalAction,
                        default=True,
                        help="resample check/interval loss levels every epoch")
    p_case.add_argument("--quiet", action="store_true",
                        help="suppress progress lines on stderr")
    p_case.set_defaults(func=cmd_case_study)

    p_plot = sub.add_parser(
        "plot", help="render SVG figures from persisted plot data"
    )
    p_plot.add_argument("data_dir", help="directory holding plot-data files "
                        "and their manifest")
    p_plot.add_argument("--out-dir", default=None,
                        help="where to write the SVGs (default: the data directory)")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def cmd_eval(args: argparse.Namespace) -> int:
    preds, data = read_prediction_file(args.input)
    grid = ProbGrid.uniform(args.grid_step)
    adv_cfg = AdvConfig() if args.adv else None
    report = metric_report(preds, data, grid, adv_cfg=adv_cfg, rng=args.seed)
    payload = report_to_dict(report, grid, seed=args.seed)
    if args.out is not None:
        write_report(args.out, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if args.plot_data is not None:
        bundle = build_plot_bundle(
            preds, data, grid=grid, adv=report.adv_group_curve
        )
        write_plot_data(bundle, args.plot_data)
    return 0


def cmd_recalibrate(args: argparse.Namespace) -> int:
    preds_recal, data_recal = read_prediction_file(args.recal)
    preds_test, data_test = read_prediction_file(args.test)
    grid = ProbGrid.uniform(args.grid_step)
    result = recalibration_pipeline(
        preds_recal, data_recal, preds_test, data_test, grid
    )
    write_report(args.out_map, result.map.to_dict())
    write_report(args.out_report, {
        "before": report_to_dict(result.before, grid),
        "after": report_to_dict(result.after, grid),
        "carried_over": list(result.carried_over),
    })
    return 0


def cmd_case_study(args: argparse.Namespace) -> int:
    progress = None if args.quiet else (
        lambda message: print(message, file=sys.stderr)
    )
    result = run_case_study(
        args.seeds,
        out_dir=args.out_dir,
        losses=tuple(args.losses),
        epochs=args.epochs,
        resample_probs=args.resample_probs,
        progress=progress,
    )
    sys.stdout.write(
        format_aggregate_table(result.aggregate, result.methods, len(result.seeds))
    )
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    bundle = read_plot_data(args.data_dir)
    out_dir = args.out_dir if args.out_dir is not None else args.data_dir
    rendered = render_svg(bundle, out_dir)
    for name in sorted(rendered):
        print(rendered[name])
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed its usage/error message.
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
