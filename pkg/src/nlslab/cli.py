"""Command-line front end.

Subcommands: groundstate, run, sweep-eps, sweep-coupled, check, plot.
Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import os
import sys

import numpy as np

from .classical import SingularityApproachError
from .config import ExperimentConfig, apply_overrides, load_config
from .groundstate import GroundStateError
from .harness import (coupled_pairs, build_grid, build_model,
                      load_or_solve_ground_state, run_coupled_scaling,
                      run_epsilon_scaling, run_single, write_scaling_csv)
from .modulation import MassMismatchError
from .potential import check_hypotheses
from .solver import BlowUpError, ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Semiclassical soliton runs in a singular potential: "
                    "ground states, coupled classical/field evolution, "
                    "diagnostics, and residual-scaling sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (enables CSV/figures)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="config override, repeatable (dots or __)")

    p = sub.add_parser("groundstate", help="solve and report the soliton profile")
    common(p)

    p = sub.add_parser("run", help="one coupled run with full diagnostics")
    common(p)
    p.add_argument("--snapshot-stride", type=int,
                   help="steps between recorded snapshots")

    p = sub.add_parser("sweep-eps",
                       help="residual scaling in eps at fixed truncation")
    common(p)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("sweep-coupled",
                       help="residual scaling along the coupled "
                            "(eps, delta) truncation path")
    common(p)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("check",
                       help="evaluate the structural hypotheses for a config")
    common(p)

    p = sub.add_parser("plot", help="re-render figures from a rows CSV")
    p.add_argument("csv", help="rows CSV produced by the run command")
    p.add_argument("--out", help="output prefix (default: alongside the CSV)")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = apply_overrides(cfg, args.override)
    if args.out:
        cfg.entries["output.dir"] = args.out
    if getattr(args, "snapshot_stride", None):
        cfg.entries["solver.snapshot_stride"] = int(args.snapshot_stride)
    return cfg


def _cmd_groundstate(args) -> int:
    cfg = _load(args)
    out_dir = cfg.get("output.dir") or None
    sol = load_or_solve_ground_state(
        build_grid(cfg), cfg.get("solver.p"), tol=cfg.get("groundstate.tol"),
        max_iter=cfg.get("groundstate.max_iter"), cache_dir=out_dir)
    from .groundstate import profile_energy
    print(f"mass_m = {sol.mass_m!r}")
    print(f"residual_inf = {sol.residual_inf!r}")
    print(f"decay_rate = {sol.decay_rate!r}")
    print(f"profile_energy = {profile_energy(sol.field, sol.p)!r}")
    print(f"iterations = {sol.iterations}")
    if out_dir:
        from .reporting import plot_groundstate
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, cfg.get("output.prefix") + "_groundstate.svg")
        plot_groundstate(sol, path)
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load(args)
    run = run_single(cfg)
    last = run.rows[-1]
    print(f"eps = {run.eps}  delta = {run.delta}  dt = {run.dt}")
    print(f"steps = {int(round(cfg.get('solver.t_final') / run.dt))}  "
          f"snapshots = {len(run.rows)}")
    print(f"mass drift = {max(abs(r.mass - run.mass_m) for r in run.rows):.3e}")
    print(f"sup fit residual = {run.sup_fit_residual!r}")
    print(f"sup frame residual = {run.sup_frame_residual!r}")
    print(f"final eta_total = {last.eta_total!r}")
    if run.stopping.triggered:
        print(f"stopping monitor triggered at t = {run.stopping.time} "
              f"({run.stopping.reason})")
    else:
        print("stopping monitor not triggered")
    for note in run.annotations:
        print(f"note: {note}")
    for path in run.files:
        print(f"wrote {path}")
    return EXIT_OK


def _emit_sweep(cfg, report, runs, suffix) -> None:
    out_dir = cfg.get("output.dir")
    if not out_dir:
        return
    os.makedirs(out_dir, exist_ok=True)
    prefix = os.path.join(out_dir, cfg.get("output.prefix"))
    csv_path = f"{prefix}_{suffix}.csv"
    write_scaling_csv(csv_path, report)
    print(f"wrote {csv_path}")
    from .reporting import plot_scaling, write_rows_csv
    xlabel = "eps" if report.kind == "epsilon" else "eps * phi(delta)^2"
    svg_path = f"{prefix}_{suffix}.svg"
    plot_scaling(report, svg_path, xlabel)
    print(f"wrote {svg_path}")
    for run in runs:
        rows_path = f"{prefix}_{suffix}_eps{run.eps!r}_rows.csv"
        write_rows_csv(rows_path, run.rows, run.rows[0].momentum.size)
        print(f"wrote {rows_path}")


def _cmd_sweep_eps(args) -> int:
    cfg = _load(args)
    report, runs = run_epsilon_scaling(cfg, threads=args.threads)
    print(f"fitted exponent = {report.exponent!r}")
    print(f"r_squared = {report.r_squared!r}")
    for lab in report.labels:
        mark = "excluded (monitor triggered)" if lab["triggered"] else "included"
        print(f"eps = {lab['eps']}: sup residual = {lab['sup_residual']!r} "
              f"[{mark}]")
    if report.below_floor:
        print("all residuals sit at the configured floor; "
              "the exponent is not meaningful")
    _emit_sweep(cfg, report, runs, "scaling_eps")
    return EXIT_OK


def _cmd_sweep_coupled(args) -> int:
    cfg = _load(args)
    pairs = coupled_pairs(cfg)
    report, runs = run_coupled_scaling(cfg, pairs=pairs, threads=args.threads)
    print(f"fitted exponent = {report.exponent!r}")
    print(f"r_squared = {report.r_squared!r}")
    for lab in report.labels:
        print(f"eps = {lab['eps']}  delta = {lab['delta']!r}: "
              f"bound proxy = {lab['bound_proxy']!r}  "
              f"sup residual = {lab['sup_residual']!r}")
    print(f"bound proxy decreasing: {report.bound_proxy_decreasing}")
    print(f"residuals non-increasing: {report.residuals_non_increasing}")
    _emit_sweep(cfg, report, runs, "scaling_coupled")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = _load(args)
    model = build_model(cfg)
    grid = build_grid(cfg)
    eps = cfg.get("solver.eps")
    x0 = np.asarray(cfg.get("initial.x0"))
    xi0 = np.asarray(cfg.get("initial.xi0"))
    ground = None
    datum = None
    try:
        ground = load_or_solve_ground_state(
            grid, cfg.get("solver.p"), tol=cfg.get("groundstate.tol"),
            max_iter=cfg.get("groundstate.max_iter"),
            cache_dir=cfg.get("output.dir") or None)
        from .solver import build_initial_datum
        datum = build_initial_datum(ground, grid, x0, xi0, eps,
                                    rho=cfg.get("initial.rho"))
    except GroundStateError as exc:
        print(f"ground state unavailable for gamma estimate: {exc}")
    report = check_hypotheses(model, x0, xi0, eps,
                              rho=cfg.get("initial.rho"), v_eps=datum,
                              ground_state=ground)
    for line in report.summary_lines():
        print(line)
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .reporting import plot_run_rows, read_rows_csv
    rows, _ = read_rows_csv(args.csv)
    prefix = args.out if args.out else os.path.splitext(args.csv)[0]
    for path in plot_run_rows(rows, prefix):
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "groundstate": _cmd_groundstate,
    "run": _cmd_run,
    "sweep-eps": _cmd_sweep_eps,
    "sweep-coupled": _cmd_sweep_coupled,
    "check": _cmd_check,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error [{exc.condition}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, GroundStateError, SingularityApproachError,
            MassMismatchError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except IOError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
