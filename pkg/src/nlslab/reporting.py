"""Delimited output and figure rendering.

CSV cells use repr formatting, which round-trips every float bit exactly and
makes equal runs produce byte-identical files.  Figures are SVG line plots
written next to the CSV.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .observables import ObservableRow, csv_columns, row_from_values, row_to_values

plt.rcParams["svg.hashsalt"] = "nlslab"


class OutputError(IOError):
    pass


def write_rows_csv(path, rows, dim: int):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(csv_columns(dim)) + "\n")
            for row in rows:
                fh.write(",".join(repr(v) for v in row_to_values(row)) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_rows_csv(path):
    """Returns (rows, dim) parsed from a file produced by write_rows_csv."""
    try:
        with open(path, "r") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise OutputError(f"{path} is empty")
    header = lines[0].split(",")
    dim = sum(1 for name in header if name.startswith("P_"))
    expected = csv_columns(dim)
    if header != expected:
        raise OutputError(f"{path} has unexpected columns {header}")
    rows = []
    for ln in lines[1:]:
        vals = [float(cell) for cell in ln.split(",")]
        if len(vals) != len(expected):
            raise OutputError(f"{path}: row with {len(vals)} cells")
        rows.append(row_from_values(vals, dim))
    return rows, dim


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_run_rows(rows, out_prefix):
    """Time-series figures for one run.  Returns the files written."""
    t = np.array([r.t for r in rows])
    written = []

    fig, ax = _new_axes("Soliton residuals", "t", "H1_eps distance")
    ax.plot(t, [r.fit_residual for r in rows], marker=".", lw=1.0,
            label="fitted")
    frame = np.array([r.frame_residual for r in rows])
    if np.isfinite(frame).any():
        ax.plot(t, frame, marker=".", lw=1.0, label="classical frame")
    ax.legend(loc="best", fontsize=8)
    path = f"{out_prefix}_residual.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)

    fig, ax = _new_axes("Trajectory defects", "t", "magnitude")
    ax.semilogy(t, np.maximum([np.linalg.norm(r.eta1) for r in rows], 1e-300),
                label="|eta1|", lw=1.0)
    ax.semilogy(t, np.maximum([abs(r.eta2) for r in rows], 1e-300),
                label="|eta2|", lw=1.0)
    ax.semilogy(t, np.maximum([np.linalg.norm(r.eta3) for r in rows], 1e-300),
                label="|eta3|", lw=1.0)
    ax.legend()
    path = f"{out_prefix}_eta.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)

    fig, ax = _new_axes("Energy split", "t", "energy")
    ax.plot(t, [r.energy_total for r in rows], label="E total", lw=1.0)
    ax.plot(t, [r.energy_internal for r in rows], label="J internal", lw=1.0)
    ax.plot(t, [r.energy_kinetic for r in rows], label="K transport", lw=1.0)
    ax.legend()
    path = f"{out_prefix}_energy.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)

    return written


def plot_scaling(report, out_path, xlabel):
    """Log-log scaling panel with the fitted power law."""
    xs = np.array([p[0] for p in report.points])
    ys = np.array([p[1] for p in report.points])
    fig, ax = _new_axes("Residual scaling", xlabel, "sup residual")
    ax.loglog(xs, ys, "o", label="measured")
    grid_x = np.geomspace(xs.min(), xs.max(), 64)
    ax.loglog(grid_x, np.exp(report.intercept) * grid_x ** report.exponent,
              "-", label=f"slope {report.exponent:.3f}")
    ax.legend()
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)
    return out_path


def plot_groundstate(sol, out_path):
    prof = sol.profile()
    r = sol.grid.spacing * np.arange(prof.size)
    fig, ax = _new_axes("Ground-state profile", "r", "R(r)")
    ax.semilogy(r, np.maximum(np.abs(prof), 1e-300), lw=1.0)
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)
    return out_path
