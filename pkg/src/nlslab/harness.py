"""Experiment drivers: single runs, epsilon scaling, coupled-truncation scaling.

A run couples the Newtonian trajectory and the quantum field in lockstep (same
time step), records one ObservableRow per snapshot including the modulation
fit, and evaluates the stopping monitor afterwards.  Sweeps are embarrassingly
parallel across (eps, delta) jobs and must give identical results serial or
parallel, so jobs share nothing but the configuration.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classical import (PhasePoint, action_phase,
                        integrate as integrate_classical)
from .config import ExperimentConfig
from .grids import GridSpec, WaveField
from .groundstate import (GroundStateSolution, RadialProfile,
                          euler_lagrange_residual, profile_energy,
                          solve_ground_state)
from .modulation import fit_modulation
from .observables import (compute_row, h1eps_distance_sq, make_context,
                          stopping_time_monitor, StoppingReport)
from .potential import PotentialModel, delta_level, phi_of_delta
from .snapshots import read_snapshot, write_snapshot
from .solver import (ConfigurationError, SolverConfig, build_initial_datum,
                     evolve, sample_ansatz)


# --- configuration derivation ------------------------------------------------

def build_grid(cfg: ExperimentConfig) -> GridSpec:
    return GridSpec(cfg.get("grid.dim"), cfg.get("grid.points"),
                    cfg.get("grid.half_width"))


def build_model(cfg: ExperimentConfig, delta: float | None = None) -> PotentialModel:
    return PotentialModel(cfg.get("potential.v0"), cfg.get("potential.amplitude"),
                          cfg.get("potential.beta"),
                          cfg.get("potential.delta") if delta is None else delta)


def derive_dt(cfg: ExperimentConfig, eps: float) -> float:
    fixed = cfg.get("solver.dt")
    return fixed if fixed is not None else cfg.get("solver.dt_scale") * eps


def check_grid_resolution(grid: GridSpec, eps: float):
    if grid.spacing > eps / 4.0:
        raise ConfigurationError(
            f"grid spacing {grid.spacing:.4g} exceeds eps/4 = {eps / 4.0:.4g}; "
            f"raise grid.points or eps", condition="grid-resolution")


# --- ground-state caching ----------------------------------------------------

_GS_MEMO = {}


def groundstate_cache_name(grid: GridSpec, p: float) -> str:
    return f"gs_{grid.dim}d_p{p!r}_n{grid.points}_L{grid.half_width!r}.nlsf"


def load_or_solve_ground_state(grid: GridSpec, p: float, tol: float = 1e-8,
                               max_iter: int = 20000,
                               cache_dir: str | None = None) -> GroundStateSolution:
    key = (grid.dim, grid.points, grid.half_width, p, tol)
    if key in _GS_MEMO:
        sol = _GS_MEMO[key]
        if cache_dir:
            path = os.path.join(cache_dir, groundstate_cache_name(grid, p))
            if not os.path.exists(path):
                os.makedirs(cache_dir, exist_ok=True)
                write_snapshot(path, sol.field, eps=1.0, time=0.0)
        return sol
    if cache_dir:
        path = os.path.join(cache_dir, groundstate_cache_name(grid, p))
        if os.path.exists(path):
            try:
                cached, _, _ = read_snapshot(path)
            except IOError:
                cached = None
            if cached is not None and cached.grid == grid:
                res = euler_lagrange_residual(cached, p)
                if res <= tol:
                    from .grids import integrate as grid_integrate
                    mass = grid_integrate(grid, cached.values.real ** 2)
                    sol = GroundStateSolution(field=cached, p=p, mass_m=mass,
                                              residual_inf=res,
                                              decay_rate=float("nan"),
                                              iterations=0, stages=[])
                    from .groundstate import fit_decay_rate
                    try:
                        sol.decay_rate = fit_decay_rate(
                            sol, (0.15 * grid.half_width, 0.30 * grid.half_width))
                    except ValueError:
                        pass
                    _GS_MEMO[key] = sol
                    return sol
    sol = solve_ground_state(grid, p, tol=tol, max_iter=max_iter)
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        write_snapshot(os.path.join(cache_dir, groundstate_cache_name(grid, p)),
                       sol.field, eps=1.0, time=0.0)
    _GS_MEMO[key] = sol
    return sol


# --- single run --------------------------------------------------------------

@dataclass
class RunResult:
    eps: float
    delta: float
    dt: float
    config_digest: str
    rows: list
    trajectory: object
    stopping: StoppingReport
    mu: float
    mass_m: float
    profile_energy_ref: float
    groundstate_residual: float
    sup_fit_residual: float
    sup_frame_residual: float
    annotations: list = field(default_factory=list)
    files: list = field(default_factory=list)


def run_single(cfg: ExperimentConfig, eps: float | None = None,
               delta: float | None = None,
               ground: GroundStateSolution | None = None,
               emit: bool = True) -> RunResult:
    grid = build_grid(cfg)
    eps = cfg.get("solver.eps") if eps is None else eps
    model = build_model(cfg, delta=delta)
    check_grid_resolution(grid, eps)

    p = cfg.get("solver.p")
    dt = derive_dt(cfg, eps)
    solver_cfg = SolverConfig(eps=eps, p=p, dt=dt,
                              t_final=cfg.get("solver.t_final"),
                              snapshot_stride=cfg.get("solver.snapshot_stride"))

    x0 = np.asarray(cfg.get("initial.x0"), dtype=float)
    xi0 = np.asarray(cfg.get("initial.xi0"), dtype=float)
    if x0.size != grid.dim or xi0.size != grid.dim:
        raise ConfigurationError("initial.x0 / initial.xi0 must match grid.dim",
                                 condition="x0-dim")
    rho = cfg.get("initial.rho")
    if rho is not None:
        excl, unbounded = delta_level(model, x0, xi0)
        if not unbounded and rho >= float(np.linalg.norm(x0)) - excl:
            raise ConfigurationError(
                f"support radius rho = {rho} must stay below |x0| minus the "
                f"classical exclusion radius {excl:.6g}",
                condition="support-radius")

    out_dir = cfg.get("output.dir") or None
    if ground is None:
        ground = load_or_solve_ground_state(
            grid, p, tol=cfg.get("groundstate.tol"),
            max_iter=cfg.get("groundstate.max_iter"), cache_dir=out_dir)
    profile = RadialProfile(ground)
    energy_ref = profile_energy(ground.field, p)

    guard = cfg.get("diagnostics.guard_radius")
    traj = integrate_classical(PhasePoint(x0, xi0), model,
                               solver_cfg.t_final, dt, guard_radius=guard)
    if traj.max_radius + 10.0 * eps > grid.half_width:
        raise ConfigurationError(
            f"trajectory reaches radius {traj.max_radius:.4g}; the box "
            f"half-width {grid.half_width} leaves less than 10 eps of margin",
            condition="box-trajectory")

    centroid_radius = max(traj.max_radius, float(np.linalg.norm(x0))) \
        + cfg.get("diagnostics.centroid_margin")
    ctx = make_context(grid, model, eps, p, ground.mass_m, energy_ref,
                       centroid_radius,
                       vacuum_floor=cfg.get("diagnostics.vacuum_floor"))

    mu = cfg.get("diagnostics.mu")
    if mu is None:
        mu = 0.1 * abs(energy_ref)

    datum = build_initial_datum(ground, grid, x0, xi0, eps, rho=rho)
    theta = action_phase(traj)

    rows = []
    last_fit = [None]
    prefix = None
    snap_paths = []
    if emit and out_dir:
        os.makedirs(out_dir, exist_ok=True)
        prefix = os.path.join(out_dir, cfg.get("output.prefix"))

    def observer(snap, t, u: WaveField):
        step = int(round(t / dt))
        point = traj.at(step)
        row = compute_row(u, point, ctx)
        # distance to the profile carried along the classical trajectory,
        # with the accumulated action phase — no parameter is refitted
        frame = sample_ansatz(ground, grid, point.x, point.xi, eps)
        frame.values *= np.exp(1j * theta[step] / eps)
        row.frame_residual = float(np.sqrt(h1eps_distance_sq(u, frame, eps)))
        fit = fit_modulation(u, profile, point, eps, warm_start=last_fit[0])
        last_fit[0] = fit
        row.fit_center = fit.center
        row.fit_phase0 = fit.phase0
        row.fit_residual = fit.residual
        row.shift_w = fit.shift_norm
        rows.append(row)
        if prefix and cfg.get("output.snapshots"):
            path = f"{prefix}_snap_{snap:05d}.nlsf"
            write_snapshot(path, u, eps=eps, time=t)
            snap_paths.append(path)

    result = evolve(datum, model, solver_cfg, observers=(observer,))
    stopping = stopping_time_monitor(rows, mu)
    sup_res = max(r.fit_residual for r in rows)
    sup_frame = max(r.frame_residual for r in rows)

    run = RunResult(eps=eps, delta=model.delta, dt=dt,
                    config_digest=cfg.digest(), rows=rows, trajectory=traj,
                    stopping=stopping, mu=mu, mass_m=ground.mass_m,
                    profile_energy_ref=energy_ref,
                    groundstate_residual=ground.residual_inf,
                    sup_fit_residual=sup_res,
                    sup_frame_residual=sup_frame,
                    annotations=list(result.annotations))
    run.files.extend(snap_paths)
    if prefix:
        run.files.extend(emit_outputs(run, cfg, prefix))
    return run


def emit_outputs(run: RunResult, cfg: ExperimentConfig, prefix: str) -> list:
    from .reporting import plot_run_rows, write_rows_csv
    dim = run.rows[0].momentum.size if run.rows else cfg.get("grid.dim")
    written = []
    csv_path = f"{prefix}_rows.csv"
    write_rows_csv(csv_path, run.rows, dim)
    written.append(csv_path)
    cfg_path = f"{prefix}_config.txt"
    with open(cfg_path, "w", newline="") as fh:
        fh.write(cfg.canonical_text())
    written.append(cfg_path)
    if cfg.get("output.figures"):
        written.extend(plot_run_rows(run.rows, prefix))
    return written


# --- power-law fitting -------------------------------------------------------

@dataclass
class ScalingReport:
    kind: str
    points: list                  # (x, y) pairs entering the fit
    exponent: float
    intercept: float              # in log space
    r_squared: float
    log_residuals: np.ndarray
    labels: list = field(default_factory=list)   # per-run dicts
    excluded: list = field(default_factory=list)
    below_floor: bool = False
    bound_proxy_decreasing: bool | None = None
    residuals_non_increasing: bool | None = None


def fit_power_law(xs, ys) -> tuple:
    """Least-squares line through (log x, log y).

    Returns (exponent, intercept, r_squared, residuals).  Needs at least
    three samples for a meaningful residual estimate.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ConfigurationError(
            f"power-law fit needs at least 3 points, got {xs.size}",
            condition="sample-size")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive samples")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    resid = ly - pred
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2, resid


# --- sweeps ------------------------------------------------------------------

def _sweep_job(args):
    cfg_entries, eps, delta = args
    cfg = ExperimentConfig(dict(cfg_entries))
    # jobs never write files; the parent emits aggregated outputs
    cfg.entries["output.dir"] = ""
    run = run_single(cfg, eps=eps, delta=delta, emit=False)
    run.trajectory = None        # keep the payload small across processes
    run.rows = [_strip_row(r) for r in run.rows]
    return run


def _strip_row(row):
    row.force_integral = None
    return row


def _run_jobs(cfg: ExperimentConfig, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        results = []
        ground = load_or_solve_ground_state(
            build_grid(cfg), cfg.get("solver.p"), tol=cfg.get("groundstate.tol"),
            max_iter=cfg.get("groundstate.max_iter"),
            cache_dir=cfg.get("output.dir") or None)
        for eps, delta in jobs:
            results.append(run_single(cfg, eps=eps, delta=delta, ground=ground,
                                      emit=False))
        return results
    args = [(dict(cfg.entries), eps, delta) for eps, delta in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_sweep_job, args))


def run_epsilon_scaling(cfg: ExperimentConfig, eps_list=None,
                        delta: float | None = None,
                        threads: int = 1) -> tuple:
    """Residual scaling at fixed truncation.  Returns (report, runs)."""
    eps_list = tuple(eps_list if eps_list is not None else cfg.get("solver.eps_list"))
    if not eps_list:
        raise ConfigurationError("solver.eps_list is empty", condition="sample-size")
    delta = cfg.get("potential.delta") if delta is None else delta
    if cfg.get("potential.amplitude") > 0 and delta <= 0:
        raise ConfigurationError(
            "epsilon scaling requires a smooth truncation delta > 0",
            condition="delta-range")
    grid = build_grid(cfg)
    for eps in eps_list:
        check_grid_resolution(grid, eps)

    runs = _run_jobs(cfg, [(eps, delta) for eps in eps_list], threads)

    floor = cfg.get("diagnostics.residual_floor")
    points, labels, excluded = [], [], []
    for eps, run in zip(eps_list, runs):
        label = {"eps": eps, "delta": delta,
                 "sup_residual": run.sup_frame_residual,
                 "triggered": run.stopping.triggered}
        labels.append(label)
        if run.stopping.triggered:
            excluded.append(label)
        else:
            points.append((eps, run.sup_frame_residual))
    if len(points) < 3:
        raise ConfigurationError(
            f"only {len(points)} untriggered runs; scaling fit needs 3",
            condition="sample-size")
    slope, intercept, r2, resid = fit_power_law([p[0] for p in points],
                                                [p[1] for p in points])
    report = ScalingReport(kind="epsilon", points=points, exponent=slope,
                           intercept=intercept, r_squared=r2,
                           log_residuals=resid, labels=labels,
                           excluded=excluded,
                           below_floor=bool(all(p[1] < 10.0 * floor
                                                for p in points)))
    return report, runs


def coupled_pairs(cfg: ExperimentConfig, eps_list=None):
    """(eps, delta) pairs along the coupled-truncation path delta = eps^q."""
    eps_list = tuple(eps_list if eps_list is not None else cfg.get("solver.eps_list"))
    if not eps_list:
        raise ConfigurationError("solver.eps_list is empty", condition="sample-size")
    beta = cfg.get("potential.beta")
    q = cfg.get("coupling.power")
    if q is None:
        q = 1.0 / (2.0 * (beta + 3.0))
    return [(eps, eps ** q) for eps in eps_list]


def run_coupled_scaling(cfg: ExperimentConfig, pairs=None,
                         threads: int = 1) -> tuple:
    """Residual scaling along the coupled (eps, delta) path.

    The declared pairs must make eps^2 phi(delta) decrease toward zero along
    decreasing eps; otherwise the sweep is rejected before any run.  The fit
    is against the bound proxy eps * phi(delta)^2.
    """
    if pairs is None:
        pairs = coupled_pairs(cfg)
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ConfigurationError(
            f"coupled sweep needs at least 3 (eps, delta) pairs, got {len(pairs)}",
            condition="sample-size")
    order = np.argsort([-e for e, _ in pairs], kind="stable")
    pairs = [pairs[i] for i in order]

    grid = build_grid(cfg)
    model = build_model(cfg)
    phis = []
    for eps, delta in pairs:
        check_grid_resolution(grid, eps)
        if delta <= 0:
            raise ConfigurationError("coupled path needs delta > 0",
                                     condition="delta-range")
        phis.append(phi_of_delta(model, delta, dim=grid.dim).sampled)
    vanish = [eps ** 2 * phi for (eps, _), phi in zip(pairs, phis)]
    if any(b >= a for a, b in zip(vanish, vanish[1:])):
        raise ConfigurationError(
            f"eps^2 phi(delta) does not decrease along the declared path "
            f"(sequence {vanish}); the coupled regime is invalid",
            condition="vanishing-product")

    runs = _run_jobs(cfg, pairs, threads)

    points, labels = [], []
    sup_residuals = []
    for (eps, delta), phi, run in zip(pairs, phis, runs):
        proxy = eps * phi ** 2
        points.append((proxy, run.sup_frame_residual))
        sup_residuals.append(run.sup_frame_residual)
        labels.append({"eps": eps, "delta": delta, "phi_sampled": phi,
                       "bound_proxy": proxy, "vanishing": eps ** 2 * phi,
                       "sup_residual": run.sup_frame_residual,
                       "triggered": run.stopping.triggered})
    slope, intercept, r2, resid = fit_power_law([p[0] for p in points],
                                                [p[1] for p in points])
    proxies = [p[0] for p in points]
    report = ScalingReport(
        kind="coupled", points=points, exponent=slope, intercept=intercept,
        r_squared=r2, log_residuals=resid, labels=labels,
        bound_proxy_decreasing=bool(all(b < a for a, b in
                                        zip(proxies, proxies[1:]))),
        residuals_non_increasing=bool(all(b <= a * (1.0 + 1e-12) for a, b in
                                          zip(sup_residuals, sup_residuals[1:]))))
    return report, runs


def write_scaling_csv(path, report: ScalingReport):
    keys = sorted({k for lab in report.labels for k in lab})
    with open(path, "w", newline="") as fh:
        fh.write(",".join(keys) + "\n")
        for lab in report.labels:
            fh.write(",".join(repr(lab.get(k)) if isinstance(lab.get(k), float)
                              else str(lab.get(k)) for k in keys) + "\n")
