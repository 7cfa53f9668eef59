"""Acceptance checklist.

One test per release criterion, each printing a single

    [criterion N] PASS/FAIL: <measured numbers>

line (visible with `pytest -rA`) before asserting at the pinned tolerance.
The suite is self-contained: it builds every field it measures and never
loosens a tolerance to force a green result.
"""

import time
import types

import numpy as np
import pytest

from nlslab import (ExperimentConfig, GridSpec, PhasePoint, PotentialModel,
                    SolverConfig, WaveField, build_initial_datum,
                    closed_form_profile, compute_row, energy_split, evolve,
                    fit_power_law, load_or_solve_ground_state, make_context,
                    profile_energy, read_snapshot, run_epsilon_scaling,
                    run_coupled_scaling, run_single, solve_ground_state,
                    write_snapshot)
from nlslab.classical import integrate as integrate_classical
from nlslab.grids import integrate
from nlslab.observables import csv_columns, row_to_values

SQRT2 = np.sqrt(2.0)
EPS_TRIPLE = (0.2, 0.1, 0.05)
SMOOTH = PotentialModel(v0=1.0, amplitude=1.0, beta=0.5, delta=0.5)
BARE = PotentialModel(v0=1.0, amplitude=1.0, beta=0.5, delta=0.0)


def _report(num, ok, detail):
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _circular_gap(a, b):
    return float(abs(np.angle(np.exp(1j * (a - b)))))


@pytest.fixture(scope="module")
def grid():
    return GridSpec(1, 4096, 20.0)


@pytest.fixture(scope="module")
def ground(grid):
    return load_or_solve_ground_state(grid, 1.0)


@pytest.fixture(scope="module")
def initial_rows(grid, ground):
    """t=0 observable rows for the eps triple (criteria 4 and 5)."""
    start = time.perf_counter()
    e_ref = profile_energy(ground.field, 1.0)
    rows = {}
    for eps in EPS_TRIPLE:
        ctx = make_context(grid, SMOOTH, eps, 1.0, ground.mass_m, e_ref,
                           centroid_radius=5.0)
        datum = build_initial_datum(ground, grid, [4.0], [-0.1], eps)
        rows[eps] = compute_row(datum, PhasePoint([4.0], [-0.1]), ctx)
    return rows, time.perf_counter() - start


def _sweep_config():
    return ExperimentConfig({
        "grid.points": 4096, "grid.half_width": 20.0,
        "solver.t_final": 1.0, "solver.snapshot_stride": 100,
        "solver.eps_list": EPS_TRIPLE,
        "potential.delta": 0.5,
        "initial.x0": (4.0,), "initial.xi0": (-0.1,),
        "output.dir": "", "output.figures": False,
    })


@pytest.fixture(scope="module")
def scaling_runs():
    start = time.perf_counter()
    report, runs = run_epsilon_scaling(_sweep_config())
    return report, runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def coupled_runs():
    start = time.perf_counter()
    report, runs = run_coupled_scaling(_sweep_config())
    return report, runs, time.perf_counter() - start


def test_criterion_1_ground_state_oracle(grid):
    start = time.perf_counter()
    sol = solve_ground_state(grid, 1.0)
    elapsed = time.perf_counter() - start
    sup_err = float(np.max(np.abs(sol.field.values.real
                                  - closed_form_profile(1.0, grid.axis()))))
    mass_err = abs(sol.mass_m - 2.0 * SQRT2)
    ok = sup_err <= 1e-6 and mass_err <= 1e-6 and elapsed <= 10.0
    _report(1, ok, f"sup profile error {sup_err:.3e} (tol 1e-6), "
                   f"mass error {mass_err:.3e} (tol 1e-6), "
                   f"solve time {elapsed:.2f}s (budget 10s)")


def test_criterion_2_free_transport(grid, ground):
    start = time.perf_counter()
    eps, xi0, x0, t_final = 0.1, 0.5, -0.25, 1.0
    flat = PotentialModel(v0=1.0, amplitude=0.0, beta=0.5, delta=0.0)
    v_grid = np.full(grid.shape, flat.v0)
    u0 = build_initial_datum(ground, grid, [x0], [xi0], eps)
    m0 = integrate(grid, np.abs(u0.values) ** 2)

    def evolve_with_energy(dt):
        energies = []

        def watch(snap, t, u):
            energies.append(energy_split(u, eps, 1.0, v_grid).total)

        cfg = SolverConfig(eps=eps, p=1.0, dt=dt, t_final=t_final,
                           snapshot_stride=1000)
        res = evolve(u0, flat, cfg, observers=(watch,))
        drift = max(abs(e - energies[0]) for e in energies)
        return res.final, drift

    final, drift_coarse = evolve_with_energy(1e-4)
    x = grid.axis()
    phase = (xi0 * x + (1.0 - 0.5 * xi0 ** 2 - flat.v0) * t_final) / eps
    exact = closed_form_profile(1.0, (x - x0 - xi0 * t_final) / eps) \
        * np.exp(1j * phase)
    rel_l2 = float(np.sqrt(integrate(grid, np.abs(final.values - exact) ** 2)
                           / integrate(grid, np.abs(exact) ** 2)))
    mass_drift = abs(integrate(grid, np.abs(final.values) ** 2) - m0) / m0
    _, drift_fine = evolve_with_energy(5e-5)
    ratio = drift_coarse / drift_fine
    elapsed = time.perf_counter() - start
    ok = (rel_l2 <= 1e-4 and mass_drift <= 1e-10
          and 3.0 <= ratio <= 5.0 and elapsed <= 60.0)
    _report(2, ok, f"rel L2 error {rel_l2:.3e} (tol 1e-4), "
                   f"rel mass drift {mass_drift:.3e} (tol 1e-10), "
                   f"energy-drift ratio {ratio:.3f} (band [3,5]), "
                   f"time {elapsed:.1f}s (budget 60s)")


def test_criterion_3_classical_integrator():
    start = time.perf_counter()
    # Circular orbit at the centripetal-balance speed |xi|^2 = r|V'(r)|.
    # The balance needs an inward force, and the shipped family is repulsive
    # everywhere (a tangential launch on it spirals out to radius ~12.7 by
    # t=10), so the orbit runs on the sign-flipped attractive twin of the
    # same force law; the stepper itself is force-agnostic.
    speed = float(np.sqrt(BARE.amplitude * BARE.beta))
    mirror = types.SimpleNamespace(v0=BARE.v0, amplitude=-BARE.amplitude,
                                   beta=BARE.beta, delta=BARE.delta)
    orbit = integrate_classical(PhasePoint([1.0, 0.0], [0.0, speed]),
                                mirror, 10.0, 1e-3)
    radius_dev = float(np.max(np.abs(np.linalg.norm(orbit.x, axis=1) - 1.0)))

    probe = PhasePoint([4.0, 0.0], [-0.3, 0.2])
    d1 = integrate_classical(probe, BARE, 10.0, 1e-3).energy_drift
    d2 = integrate_classical(probe, BARE, 10.0, 5e-4).energy_drift
    ratio = d1 / d2

    fwd = integrate_classical(probe, BARE, 5.0, 1e-3)
    end = fwd.at(fwd.t.size - 1)
    back = integrate_classical(PhasePoint(end.x, -end.xi), BARE, 5.0, 1e-3)
    ret = back.at(back.t.size - 1)
    reversal = float(max(np.max(np.abs(ret.x - probe.x)),
                         np.max(np.abs(ret.xi + probe.xi))))
    elapsed = time.perf_counter() - start
    ok = (radius_dev <= 1e-4 and 3.2 <= ratio <= 4.8
          and reversal <= 1e-10 and elapsed <= 5.0)
    _report(3, ok, f"circular radius deviation {radius_dev:.3e} on the "
                   f"attractive twin (tol 1e-4; repulsive family expels the "
                   f"same launch), drift halving ratio {ratio:.3f} "
                   f"(band [3.2,4.8]), reversal error {reversal:.3e} "
                   f"(tol 1e-10), time {elapsed:.1f}s (budget 5s)")


def test_criterion_4_initial_concentration_defects(initial_rows):
    rows, elapsed = initial_rows
    eta1_sup = max(float(np.max(np.abs(rows[eps].eta1))) for eps in EPS_TRIPLE)
    eta2 = [rows[eps].eta2 for eps in EPS_TRIPLE]
    eta3 = [float(rows[eps].eta3[0]) for eps in EPS_TRIPLE]
    eta2_ratios = [eta2[i] / eta2[i + 1] for i in range(2)]
    eta3_ratios = [abs(eta3[i]) / abs(eta3[i + 1]) for i in range(2)]
    eta2_ok = all(2.5 <= r <= 5.5 for r in eta2_ratios)
    eta3_ok = all(2.5 <= r <= 5.5 for r in eta3_ratios)
    ok = eta1_sup <= 1e-8 and eta2_ok and eta3_ok and elapsed <= 60.0
    _report(4, ok,
            f"sup|eta1(0)| {eta1_sup:.3e} (tol 1e-8); "
            f"eta2(0) series {[f'{v:.6e}' for v in eta2]} "
            f"halving ratios {[f'{r:.4f}' for r in eta2_ratios]} "
            f"(band [2.5,5.5], {'ok' if eta2_ok else 'out of band'}); "
            f"eta3(0) series {[f'{v:.6e}' for v in eta3]} "
            f"halving ratios {[f'{r:.4e}' for r in eta3_ratios]} "
            f"(band [2.5,5.5], {'ok' if eta3_ok else 'out of band'}: the "
            f"symmetric datum cancels the leading term exactly, so the "
            f"measured values are cutoff-tail and quadrature rounding with no "
            f"eps^2 scaling to recover); "
            f"time {elapsed:.1f}s (budget 60s)")


def test_criterion_5_energy_split_residual(initial_rows):
    rows, _ = initial_rows
    resid = [rows[eps].split_resid for eps in EPS_TRIPLE]
    ratios = [resid[i] / resid[i + 1] for i in range(2)]
    ok = all(2.5 <= r <= 5.5 for r in ratios)
    _report(5, ok, f"split_resid(0) series {[f'{v:.6e}' for v in resid]}, "
                   f"halving ratios {[f'{r:.4f}' for r in ratios]} "
                   f"(band [2.5,5.5])")


def test_criterion_6_residual_scaling(scaling_runs):
    report, runs, elapsed = scaling_runs
    slope = report.exponent
    triggered = [run.stopping.triggered for run in runs]
    max_shift = max(max(row.shift_w for row in run.rows) for run in runs)
    ok = (0.7 <= slope <= 1.5 and not any(triggered)
          and max_shift <= 1.0 and elapsed <= 900.0)
    pairs = ", ".join(f"eps={e}: {r.sup_frame_residual:.4e}"
                      for e, r in zip(EPS_TRIPLE, runs))
    _report(6, ok, f"fitted exponent {slope:.4f} (band [0.7,1.5], "
                   f"r^2 {report.r_squared:.6f}) over {pairs}; "
                   f"monitor triggered {triggered} (must be all False); "
                   f"max fitted shift {max_shift:.4f} (cap 1.0); "
                   f"time {elapsed:.1f}s (budget 900s)")


def test_criterion_7_coupled_truncation_path(coupled_runs):
    report, runs, elapsed = coupled_runs
    residuals = [lab["sup_residual"] for lab in report.labels]
    proxies = [lab["bound_proxy"] for lab in report.labels]
    ok = (report.residuals_non_increasing is True
          and report.bound_proxy_decreasing is True
          and len(residuals) == 3 and elapsed <= 900.0)
    _report(7, ok,
            f"sup residual series {[f'{v:.4e}' for v in residuals]} "
            f"non-increasing: {report.residuals_non_increasing}; "
            f"bound proxy series {[f'{v:.4e}' for v in proxies]} "
            f"decreasing: {report.bound_proxy_decreasing}; "
            f"time {elapsed:.1f}s (budget 900s)")


def test_criterion_8_per_run_invariants(scaling_runs, ground):
    report, runs, _ = scaling_runs
    e_ref = profile_energy(ground.field, 1.0)
    mass_drift = max(max(abs(row.mass - run.mass_m) for row in run.rows)
                     for run in runs) / runs[0].mass_m

    # momentum balance: centered dP/dt against the potential-force integral
    momentum_resid = 0.0
    for run in runs:
        t = np.array([row.t for row in run.rows])
        p = np.array([row.momentum[0] for row in run.rows])
        f = np.array([row.force_integral[0] for row in run.rows])
        dpdt = (p[2:] - p[:-2]) / (t[2:] - t[:-2])
        resid = np.max(np.abs(dpdt + f[1:-1])) / np.max(np.abs(f))
        momentum_resid = max(momentum_resid, float(resid))

    kin_floor = min(min(row.energy_kinetic for row in run.rows)
                    for run in runs)
    kin_bound = runs[0].mass_m * SMOOTH.v0 - 1e-8
    internal_floor = min(min(row.energy_internal for row in run.rows)
                         for run in runs)

    doubling = _resolution_doubling_gap()
    ok = (mass_drift <= 1e-10 and momentum_resid <= 1e-3
          and kin_floor >= kin_bound and internal_floor >= e_ref - 1e-6
          and doubling <= 1e-6)
    _report(8, ok, f"rel mass drift {mass_drift:.3e} (tol 1e-10); "
                   f"momentum-balance residual {momentum_resid:.3e} "
                   f"(tol 1e-3 of sup force); "
                   f"min transport energy {kin_floor:.6f} "
                   f">= m v0 - 1e-8 = {kin_bound:.6f}; "
                   f"min internal energy {internal_floor:.6f} "
                   f">= profile energy - 1e-6 = {e_ref - 1e-6:.6f}; "
                   f"max observable change under resolution doubling "
                   f"{doubling:.3e} (tol 1e-6)")


def _resolution_doubling_gap():
    cols = csv_columns(1)
    phase_idx = cols.index("fit_phase0")
    rows_by_points = {}
    for points in (4096, 8192):
        cfg = ExperimentConfig({
            "grid.points": points, "grid.half_width": 20.0,
            "solver.t_final": 0.1, "solver.snapshot_stride": 100,
            "solver.dt": 1e-4,
            "potential.delta": 0.5,
            "initial.x0": (4.0,), "initial.xi0": (-0.1,),
            "output.dir": "", "output.figures": False,
        })
        run = run_single(cfg, eps=0.1, emit=False)
        rows_by_points[points] = [row_to_values(row) for row in run.rows]
    gap = 0.0
    for coarse, fine in zip(rows_by_points[4096], rows_by_points[8192]):
        for idx, (a, b) in enumerate(zip(coarse, fine)):
            delta = _circular_gap(a, b) if idx == phase_idx else abs(a - b)
            gap = max(gap, delta)
    return gap


def test_criterion_9_determinism_and_io(tmp_path, rng):
    # identical configurations must emit byte-identical tables
    digests = []
    for tag in ("a", "b"):
        out = str(tmp_path / tag)
        cfg = ExperimentConfig({
            "grid.points": 1024, "grid.half_width": 12.0,
            "solver.t_final": 0.02, "solver.snapshot_stride": 50,
            "output.dir": out, "output.figures": False,
        })
        run_single(cfg, eps=0.2)
        digests.append(open(f"{out}/run_rows.csv", "rb").read())
    csv_identical = digests[0] == digests[1]

    # snapshot round trip is bit exact
    field_grid = GridSpec(2, 32, 4.0)
    vals = rng.standard_normal(field_grid.shape) \
        + 1j * rng.standard_normal(field_grid.shape)
    path = tmp_path / "probe.nlsf"
    write_snapshot(path, WaveField(field_grid, vals), eps=0.1, time=0.5)
    back, _, _ = read_snapshot(path)
    snapshot_exact = bool(np.array_equal(back.values, vals))

    # synthetic power law is recovered to rounding
    xs = np.array([0.2, 0.1, 0.05, 0.025])
    slope, intercept, _, _ = fit_power_law(xs, 0.37 * xs ** 1.75)
    law_err = max(abs(slope - 1.75), abs(intercept - np.log(0.37)))

    ok = csv_identical and snapshot_exact and law_err <= 1e-12
    _report(9, ok, f"identical reruns byte-identical: {csv_identical}; "
                   f"snapshot round trip exact: {snapshot_exact}; "
                   f"synthetic power-law recovery error {law_err:.3e} "
                   f"(tol 1e-12)")
