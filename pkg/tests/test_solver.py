"""Splitting propagator: exactness properties, order, datum construction."""

import numpy as np
import pytest

from nlslab import (BlowUpError, ConfigurationError, GridSpec, PotentialModel,
                    SolverConfig, WaveField, build_initial_datum,
                    check_phase_step, closed_form_profile, evolve,
                    sample_ansatz, strang_step)
from nlslab.grids import integrate

SMOOTH = PotentialModel(v0=1.0, amplitude=1.0, beta=0.5, delta=0.5)
CONST = PotentialModel(v0=1.0, amplitude=0.0, beta=0.5, delta=0.0)


@pytest.mark.parametrize("kwargs,condition", [
    (dict(eps=0.0, p=1.0, dt=1e-3, t_final=1.0), "eps-range"),
    (dict(eps=1.5, p=1.0, dt=1e-3, t_final=1.0), "eps-range"),
    (dict(eps=0.1, p=0.0, dt=1e-3, t_final=1.0), "p-range"),
    (dict(eps=0.1, p=1.0, dt=0.0, t_final=1.0), "time-range"),
    (dict(eps=0.1, p=1.0, dt=1e-3, t_final=-1.0), "time-range"),
    (dict(eps=0.1, p=1.0, dt=1e-3, t_final=1.0, snapshot_stride=0), "stride"),
])
def test_config_validation(kwargs, condition):
    with pytest.raises(ConfigurationError) as err:
        SolverConfig(**kwargs)
    assert err.value.condition == condition


def test_config_step_count():
    cfg = SolverConfig(eps=0.1, p=1.0, dt=1e-3, t_final=1.0)
    assert cfg.n_steps == 1000


def test_phase_step_guard():
    cfg = SolverConfig(eps=0.01, p=1.0, dt=1e-2, t_final=1.0)
    with pytest.raises(ConfigurationError) as err:
        check_phase_step(cfg, v_max=2.5)
    assert err.value.condition == "phase-step"
    check_phase_step(SolverConfig(eps=0.1, p=1.0, dt=1e-4, t_final=1.0), 2.5)


def test_sample_ansatz_matches_formula(ground_standard, standard_grid):
    eps, x0, xi0 = 0.1, 0.25, 0.7
    ans = sample_ansatz(ground_standard, standard_grid, [x0], [xi0], eps)
    x = standard_grid.axis()
    exact = closed_form_profile(1.0, (x - x0) / eps) * np.exp(1j * xi0 * x / eps)
    assert np.max(np.abs(ans.values - exact)) <= 1e-6


def test_datum_mass_and_truncation(ground_coarse, coarse_grid):
    eps = 0.1
    u = build_initial_datum(ground_coarse, coarse_grid, [3.0], [0.2], eps,
                            rho=2.0)
    mass = integrate(coarse_grid, np.abs(u.values) ** 2) / eps
    assert mass == pytest.approx(ground_coarse.mass_m, rel=1e-13)
    x = coarse_grid.axis()
    assert np.all(u.values[np.abs(x - 3.0) >= 2.0] == 0.0)
    assert np.any(u.values[np.abs(x - 3.0) < 1.0] != 0.0)


@pytest.mark.parametrize("x0,rho,condition", [
    ([3.0, 0.0], None, "x0-dim"),
    ([11.5], None, "box-margin"),
    ([3.0], -1.0, "support-radius"),
    ([3.01], 1e-12, "support-radius"),  # off-node: cutoff kills every cell
    ([10.0], 3.0, "support-box"),
])
def test_datum_rejections(ground_coarse, coarse_grid, x0, rho, condition):
    with pytest.raises(ConfigurationError) as err:
        build_initial_datum(ground_coarse, coarse_grid, x0, [0.0], 0.1, rho=rho)
    assert err.value.condition == condition


def test_mass_conserved_to_rounding(ground_coarse, coarse_grid):
    eps = 0.1
    u = build_initial_datum(ground_coarse, coarse_grid, [4.0], [-0.1], eps)
    cfg = SolverConfig(eps=eps, p=1.0, dt=1e-4, t_final=0.02, snapshot_stride=50)
    res = evolve(u, SMOOTH, cfg)
    m0 = integrate(coarse_grid, np.abs(u.values) ** 2)
    m1 = integrate(coarse_grid, np.abs(res.final.values) ** 2)
    assert abs(m1 - m0) <= 1e-12 * m0


def test_free_transport_and_order(ground_coarse, coarse_grid):
    # constant potential: the soliton translates at speed xi0 with an exact
    # phase, so the terminal error is pure splitting + resolution error
    eps, xi0, t_final = 0.15, 0.5, 0.2
    u0 = build_initial_datum(ground_coarse, coarse_grid, [-0.05], [xi0], eps)

    def error_at(dt):
        cfg = SolverConfig(eps=eps, p=1.0, dt=dt, t_final=t_final,
                           snapshot_stride=10 ** 9)
        res = evolve(u0, CONST, cfg)
        x = coarse_grid.axis()
        t = cfg.n_steps * dt
        phase = (xi0 * x + (1.0 - 0.5 * xi0 ** 2 - CONST.v0) * t) / eps
        exact = closed_form_profile(1.0, (x + 0.05 - xi0 * t) / eps) \
            * np.exp(1j * phase)
        num = integrate(coarse_grid, np.abs(res.final.values - exact) ** 2)
        den = integrate(coarse_grid, np.abs(exact) ** 2)
        return np.sqrt(num / den)

    e1, e2 = error_at(1e-4), error_at(5e-5)
    assert e1 <= 1e-4
    assert 3.0 <= e1 / e2 <= 5.0


def test_time_reversal_by_conjugation(ground_coarse, coarse_grid):
    eps = 0.1
    u0 = build_initial_datum(ground_coarse, coarse_grid, [4.0], [-0.1], eps)
    cfg = SolverConfig(eps=eps, p=1.0, dt=1e-4, t_final=0.01,
                       snapshot_stride=100)
    fwd = evolve(u0, SMOOTH, cfg).final
    back = evolve(WaveField(coarse_grid, np.conj(fwd.values)), SMOOTH, cfg).final
    assert np.max(np.abs(np.conj(back.values) - u0.values)) <= 1e-10


def test_strang_step_matches_evolve(ground_coarse, coarse_grid):
    u0 = build_initial_datum(ground_coarse, coarse_grid, [4.0], [-0.1], 0.1)
    cfg = SolverConfig(eps=0.1, p=1.0, dt=1e-4, t_final=1e-4)
    one = strang_step(u0, SMOOTH, cfg)
    res = evolve(u0, SMOOTH, cfg)
    assert np.array_equal(one.values, res.final.values)


def test_observer_cadence_and_annotations(coarse_grid):
    vals = np.zeros(coarse_grid.shape, dtype=complex)
    vals[coarse_grid.points // 2] = 1.0
    u0 = WaveField(coarse_grid, vals)
    cfg = SolverConfig(eps=0.1, p=1.0, dt=1e-4, t_final=1e-3,
                       snapshot_stride=3)
    seen = []

    def watcher(snap, t, u):
        seen.append((snap, round(t / cfg.dt)))

    def broken(snap, t, u):
        raise RuntimeError("boom")

    res = evolve(u0, CONST, cfg, observers=(watcher, broken))
    assert seen == [(0, 0), (1, 3), (2, 6), (3, 9), (4, 10)]
    assert len(res.annotations) == 5
    assert "boom" in res.annotations[0]


def test_blowup_detection(coarse_grid):
    vals = np.full(coarse_grid.shape, np.nan, dtype=complex)
    cfg = SolverConfig(eps=0.1, p=1.0, dt=1e-4, t_final=1e-3)
    with pytest.raises(BlowUpError) as err:
        evolve(WaveField(coarse_grid, vals), CONST, cfg)
    assert err.value.step >= 1
