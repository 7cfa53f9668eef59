"""Semiclassical NLS propagation by Strang splitting.

    i eps u_t + (eps^2/2) Lap u - V(x) u + |u|^(2p) u = 0

One step: half-step pointwise phase exp(-i (V - |u|^2p) dt / (2 eps)), exact
kinetic phase exp(-i eps |k|^2 dt / 2) in Fourier space, pointwise half-step
again.  The pointwise substep is exact because |u| is invariant under it, so
mass is conserved to rounding.
"""

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec, WaveField, integrate
from .groundstate import GroundStateSolution, RadialProfile
from .observables import radial_cutoff_descending
from .potential import PotentialModel, grid_values


class ConfigurationError(ValueError):
    """Invalid run parameters.  condition is a short machine-readable slug."""

    def __init__(self, message, condition="config"):
        super().__init__(message)
        self.condition = condition


class BlowUpError(RuntimeError):
    def __init__(self, step, t):
        super().__init__(f"non-finite field samples after step {step} (t={t:.6g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SolverConfig:
    eps: float
    p: float
    dt: float
    t_final: float
    snapshot_stride: int = 1

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}",
                                     condition="eps-range")
        if self.p <= 0:
            raise ConfigurationError(f"p must be positive, got {self.p}",
                                     condition="p-range")
        if self.dt <= 0 or self.t_final < 0:
            raise ConfigurationError("need dt > 0 and t_final >= 0",
                                     condition="time-range")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot_stride must be >= 1",
                                     condition="stride")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def check_phase_step(cfg: SolverConfig, v_max: float):
    """Accuracy guard: potential phase per step must stay below pi/4."""
    phase = v_max * cfg.dt / cfg.eps
    if phase > np.pi / 4.0:
        raise ConfigurationError(
            f"potential phase per step {phase:.3g} exceeds pi/4; "
            f"reduce dt below {np.pi / 4.0 * cfg.eps / v_max:.3e}",
            condition="phase-step")


def sample_ansatz(ground: GroundStateSolution | RadialProfile, grid: GridSpec,
                  x0, xi0, eps: float) -> WaveField:
    """R((x - x0)/eps) e^{i xi0.x/eps} without truncation or renormalization."""
    profile = ground if isinstance(ground, RadialProfile) else RadialProfile(ground)
    x0 = np.asarray(x0, dtype=float)
    xi0 = np.asarray(xi0, dtype=float)
    r = np.sqrt(grid.radius_sq(center=x0))
    vals = profile(r / eps).astype(complex)
    phase = np.zeros(grid.shape)
    for i, c in enumerate(grid.coords()):
        phase = phase + xi0[i] * c
    vals *= np.exp(1j * phase / eps)
    return WaveField(grid, vals)


def build_initial_datum(ground: GroundStateSolution, grid: GridSpec, x0, xi0,
                        eps: float, rho: float | None = None) -> WaveField:
    """Concentrated soliton datum, optionally truncated, mass-renormalized.

    The optional cutoff is radial and smooth: 1 on B(x0, rho/2), 0 outside
    B(x0, rho).  The final field is rescaled so eps^-dim ||v||^2 equals the
    ground-state mass exactly.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.size != grid.dim:
        raise ConfigurationError("x0 dimension does not match the grid",
                                 condition="x0-dim")
    margin = grid.half_width - 10.0 * eps
    if np.any(np.abs(x0) > margin):
        raise ConfigurationError(
            f"x0 = {x0.tolist()} leaves less than 10 eps of box margin",
            condition="box-margin")
    if rho is not None:
        if rho <= 0:
            raise ConfigurationError("rho must be positive", condition="support-radius")
        if float(np.max(np.abs(x0))) + rho > grid.half_width:
            raise ConfigurationError(
                f"support ball of radius {rho} does not fit in the box",
                condition="support-box")
    v = sample_ansatz(ground, grid, x0, xi0, eps)
    if rho is not None:
        r = np.sqrt(grid.radius_sq(center=x0))
        v.values *= radial_cutoff_descending(r, 0.5 * rho, rho)
    raw = integrate(grid, np.abs(v.values) ** 2) / eps ** grid.dim
    if raw <= 0:
        raise ConfigurationError("datum vanished after truncation",
                                 condition="support-radius")
    v.values *= np.sqrt(ground.mass_m / raw)
    return v


class StrangPropagator:
    """Precomputed phases for repeated Strang steps on a fixed grid."""

    def __init__(self, grid: GridSpec, model: PotentialModel, cfg: SolverConfig,
                 cap_radius: float | None = None):
        self.grid = grid
        self.cfg = cfg
        self.v_grid, self.capped = grid_values(model, grid, cap_radius=cap_radius)
        self.v_max = float(np.max(np.abs(self.v_grid)))
        check_phase_step(cfg, self.v_max)
        self.kinetic_phase = np.exp(
            -0.5j * cfg.eps * grid.wavenumber_sq() * cfg.dt)
        self.half_rate = -0.5j * cfg.dt / cfg.eps
        self.two_p = 2.0 * cfg.p

    def step(self, values: np.ndarray) -> np.ndarray:
        w = values * np.exp(self.half_rate * (self.v_grid - np.abs(values) ** self.two_p))
        w = np.fft.ifftn(self.kinetic_phase * np.fft.fftn(w))
        w *= np.exp(self.half_rate * (self.v_grid - np.abs(w) ** self.two_p))
        return w


def strang_step(u: WaveField, model: PotentialModel, cfg: SolverConfig) -> WaveField:
    """One splitting step (one-off propagator; evolve() reuses one instead)."""
    prop = StrangPropagator(u.grid, model, cfg)
    return WaveField(u.grid, prop.step(u.values))


@dataclass
class EvolveResult:
    final: WaveField
    annotations: list


def evolve(u0: WaveField, model: PotentialModel, cfg: SolverConfig,
           observers=(), cap_radius: float | None = None) -> EvolveResult:
    """Propagate over [0, t_final], invoking observers at the snapshot stride.

    Observers are callables (snapshot_index, t, WaveField); their failures are
    recorded as annotations and do not abort the run.
    """
    prop = StrangPropagator(u0.grid, model, cfg, cap_radius=cap_radius)
    values = u0.values.copy()
    annotations = []
    n = cfg.n_steps

    def notify(snap, step):
        t = step * cfg.dt
        for obs in observers:
            try:
                obs(snap, t, WaveField(u0.grid, values))
            except Exception as exc:   # observer errors must not kill the run
                annotations.append(f"observer {obs!r} failed at t={t:.6g}: {exc}")

    snap = 0
    notify(snap, 0)
    for step in range(1, n + 1):
        values = prop.step(values)
        if not np.all(np.isfinite(values.view(np.float64))):
            raise BlowUpError(step, step * cfg.dt)
        if step % cfg.snapshot_stride == 0 or step == n:
            snap += 1
            notify(snap, step)
    return EvolveResult(final=WaveField(u0.grid, values), annotations=annotations)
