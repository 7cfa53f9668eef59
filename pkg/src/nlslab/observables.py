"""Conserved quantities and concentration diagnostics for semiclassical fields.

Scaled quantities follow the concentration normalization: mass eps^-N int|u|^2,
momentum eps^(1-N) int Im(conj(u) grad u), energy with the matching powers.
The eta diagnostics compare them against the Newtonian guiding trajectory.
"""

from dataclasses import dataclass

import numpy as np

from .classical import PhasePoint, hamiltonian
from .grids import GridSpec, WaveField, gradient, integrate
from .potential import PotentialModel, value


def smoothstep_c3(t):
    """Septic smoothstep: 0 -> 1 on [0,1] with three vanishing derivatives."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)


def radial_cutoff_descending(r, r_inner, r_outer):
    """1 on r <= r_inner, 0 on r >= r_outer, C^3 in between."""
    if not (0 <= r_inner < r_outer):
        raise ValueError(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    return 1.0 - smoothstep_c3((np.asarray(r) - r_inner) / (r_outer - r_inner))


def radial_cutoff_ascending(r, r_inner, r_outer):
    """0 on r <= r_inner, 1 on r >= r_outer, C^3 in between."""
    if not (0 <= r_inner < r_outer):
        raise ValueError(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    return smoothstep_c3((np.asarray(r) - r_inner) / (r_outer - r_inner))


def origin_cutoff_radii(eps: float, beta: float) -> tuple:
    """(inner, outer) radii of the origin-excluding cutoff, eps^(4/(2-beta))."""
    outer = eps ** (4.0 / (2.0 - beta))
    return 0.5 * outer, outer


def h1eps_norm_sq(u: WaveField, eps: float) -> float:
    """eps^(2-N) int |grad u|^2 + eps^-N int |u|^2."""
    grid = u.grid
    n = grid.dim
    g2 = np.zeros(grid.shape)
    for g in gradient(grid, u.values):
        g2 += np.abs(g) ** 2
    return eps ** (2 - n) * integrate(grid, g2) \
        + eps ** (-n) * integrate(grid, np.abs(u.values) ** 2)


def h1eps_distance_sq(u: WaveField, v: WaveField, eps: float) -> float:
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    return h1eps_norm_sq(WaveField(u.grid, u.values - v.values), eps)


def momentum(u: WaveField, eps: float) -> np.ndarray:
    """eps^(1-N) int Im(conj(u) grad u), one component per axis."""
    grid = u.grid
    conj = np.conj(u.values)
    out = np.empty(grid.dim)
    for i, g in enumerate(gradient(grid, u.values)):
        out[i] = integrate(grid, np.imag(conj * g))
    return out * eps ** (1 - grid.dim)


def mass_centroid(u: WaveField, eps: float, cutoff=None) -> np.ndarray:
    """eps^-N int x chi |u|^2 / mass, chi suppressing the box-edge sawtooth."""
    grid = u.grid
    if cutoff is None:
        cutoff = (0.5 * grid.half_width, 0.95 * grid.half_width)
    chi = radial_cutoff_descending(np.sqrt(grid.radius_sq()), *cutoff)
    dens = chi * np.abs(u.values) ** 2
    total = integrate(grid, dens)
    out = np.empty(grid.dim)
    for i, c in enumerate(grid.coords()):
        out[i] = integrate(grid, c * dens) / total
    return out


@dataclass(frozen=True)
class EnergySplit:
    total: float        # E_eps including the potential term
    internal: float     # J: modulus kinetic part plus nonlinear well
    kinetic: float      # K = E - J: transport plus potential energy
    vacuum_fraction: float
    reliable: bool


def energy_split(u: WaveField, eps: float, p: float, v_grid: np.ndarray,
                 vacuum_floor: float = 1e-14) -> EnergySplit:
    """Split E_eps into internal and transport parts via the phase-gradient
    identity |grad u|^2 = |grad|u||^2 + |u|^2 |grad S|^2.

    The phase term is recovered pointwise as |Im(conj(u) grad u)|^2 / |u|^2 and
    dropped below the vacuum floor, where the phase is meaningless.
    """
    grid = u.grid
    n = grid.dim
    dens = np.abs(u.values) ** 2
    grads = gradient(grid, u.values)
    g2 = np.zeros(grid.shape)
    phase_num = np.zeros(grid.shape)
    conj = np.conj(u.values)
    for g in grads:
        g2 += np.abs(g) ** 2
        phase_num += np.imag(conj * g) ** 2

    floor = vacuum_floor * float(np.max(dens))
    above = dens >= floor
    phase_term = np.zeros(grid.shape)
    np.divide(phase_num, dens, out=phase_term, where=above)

    kin_total = integrate(grid, g2)
    kin_phase = integrate(grid, phase_term)
    nonlin = integrate(grid, dens ** (p + 1.0)) / (p + 1.0)
    pot = integrate(grid, v_grid * dens)

    e_total = 0.5 * eps ** (2 - n) * kin_total - eps ** (-n) * nonlin \
        + eps ** (-n) * pot
    internal = 0.5 * eps ** (2 - n) * (kin_total - kin_phase) - eps ** (-n) * nonlin
    kinetic = e_total - internal
    # fraction of the mass living below the floor; concentrated fields keep
    # essentially all mass above it no matter how large the box is
    mass_total = integrate(grid, dens)
    mass_above = integrate(grid, np.where(above, dens, 0.0))
    vac_frac = 1.0 - mass_above / mass_total if mass_total > 0 else 1.0
    return EnergySplit(total=e_total, internal=internal, kinetic=kinetic,
                       vacuum_fraction=float(vac_frac),
                       reliable=bool(vac_frac <= 1e-6))


@dataclass(frozen=True)
class EtaDiagnostics:
    eta1: np.ndarray
    eta2: float
    eta2_tilde: float
    eta3: np.ndarray
    warnings: tuple

    @property
    def total(self) -> float:
        return float(np.linalg.norm(self.eta1) + abs(self.eta2)
                     + np.linalg.norm(self.eta3))


def eta_diagnostics(u: WaveField, eps: float, model: PotentialModel,
                    point: PhasePoint, mass_m: float, centroid_radius: float,
                    v_grid: np.ndarray | None = None) -> EtaDiagnostics:
    """Concentration defects against the guiding trajectory.

    eta1: momentum defect m xi(t) - P.
    eta2: potential-energy defect m V(x(t)) - eps^-N int V |u|^2, and the
          variant with the origin-excluding cutoff.
    eta3: position defect eps^-N int x chi |u|^2 - m x(t), chi equal to 1 on
          |x| <= centroid_radius and 0 beyond twice that.
    """
    grid = u.grid
    n = grid.dim
    warnings = []
    if v_grid is None:
        from .potential import grid_values
        v_grid, _ = grid_values(model, grid)

    dens = np.abs(u.values) ** 2
    eta1 = mass_m * point.xi - momentum(u, eps)

    v_at_x = value(model, point.x)
    pot_int = integrate(grid, v_grid * dens) * eps ** (-n)
    eta2 = mass_m * v_at_x - pot_int

    r = np.sqrt(grid.radius_sq())
    inner, outer = origin_cutoff_radii(eps, model.beta) if model.amplitude > 0 \
        else (0.0, 0.0)
    if outer < 2.0 * grid.spacing:
        warnings.append("cutoff-degenerate")
        eta2_tilde = eta2
    else:
        chi_eps = radial_cutoff_ascending(r, inner, outer)
        eta2_tilde = mass_m * v_at_x \
            - integrate(grid, v_grid * chi_eps * dens) * eps ** (-n)

    if 2.0 * centroid_radius > grid.half_width:
        warnings.append("centroid-cutoff-clipped")
    chi = radial_cutoff_descending(r, centroid_radius, 2.0 * centroid_radius)
    weighted = chi * dens
    eta3 = np.empty(n)
    for i, c in enumerate(grid.coords()):
        eta3[i] = integrate(grid, c * weighted) * eps ** (-n)
    eta3 -= mass_m * point.x

    return EtaDiagnostics(eta1=eta1, eta2=eta2, eta2_tilde=eta2_tilde,
                          eta3=eta3, warnings=tuple(warnings))


@dataclass
class ObservableRow:
    """One snapshot of every reported observable.

    Serialized CSV columns (in order, vectors expanded per axis): t, mass,
    P_*, E_total, J, K, h1eps, eta1_*, eta2, eta2_tilde, eta3_*, eta_total,
    split_resid, frame_residual, fit_center_*, fit_phase0, fit_residual,
    shift_w.
    """

    t: float
    mass: float
    momentum: np.ndarray
    energy_total: float
    energy_internal: float
    energy_kinetic: float
    h1eps: float
    eta1: np.ndarray
    eta2: float
    eta2_tilde: float
    eta3: np.ndarray
    eta_total: float
    split_resid: float
    frame_residual: float
    fit_center: np.ndarray
    fit_phase0: float
    fit_residual: float
    shift_w: float
    # bookkeeping outside the CSV schema
    xi_speed: float = 0.0
    force_integral: np.ndarray | None = None
    vacuum_fraction: float = 0.0
    warnings: tuple = ()


def csv_columns(dim: int) -> list:
    cols = ["t", "mass"]
    cols += [f"P_{i+1}" for i in range(dim)]
    cols += ["E_total", "J", "K", "h1eps"]
    cols += [f"eta1_{i+1}" for i in range(dim)]
    cols += ["eta2", "eta2_tilde"]
    cols += [f"eta3_{i+1}" for i in range(dim)]
    cols += ["eta_total", "split_resid", "frame_residual"]
    cols += [f"fit_center_{i+1}" for i in range(dim)]
    cols += ["fit_phase0", "fit_residual", "shift_w"]
    return cols


def row_to_values(row: ObservableRow) -> list:
    vals = [row.t, row.mass]
    vals += list(row.momentum)
    vals += [row.energy_total, row.energy_internal, row.energy_kinetic, row.h1eps]
    vals += list(row.eta1)
    vals += [row.eta2, row.eta2_tilde]
    vals += list(row.eta3)
    vals += [row.eta_total, row.split_resid, row.frame_residual]
    vals += list(row.fit_center)
    vals += [row.fit_phase0, row.fit_residual, row.shift_w]
    return [float(v) for v in vals]


def row_from_values(vals: list, dim: int) -> ObservableRow:
    it = iter(vals)

    def take(k):
        return np.array([next(it) for _ in range(k)])

    t, mass = next(it), next(it)
    mom = take(dim)
    e_tot, e_int, e_kin, h1 = next(it), next(it), next(it), next(it)
    eta1 = take(dim)
    eta2, eta2t = next(it), next(it)
    eta3 = take(dim)
    eta_total, split_resid, frame_res = next(it), next(it), next(it)
    center = take(dim)
    phase0, fit_res, shift_w = next(it), next(it), next(it)
    return ObservableRow(t=t, mass=mass, momentum=mom, energy_total=e_tot,
                         energy_internal=e_int, energy_kinetic=e_kin, h1eps=h1,
                         eta1=eta1, eta2=eta2, eta2_tilde=eta2t, eta3=eta3,
                         eta_total=eta_total, split_resid=split_resid,
                         frame_residual=frame_res, fit_center=center,
                         fit_phase0=phase0, fit_residual=fit_res,
                         shift_w=shift_w)


@dataclass
class ObservationContext:
    """Precomputed run-constant pieces needed to fill a row."""

    eps: float
    p: float
    model: PotentialModel
    v_grid: np.ndarray
    grad_v_grid: list
    capped_mask: np.ndarray
    mass_m: float
    profile_energy_ref: float      # E(R) of the computed ground state
    centroid_radius: float
    vacuum_floor: float = 1e-14
    capped_mass_threshold: float = 1e-10


def make_context(grid: GridSpec, model: PotentialModel, eps: float, p: float,
                 mass_m: float, profile_energy_ref: float,
                 centroid_radius: float, cap_radius: float | None = None,
                 vacuum_floor: float = 1e-14) -> ObservationContext:
    from .potential import grid_values
    v_grid, capped = grid_values(model, grid, cap_radius=cap_radius)
    r = np.sqrt(grid.radius_sq())
    if model.delta == 0.0 and model.amplitude > 0.0:
        r = np.maximum(r, cap_radius if cap_radius is not None else 0.5 * grid.spacing)
    grad_v = []
    if model.amplitude > 0.0:
        s = model.delta ** 2 + r ** 2
        radial_factor = -model.amplitude * model.beta * s ** (-model.beta / 2.0 - 1.0)
        for c in grid.coords():
            grad_v.append(radial_factor * c)
    else:
        grad_v = [np.zeros(grid.shape) for _ in range(grid.dim)]
    return ObservationContext(eps=eps, p=p, model=model, v_grid=v_grid,
                              grad_v_grid=grad_v, capped_mask=capped,
                              mass_m=mass_m,
                              profile_energy_ref=profile_energy_ref,
                              centroid_radius=centroid_radius,
                              vacuum_floor=vacuum_floor)


def compute_row(u: WaveField, point: PhasePoint, ctx: ObservationContext) -> ObservableRow:
    """All field observables for one snapshot; the fit and guiding-frame
    columns stay NaN until the run harness fills them."""
    grid = u.grid
    n = grid.dim
    eps = ctx.eps
    dens = np.abs(u.values) ** 2
    mass = integrate(grid, dens) * eps ** (-n)

    split = energy_split(u, eps, ctx.p, ctx.v_grid, vacuum_floor=ctx.vacuum_floor)
    etas = eta_diagnostics(u, eps, ctx.model, point, ctx.mass_m,
                           ctx.centroid_radius, v_grid=ctx.v_grid)
    warnings = list(etas.warnings)
    if not split.reliable:
        warnings.append("unreliable-split")
    if np.any(ctx.capped_mask):
        capped_mass = integrate(grid, np.where(ctx.capped_mask, dens, 0.0)) * eps ** (-n)
        if capped_mass > ctx.capped_mass_threshold * ctx.mass_m:
            warnings.append("mass-near-singular-cap")

    h_classical = hamiltonian(ctx.model, point.x, point.xi)
    split_resid = abs(split.total - ctx.profile_energy_ref
                      - ctx.mass_m * h_classical)

    force = np.empty(n)
    for i, gv in enumerate(ctx.grad_v_grid):
        force[i] = integrate(grid, gv * dens)
    force *= eps ** (-n)

    nan_vec = np.full(n, np.nan)
    return ObservableRow(
        t=point.t, mass=mass, momentum=momentum(u, eps),
        energy_total=split.total, energy_internal=split.internal,
        energy_kinetic=split.kinetic, h1eps=h1eps_norm_sq(u, eps),
        eta1=etas.eta1, eta2=etas.eta2, eta2_tilde=etas.eta2_tilde,
        eta3=etas.eta3, eta_total=etas.total, split_resid=split_resid,
        frame_residual=float("nan"), fit_center=nan_vec, fit_phase0=float("nan"),
        fit_residual=float("nan"), shift_w=float("nan"),
        xi_speed=float(np.linalg.norm(point.xi)), force_integral=force,
        vacuum_fraction=split.vacuum_fraction, warnings=tuple(warnings))


@dataclass(frozen=True)
class StoppingReport:
    triggered: bool
    time: float | None
    index: int | None
    reason: str | None


def stopping_time_monitor(rows, mu: float) -> StoppingReport:
    """First snapshot where |xi||eta1| + |eta2| exceeds mu or the fitted
    soliton shift leaves the unit ball."""
    for i, row in enumerate(rows):
        drive = row.xi_speed * float(np.linalg.norm(row.eta1)) + abs(row.eta2)
        if drive > mu:
            return StoppingReport(True, row.t, i, "eta-budget")
        if np.isfinite(row.shift_w) and row.shift_w > 1.0:
            return StoppingReport(True, row.t, i, "soliton-shift")
    return StoppingReport(False, None, None, None)
