"""Radial external potential V(x) = v0 + A*(delta^2 + |x|^2)^(-beta/2).

delta = 0 gives the bare inverse-power singularity at the origin; delta > 0 is
the smooth truncation of the same family.  beta is restricted to (0, 1).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec, WaveField, gradient as grid_gradient, integrate


class PotentialDomainError(ValueError):
    """Raised when the potential is evaluated where it is not defined."""


@dataclass(frozen=True)
class PotentialModel:
    v0: float
    amplitude: float
    beta: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.v0 > 0):
            raise ValueError(f"v0 must be positive, got {self.v0}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        # amplitude = 0 is the constant-potential degenerate case, kept for
        # free-transport references
        if self.amplitude > 0 and not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")

    def with_delta(self, delta: float) -> "PotentialModel":
        return PotentialModel(self.v0, self.amplitude, self.beta, delta)


def value_radial(model: PotentialModel, r):
    """V as a function of radius.  r may be a scalar or array."""
    r = np.asarray(r, dtype=float)
    if model.amplitude == 0.0:
        return np.broadcast_to(np.asarray(model.v0), r.shape).copy() if r.shape else float(model.v0)
    s = model.delta ** 2 + r ** 2
    if model.delta == 0.0 and np.any(s == 0.0):
        raise PotentialDomainError("potential is singular at the origin for delta = 0")
    out = model.v0 + model.amplitude * s ** (-model.beta / 2.0)
    return out if out.shape else float(out)


def value(model: PotentialModel, x):
    """V at a position vector (or batch with components on the last axis)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return value_radial(model, r)


def gradient(model: PotentialModel, x):
    """grad V = -A*beta*x*(delta^2+|x|^2)^(-beta/2-1)."""
    x = np.asarray(x, dtype=float)
    if model.amplitude == 0.0:
        return np.zeros_like(x)
    s = model.delta ** 2 + np.sum(x * x, axis=-1, keepdims=True)
    if model.delta == 0.0 and np.any(s == 0.0):
        raise PotentialDomainError("potential gradient is singular at the origin for delta = 0")
    return -model.amplitude * model.beta * x * s ** (-model.beta / 2.0 - 1.0)


def grid_values(model: PotentialModel, grid: GridSpec, cap_radius: float | None = None):
    """V sampled on the grid.

    For delta = 0 the origin cell is singular, so the radius is floored at
    cap_radius (default: half the grid spacing).  Returns (values, capped_mask).
    """
    r = np.sqrt(grid.radius_sq())
    capped = np.zeros(grid.shape, dtype=bool)
    if model.delta == 0.0 and model.amplitude > 0.0:
        if cap_radius is None:
            cap_radius = 0.5 * grid.spacing
        capped = r < cap_radius
        r = np.maximum(r, cap_radius)
    return value_radial(model, r), capped


# --- derivative budget phi(delta) -------------------------------------------

def _multi_indices(dim: int, order: int):
    """All multi-indices of the given total order as coordinate tuples."""
    return list(itertools.combinations_with_replacement(range(dim), order))


def _nested_central_diff(f, x, axes, h):
    """D^alpha f by nested second-order central differences along axes."""
    if not axes:
        return f(x)
    ax, rest = axes[0], axes[1:]
    xp = x.copy(); xp[ax] += h
    xm = x.copy(); xm[ax] -= h
    return (_nested_central_diff(f, xp, rest, h)
            - _nested_central_diff(f, xm, rest, h)) / (2.0 * h)


@dataclass(frozen=True)
class PhiEstimate:
    """Sum over |alpha| <= 3 of sup |D^alpha V| for the truncated potential."""

    analytic: float      # closed-form majorant, rigorous upper bound
    sampled: float       # brute-force finite-difference sup on a radial grid
    delta: float
    dim: int


def phi_analytic(model: PotentialModel, delta: float, dim: int) -> float:
    """Majorant v0 + A*(d^-b + c1 d^-b-1 + c2 d^-b-2 + c3 d^-b-3).

    The per-order constants bound every Cartesian derivative of
    (delta^2+r^2)^(-beta/2) of that order, times the number of multi-indices.
    """
    b = model.beta
    if delta <= 0:
        return float("inf")
    n1 = len(_multi_indices(dim, 1))
    n2 = len(_multi_indices(dim, 2))
    n3 = len(_multi_indices(dim, 3))
    c1 = n1 * b
    c2 = n2 * b * (b + 5.0)
    c3 = n3 * b * (b + 2.0) * (b + 10.0)
    return model.v0 + model.amplitude * (
        delta ** -b + c1 * delta ** (-b - 1)
        + c2 * delta ** (-b - 2) + c3 * delta ** (-b - 3))


def phi_sampled(model: PotentialModel, delta: float, dim: int) -> float:
    """Brute-force sup of |D^alpha V| over radial sample points, |alpha| <= 3.

    Independent of the majorant on purpose: plain nested central differences
    of the closed-form evaluation, along the first axis and the diagonal.
    """
    if delta <= 0:
        raise PotentialDomainError("phi is finite only for delta > 0")
    m = model.with_delta(delta)

    def f(x):
        return value(m, x)

    radii = np.concatenate([[0.0],
                            np.geomspace(delta * 1e-2, max(10.0, 50.0 * delta), 64)])
    dirs = [np.eye(dim)[0]]
    if dim > 1:
        dirs.append(np.ones(dim) / np.sqrt(dim))

    total = 0.0
    for order in range(4):
        sup = 0.0
        for axes in _multi_indices(dim, order):
            for d in dirs:
                for r in radii:
                    x = r * d
                    h = 1e-3 * (delta + r + 0.1)
                    val = abs(_nested_central_diff(f, x, axes, h))
                    if val > sup:
                        sup = val
        total += sup
    return float(total)


def phi_of_delta(model: PotentialModel, delta: float, dim: int = 1) -> PhiEstimate:
    """Derivative budget of the truncated potential at truncation delta.

    The sampled value must sit below the analytic majorant; scaling studies
    use the sampled value.
    """
    analytic = phi_analytic(model, delta, dim)
    sampled = phi_sampled(model, delta, dim)
    assert sampled <= analytic, (
        f"sampled derivative sup {sampled} exceeds analytic majorant {analytic}")
    return PhiEstimate(analytic=analytic, sampled=sampled, delta=delta, dim=dim)


# --- classical exclusion radius ---------------------------------------------

def hamiltonian_head(model: PotentialModel, x0, xi0) -> float:
    """H = |xi0|^2/2 + V(x0)."""
    xi0 = np.asarray(xi0, dtype=float)
    return float(0.5 * np.dot(xi0, xi0) + value(model, np.asarray(x0, dtype=float)))


def delta_level(model: PotentialModel, x0, xi0, tol: float = 1e-12):
    """Largest radius excluded by energy conservation.

    Solves V(r) = H(x0, xi0) by bisection on (0, |x0|).  Returns (radius, flag)
    where flag is True when the level set does not exclude any ball (constant
    potential, or the energy exceeds the truncated maximum).
    """
    x0 = np.asarray(x0, dtype=float)
    r0 = float(np.sqrt(np.dot(x0, x0)))
    h0 = hamiltonian_head(model, x0, xi0)
    if model.amplitude == 0.0:
        return 0.0, True
    vmax = value_radial(model, 0.0) if model.delta > 0 else float("inf")
    if h0 >= vmax:
        return 0.0, True
    lo = 0.0 if model.delta > 0 else min(1e-300, r0)
    hi = r0
    if model.delta == 0.0:
        # expand lower bracket until V(lo) > h0
        lo = r0
        while value_radial(model, lo) <= h0:
            lo *= 0.5
        hi = min(r0, lo * 2.0)
        lo = lo if value_radial(model, lo) > h0 else lo * 0.5
    # V decreasing in r: V(lo) > h0 >= V(hi)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if value_radial(model, mid) > h0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


# --- structural hypothesis checks -------------------------------------------

def singular_integrability_tail(model: PotentialModel, dim: int, n_shells: int = 6):
    """Shell-by-shell quadrature of (|grad V|^2 / sqrt(V - v0))^dim outside B(0,1).

    Returns the per-shell increments over [2^k, 2^{k+1}); integrability shows
    up as a decreasing sequence.
    """
    if model.amplitude == 0.0:
        return [0.0] * n_shells
    # surface measure of the unit sphere
    from math import gamma as gamma_fn, pi
    omega = 2.0 * pi ** (dim / 2.0) / gamma_fn(dim / 2.0)
    increments = []
    for k in range(n_shells):
        a, b = 2.0 ** k, 2.0 ** (k + 1)
        r = np.linspace(a, b, 512)
        s = model.delta ** 2 + r ** 2
        grad_mag = model.amplitude * model.beta * r * s ** (-model.beta / 2.0 - 1.0)
        vmv0 = model.amplitude * s ** (-model.beta / 2.0)
        integrand = (grad_mag ** 2 / np.sqrt(vmv0)) ** dim * r ** (dim - 1) * omega
        increments.append(float(np.trapezoid(integrand, r)))
    return increments


@dataclass(frozen=True)
class HypothesisReport:
    """Numeric checks of the structural conditions for one configuration.

    Every flag is recomputable from the stored inputs.
    """

    model: PotentialModel
    x0: tuple
    xi0: tuple
    eps: float
    rho: float | None

    hamiltonian: float
    exclusion_radius: float
    unbounded_level_set: bool

    gamma: float | None                # H^1_eps defect of the prepared datum
    potential_mass_integral: float | None   # int (V - v0) |v|^2 dx

    # smallness thresholds for the fully rigorous regime
    gamma_threshold: float
    velocity_threshold: float
    potential_mass_threshold: float
    gamma_small: bool | None
    velocity_small: bool
    potential_mass_small: bool | None

    support_radius_ok: bool | None     # rho < |x0| - exclusion radius
    mass_normalized: bool | None       # eps^-N ||v||^2 == ground-state mass
    symmetry_defect: float | None      # |mass centroid - x0|_inf
    tail_increments: tuple             # decreasing shells certify integrability

    practically_admissible: bool       # thresholds are astronomically small at
                                       # desk scale; runs proceed with caveat

    def summary_lines(self):
        keys = [
            ("hamiltonian", self.hamiltonian),
            ("exclusion_radius", self.exclusion_radius),
            ("unbounded_level_set", self.unbounded_level_set),
            ("gamma", self.gamma),
            ("potential_mass_integral", self.potential_mass_integral),
            ("gamma_threshold", self.gamma_threshold),
            ("velocity_threshold", self.velocity_threshold),
            ("potential_mass_threshold", self.potential_mass_threshold),
            ("gamma_small", self.gamma_small),
            ("velocity_small", self.velocity_small),
            ("potential_mass_small", self.potential_mass_small),
            ("support_radius_ok", self.support_radius_ok),
            ("mass_normalized", self.mass_normalized),
            ("symmetry_defect", self.symmetry_defect),
            ("practically_admissible", self.practically_admissible),
        ]
        return [f"{k} = {v!r}" for k, v in keys]


def check_hypotheses(model: PotentialModel, x0, xi0, eps: float,
                     rho: float | None = None,
                     v_eps: WaveField | None = None,
                     ground_state=None) -> HypothesisReport:
    """Evaluate the structural conditions for a prepared configuration.

    ground_state is needed to measure the concentration defect gamma of
    v_eps; both may be omitted for a geometry-only report.
    """
    x0 = np.asarray(x0, dtype=float)
    xi0 = np.asarray(xi0, dtype=float)
    dim = x0.size

    h0 = hamiltonian_head(model, x0, xi0)
    excl, unbounded = delta_level(model, x0, xi0)

    exponent = (17.0 + model.beta) / (1.0 - model.beta) if model.amplitude > 0 else 17.0
    gamma_threshold = eps ** (4.0 * exponent)
    velocity_threshold = eps ** exponent
    potential_mass_threshold = eps ** (dim + 2.0 * exponent)

    speed = float(np.sqrt(np.dot(xi0, xi0)))
    velocity_small = speed <= velocity_threshold

    gamma = None
    pm_integral = None
    gamma_small = None
    pm_small = None
    mass_normalized = None
    symmetry_defect = None

    if v_eps is not None:
        from .grids import l2_mass
        from .observables import h1eps_distance_sq, mass_centroid
        grid = v_eps.grid
        vgrid, _ = grid_values(model, grid)
        pm_integral = integrate(grid, (vgrid - model.v0) * np.abs(v_eps.values) ** 2)
        pm_small = pm_integral <= potential_mass_threshold
        if ground_state is not None:
            from .solver import sample_ansatz
            ansatz = sample_ansatz(ground_state, grid, x0, xi0, eps)
            gamma = h1eps_distance_sq(v_eps, ansatz, eps)
            gamma_small = gamma <= gamma_threshold
            mass_normalized = abs(l2_mass(v_eps, eps) - ground_state.mass_m) \
                <= 1e-10 * ground_state.mass_m
        centroid = mass_centroid(v_eps, eps)
        symmetry_defect = float(np.max(np.abs(centroid - x0)))

    support_ok = None
    if rho is not None:
        support_ok = (not unbounded) and (0.0 < rho < float(np.linalg.norm(x0)) - excl)

    return HypothesisReport(
        model=model, x0=tuple(x0), xi0=tuple(xi0), eps=eps, rho=rho,
        hamiltonian=h0, exclusion_radius=excl, unbounded_level_set=unbounded,
        gamma=gamma, potential_mass_integral=pm_integral,
        gamma_threshold=gamma_threshold, velocity_threshold=velocity_threshold,
        potential_mass_threshold=potential_mass_threshold,
        gamma_small=gamma_small, velocity_small=velocity_small,
        potential_mass_small=pm_small,
        support_radius_ok=support_ok, mass_normalized=mass_normalized,
        symmetry_defect=symmetry_defect,
        tail_increments=tuple(singular_integrability_tail(model, dim)),
        practically_admissible=True,
    )
