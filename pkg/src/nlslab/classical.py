"""Newtonian guiding trajectory x' = xi, xi' = -grad V(x).

Velocity Verlet: symplectic, second order, time reversible.  The trajectory
must stay away from the potential singularity; a guard radius aborts the
integration if it does not.
"""

from dataclasses import dataclass

import numpy as np

from .potential import PotentialModel, gradient, value


class SingularityApproachError(RuntimeError):
    def __init__(self, t, radius, guard):
        super().__init__(
            f"trajectory entered guard radius at t={t:.6g} (|x|={radius:.3e} < {guard:.3e})")
        self.t = t


@dataclass
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if self.x.shape != self.xi.shape:
            raise ValueError("position and velocity dimensions differ")


def hamiltonian(model: PotentialModel, x, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    return float(0.5 * np.dot(xi, xi) + value(model, np.asarray(x, dtype=float)))


def verlet_step(state: PhasePoint, model: PotentialModel, dt: float,
                guard_radius: float = 1e-6) -> PhasePoint:
    f0 = -gradient(model, state.x)
    x1 = state.x + dt * state.xi + 0.5 * dt * dt * f0
    r1 = float(np.linalg.norm(x1))
    if r1 < guard_radius:
        raise SingularityApproachError(state.t + dt, r1, guard_radius)
    f1 = -gradient(model, x1)
    xi1 = state.xi + 0.5 * dt * (f0 + f1)
    return PhasePoint(x1, xi1, state.t + dt)


@dataclass
class ClassicalTrajectory:
    model: PotentialModel
    dt: float
    t: np.ndarray
    x: np.ndarray        # shape (n_steps+1, dim)
    xi: np.ndarray       # shape (n_steps+1, dim)
    h: np.ndarray        # Hamiltonian series
    speed_bound: float   # sqrt(|xi0|^2 + 2 V(x0))
    speed_bound_ok: bool

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def min_radius(self) -> float:
        return float(np.min(np.linalg.norm(self.x, axis=1)))

    @property
    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.x, axis=1)))

    @property
    def max_speed(self) -> float:
        return float(np.max(np.linalg.norm(self.xi, axis=1)))

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.h - self.h[0])))

    def at(self, index: int) -> PhasePoint:
        return PhasePoint(self.x[index].copy(), self.xi[index].copy(),
                          float(self.t[index]))

    def to_csv(self, target):
        """Write columns t, x_1.., xi_1.., H to a path or text stream."""
        dim = self.dim
        header = ["t"] + [f"x_{i+1}" for i in range(dim)] \
            + [f"xi_{i+1}" for i in range(dim)] + ["H"]
        own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
        stream = open(target, "w", newline="") if own else target
        try:
            stream.write(",".join(header) + "\n")
            for j in range(self.t.size):
                row = [repr(float(self.t[j]))]
                row += [repr(float(v)) for v in self.x[j]]
                row += [repr(float(v)) for v in self.xi[j]]
                row.append(repr(float(self.h[j])))
                stream.write(",".join(row) + "\n")
        finally:
            if own:
                stream.close()


def integrate(state0: PhasePoint, model: PotentialModel, t_final: float,
              dt: float, guard_radius: float = 1e-6) -> ClassicalTrajectory:
    if dt <= 0 or t_final < 0:
        raise ValueError("need dt > 0 and t_final >= 0")
    n = int(round(t_final / dt))
    dim = state0.x.size
    xs = np.empty((n + 1, dim))
    xis = np.empty((n + 1, dim))
    hs = np.empty(n + 1)
    ts = dt * np.arange(n + 1)

    x, xi = state0.x.copy(), state0.xi.copy()
    xs[0], xis[0], hs[0] = x, xi, hamiltonian(model, x, xi)
    f = -gradient(model, x)
    for j in range(1, n + 1):
        x = x + dt * xi + 0.5 * dt * dt * f
        r = float(np.linalg.norm(x))
        if r < guard_radius:
            raise SingularityApproachError(float(ts[j]), r, guard_radius)
        f_new = -gradient(model, x)
        xi = xi + 0.5 * dt * (f + f_new)
        f = f_new
        xs[j], xis[j], hs[j] = x, xi, hamiltonian(model, x, xi)

    bound = float(np.sqrt(np.dot(state0.xi, state0.xi)
                          + 2.0 * value(model, state0.x)))
    speeds = np.linalg.norm(xis, axis=1)
    ok = bool(np.all(speeds < bound + 1e-9 * max(1.0, bound)))
    return ClassicalTrajectory(model=model, dt=dt, t=ts, x=xs, xi=xis, h=hs,
                               speed_bound=bound, speed_bound_ok=ok)


def action_phase(traj: ClassicalTrajectory) -> np.ndarray:
    """Ansatz phase theta(t) carried along the trajectory, one value per sample.

    With the soliton phase written (x . xi(t) + theta(t)) / eps, the x . xi
    term contributes -x . grad V through xi' = -grad V, so the rate is
    1 - |xi|^2/2 - V(x) + x . grad V(x) = 1 - H + x . grad V(x).
    """
    rate = 1.0 - traj.h + np.sum(traj.x * gradient(traj.model, traj.x), axis=1)
    steps = 0.5 * (rate[1:] + rate[:-1]) * traj.dt
    return np.concatenate(([0.0], np.cumsum(steps)))


def angular_momentum(traj: ClassicalTrajectory) -> np.ndarray:
    """Components x_i xi_j - x_j xi_i for i<j, one row per sample."""
    dim = traj.dim
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    if not pairs:
        return np.zeros((traj.t.size, 0))
    out = np.empty((traj.t.size, len(pairs)))
    for c, (i, j) in enumerate(pairs):
        out[:, c] = traj.x[:, i] * traj.xi[:, j] - traj.x[:, j] * traj.xi[:, i]
    return out
