"""Time integration of the cubic FPUT lattice on a periodic N x N grid.

Two equivalent formulations are supported.  In displacement form the state is
(q, w = dq/dt) and the acceleration at a site is the four-bond force balance

    a_{m,n} = W'(q_{m+1,n}-q_{m,n}) - W'(q_{m,n}-q_{m-1,n})
            + W'(q_{m,n+1}-q_{m,n}) - W'(q_{m,n}-q_{m,n-1}).

In strain form the state is (u, v, du/dt, dv/dt) with u_{m,n} = q_{m+1,n}-q_{m,n},
v_{m,n} = q_{m,n+1}-q_{m,n}; the two second-order stencils follow by
differencing the displacement balance, and the discrete curl-free constraint

    u_{m,n+1} - u_{m,n} = v_{m+1,n} - v_{m,n}

is invariant under the flow.  Array axis 0 is the m (x) index, axis 1 the n
(y) index.  Inverting the strain map back to periodic displacements would
additionally require mean-zero row/column sums of u and v; the module tracks
the constraint as a diagnostic and never inverts.

The integrator is velocity Verlet (symplectic, second order, time reversible).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DT_MAX = 0.5  # stability margin below the linear CFL limit 2 / (2*sqrt(2))
OVERFLOW_GUARD = 1e6


class FormMismatch(ValueError):
    """Operation applied to a lattice state of the wrong formulation."""


class UnstableStep(RuntimeError):
    """An array value exceeded the overflow guard during a step."""


@dataclass
class ForceLaw:
    """Bond force W'.

    kind "cubic_baseline" is W'(u) = u - u^3; "linear" drops the cubic term
    (diagnostic runs); "perturbed" applies per-bond perturbed forces

        W'(u) = u + alpha*eps^3*u + beta*eps^2*u^2 - u^3 + gamma*eps*u^3

    with N x N coefficient arrays per bond direction, all bounded by
    coeff_bound in absolute value.
    """

    kind: str = "cubic_baseline"
    eps: float = 0.0
    alpha_x: np.ndarray | None = None
    beta_x: np.ndarray | None = None
    gamma_x: np.ndarray | None = None
    alpha_y: np.ndarray | None = None
    beta_y: np.ndarray | None = None
    gamma_y: np.ndarray | None = None
    coeff_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in ("cubic_baseline", "perturbed", "linear"):
            raise ValueError(f"unknown force kind {self.kind!r}")
        if self.kind == "perturbed":
            if not 0.0 < self.eps < 1.0:
                raise ValueError("perturbed force needs eps in (0, 1)")
            arrays = [self.alpha_x, self.beta_x, self.gamma_x,
                      self.alpha_y, self.beta_y, self.gamma_y]
            if any(a is None for a in arrays):
                raise ValueError("perturbed force needs all six coefficient arrays")
            shape = arrays[0].shape
            for a in arrays:
                if a.shape != shape:
                    raise ValueError("coefficient arrays must share one shape")
                if np.max(np.abs(a)) > self.coeff_bound + 1e-15:
                    raise ValueError(f"coefficient magnitude exceeds bound {self.coeff_bound}")

    def w_prime(self, u: np.ndarray, direction: str) -> np.ndarray:
        """Evaluate the bond force on an array of bond strains."""
        if self.kind == "cubic_baseline":
            return u - u * u * u
        if self.kind == "linear":
            return u.copy()
        alpha, beta, gamma = (
            (self.alpha_x, self.beta_x, self.gamma_x)
            if direction == "x"
            else (self.alpha_y, self.beta_y, self.gamma_y)
        )
        e = self.eps
        u2 = u * u
        return u * (1.0 + alpha * e**3) + beta * e**2 * u2 + (gamma * e - 1.0) * u2 * u

    def w_potential(self, u: np.ndarray, direction: str) -> np.ndarray:
        """Antiderivative of the bond force, W(0) = 0."""
        u2 = u * u
        if self.kind == "cubic_baseline":
            return 0.5 * u2 - 0.25 * u2 * u2
        if self.kind == "linear":
            return 0.5 * u2
        alpha, beta, gamma = (
            (self.alpha_x, self.beta_x, self.gamma_x)
            if direction == "x"
            else (self.alpha_y, self.beta_y, self.gamma_y)
        )
        e = self.eps
        return (
            0.5 * u2 * (1.0 + alpha * e**3)
            + beta * e**2 * u2 * u / 3.0
            + (gamma * e - 1.0) * 0.25 * u2 * u2
        )


def perturbed_force(n_side: int, eps: float, coeff_bound: float, seed: int) -> ForceLaw:
    """Seeded per-bond perturbation coefficients, uniform in [-bound, bound]."""
    rng = np.random.default_rng(seed)
    draw = lambda: rng.uniform(-coeff_bound, coeff_bound, size=(n_side, n_side))
    return ForceLaw(
        kind="perturbed",
        eps=eps,
        alpha_x=draw(), beta_x=draw(), gamma_x=draw(),
        alpha_y=draw(), beta_y=draw(), gamma_y=draw(),
        coeff_bound=coeff_bound,
    )


@dataclass
class LatticeState:
    """Periodic N x N lattice state in displacement or strain form."""

    form: str
    time: float = 0.0
    q: np.ndarray | None = None
    w: np.ndarray | None = None
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    ut: np.ndarray | None = None
    vt: np.ndarray | None = None

    def __post_init__(self):
        if self.form == "displacement":
            arrays = (self.q, self.w)
        elif self.form == "strain":
            arrays = (self.u, self.v, self.ut, self.vt)
        else:
            raise ValueError(f"unknown form {self.form!r}")
        if any(a is None for a in arrays):
            raise ValueError(f"{self.form} form is missing arrays")
        shape = arrays[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 8:
            raise ValueError("state arrays must be square N x N with N >= 8")
        for a in arrays:
            if a.shape != shape:
                raise ValueError("state arrays must share one shape")

    @property
    def n_side(self) -> int:
        ref = self.q if self.form == "displacement" else self.u
        return ref.shape[0]

    def arrays(self) -> tuple[np.ndarray, ...]:
        if self.form == "displacement":
            return (self.q, self.w)
        return (self.u, self.v, self.ut, self.vt)

    def copy(self) -> "LatticeState":
        if self.form == "displacement":
            return LatticeState("displacement", self.time, q=self.q.copy(), w=self.w.copy())
        return LatticeState(
            "strain", self.time,
            u=self.u.copy(), v=self.v.copy(), ut=self.ut.copy(), vt=self.vt.copy(),
        )

    def max_amplitude(self) -> float:
        return max(float(np.max(np.abs(a))) for a in self.arrays())


def strain_from_displacement(state: LatticeState) -> LatticeState:
    """Forward-difference a displacement state into the equivalent strain state."""
    if state.form != "displacement":
        raise FormMismatch("expected displacement form")
    q, w = state.q, state.w
    dx = lambda f: np.roll(f, -1, axis=0) - f
    dy = lambda f: np.roll(f, -1, axis=1) - f
    return LatticeState(
        "strain", state.time, u=dx(q), v=dy(q), ut=dx(w), vt=dy(w)
    )


def rhs_displacement(state: LatticeState, force: ForceLaw) -> np.ndarray:
    """Acceleration field of the displacement formulation."""
    if state.form != "displacement":
        raise FormMismatch("rhs_displacement needs displacement form")
    q = state.q
    fx = force.w_prime(np.roll(q, -1, axis=0) - q, "x")
    fy = force.w_prime(np.roll(q, -1, axis=1) - q, "y")
    return fx - np.roll(fx, 1, axis=0) + fy - np.roll(fy, 1, axis=1)


def rhs_strain(state: LatticeState, force: ForceLaw) -> tuple[np.ndarray, np.ndarray]:
    """Acceleration fields (d2u/dt2, d2v/dt2) of the strain formulation."""
    if state.form != "strain":
        raise FormMismatch("rhs_strain needs strain form")
    fu = force.w_prime(state.u, "x")
    fv = force.w_prime(state.v, "y")
    d2u = (
        np.roll(fu, -1, axis=0) - 2.0 * fu + np.roll(fu, 1, axis=0)
        + np.roll(fv, -1, axis=0) - np.roll(fv, (-1, 1), axis=(0, 1))
        - fv + np.roll(fv, 1, axis=1)
    )
    d2v = (
        np.roll(fv, -1, axis=1) - 2.0 * fv + np.roll(fv, 1, axis=1)
        + np.roll(fu, -1, axis=1) - np.roll(fu, (1, -1), axis=(0, 1))
        - fu + np.roll(fu, 1, axis=0)
    )
    return d2u, d2v


def _accel(state: LatticeState, force: ForceLaw):
    if state.form == "displacement":
        return (rhs_displacement(state, force),)
    return rhs_strain(state, force)


def verlet_step(state: LatticeState, force: ForceLaw, dt: float,
                accel=None) -> LatticeState:
    """One velocity-Verlet step; returns a new state advanced by dt.

    Negative dt steps backwards (the scheme is time reversible).  `accel` may
    pass a precomputed acceleration at the current positions.
    """
    if abs(dt) > DT_MAX:
        raise ValueError(f"|dt| = {abs(dt)} exceeds dt_max = {DT_MAX}")
    out = state.copy()
    if state.form == "displacement":
        pos, vel = (out.q,), (out.w,)
    else:
        pos, vel = (out.u, out.v), (out.ut, out.vt)
    a0 = accel if accel is not None else _accel(state, force)
    for p, d, a in zip(pos, vel, a0):
        d += 0.5 * dt * a
        p += dt * d
    a1 = _accel(out, force)
    for d, a in zip(vel, a1):
        d += 0.5 * dt * a
    out.time = state.time + dt
    if out.max_amplitude() > OVERFLOW_GUARD:
        raise UnstableStep(f"amplitude exceeded {OVERFLOW_GUARD} at t = {out.time}")
    return out


def integrate(state: LatticeState, force: ForceLaw, dt_max_step: float,
              sample_times, observer):
    """March the state to each requested time, reusing end-of-step forces.

    sample_times must be ascending and start at or after state.time; observer
    is called as observer(state) at every sample time (including t0 when it is
    the first entry).
    """
    current = state.copy()
    accel = _accel(current, force)
    for t_target in sample_times:
        if t_target < current.time - 1e-12:
            raise ValueError("sample times must be ascending")
        span = t_target - current.time
        if span > 1e-12:
            n_steps = max(1, int(np.ceil(span / dt_max_step - 1e-12)))
            dt = span / n_steps
            for _ in range(n_steps):
                # recompute accel only once per step: reuse the end-of-step
                # force as the next start-of-step force
                nxt = verlet_step(current, force, dt, accel=accel)
                accel = _accel(nxt, force)
                current = nxt
            current.time = t_target
        observer(current)
    return current


def energy(state: LatticeState, force: ForceLaw) -> float:
    """Total energy sum(w^2)/2 + sum of bond potentials (displacement form)."""
    if state.form != "displacement":
        raise FormMismatch("energy is defined for the displacement form")
    q = state.q
    ux = np.roll(q, -1, axis=0) - q
    uy = np.roll(q, -1, axis=1) - q
    return float(
        0.5 * np.sum(state.w**2)
        + np.sum(force.w_potential(ux, "x"))
        + np.sum(force.w_potential(uy, "y"))
    )


def compatibility_defect(state: LatticeState) -> float:
    """Max defect of the curl-free constraint, fields plus velocities."""
    if state.form != "strain":
        raise FormMismatch("compatibility defect is defined for the strain form")
    dy = lambda f: np.roll(f, -1, axis=1) - f
    dx = lambda f: np.roll(f, -1, axis=0) - f
    d_field = np.max(np.abs(dy(state.u) - dx(state.v)))
    d_vel = np.max(np.abs(dy(state.ut) - dx(state.vt)))
    return float(d_field + d_vel)
