"""Newmark time stepping in displacement-velocity form.

The update for G u'' + A u = 0 with parameters (beta, gamma) is

    (G + beta dt^2 A) u1 = G (u0 + dt v0) - dt^2 (1/2 - beta) A u0
    G v1 = G v0 - dt A (gamma u1 + (1 - gamma) u0)

With (beta, gamma) = (1/4, 1/2) this is the trapezoidal rule for the
first-order system, unconditionally stable and exactly conserving the
discrete energy 1/2 v'Gv + 1/2 u'Au up to solver tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import SymTridiagonal
from .solvers import CgOptions, ConvergenceError, cg_solve, thomas_solve

__all__ = ["NewmarkParams", "SolverState", "SimulationError",
           "newmark_step", "run_simulation", "discrete_energy"]


class SimulationError(RuntimeError):
    """Linear-solve failure during time stepping, with the step attached."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class NewmarkParams:
    dt: float
    n_steps: int
    beta: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        # negative dt is allowed so a run can be stepped backwards in time
        if self.dt == 0.0:
            raise ValueError("dt must be nonzero")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")


@dataclass(frozen=True)
class SolverState:
    """Nodal displacement and velocity coefficients at step n, t = n*dt."""

    n: int
    t: float
    u: np.ndarray
    v: np.ndarray


def _solve(mat, rhs, x0, cg_opts, solver):
    if solver == "direct":
        return thomas_solve(mat, rhs)
    x, _, _ = cg_solve(mat, rhs, x0=x0, opts=cg_opts)
    return x


def _advance(state, G, A, shifted, params, cg_opts, solver):
    dt = params.dt
    u, v = state.u, state.v
    rhs = G @ (u + dt * v) - (dt * dt * (0.5 - params.beta)) * (A @ u)
    try:
        u1 = _solve(shifted, rhs, u, cg_opts, solver)
        rhs2 = G @ v - dt * (A @ (params.gamma * u1 + (1.0 - params.gamma) * u))
        v1 = _solve(G, rhs2, v, cg_opts, solver)
    except ConvergenceError as exc:
        raise SimulationError(f"solver failed at step {state.n + 1}: {exc}",
                              state.n + 1) from exc
    return SolverState(state.n + 1, state.t + dt, u1, v1)


def newmark_step(state: SolverState, G: SymTridiagonal, A: SymTridiagonal,
                 params: NewmarkParams, cg_opts: CgOptions | None = None,
                 solver: str = "cg") -> SolverState:
    """Advance one step; see the module docstring for the update."""
    shifted = G.add_scaled(A, params.beta * params.dt * params.dt)
    return _advance(state, G, A, shifted, params, cg_opts, solver)


def run_simulation(G: SymTridiagonal, A: SymTridiagonal,
                   u0: np.ndarray, v0: np.ndarray, params: NewmarkParams,
                   cg_opts: CgOptions | None = None, observers=(),
                   solver: str = "cg") -> SolverState:
    """Run n_steps Newmark steps from (u0, v0).

    Observers are callables receiving every SolverState, the initial one
    included; they decide themselves what to record.  The run is
    deterministic for fixed inputs.
    """
    if len(u0) != G.n or len(v0) != G.n or A.n != G.n:
        raise ValueError("dimension mismatch between matrices and initial data")
    if solver not in ("cg", "direct"):
        raise ValueError(f"unknown solver '{solver}'")
    shifted = G.add_scaled(A, params.beta * params.dt * params.dt)
    state = SolverState(0, 0.0, np.array(u0, dtype=float), np.array(v0, dtype=float))
    for obs in observers:
        obs(state)
    for _ in range(params.n_steps):
        state = _advance(state, G, A, shifted, params, cg_opts, solver)
        for obs in observers:
            obs(state)
    return state


def discrete_energy(G: SymTridiagonal, A: SymTridiagonal,
                    u: np.ndarray, v: np.ndarray) -> float:
    """E = 1/2 v'Gv + 1/2 u'Au, the conserved quadratic of the scheme."""
    return 0.5 * float(v @ (G @ v)) + 0.5 * float(u @ (A @ u))
