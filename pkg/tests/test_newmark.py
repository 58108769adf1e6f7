"""Time-stepping scheme: exact small cases, conservation, stability, order."""

from fractions import Fraction

import numpy as np
import pytest

from kgsim.fem import PotentialProfile, SymTridiagonal, assemble_bilinear, assemble_mass, build_mesh
from kgsim.newmark import (NewmarkParams, SimulationError, SolverState,
                           discrete_energy, newmark_step, run_simulation)
from kgsim.oracles import FourierGrid, constant_potential_propagate
from kgsim.solvers import CgOptions
from kgsim.wavepacket import WavePacketSpec, initial_displacement, initial_velocity


def zero_like(G):
    return SymTridiagonal(np.zeros(G.n), np.zeros(G.n - 1))


def test_free_drift_single_step():
    mesh = build_mesh(1.0, 8)
    G = assemble_mass(mesh)
    A = zero_like(G)
    rng = np.random.default_rng(0)
    u0 = rng.standard_normal(G.n)
    v0 = rng.standard_normal(G.n)
    state = SolverState(0, 0.0, u0, v0)
    out = newmark_step(state, G, A, NewmarkParams(dt=0.1, n_steps=1), solver="direct")
    assert np.allclose(out.u, u0 + 0.1 * v0, atol=1e-14)
    assert np.allclose(out.v, v0, atol=1e-14)


def test_zero_state_is_fixed_point():
    mesh = build_mesh(1.0, 8)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(2.0))
    final = run_simulation(G, A, np.zeros(G.n), np.zeros(G.n),
                           NewmarkParams(dt=0.05, n_steps=20), solver="direct")
    assert np.array_equal(final.u, np.zeros(G.n))
    assert np.array_equal(final.v, np.zeros(G.n))


def test_scalar_oscillator_first_step_exact():
    # G=[1], A=[1], dt=0.1, u0=1, v0=0; by hand:
    #   (1 + dt^2/4) u1 = 1 - dt^2/4      -> u1 = 399/401
    #   v1 = -dt (u1 + 1)/2               -> v1 = -40/401
    G = SymTridiagonal(np.array([1.0]), np.zeros(0))
    A = SymTridiagonal(np.array([1.0]), np.zeros(0))
    state = SolverState(0, 0.0, np.array([1.0]), np.array([0.0]))
    out = newmark_step(state, G, A, NewmarkParams(dt=0.1, n_steps=1), solver="direct")
    assert out.u[0] == pytest.approx(float(Fraction(399, 401)), rel=1e-15)
    assert out.v[0] == pytest.approx(float(Fraction(-40, 401)), rel=1e-15)


def test_scalar_oscillator_amplitude_invariant():
    # the update is a Cayley rotation: u^2 + v^2/omega^2 is exact invariant
    omega = 1.0
    G = SymTridiagonal(np.array([1.0]), np.zeros(0))
    A = SymTridiagonal(np.array([omega ** 2]), np.zeros(0))
    state = SolverState(0, 0.0, np.array([1.0]), np.array([0.0]))
    params = NewmarkParams(dt=0.1, n_steps=1)
    for _ in range(1000):
        state = newmark_step(state, G, A, params, solver="direct")
    amp = state.u[0] ** 2 + (state.v[0] / omega) ** 2
    assert abs(amp - 1.0) <= 1e-12


def test_discrete_energy_values():
    mesh = build_mesh(1.0, 8)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(1.0))
    assert discrete_energy(G, A, np.zeros(G.n), np.zeros(G.n)) == 0.0
    v = np.ones(G.n)
    e = discrete_energy(G, zero_like(G), np.zeros(G.n), v)
    assert e == pytest.approx(0.5 * float(v @ (G @ v)), rel=1e-15)


def test_energy_conserved_along_run():
    mesh = build_mesh(30.0, 240)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.step(0.0, 150.0))
    spec = WavePacketSpec()
    u0 = initial_displacement(spec, mesh.nodes)
    v0 = initial_velocity(spec, mesh.nodes)
    e0 = discrete_energy(G, A, u0, v0)
    drift = []
    run_simulation(G, A, u0, v0, NewmarkParams(dt=0.05, n_steps=200),
                   CgOptions(rel_tolerance=1e-12),
                   observers=[lambda s: drift.append(abs(discrete_energy(G, A, s.u, s.v) - e0) / e0)])
    assert max(drift) <= 1e-8


def test_unconditionally_stable_at_huge_dt():
    mesh = build_mesh(30.0, 120)  # h = 0.5
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.step(0.0, 150.0))
    spec = WavePacketSpec()
    u0 = initial_displacement(spec, mesh.nodes)
    v0 = initial_velocity(spec, mesh.nodes)
    norm0 = np.linalg.norm(u0)
    norms = []
    run_simulation(G, A, u0, v0, NewmarkParams(dt=5.0, n_steps=1000),
                   CgOptions(rel_tolerance=1e-10),
                   observers=[lambda s: norms.append(np.linalg.norm(s.u))])
    assert max(norms) <= 10.0 * norm0


def test_time_reversal_returns_to_start():
    mesh = build_mesh(20.0, 320)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.step(0.0, 9.0))
    spec = WavePacketSpec()
    u0 = initial_displacement(spec, mesh.nodes)
    v0 = initial_velocity(spec, mesh.nodes)
    fwd = run_simulation(G, A, u0, v0, NewmarkParams(dt=0.02, n_steps=100), solver="direct")
    back = run_simulation(G, A, fwd.u, fwd.v, NewmarkParams(dt=-0.02, n_steps=100), solver="direct")
    scale = np.linalg.norm(u0)
    assert np.linalg.norm(back.u - u0) / scale <= 1e-8
    assert np.linalg.norm(back.v - v0) / np.linalg.norm(v0) <= 1e-8


def test_second_order_in_dt():
    # halving dt cuts the error vs the spectral reference by ~4 once the
    # spatial error is subdominant
    mesh = build_mesh(20.0, 1600)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(9.0))
    spec = WavePacketSpec()
    u0 = initial_displacement(spec, mesh.nodes)
    v0 = initial_velocity(spec, mesh.nodes)
    grid = FourierGrid.for_mesh(mesh)
    ref = grid.to_mesh(constant_potential_propagate(
        grid, grid.sample(lambda x: initial_displacement(spec, x)), 9.0, 1.0, 2.0,
        grid.sample(lambda x: initial_velocity(spec, x))), mesh)
    errs = []
    for dt in (0.04, 0.02):
        st = run_simulation(G, A, u0, v0,
                            NewmarkParams(dt=dt, n_steps=int(round(2.0 / dt))),
                            CgOptions(rel_tolerance=1e-11))
        errs.append(np.linalg.norm(st.u - ref) / np.linalg.norm(ref))
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_run_simulation_zero_steps_and_repeated_drift():
    mesh = build_mesh(1.0, 4)
    G = assemble_mass(mesh)
    A = zero_like(G)
    u0 = np.linspace(0, 1, G.n)
    v0 = np.linspace(1, 2, G.n)
    st = run_simulation(G, A, u0, v0, NewmarkParams(dt=0.1, n_steps=0), solver="direct")
    assert st.n == 0 and np.array_equal(st.u, u0)
    st = run_simulation(G, A, u0, v0, NewmarkParams(dt=0.1, n_steps=10), solver="direct")
    assert np.allclose(st.u, u0 + 1.0 * v0, atol=1e-12)
    assert st.t == pytest.approx(1.0)


def test_observers_see_every_state():
    mesh = build_mesh(1.0, 4)
    G = assemble_mass(mesh)
    seen = []
    run_simulation(G, zero_like(G), np.ones(G.n), np.zeros(G.n),
                   NewmarkParams(dt=0.1, n_steps=7), solver="direct",
                   observers=[lambda s: seen.append(s.n)])
    assert seen == list(range(8))


def test_solver_failure_carries_step_index():
    mesh = build_mesh(30.0, 64)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(0.0))
    u0 = np.sin(mesh.nodes)
    with pytest.raises(SimulationError) as err:
        run_simulation(G, A, u0, np.zeros(G.n),
                       NewmarkParams(dt=10.0, n_steps=3),
                       CgOptions(rel_tolerance=1e-14, max_iterations=2))
    assert err.value.step == 1


def test_params_validation():
    with pytest.raises(ValueError):
        NewmarkParams(dt=0.0, n_steps=1)
    with pytest.raises(ValueError):
        NewmarkParams(dt=0.1, n_steps=-1)
    with pytest.raises(ValueError):
        run_simulation(SymTridiagonal(np.ones(3), np.zeros(2)),
                       SymTridiagonal(np.ones(3), np.zeros(2)),
                       np.ones(3), np.ones(3), NewmarkParams(dt=0.1, n_steps=1),
                       solver="banana")
