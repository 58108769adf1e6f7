"""Position moments of the P1 density and the series recorder."""

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from kgsim.fem import PotentialProfile, SymTridiagonal, assemble_bilinear, assemble_mass, build_mesh
from kgsim.newmark import NewmarkParams, run_simulation
from kgsim.observables import (MomentRecorder, edge_mass_fraction, position_moments)
from kgsim.wavepacket import WavePacketSpec, initial_displacement


def test_symmetric_field_has_zero_mean():
    mesh = build_mesh(10.0, 200)
    coeffs = np.exp(-mesh.nodes ** 2)
    _, mean, _, _ = position_moments(mesh, coeffs)
    assert abs(mean) < 1e-13


def test_single_hat_centers_at_its_node():
    mesh = build_mesh(1.0, 10)
    coeffs = np.zeros(mesh.n_nodes)
    coeffs[3] = 1.0  # interior node; u^2 is symmetric about it
    _, mean, variance, sigma = position_moments(mesh, coeffs)
    assert mean == pytest.approx(mesh.nodes[3], abs=1e-15)
    assert sigma == pytest.approx(np.sqrt(variance), rel=1e-15)


def test_packet_moments_match_continuous_quadrature():
    # independent oracle: adaptive quadrature of the continuous density
    spec = WavePacketSpec()
    f = lambda x: initial_displacement(spec, x)
    den = quad(lambda x: f(x) ** 2, -30, 30, limit=200)[0]
    mean_c = quad(lambda x: x * f(x) ** 2, -30, 30, limit=200)[0] / den
    var_c = quad(lambda x: (x - mean_c) ** 2 * f(x) ** 2, -30, 30, limit=200)[0] / den
    sigma_c = np.sqrt(var_c)
    assert mean_c == pytest.approx(-3.579310344827586, abs=1e-9)
    assert sigma_c == pytest.approx(0.6530455496311007, abs=1e-9)

    mesh = build_mesh(30.0, 1200)  # h = 0.05
    _, mean_h, _, sigma_h = position_moments(mesh, f(mesh.nodes))
    assert abs(mean_h - mean_c) <= 1e-3
    assert abs(sigma_h - sigma_c) <= 1e-3


def test_scale_invariance():
    mesh = build_mesh(5.0, 64)
    rng = np.random.default_rng(1)
    coeffs = rng.standard_normal(mesh.n_nodes)
    base = position_moments(mesh, coeffs)
    for scale in (2.0, -0.3, 1e6, 1e-6):
        scaled = position_moments(mesh, scale * coeffs)
        assert scaled[1] == pytest.approx(base[1], rel=1e-12)
        assert scaled[2] == pytest.approx(base[2], rel=1e-12)
        assert scaled[3] == pytest.approx(base[3], rel=1e-12)


def test_translation_covariance():
    mesh = build_mesh(10.0, 100)
    coeffs = np.zeros(mesh.n_nodes)
    bump = np.exp(-np.linspace(-3, 3, 21) ** 2)
    coeffs[20:41] = bump
    _, mean0, var0, _ = position_moments(mesh, coeffs)
    shifted = np.zeros(mesh.n_nodes)
    shifted[25:46] = bump  # shift by 5 cells
    _, mean5, var5, _ = position_moments(mesh, shifted)
    assert mean5 - mean0 == pytest.approx(5 * mesh.h, abs=1e-12)
    assert var5 == pytest.approx(var0, rel=1e-12)


def test_quadrature_exact_for_interpolated_cubic():
    # the 3-point Gauss rule integrates x*u^2 (degree 3 per cell) and
    # (x-M)^2 u^2 (degree 4) of the piecewise-linear u exactly; compare
    # against symbolic integration of the same interpolant
    mesh = build_mesh(1.0, 8)
    poly = lambda t: 0.3 * t ** 3 - t + 2.0
    coeffs = poly(mesh.nodes)
    l2, mean, variance, _ = position_moments(mesh, coeffs)

    x = sp.Symbol("x")
    l2_s = sp.Integer(0)
    m1_s = sp.Integer(0)
    for j in range(mesh.n_cells):
        xl, xr = sp.Rational(j, 4) - 1, sp.Rational(j + 1, 4) - 1
        ul, ur = sp.nsimplify(coeffs[j], rational=True), sp.nsimplify(coeffs[j + 1], rational=True)
        u = ul + (ur - ul) * (x - xl) / (xr - xl)
        l2_s += sp.integrate(u ** 2, (x, xl, xr))
        m1_s += sp.integrate(x * u ** 2, (x, xl, xr))
    assert l2 == pytest.approx(float(l2_s), rel=1e-13)
    assert mean == pytest.approx(float(m1_s / l2_s), rel=1e-12)

    m2_s = sp.Integer(0)
    mean_r = sp.nsimplify(mean, rational=True)
    for j in range(mesh.n_cells):
        xl, xr = sp.Rational(j, 4) - 1, sp.Rational(j + 1, 4) - 1
        ul, ur = sp.nsimplify(coeffs[j], rational=True), sp.nsimplify(coeffs[j + 1], rational=True)
        u = ul + (ur - ul) * (x - xl) / (xr - xl)
        m2_s += sp.integrate((x - mean_r) ** 2 * u ** 2, (x, xl, xr))
    assert variance == pytest.approx(float(m2_s / l2_s), rel=1e-12)


def test_chebyshev_bound_on_packet():
    mesh = build_mesh(30.0, 600)
    spec = WavePacketSpec()
    coeffs = initial_displacement(spec, mesh.nodes)
    l2, mean, _, sigma = position_moments(mesh, coeffs)
    mids = mesh.cell_midpoints()
    outside = (mids < mean - 3 * sigma) | (mids > mean + 3 * sigma)
    cell_l2 = []
    for j in range(mesh.n_cells):
        ul, ur = coeffs[j], coeffs[j + 1]
        cell_l2.append(mesh.h * (ul * ul + ul * ur + ur * ur) / 3.0)  # exact int of u^2
    frac = np.sum(np.array(cell_l2)[outside]) / l2
    assert frac <= 1.0 / 9.0 + 0.01


def test_zero_field_rejected():
    mesh = build_mesh(1.0, 4)
    with pytest.raises(ZeroDivisionError):
        position_moments(mesh, np.zeros(mesh.n_nodes))
    with pytest.raises(ValueError):
        position_moments(mesh, np.ones(3))


def test_recorder_stride_and_final_step():
    mesh = build_mesh(1.0, 8)
    G = assemble_mass(mesh)
    A = SymTridiagonal(np.zeros(G.n), np.zeros(G.n - 1))
    rec = MomentRecorder(mesh, G, A, stride=5, n_steps=10)
    run_simulation(G, A, np.ones(G.n), np.zeros(G.n),
                   NewmarkParams(dt=0.1, n_steps=10), solver="direct", observers=[rec])
    steps = [round(r.t / 0.1) for r in rec.series.records]
    assert steps == [0, 5, 10]
    # free drift with zero velocity: field frozen, sigma exactly constant
    sig = rec.series.sigma
    assert np.max(np.abs(sig - sig[0])) <= 1e-14
    with pytest.raises(ValueError):
        MomentRecorder(mesh, G, A, stride=0, n_steps=10)


def test_recorder_includes_irregular_final_step():
    mesh = build_mesh(1.0, 8)
    G = assemble_mass(mesh)
    A = SymTridiagonal(np.zeros(G.n), np.zeros(G.n - 1))
    rec = MomentRecorder(mesh, G, A, stride=4, n_steps=10)
    run_simulation(G, A, np.ones(G.n), np.zeros(G.n),
                   NewmarkParams(dt=0.1, n_steps=10), solver="direct", observers=[rec])
    assert [round(r.t / 0.1) for r in rec.series.records] == [0, 4, 8, 10]


def test_edge_mass_monitor():
    mesh = build_mesh(10.0, 100)
    interior = np.exp(-mesh.nodes ** 2)
    assert edge_mass_fraction(mesh, interior) < 1e-30
    boundary = np.zeros(mesh.n_nodes)
    boundary[0] = 1.0
    assert edge_mass_fraction(mesh, boundary) == pytest.approx(1.0)

    G = assemble_mass(mesh)
    A = SymTridiagonal(np.zeros(G.n), np.zeros(G.n - 1))
    rec = MomentRecorder(mesh, G, A, stride=1, n_steps=0)
    run_simulation(G, A, boundary + 1e-3, np.zeros(G.n),
                   NewmarkParams(dt=0.1, n_steps=0), solver="direct", observers=[rec])
    assert rec.series.leaked
    assert rec.series.leak_time == 0.0


def test_energy_column_uses_discrete_energy():
    mesh = build_mesh(5.0, 40)
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(2.0))
    rec = MomentRecorder(mesh, G, A, stride=1, n_steps=0)
    u0 = np.exp(-mesh.nodes ** 2)
    run_simulation(G, A, u0, np.zeros(G.n),
                   NewmarkParams(dt=0.1, n_steps=0), solver="direct", observers=[rec])
    expected = 0.5 * float(u0 @ (A @ u0))
    assert rec.series.records[0].energy == pytest.approx(expected, rel=1e-14)
