"""Mesh, mass matrix and bilinear-form assembly."""

import numpy as np
import pytest
import sympy as sp

from kgsim.fem import (Mesh1D, PotentialProfile, SymTridiagonal, assemble_bilinear,
                       assemble_mass, build_mesh)


def test_build_mesh_tiny():
    mesh = build_mesh(1.0, 2)
    assert np.array_equal(mesh.nodes, [-1.0, 0.0, 1.0])
    assert mesh.h == 1.0


def test_build_mesh_paper_scale():
    mesh = build_mesh(60.0, 1200)
    assert mesh.n_nodes == 1201
    assert mesh.h == 0.1
    assert mesh.nodes[600] == 0.0
    spacing = np.diff(mesh.nodes)
    assert np.max(np.abs(spacing - mesh.h)) < 1e-13 * 60.0
    assert mesh.nodes[0] == -60.0 and mesh.nodes[-1] == 60.0


@pytest.mark.parametrize("L,m", [(1.0, 3), (1.0, 1), (-1.0, 2), (0.0, 4), (1.0, 0)])
def test_build_mesh_rejects(L, m):
    with pytest.raises(ValueError):
        build_mesh(L, m)


def test_mass_entries_unit_h():
    G = assemble_mass(build_mesh(1.0, 2))  # h = 1
    assert np.allclose(G.diag, [1 / 3, 2 / 3, 1 / 3], rtol=1e-15)
    assert np.allclose(G.off, [1 / 6, 1 / 6], rtol=1e-15)


def test_mass_row_sums_are_hat_integrals():
    # partition of unity: row i sums to the integral of hat i
    G = assemble_mass(build_mesh(1.0, 2))
    dense = G.to_dense()
    assert np.allclose(dense.sum(axis=1), [0.5, 1.0, 0.5], atol=1e-15)
    assert abs(dense.sum() - 2.0) < 1e-14
    G2 = assemble_mass(build_mesh(7.0, 28))
    sums = G2.to_dense().sum(axis=1)
    h = 0.5
    expect = np.full(29, h)
    expect[0] = expect[-1] = h / 2
    assert np.allclose(sums, expect, atol=1e-14)


def test_mass_positive_definite():
    mesh = build_mesh(2.0, 16)
    G = assemble_mass(mesh)
    rng = np.random.default_rng(7)
    for _ in range(10):
        x = rng.standard_normal(mesh.n_nodes)
        assert x @ (G @ x) > 0.0
    assert np.min(np.linalg.eigvalsh(G.to_dense())) > 0.0


def test_stiffness_entries_zero_potential():
    A = assemble_bilinear(build_mesh(1.0, 2), 1.0, PotentialProfile.constant(0.0))
    assert np.allclose(A.diag, [1.0, 2.0, 1.0], rtol=1e-15)
    assert np.allclose(A.off, [-1.0, -1.0], rtol=1e-15)


def test_stiffness_annihilates_constants():
    mesh = build_mesh(3.0, 48)
    K = assemble_bilinear(mesh, 2.0, PotentialProfile.constant(0.0))
    ones = np.ones(mesh.n_nodes)
    assert np.max(np.abs(K @ ones)) < 1e-13


def test_constant_potential_reduces_to_stiffness_plus_mass():
    mesh = build_mesh(5.0, 40)
    c, a = 1.7, 3.25
    A = assemble_bilinear(mesh, c, PotentialProfile.constant(a))
    K = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(0.0))
    G = assemble_mass(mesh)
    assert np.allclose(A.diag, c * c * K.diag + a * G.diag, rtol=1e-14)
    assert np.allclose(A.off, c * c * K.off + a * G.off, rtol=1e-14)


def test_step_potential_element_contributions_match_symbolic():
    # L=1, m=2, c=1, step 0 on x<0 and 4 on x>0; compare against exact
    # symbolic assembly of int(c^2 u'v' + a(x) u v) with hat functions
    mesh = build_mesh(1.0, 2)
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.step(0.0, 4.0))
    x = sp.Symbol("x")
    # linear restriction of each hat on each element; potential 0 left, 4 right
    elements = [((-1, 0), sp.Integer(0)), ((0, 1), sp.Integer(4))]
    restriction = {
        0: {(-1, 0): -x, (0, 1): sp.Integer(0)},
        1: {(-1, 0): 1 + x, (0, 1): 1 - x},
        2: {(-1, 0): sp.Integer(0), (0, 1): x},
    }

    def entry(i, j):
        total = sp.Integer(0)
        for (lo, hi), a_e in elements:
            hi_, hj_ = restriction[i][(lo, hi)], restriction[j][(lo, hi)]
            integrand = sp.diff(hi_, x) * sp.diff(hj_, x) + a_e * hi_ * hj_
            total += sp.integrate(integrand, (x, lo, hi))
        return float(total)

    dense = A.to_dense()
    for i in range(3):
        for j in range(3):
            assert dense[i, j] == pytest.approx(entry(i, j), abs=1e-12)
    # the node at the jump picks up potential mass from the right cell only
    assert dense[1, 1] == pytest.approx(2.0 + 4.0 / 3.0, rel=1e-14)


def test_bilinear_positive_semidefinite_and_definite_with_potential():
    mesh = build_mesh(2.0, 64)
    K = assemble_bilinear(mesh, 1.0, PotentialProfile.constant(0.0))
    eigs = np.linalg.eigvalsh(K.to_dense())
    assert eigs[0] > -1e-12  # PSD, constant null space
    A = assemble_bilinear(mesh, 1.0, PotentialProfile.step(0.0, 4.0))
    assert np.min(np.linalg.eigvalsh(A.to_dense())) > 0.0


def test_breakpoint_must_sit_on_node():
    mesh = build_mesh(1.0, 4)  # nodes at multiples of 0.5
    pot = PotentialProfile([0.3], [0.0, 1.0])
    with pytest.raises(ValueError, match="0.3"):
        assemble_bilinear(mesh, 1.0, pot)


def test_profile_validation():
    with pytest.raises(ValueError):
        PotentialProfile([0.0], [1.0])  # values length mismatch
    with pytest.raises(ValueError):
        PotentialProfile([1.0, 0.5], [0, 0, 0])  # not increasing
    with pytest.raises(ValueError):
        PotentialProfile.step(0.0, -1.0)  # negative value
    with pytest.raises(ValueError):
        PotentialProfile.barrier(0.0, 5.0, 2.0, 1.0)  # empty interval


def test_profile_evaluate():
    pot = PotentialProfile.barrier(1.0, 9.0, -1.0, 2.0)
    assert np.array_equal(pot(np.array([-3.0, 0.0, 3.0])), [1.0, 9.0, 1.0])


def test_symtridiagonal_matvec_matches_dense():
    rng = np.random.default_rng(3)
    A = SymTridiagonal(rng.standard_normal(9), rng.standard_normal(8))
    x = rng.standard_normal(9)
    assert np.allclose(A @ x, A.to_dense() @ x, rtol=1e-14)
    with pytest.raises(ValueError):
        A @ np.ones(4)
