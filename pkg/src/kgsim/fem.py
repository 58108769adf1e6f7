"""P1 finite-element discretization on a uniform 1D mesh.

Builds the Gram (mass) matrix and the bilinear-form matrix
``integral(c^2 u' v' + a(x) u v)`` for a piecewise-constant coefficient
``a``.  Natural boundary conditions: no constraint is imposed at the
domain ends, so the matrices act on all nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh1D",
    "PotentialProfile",
    "SymTridiagonal",
    "build_mesh",
    "assemble_mass",
    "assemble_bilinear",
]


@dataclass(frozen=True)
class Mesh1D:
    """Uniform node grid on [-half_length, half_length] with a node at x=0."""

    half_length: float
    n_cells: int
    nodes: np.ndarray

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def cell_midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as main and off diagonal."""

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        if len(self.off) != len(self.diag) - 1:
            raise ValueError("off diagonal must have length n-1")

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if len(x) != self.n:
            raise ValueError(f"dimension mismatch: matrix is {self.n}, vector is {len(x)}")
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(x)

    def add_scaled(self, other: "SymTridiagonal", factor: float) -> "SymTridiagonal":
        """Return self + factor * other."""
        return SymTridiagonal(self.diag + factor * other.diag,
                              self.off + factor * other.off)

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        m += np.diag(self.off, 1)
        m += np.diag(self.off, -1)
        return m


class PotentialProfile:
    """Piecewise-constant nonnegative coefficient a(x).

    ``values[k]`` applies on the interval between ``breakpoints[k-1]`` and
    ``breakpoints[k]`` (with the obvious conventions at the ends), so
    ``len(values) == len(breakpoints) + 1``.
    """

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if len(vals) != len(bp) + 1:
            raise ValueError("need exactly one value per interval (len(values) == len(breakpoints)+1)")
        if len(bp) > 1 and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(vals < 0):
            raise ValueError("potential values must be nonnegative")
        self.breakpoints = bp
        self.values = vals

    @classmethod
    def constant(cls, value: float) -> "PotentialProfile":
        return cls([], [value])

    @classmethod
    def step(cls, a1: float, a2: float) -> "PotentialProfile":
        """a1 on x < 0, a2 on x > 0."""
        return cls([0.0], [a1, a2])

    @classmethod
    def barrier(cls, a1: float, height: float, x_start: float, x_end: float) -> "PotentialProfile":
        """a1 outside [x_start, x_end], height inside."""
        if not x_start < x_end:
            raise ValueError("barrier needs x_start < x_end")
        return cls([x_start, x_end], [a1, height, a1])

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.values[idx]

    def values_on_cells(self, mesh: Mesh1D) -> np.ndarray:
        """Per-cell constant value; every breakpoint must sit on a mesh node."""
        L = mesh.half_length
        tol = 1e-9 * max(mesh.h, 1.0)
        for bp in self.breakpoints:
            if bp < -L - tol or bp > L + tol:
                raise ValueError(f"breakpoint {bp} outside [-{L}, {L}]")
            j = int(round((bp + L) / mesh.h))
            j = min(max(j, 0), mesh.n_cells)
            if abs(mesh.nodes[j] - bp) > tol:
                raise ValueError(
                    f"potential breakpoint {bp} does not coincide with a mesh node "
                    f"(nearest node {mesh.nodes[j]})")
        return self(mesh.cell_midpoints())


def build_mesh(half_length: float, n_cells: int) -> Mesh1D:
    """Uniform mesh with an even cell count so that x = 0 is a node.

    Parameters
    ----------
    half_length : float
        Domain is [-half_length, half_length].
    n_cells : int
        Number of cells, must be even and >= 2.
    """
    if half_length <= 0:
        raise ValueError("half_length must be positive")
    if n_cells < 2 or n_cells % 2 != 0:
        raise ValueError(f"n_cells must be even and >= 2, got {n_cells}")
    h = 2.0 * half_length / n_cells
    # center-symmetric construction puts the middle node at exactly 0
    nodes = (np.arange(n_cells + 1) - n_cells // 2) * h
    nodes[0] = -half_length
    nodes[-1] = half_length
    return Mesh1D(half_length, n_cells, nodes)


def assemble_mass(mesh: Mesh1D) -> SymTridiagonal:
    """Gram matrix of the P1 hat basis (exact element integrals).

    Row pattern h/6 * [1, 4, 1] at interior nodes, h/6 * [2, 1] at the ends.
    """
    h = mesh.h
    n = mesh.n_nodes
    diag = np.full(n, 2.0 * h / 3.0)
    diag[0] = diag[-1] = h / 3.0
    off = np.full(n - 1, h / 6.0)
    return SymTridiagonal(diag, off)


def assemble_bilinear(mesh: Mesh1D, c: float, pot: PotentialProfile) -> SymTridiagonal:
    """Matrix of integral(c^2 u' v' + a(x) u v) over the P1 basis.

    The potential term is assembled elementwise with the cell constant
    a_e and the exact element mass a_e * h/6 * [[2, 1], [1, 2]], so the
    assembly carries no quadrature error.
    """
    if c <= 0:
        raise ValueError("wave speed must be positive")
    a_cells = pot.values_on_cells(mesh)
    h = mesh.h
    n = mesh.n_nodes
    k = c * c / h
    diag = np.zeros(n)
    diag[:-1] += k + a_cells * h / 3.0
    diag[1:] += k + a_cells * h / 3.0
    off = -k + a_cells * h / 6.0
    return SymTridiagonal(diag, off)
