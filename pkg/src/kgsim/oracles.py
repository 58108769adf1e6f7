"""Reference solutions used to validate the FEM/Newmark pipeline.

Free waves admit the d'Alembert formula; a constant coefficient m^2 admits
the spectral propagator

    u(t) = F^-1[ cos(Omega t) F u0 + sin(Omega t)/Omega F v0 ],
    Omega(xi) = sqrt(m^2 + c^2 xi^2),

with the unitary transform convention, so t = 0 returns the initial data
exactly.  Group velocity Omega'(xi) = c^2 xi / Omega(xi) predicts packet
transport: a band [xi1, xi2] travels in [Omega'(xi1) t, Omega'(xi2) t].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .fem import Mesh1D

__all__ = ["FourierGrid", "AliasingError", "dalembert_solution",
           "dalembert_components", "constant_potential_propagate",
           "group_velocity", "essential_support_interval",
           "one_way_carrier_packet", "spectral_peak", "spectral_energy"]


class AliasingError(RuntimeError):
    """Field mass too close to the span edge for a periodic transform."""


@dataclass(frozen=True)
class FourierGrid:
    """Periodic sample grid on [-half_span, half_span) for FFT propagation."""

    n_points: int
    half_span: float

    def __post_init__(self):
        if self.n_points < 4 or (self.n_points & (self.n_points - 1)) != 0:
            raise ValueError("n_points must be a power of two >= 4")
        if self.half_span <= 0:
            raise ValueError("half_span must be positive")

    @classmethod
    def for_mesh(cls, mesh: Mesh1D, pad: float = 2.0, half_span: float | None = None):
        """Grid covering the mesh with at least pad times its node count."""
        span = mesh.half_length if half_span is None else half_span
        needed = pad * mesh.n_nodes * span / mesh.half_length
        n = 1
        while n < needed:
            n *= 2
        return cls(n, span)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_span / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_span + self.dx * np.arange(self.n_points)

    @cached_property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.x), dtype=float)

    def edge_mass_fraction(self, field: np.ndarray, n_edge: int = 8) -> float:
        p = np.abs(field) ** 2
        total = float(np.sum(p))
        if total == 0.0:
            return 0.0
        return float(np.sum(p[:n_edge]) + np.sum(p[-n_edge:])) / total

    def to_mesh(self, field: np.ndarray, mesh: Mesh1D) -> np.ndarray:
        """Cubic-spline samples of a grid field at the mesh nodes."""
        return CubicSpline(self.x, field)(mesh.nodes)


def group_velocity(xi, c: float, m_sq: float):
    """Omega'(xi) = c^2 xi / sqrt(m_sq + c^2 xi^2); sign(xi)*c when m_sq = 0."""
    xi = np.asarray(xi, dtype=float)
    omega = np.sqrt(m_sq + (c * xi) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(omega > 0.0, c * c * xi / np.where(omega > 0, omega, 1.0), 0.0)
    return v if v.ndim else float(v)


def essential_support_interval(xi_band, c: float, m_sq: float, t: float):
    """[Omega'(xi1) t, Omega'(xi2) t], where a band-limited packet lives."""
    xi1, xi2 = xi_band
    if not xi1 < xi2:
        raise ValueError("need xi1 < xi2")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(group_velocity(xi1, c, m_sq) * t), float(group_velocity(xi2, c, m_sq) * t)


def dalembert_solution(u0, v0, c: float, t: float, x: float) -> float:
    """Free-wave value at (t, x):
    1/2 [u0(x+ct) + u0(x-ct)] + 1/(2c) integral_{x-ct}^{x+ct} v0.
    """
    if c <= 0:
        raise ValueError("wave speed must be positive")
    xp, xm = x + c * t, x - c * t
    val = 0.5 * (float(u0(xp)) + float(u0(xm)))
    integral, _ = quad(v0, xm, xp, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val + integral / (2.0 * c)


def dalembert_components(u0, v0, c: float, t: float, x: float):
    """(right-mover, left-mover) split of the free solution.

    u+ = 1/2 u0(x-ct) - 1/(2c) int_0^{x-ct} v0
    u- = 1/2 u0(x+ct) + 1/(2c) int_0^{x+ct} v0

    Their sum is the d'Alembert formula; with v0 = -c u0' and u0(0) = 0 the
    left-mover is identically 1/2 u0(0) = 0.
    """
    xp, xm = x + c * t, x - c * t
    im, _ = quad(v0, 0.0, xm, epsabs=1e-13, epsrel=1e-12, limit=200)
    ip, _ = quad(v0, 0.0, xp, epsabs=1e-13, epsrel=1e-12, limit=200)
    u_plus = 0.5 * float(u0(xm)) - im / (2.0 * c)
    u_minus = 0.5 * float(u0(xp)) + ip / (2.0 * c)
    return u_plus, u_minus


def constant_potential_propagate(grid: FourierGrid, u0: np.ndarray, m_sq: float,
                                 c: float, t: float, v0: np.ndarray | None = None
                                 ) -> np.ndarray:
    """Evolve samples under u_tt = c^2 u_xx - m_sq u by the spectral propagator.

    Applies cos(Omega t) to the transform of u0 and sin(Omega t)/Omega to the
    transform of v0 (the xi = 0 mode of the free case is the removable limit t).
    Raises AliasingError when the initial or evolved mass touches the span
    edge, since the transform is periodic there.
    """
    if m_sq < 0:
        raise ValueError("m_sq must be nonnegative")
    u0 = np.asarray(u0, dtype=float)
    if len(u0) != grid.n_points:
        raise ValueError("samples do not match the grid")
    if grid.edge_mass_fraction(u0) > 1e-8:
        raise AliasingError("initial field has mass within 8 cells of the span edge")
    omega = np.sqrt(m_sq + (c * grid.xi) ** 2)
    spec = np.cos(omega * t) * np.fft.fft(u0)
    if v0 is not None:
        if len(v0) != grid.n_points:
            raise ValueError("velocity samples do not match the grid")
        # sin(w t)/w = t sinc(w t / pi), finite at w = 0
        spec += t * np.sinc(omega * t / np.pi) * np.fft.fft(np.asarray(v0, dtype=float))
    u_t = np.fft.ifft(spec)
    scale = float(np.max(np.abs(u_t))) or 1.0
    if float(np.max(np.abs(u_t.imag))) > 1e-10 * scale:
        raise RuntimeError("propagator produced a non-real field")
    result = u_t.real
    if grid.edge_mass_fraction(result) > 1e-8:
        raise AliasingError(f"evolved field reached the span edge at t = {t}")
    return result


def spectral_energy(grid: FourierGrid, u: np.ndarray, v: np.ndarray,
                    c: float, m_sq: float) -> float:
    """integral(v^2 + c^2 u_x^2 + m_sq u^2) dx evaluated by Parseval."""
    U = np.fft.fft(u)
    V = np.fft.fft(v)
    dens = np.abs(V) ** 2 + (m_sq + (c * grid.xi) ** 2) * np.abs(U) ** 2
    return float(np.sum(dens)) * grid.dx / grid.n_points


def one_way_carrier_packet(grid: FourierGrid, carrier: float, band_std: float,
                           center: float, c: float, m_sq: float,
                           age: float = 0.0):
    """Real narrow-band packet whose modes all travel in +x direction.

    The one-sided spectrum is a Gaussian of the given std around the carrier
    frequency, with the phase exp(-i Omega age) of a packet that has already
    propagated for `age` time units (so its spread is in the ballistic
    regime), recentred so the spatial centroid sits at `center`.  Returns
    (u0, v0) samples with max|u0| normalized to 1.
    """
    if carrier <= 0 or band_std <= 0:
        raise ValueError("carrier and band_std must be positive")
    xi = grid.xi
    F = np.where(xi > 0, np.exp(-((xi - carrier) ** 2) / (4.0 * band_std ** 2)), 0.0)
    omega = np.sqrt(m_sq + (c * xi) ** 2)
    weight = F * F
    drift = float(np.sum(group_velocity(xi, c, m_sq) * weight) / np.sum(weight))
    x0 = center - drift * age
    # the ifft indexes positions from 0; the grid starts at -half_span, hence
    # the extra offset phase exp(-i xi S)
    phase = np.exp(-1j * (omega * age + xi * x0 + xi * grid.half_span))
    U = F * phase
    u0 = 2.0 * np.real(np.fft.ifft(U))
    v0 = 2.0 * np.real(np.fft.ifft(-1j * omega * U))
    peak = float(np.max(np.abs(u0)))
    return u0 / peak, v0 / peak


def spectral_peak(samples: np.ndarray, dx: float) -> float:
    """Dominant positive frequency of a real signal, with parabolic refinement."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    mag = np.abs(np.fft.fft(samples))
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    pos = xi > 0
    idx = np.nonzero(pos)[0]
    k = idx[int(np.argmax(mag[idx]))]
    if 1 <= k < n - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        la, lb, lc = np.log(mag[k - 1]), np.log(mag[k]), np.log(mag[k + 1])
        denom = la - 2.0 * lb + lc
        delta = 0.5 * (la - lc) / denom if denom != 0 else 0.0
        dxi = xi[1] - xi[0]
        return float(xi[k] + delta * dxi)
    return float(xi[k])
