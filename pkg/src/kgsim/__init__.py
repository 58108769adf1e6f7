"""1D Klein-Gordon wave-packet simulation.

P1 finite elements in space, Newmark stepping in time (conjugate-gradient
solves), position-moment observables (L2 mass, mean, variance, standard
deviation, discrete energy) and trend extraction by kernel smoothing and
least-squares line fits.  Analytic references (d'Alembert, spectral
propagator, group velocity) validate the pipeline.
"""

__version__ = "0.1.0"

from .fem import (Mesh1D, PotentialProfile, SymTridiagonal, assemble_bilinear,
                  assemble_mass, build_mesh)
from .solvers import CgOptions, ConvergenceError, cg_solve, thomas_solve
from .newmark import (NewmarkParams, SimulationError, SolverState,
                      discrete_energy, newmark_step, run_simulation)
from .wavepacket import (WavePacketSpec, check_junction_conditions,
                         displacement_derivative, initial_displacement,
                         initial_velocity, spectrum_magnitude)
from .observables import (MomentRecord, MomentRecorder, ObservableSeries,
                          edge_mass_fraction, position_moments)
from .trend import (RegressionResult, SmoothingSpec, crossing_time,
                    detect_post_impact_window, kernel_smooth, linear_fit)
from .oracles import (AliasingError, FourierGrid, constant_potential_propagate,
                      dalembert_components, dalembert_solution,
                      essential_support_interval, group_velocity,
                      one_way_carrier_packet, spectral_energy, spectral_peak)
from .config import ConfigError, RunConfig

__all__ = [name for name in dir() if not name.startswith("_")]
