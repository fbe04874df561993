"""Unitary lattice-gas models whose continuum limit is the Schroedinger equation.

The subpackages cover the collision algebra (:mod:`qlga.algebra`), its
continuum analysis (:mod:`qlga.continuum`), single-particle evolution
(:mod:`qlga.engine`), many-particle dynamics (:mod:`qlga.fock`,
:mod:`qlga.manybody`), experiments (:mod:`qlga.experiments`) and the
command line (:mod:`qlga.cli`).
"""
from ._kernels import available_backends, backend_name, set_backend, set_num_threads
from .algebra import (CollisionMatrix, ModelParams, VelocityBasis, build_collision_matrix,
                      check_unitarity_identities, diagonalizer, mass_from_mu)
from .continuum import effective_operator, verify_appendix, verify_model
from .engine import (PotentialField, WaveField, delta_field, evolve, gaussian_packet,
                     init_plane_wave, random_field, step, total_amplitude)
from .errors import (ConsistencyError, MemoryBudgetError, NumericalError, ParameterError,
                     QLGAError, SingularSolveError)
from .experiments import dispersion_sweep, estimate_omega, overlap
from .fock import FockSpace
from .manybody import (ManyBodyState, PairPotentialU, SiteCollisionT, advect, collide,
                       occupation_probability, qlga_step, tensor_two_particle_step)

__version__ = "0.1.0"

__all__ = [
    "CollisionMatrix", "ConsistencyError", "FockSpace", "ManyBodyState", "MemoryBudgetError",
    "ModelParams", "NumericalError", "PairPotentialU", "ParameterError", "PotentialField",
    "QLGAError", "SingularSolveError", "SiteCollisionT", "VelocityBasis", "WaveField",
    "advect", "available_backends", "backend_name", "build_collision_matrix",
    "check_unitarity_identities", "collide", "delta_field", "diagonalizer", "dispersion_sweep",
    "effective_operator", "estimate_omega", "evolve", "gaussian_packet", "init_plane_wave",
    "mass_from_mu", "occupation_probability", "overlap", "qlga_step", "random_field",
    "set_backend", "set_num_threads", "step", "tensor_two_particle_step", "total_amplitude",
    "verify_appendix", "verify_model",
]
