from .layers import (
    DecayFit,
    DecayProfile,
    LiftedSolution,
    TailEstimate,
    WeightedNormReport,
    decay_profile,
    fit_decay,
    fit_exponential,
    flux_neumann_data,
    halfspace_reconstruct,
    solve_corrector_dirichlet,
    solve_dirichlet_layer,
    solve_flux_neumann,
    solve_forced,
    solve_neumann_layer,
    tail,
    weighted_norm_diagnostic,
)
from .mesh import Discretization, TMesh
from .operator import LiftedOperator, frozen_mask
