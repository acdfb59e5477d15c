"""Effective size of macroscopic quantum states and GHZ distillation."""
from .distill import (DistillationResult, MeasurementModel, cluster_distill_ideal,
                      generalized_ghz_distill, kitaev_distill_ideal, perturbed_cluster_branch,
                      perturbed_cluster_fisher_closed_form)
from .families import (DecoratedLattice, SurfaceLattice, cluster_state, dicke,
                       generalized_ghz, ghz, surface_code_ground)
from .ising import (IsingModel, exact_m2, map_cluster_params, map_kitaev_params, mc_m2,
                    transfer_matrix_m2_1d)
from .measures import nd_upper_bound_symmetric, nf_effective_size
from .statevec import PureState

__all__ = [
    "DecoratedLattice", "DistillationResult", "IsingModel", "MeasurementModel", "PureState",
    "SurfaceLattice", "cluster_distill_ideal", "cluster_state", "dicke", "exact_m2",
    "generalized_ghz", "generalized_ghz_distill", "ghz", "kitaev_distill_ideal",
    "map_cluster_params", "map_kitaev_params", "mc_m2", "nd_upper_bound_symmetric",
    "nf_effective_size", "perturbed_cluster_branch", "perturbed_cluster_fisher_closed_form",
    "surface_code_ground",
    "transfer_matrix_m2_1d",
]
