"""
Robustness of cluster distillation to imperfect measurements
============================================================

With a weak measurement of strength eps on the edge qubits, the Fisher
information of the resulting state equals <M^2> of a classical Ising
ferromagnet with eps = exp(-2 beta J). One dimension has no order at any
finite temperature; two dimensions keep it below the critical point.
"""

# %%
import math

from macrosize import (DecoratedLattice, IsingModel, MeasurementModel, exact_m2,
                       map_cluster_params, mc_m2, perturbed_cluster_branch,
                       perturbed_cluster_fisher_closed_form, transfer_matrix_m2_1d)
from macrosize.measures import CollectiveObservable, variance

# %%
# three routes to the same number on a 2x2 grid
lat = DecoratedLattice((2, 2))
eps = 0.2
obs = CollectiveObservable.along(lat.num_qubits, "z", lat.b_sites)
print("statevector", variance(perturbed_cluster_branch(lat, MeasurementModel(eps, 0.1)), obs))
print("b-sum      ", perturbed_cluster_fisher_closed_form(lat, eps))
print("Ising      ", exact_m2(IsingModel((2, 2), map_cluster_params(eps))))

# %%
# chains: order decays with length
beta = map_cluster_params(0.3)
for n in (4, 8, 16, 32, 64, 128):
    print(n, transfer_matrix_m2_1d(n, beta) / n**2)

# %%
# square lattices at eps = 0.2 sit well inside the ordered phase
beta = map_cluster_params(0.2)
print(f"beta J = {beta:.4f}, critical {math.log(1 + math.sqrt(2)) / 2:.4f}")
for size in (4, 8, 16):
    est = mc_m2(IsingModel((size, size), beta), sweeps=2000, burn_in=200, seed=size)
    print(f"L={size}: {est.mean / size**4:.4f} +- {est.std_error / size**4:.4f}")
