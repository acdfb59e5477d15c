"""
Distilling GHZ states with local operations
===========================================

Three protocols: x-measuring the edge qubits of a decorated-lattice cluster
state, z-measuring everything off a loop of a surface code, and filtering
a generalized GHZ state qubit by qubit.
"""

# %%
from macrosize import (DecoratedLattice, SurfaceLattice, cluster_distill_ideal,
                       generalized_ghz, generalized_ghz_distill, kitaev_distill_ideal,
                       nd_upper_bound_symmetric)

# %%
# cluster state on a 2x3 vertex grid: every outcome ends in GHZ_6 after Pauli-X fixes
lat = DecoratedLattice((2, 3))
res = cluster_distill_ideal(lat)
print(f"{lat.num_a} edge qubits, {len(res.outcomes)} outcomes with nonzero probability")
print(f"expected size {res.expected_size:.3f}, worst fidelity {res.min_fidelity:.12f}")
o = res.outcomes[5]
print("example outcome", o.label, "-> flip", o.correction)

# %%
# surface code: the default loop on a 2x2 patch has 8 edges
res = kitaev_distill_ideal(SurfaceLattice(2, 2))
print(f"Kitaev: expected size {res.expected_size:.3f}, worst fidelity {res.min_fidelity:.12f}")

# %%
# generalized GHZ: the filter hits the symmetric-state bound exactly
n = 16
for eps in (0.2, 0.3, 0.4, 1.0):
    size = generalized_ghz_distill(n, eps).expected_size
    bound = nd_upper_bound_symmetric(generalized_ghz(n, eps))
    print(f"eps={eps}: protocol {size:.6f}  bound {bound:.6f}")
