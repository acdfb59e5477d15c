"""
Effective size of a few state families
======================================

N*_F is the largest Fisher information of a collective local observable,
divided by 4N. Product states sit at 1, GHZ states at N.
"""

# %%
import numpy as np

from macrosize import (DecoratedLattice, SurfaceLattice, cluster_state, dicke, generalized_ghz,
                       ghz, nd_upper_bound_symmetric, nf_effective_size, surface_code_ground)

# %%
# GHZ states saturate the maximum, and the optimizer finds the z-direction
for n in (2, 4, 8):
    rep = nf_effective_size(ghz(n))
    print(f"GHZ_{n}: N*_F = {rep.value:.6f}, certificate <= {rep.certified_upper_bound:.3f}")

# %%
# Dicke states: half filling gives N/2 + 1
n = 10
for k in range(n + 1):
    f = k / n
    print(k, round(nf_effective_size(dicke(n, k)).value, 6), 1 + 2 * f * (1 - f) * n)

# %%
# generalized GHZ: two product branches a small angle apart
n = 16
for eps in (0.2, 0.4, 0.8, np.pi / 2):
    psi = generalized_ghz(n, eps)
    print(f"eps={eps:.3f}: N*_F={nf_effective_size(psi).value:.3f}  "
          f"N eps^2={n * eps**2:.3f}  bound={nd_upper_bound_symmetric(psi):.3f}")

# %%
# cluster and surface-code states stay O(1)
for nb in range(3, 9):
    psi = cluster_state(DecoratedLattice((nb,)))
    print(f"chain N_B={nb} ({psi.num_qubits} qubits): {nf_effective_size(psi).value:.3f}")
for m in range(1, 6):
    psi = surface_code_ground(SurfaceLattice(1, m))
    print(f"surface 1x{m} ({psi.num_qubits} qubits): {nf_effective_size(psi).value:.3f}")
