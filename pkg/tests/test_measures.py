import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrosize.families import (DecoratedLattice, SurfaceLattice, cluster_state, dicke,
                                generalized_ghz, ghz, surface_code_ground)
from macrosize.measures import (CollectiveObservable, MixedState, covariance_matrix,
                                cramer_rao_bound, geometric_entanglement_site,
                                is_permutation_symmetric, nd_upper_bound_symmetric,
                                nf_effective_size, qfi, qfi_pure, variance)
from macrosize.statevec import PureState, StateError, X, measure_sites


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    return PureState.from_vector(rng.normal(size=2**n) + 1j * rng.normal(size=2**n))


def random_observable(n, seed):
    g = np.random.default_rng(seed).normal(size=(n, 3))
    return CollectiveObservable(g / np.linalg.norm(g, axis=1, keepdims=True))


def brute_qfi(rho, a):
    """Spectral sum written with explicit loops over eigenpairs."""
    w, v = np.linalg.eigh(rho)
    total = 0.0
    for i in range(len(w)):
        for j in range(len(w)):
            if w[i] + w[j] > 1e-14:
                total += 2 * (w[i] - w[j]) ** 2 / (w[i] + w[j]) * abs(v[:, i].conj() @ a @ v[:, j]) ** 2
    return total


def test_observable_validation():
    with pytest.raises(StateError):
        CollectiveObservable(np.ones((2, 3)))
    with pytest.raises(StateError):
        CollectiveObservable(np.ones(3))
    obs = CollectiveObservable.along(3, "z", sites=[0, 2])
    assert np.allclose(obs.directions[1], 0)


def test_qfi_ghz():
    for n in (2, 4, 6):
        obs = CollectiveObservable.along(n, "z")
        rho = MixedState.from_pure(ghz(n))
        assert qfi(rho, obs) == pytest.approx(4 * n**2, abs=1e-9)
        assert qfi_pure(ghz(n), obs) == pytest.approx(4 * n**2, abs=1e-9)


def test_qfi_maximally_mixed_is_zero():
    rho = MixedState.from_density_matrix(np.eye(2) / 2)
    for axis in "xyz":
        assert qfi(rho, CollectiveObservable.along(1, axis)) == pytest.approx(0, abs=1e-14)


def test_qfi_rank_two_mixture():
    q = 0.3
    m = np.diag([q, 1 - q])
    got = qfi(MixedState.from_density_matrix(m), CollectiveObservable.along(1, "x"))
    assert got == pytest.approx(brute_qfi(m, X), abs=1e-12)
    assert got == pytest.approx(4 * (2 * q - 1) ** 2, abs=1e-12)


def test_mixed_state_validation():
    with pytest.raises(StateError):
        MixedState(np.array([0.5, 0.6]), np.eye(2))
    with pytest.raises(StateError):
        MixedState(np.array([0.5, 0.5]), np.array([[1, 1], [0, 1]]))


@given(st.integers(0, 10**6), st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_qfi_pure_matches_spectral_sum(seed, n):
    psi = random_state(n, seed)
    obs = random_observable(n, seed + 1)
    assert qfi_pure(psi, obs) == pytest.approx(qfi(MixedState.from_pure(psi), obs), abs=1e-8)


@given(st.integers(0, 10**6), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_identity_shift_leaves_variance(seed, n):
    psi = random_state(n, seed)
    obs = random_observable(n, seed + 1)
    shifts = np.random.default_rng(seed).normal(size=n)
    amps = psi.amplitudes
    dense = obs.dense() + sum(c for c in shifts) * np.eye(2**n)
    mean = np.vdot(amps, dense @ amps).real
    var = np.vdot(amps, dense @ dense @ amps).real - mean**2
    assert var == pytest.approx(variance(psi, obs), abs=1e-9)


@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_qfi_convex(seed, n, w):
    a, b = random_state(n, seed), random_state(n, seed + 1)
    obs = random_observable(n, seed + 2)
    mix = w * np.outer(a.amplitudes, a.amplitudes.conj()) + (1 - w) * np.outer(b.amplitudes, b.amplitudes.conj())
    lhs = qfi(MixedState.from_density_matrix(mix), obs)
    assert lhs <= w * qfi_pure(a, obs) + (1 - w) * qfi_pure(b, obs) + 1e-9


def test_covariance_matches_dense():
    psi = random_state(3, 11)
    c = covariance_matrix(psi)
    n = np.random.default_rng(0).normal(size=(3, 3))
    obs = CollectiveObservable(n / np.linalg.norm(n, axis=1, keepdims=True))
    flat = obs.directions.reshape(-1)
    assert flat @ c @ flat == pytest.approx(variance(psi, obs), abs=1e-12)


@pytest.mark.parametrize("n", range(2, 11))
def test_nf_ghz(n):
    rep = nf_effective_size(ghz(n))
    assert rep.value == pytest.approx(n, abs=1e-8)
    if n > 2:
        # for n = 2 every correlated pair of in-plane directions is optimal too
        assert np.allclose(np.abs(rep.optimizer.directions[:, 2]), 1, atol=1e-6)


def test_nf_product_state():
    assert nf_effective_size(PureState.zeros(5)).value == pytest.approx(1, abs=1e-10)
    psi = PureState.zeros(3)
    assert qfi_pure(psi, CollectiveObservable.along(3, "x")) == pytest.approx(12)


def test_nf_dicke_half():
    assert nf_effective_size(dicke(8, 4)).value == pytest.approx(5, abs=1e-6)


def test_dicke_in_plane_observable():
    n, k = 6, 2
    f = k / n
    for theta in (0.0, 0.7, 2.1):
        obs = CollectiveObservable.along(n, (np.cos(theta), np.sin(theta), 0))
        assert qfi_pure(dicke(n, k), obs) / (4 * n) == pytest.approx(1 + 2 * f * (1 - f) * n)


def test_nf_generalized_ghz_asymptotic():
    n, eps = 20, 0.4
    rep = nf_effective_size(generalized_ghz(n, eps), restarts=4)
    assert rep.value == pytest.approx(n * eps**2, rel=0.2)
    assert rep.value <= rep.certified_upper_bound + 1e-8


@given(st.integers(0, 10**6), st.integers(1, 5))
@settings(max_examples=20, deadline=None)
def test_nf_range_and_certificate(seed, n):
    rep = nf_effective_size(random_state(n, seed), restarts=4, seed=seed)
    assert 1 - 1e-8 <= rep.value <= rep.certified_upper_bound + 1e-8
    assert rep.certified_upper_bound <= n + 1e-8
    assert rep.restarts_used == 7


def test_nf_reproducible():
    psi = random_state(4, 3)
    assert nf_effective_size(psi, seed=5).value == nf_effective_size(psi, seed=5).value


def test_nf_restarts_validated():
    with pytest.raises(ValueError):
        nf_effective_size(ghz(2), restarts=0)


def test_geometric_entanglement_examples():
    assert geometric_entanglement_site(ghz(5), 3) == pytest.approx(0.5)
    assert geometric_entanglement_site(PureState.zeros(3), 0) == pytest.approx(0, abs=1e-15)
    for n, k in ((6, 1), (6, 3), (7, 5)):
        assert geometric_entanglement_site(dicke(n, k), 0) == pytest.approx(min(k, n - k) / n)
    with pytest.raises(StateError):
        geometric_entanglement_site(ghz(2), 2)


def test_symmetric_bound_examples():
    assert nd_upper_bound_symmetric(ghz(7)) == pytest.approx(7)
    for n in range(2, 9):
        for k in range(n + 1):
            assert nd_upper_bound_symmetric(dicke(n, k)) == pytest.approx(2 * min(k, n - k), abs=1e-12)
    n, eps = 16, 0.5
    lam = 1 - geometric_entanglement_site(generalized_ghz(n, eps), 0)
    assert nd_upper_bound_symmetric(generalized_ghz(n, eps)) == pytest.approx(2 * n * (1 - lam))


def test_symmetric_bound_small_eps_limit():
    # 2N(1 - cos^2(eps/2)) ~ N eps^2 / 2 once the branches are nearly orthogonal
    n, eps = 20, 0.9
    assert nd_upper_bound_symmetric(generalized_ghz(n, eps)) == pytest.approx(
        2 * n * np.sin(eps / 2) ** 2, rel=0.02)


def test_symmetry_check():
    assert is_permutation_symmetric(dicke(5, 2))
    assert is_permutation_symmetric(generalized_ghz(6, 0.3))
    assert not is_permutation_symmetric(cluster_state(DecoratedLattice((2,))))
    with pytest.raises(StateError):
        nd_upper_bound_symmetric(cluster_state(DecoratedLattice((2,))))


def test_blockwise_bound():
    # (GHZ_2)^3 is not exchange-symmetric, so the bound is applied per block
    pair = ghz(2).amplitudes
    psi = PureState.from_vector(np.kron(np.kron(pair, pair), pair))
    assert not is_permutation_symmetric(psi)
    block_bound = nd_upper_bound_symmetric(ghz(2))
    assert block_bound == pytest.approx(2)
    # keep one block, z-measure the others: every branch is GHZ_2
    proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    for keep in range(3):
        measured = [q for q in range(6) if q // 2 != keep]
        ens = measure_sites(psi, measured, proj, discard=True)
        expected = sum(b.probability * 2 * (b.state.fidelity(ghz(2)) > 1 - 1e-12) for b in ens)
        assert expected == pytest.approx(2)
        assert expected <= block_bound + 1e-12


def test_cramer_rao():
    assert cramer_rao_bound(4) == pytest.approx(0.5)
    n = 10
    assert cramer_rao_bound(4 * n**2) == pytest.approx(1 / (2 * n))
    assert cramer_rao_bound(4 * n) == pytest.approx(1 / (2 * np.sqrt(n)))
    with pytest.raises(ValueError):
        cramer_rao_bound(0)
    with pytest.raises(ValueError):
        cramer_rao_bound(1, 0)


def test_cluster_and_surface_nf_bounded():
    vals = [nf_effective_size(cluster_state(DecoratedLattice((nb,))), restarts=4).value for nb in range(3, 8)]
    assert all(b <= a * 1.05 for a, b in zip(vals, vals[1:]))
    vals = [nf_effective_size(surface_code_ground(SurfaceLattice(1, m)), restarts=4).value for m in range(2, 5)]
    assert all(b <= a * 1.05 for a, b in zip(vals, vals[1:]))


def test_nf_when_site_blocks_are_isotropic():
    # at eps = pi/2 every single-site covariance block is the identity
    for n in (4, 16):
        assert nf_effective_size(generalized_ghz(n, np.pi / 2)).value == pytest.approx(n, abs=1e-8)


@given(st.integers(0, 10**6), st.floats(0.1, 10))
@settings(max_examples=50, deadline=None)
def test_sphere_step_is_global_max(seed, scale):
    from macrosize.measures import _max_on_sphere
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, 3))
    q = g + g.T if seed % 3 else scale * np.eye(3)
    b = rng.normal(size=3) * (scale if seed % 5 else 0)
    x = _max_on_sphere(q, b)
    assert np.linalg.norm(x) == pytest.approx(1)
    pts = rng.normal(size=(4000, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    vals = np.einsum("ki,ij,kj->k", pts, q, pts) + 2 * pts @ b
    assert x @ q @ x + 2 * b @ x >= vals.max() - 1e-9
