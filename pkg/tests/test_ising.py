import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macrosize.distill import MeasurementModel, kitaev_zb2_dense
from macrosize.families import SurfaceLattice
from macrosize.ising import (IsingError, IsingModel, blocking_error, dilute_loop_zb2,
                             exact_correlators, exact_m2, griffiths_lower_bound,
                             kitaev_zb2_from_correlators, m2_1d_closed_form, map_cluster_params,
                             map_kitaev_params, mc_m2, sections_independent,
                             transfer_matrix_m2_1d, unmap_kitaev_params)
from macrosize.statevec import Basis


def brute_m2(model):
    """Plain loop over spin configurations, pure models only."""
    n = model.num_spins
    bonds = model.bonds()
    z = m2 = 0.0
    for idx in range(2**n):
        s = [1 - 2 * ((idx >> k) & 1) for k in range(n)]
        w = math.exp(model.beta_J * sum(s[i] * s[j] for i, j in bonds))
        z += w
        m2 += w * sum(s) ** 2
    return m2 / z


# -- parameter maps ------------------------------------------------------------------

def test_cluster_map_examples():
    assert map_cluster_params(1.0) == 0.0
    assert map_cluster_params(math.exp(-2)) == pytest.approx(1.0)
    assert map_cluster_params(0.2) == pytest.approx(0.8047, abs=1e-4)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(IsingError):
            map_cluster_params(bad)


def test_kitaev_map_examples():
    beta_j, p = map_kitaev_params(0.09, 0.1)
    assert p == pytest.approx(0.25)
    assert beta_j == pytest.approx(-math.log(0.09) / 2)
    assert map_kitaev_params(0.5, 0.0)[1] == 0.0
    with pytest.raises(IsingError):
        map_kitaev_params(0.5, -0.1)
    with pytest.raises(IsingError):
        map_kitaev_params(0.0, 0.1)


@given(st.floats(0.01, 1.0), st.floats(0, 0.9))
@settings(max_examples=60, deadline=None)
def test_kitaev_map_round_trip(eps, r):
    delta = r * math.sqrt(eps)
    beta_j, p = map_kitaev_params(eps, delta)
    e2, d2 = unmap_kitaev_params(beta_j, p)
    assert e2 == pytest.approx(eps, rel=1e-12)
    assert d2 == pytest.approx(delta, rel=1e-9, abs=1e-15)


def test_model_validation():
    with pytest.raises(IsingError):
        IsingModel((3,), -1.0)
    with pytest.raises(IsingError):
        IsingModel((3,), 1.0, dilution_p=1.0)
    with pytest.raises(IsingError):
        IsingModel((3,), 1.0, boundary="helical")
    with pytest.raises(IsingError):
        IsingModel((3,), 1.0, dilution_kind="quenched")
    with pytest.raises(IsingError):
        IsingModel((0, 2), 1.0)
    assert len(IsingModel((3, 3), 1.0).bonds()) == 12
    assert len(IsingModel((3, 3), 1.0, boundary="periodic").bonds()) == 18
    assert IsingModel((2, 2), 0.5).eps == pytest.approx(math.exp(-1))


# -- exact enumeration and transfer matrix ---------------------------------------------------

@pytest.mark.parametrize("ext", [(1,), (4,), (2, 2), (2, 3), (3, 3)])
def test_exact_limits(ext):
    n = math.prod(ext)
    assert exact_m2(IsingModel(ext, 0.0)) == pytest.approx(n)
    assert exact_m2(IsingModel(ext, math.inf)) == pytest.approx(n * n)


@pytest.mark.parametrize("ext,bj", [((5,), 0.3), ((2, 3), 0.7), ((3, 3), 0.2), ((3, 3), 0.4)])
def test_exact_matches_brute(ext, bj):
    for boundary in ("free", "periodic"):
        model = IsingModel(ext, bj, boundary=boundary)
        assert exact_m2(model) == pytest.approx(brute_m2(model), rel=1e-12)


def test_exact_cap():
    with pytest.raises(IsingError):
        exact_m2(IsingModel((5, 5), 0.3))


def test_correlators_sum_to_m2():
    model = IsingModel((2, 3), 0.45)
    c = exact_correlators(model)
    assert np.allclose(np.diag(c), 1)
    assert c.sum() == pytest.approx(exact_m2(model), rel=1e-12)


def test_transfer_matrix_examples():
    assert transfer_matrix_m2_1d(4, 0.5) == pytest.approx(exact_m2(IsingModel((4,), 0.5)), abs=1e-10)
    with pytest.raises(IsingError):
        transfer_matrix_m2_1d(1, 2.0)


@given(st.integers(2, 40), st.floats(0, 3))
@settings(max_examples=50, deadline=None)
def test_transfer_matrix_matches_closed_form(length, bj):
    assert transfer_matrix_m2_1d(length, bj) == pytest.approx(m2_1d_closed_form(length, bj), rel=1e-10)


# -- Monte Carlo -------------------------------------------------------------------------

def test_blocking_error():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4096)
    err, tau = blocking_error(x)
    assert err == pytest.approx(1 / 64, rel=0.3)
    assert tau < 2
    # strongly correlated series: the blocked error is larger than the naive one
    y = np.repeat(rng.normal(size=64), 64)
    err_y, tau_y = blocking_error(y)
    assert err_y > 3 * y.std(ddof=1) / 64
    assert tau_y > 10
    with pytest.raises(IsingError):
        blocking_error([1.0])


@pytest.mark.parametrize("ext,bj", [((2,), 0.5), ((6,), 0.6), ((3, 3), 0.35), ((4, 4), 0.5)])
def test_wolff_matches_exact(ext, bj):
    model = IsingModel(ext, bj)
    est = mc_m2(model, sweeps=6000, burn_in=500, seed=1)
    assert abs(est.mean - exact_m2(model)) <= 4 * est.std_error


def test_mc_at_infinite_temperature():
    model = IsingModel((8, 8), 0.0)
    est = mc_m2(model, sweeps=3000, burn_in=100, seed=2)
    assert abs(est.mean / 64 - 1) <= 3 * est.std_error / 64


def test_mc_magnetization_symmetric():
    model = IsingModel((3, 3), 0.2)
    est = mc_m2(model, sweeps=3000, burn_in=100, seed=3, correlators=True)
    c = est.correlators
    assert np.allclose(np.diag(c), 1)
    assert np.allclose(c, exact_correlators(model), atol=0.08)


def test_mc_reproducible():
    model = IsingModel((4, 4), 0.4)
    a = mc_m2(model, sweeps=500, burn_in=50, seed=7)
    b = mc_m2(model, sweeps=500, burn_in=50, seed=7)
    assert a == b
    assert a.sweeps == 500 and a.seed == 7
    with pytest.raises(IsingError):
        mc_m2(model, sweeps=10, burn_in=10)


@pytest.mark.parametrize("constrained", [False, True])
def test_dilute_mc_matches_exact(constrained):
    model = IsingModel((3, 3), 0.5, dilution_p=0.3, constrained_bonds=constrained)
    est = mc_m2(model, sweeps=20000, burn_in=1000, seed=4)
    assert abs(est.mean - exact_m2(model)) <= 4 * est.std_error


def test_dilution_reduces_order():
    pure = exact_m2(IsingModel((3, 3), 0.5))
    assert exact_m2(IsingModel((3, 3), 0.5, dilution_p=0.3)) < pure
    assert exact_m2(IsingModel((3, 3), 0.5, dilution_p=0.3, constrained_bonds=True)) < pure


def test_dilute_low_temperature_correlations():
    model = IsingModel((8, 8), 1.0, dilution_p=0.05)
    est = mc_m2(model, sweeps=600, burn_in=100, seed=5, correlators=True)
    assert est.correlators.min() > 0.5


# -- Griffiths-type bound --------------------------------------------------------------------

def test_griffiths_bound():
    assert griffiths_lower_bound(0.1) == pytest.approx(1 - 2e-4)
    with pytest.raises(IsingError):
        griffiths_lower_bound(0.0)
    # the constant is leading-order only; the residual should scale like eps^4
    res = []
    for eps in (0.05, 0.1):
        model = IsingModel((4, 4), map_cluster_params(eps), boundary="periodic")
        res.append(1 - exact_m2(model) / 256)
    assert math.log(res[1] / res[0]) / math.log(2) == pytest.approx(4, abs=0.2)


# -- Kitaev dual model ---------------------------------------------------------------------

def test_loop_sum_limits():
    s = SurfaceLattice(2, 2)
    nb = len(s.loop)
    assert dilute_loop_zb2(s, math.inf, 0.0) == pytest.approx(nb**2)
    # boundary loop: each B edge faces the fixed exterior, and plaquettes pair up the edges
    assert dilute_loop_zb2(s, 0.0, 0.0) == pytest.approx(16)
    assert kitaev_zb2_from_correlators(s, math.inf, 0.0) == pytest.approx(nb**2)
    assert kitaev_zb2_from_correlators(s, 0.0, 0.0) == pytest.approx(16)
    s1 = SurfaceLattice(1, 1)
    assert dilute_loop_zb2(s1, 0.0, 0.0) == pytest.approx(16)


@pytest.mark.parametrize("eps,delta", [(0.1, 0.0), (0.3, 0.05), (0.6, 0.2)])
def test_loop_sum_matches_dense(eps, delta):
    s = SurfaceLattice(2, 2)
    dense = kitaev_zb2_dense(s, MeasurementModel(eps, delta, Basis.Z_BASIS))
    beta_j, p = map_kitaev_params(eps, delta)
    assert dilute_loop_zb2(s, beta_j, p) == pytest.approx(dense, abs=1e-9)
    assert kitaev_zb2_from_correlators(s, beta_j, p) == pytest.approx(dense, abs=1e-9)


def test_sections_independence():
    assert sections_independent(SurfaceLattice(2, 2))
    s = SurfaceLattice(3, 3)
    coupled = s.with_loop(s.rectangle_loop(0, 0, 2, 2))
    assert not sections_independent(coupled)
    beta_j, p = map_kitaev_params(0.3, 0.2)
    # coupled sections: the product formula drifts away from the full sum
    assert kitaev_zb2_from_correlators(coupled, beta_j, p) != pytest.approx(
        dilute_loop_zb2(coupled, beta_j, p), abs=1e-5)
    # without dilution every pattern is empty and the formula is exact again
    assert kitaev_zb2_from_correlators(coupled, beta_j, 0.0) == pytest.approx(
        dilute_loop_zb2(coupled, beta_j, 0.0), abs=1e-10)
