import numpy as np
from hypothesis import given, settings, strategies as st

from macrosize import gf2

matrices = st.tuples(st.integers(1, 6), st.integers(1, 7), st.integers(0, 2**32 - 1)).map(
    lambda t: np.random.default_rng(t[2]).integers(0, 2, size=(t[0], t[1])).astype(np.uint8))


@given(matrices)
@settings(max_examples=60, deadline=None)
def test_nullspace_is_kernel_of_full_rank(a):
    ker = gf2.nullspace(a)
    assert ker.shape[0] == a.shape[1] - gf2.rank(a)
    assert not ((a.astype(int) @ ker.T.astype(int)) % 2).any()
    if ker.shape[0]:
        assert gf2.rank(ker) == ker.shape[0]


@given(matrices, st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_solve_consistent_systems(a, seed):
    x0 = np.random.default_rng(seed).integers(0, 2, size=a.shape[1])
    y = (a.astype(int) @ x0) % 2
    x = gf2.solve(a, y)
    assert x is not None
    assert np.array_equal((a.astype(int) @ x) % 2, y)


def test_solve_inconsistent():
    a = np.array([[1, 1], [1, 1]])
    assert gf2.solve(a, [1, 0]) is None


def test_span_counts():
    basis = np.array([[1, 0, 1], [0, 1, 1]])
    rows = gf2.span(basis)
    assert len({tuple(r) for r in rows}) == 4
    assert gf2.span(np.zeros((0, 3))).shape == (1, 3)
