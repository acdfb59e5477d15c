"""Linear algebra over the two-element field, on small 0/1 numpy matrices."""
from __future__ import annotations

import numpy as np


def row_reduce(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` (mod 2) and its pivot columns."""
    m = (np.asarray(a, dtype=np.uint8) & 1).copy()
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(m[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray) -> int:
    return len(row_reduce(a)[1])


def solve(a: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """One solution of ``a @ x = y`` (mod 2) with free variables set to 0, or None."""
    a = np.asarray(a, dtype=np.uint8)
    aug = np.hstack([a, np.asarray(y, dtype=np.uint8).reshape(-1, 1)])
    m, pivots = row_reduce(aug)
    ncols = a.shape[1]
    if ncols in pivots:
        return None
    x = np.zeros(ncols, dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = m[r, -1]
    return x


def nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of the kernel of ``a`` (mod 2), one vector per row."""
    a = np.asarray(a, dtype=np.uint8)
    ncols = a.shape[1]
    m, pivots = row_reduce(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, c in enumerate(pivots):
            basis[k, c] = m[r, f]
    return basis


def span(basis: np.ndarray) -> np.ndarray:
    """All 2**k combinations of the ``k`` basis rows."""
    basis = np.asarray(basis, dtype=np.uint8)
    k = basis.shape[0]
    width = basis.shape[1] if basis.ndim == 2 else 0
    coeffs = (np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1
    if k == 0:
        return np.zeros((1, width), dtype=np.uint8)
    return (coeffs.astype(np.int64) @ basis.astype(np.int64) % 2).astype(np.uint8)
