"""Fisher-information effective size and related single-state measures."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .statevec import (PAULIS, PureState, StateError, reduced_density_matrix,
                       reduced_single_site, swap_sites)

SKIP_TOL = 1e-14


@dataclass(frozen=True)
class CollectiveObservable:
    """``A = sum_i n_i . sigma_i`` with one Bloch direction per qubit.

    Rows of ``directions`` have unit length. A row of exact zeros marks a
    site the observable does not act on (used for sub-register observables
    such as the B-magnetization).
    """

    directions: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3:
            raise StateError("directions must have shape (N, 3)")
        norms = np.linalg.norm(d, axis=1)
        bad = ~(np.isclose(norms, 1, atol=1e-10) | (norms == 0))
        if bad.any():
            raise StateError(f"non-unit Bloch directions at sites {np.nonzero(bad)[0].tolist()}")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def num_qubits(self) -> int:
        return self.directions.shape[0]

    @classmethod
    def along(cls, n: int, axis, sites: Sequence[int] | None = None) -> "CollectiveObservable":
        """Same direction on every site (or only on ``sites``); ``axis`` is 'x', 'y', 'z' or a 3-vector."""
        vec = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}.get(axis, axis)
        vec = np.asarray(vec, dtype=float)
        vec = vec / np.linalg.norm(vec)
        d = np.zeros((n, 3))
        d[list(range(n)) if sites is None else list(sites)] = vec
        return cls(d)

    def local_matrices(self) -> list[np.ndarray]:
        return [sum(c * p for c, p in zip(row, PAULIS)) for row in self.directions]

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        """``A`` applied to a vector or to the columns of a matrix."""
        n = self.num_qubits
        vecs = np.asarray(vecs, dtype=complex)
        cols = vecs.reshape(2**n, -1)
        out = np.zeros_like(cols)
        for site, (row, m) in enumerate(zip(self.directions, self.local_matrices())):
            if not row.any():
                continue
            t = cols.reshape(2 ** (n - 1 - site), 2, 2**site, -1)
            out += np.einsum("ab,xbzr->xazr", m, t).reshape(cols.shape)
        return out.reshape(vecs.shape)

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(2**self.num_qubits, dtype=complex))


@dataclass(frozen=True)
class MixedState:
    """Spectral form of a density matrix: ``rho = sum_a p_a |psi_a><psi_a|``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def __post_init__(self):
        p = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.eigenvectors, dtype=complex)
        if v.ndim != 2 or v.shape[1] != p.size:
            raise StateError("need one eigenvector column per eigenvalue")
        if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
            raise StateError("eigenvalues must be nonnegative and sum to 1")
        if not np.allclose(v.conj().T @ v, np.eye(p.size), atol=1e-8):
            raise StateError("eigenvectors are not orthonormal")
        object.__setattr__(self, "eigenvalues", np.clip(p, 0, None))
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dimension(self) -> int:
        return self.eigenvectors.shape[0]

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "MixedState":
        rho = np.asarray(rho, dtype=complex)
        if not np.allclose(rho, rho.conj().T, atol=1e-10):
            raise StateError("density matrix is not Hermitian")
        w, v = np.linalg.eigh(rho)
        w = np.where(np.abs(w) < 1e-15, 0.0, w)
        return cls(w / w.sum(), v)

    @classmethod
    def from_pure(cls, psi: PureState) -> "MixedState":
        return cls(np.array([1.0]), psi.amplitudes.reshape(-1, 1))

    def matrix(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def qfi(rho: MixedState, a: CollectiveObservable) -> float:
    """Quantum Fisher information from the spectral sum over eigenpairs of ``rho``.

    The eigenvectors may span only part of the space (e.g. a pure state);
    pairs with one partner in the unlisted zero-eigenvalue subspace are
    summed in closed form through completeness.
    """
    if rho.dimension != 2**a.num_qubits:
        raise StateError("state and observable act on different numbers of qubits")
    p = rho.eigenvalues
    v = rho.eigenvectors
    av = a.apply(v)
    elems = v.conj().T @ av
    psum = p[:, None] + p[None, :]
    pdiff = (p[:, None] - p[None, :]) ** 2
    keep = psum >= SKIP_TOL
    ratio = np.zeros_like(psum)
    ratio[keep] = pdiff[keep] / psum[keep]
    inside = 2 * np.sum(ratio * np.abs(elems) ** 2)
    leak = np.sum(np.abs(av) ** 2, axis=0) - np.sum(np.abs(elems) ** 2, axis=0)
    # (p - 0)^2 / (p + 0) = p, counted for both orderings of the pair
    outside = 4 * np.sum(p * np.clip(leak, 0, None))
    return float(inside + outside)


def variance(psi: PureState, a: CollectiveObservable) -> float:
    if psi.num_qubits != a.num_qubits:
        raise StateError("state and observable act on different numbers of qubits")
    av = a.apply(psi.amplitudes)
    mean = np.vdot(psi.amplitudes, av).real
    return float(np.vdot(av, av).real - mean**2)


def qfi_pure(psi: PureState, a: CollectiveObservable) -> float:
    return 4 * variance(psi, a)


# -- covariance matrix and see-saw optimization -----------------------------

def bloch_vectors(psi: PureState) -> np.ndarray:
    out = np.empty((psi.num_qubits, 3))
    for i in range(psi.num_qubits):
        rho = reduced_single_site(psi, i)
        out[i] = [np.trace(rho @ p).real for p in PAULIS]
    return out


def covariance_matrix(psi: PureState) -> np.ndarray:
    """Symmetrized 3N x 3N covariance of all single-site Pauli operators.

    Entry ``(3i+a, 3j+b)`` is ``<{s_i^a, s_j^b}>/2 - <s_i^a><s_j^b>``, so that
    ``Var(sum_i n_i . sigma_i) = n^T C n`` for stacked directions ``n``.
    """
    n = psi.num_qubits
    m = bloch_vectors(psi)
    c = np.empty((3 * n, 3 * n))
    pauli = np.array(PAULIS)
    for i in range(n):
        c[3 * i:3 * i + 3, 3 * i:3 * i + 3] = np.eye(3) - np.outer(m[i], m[i])
        for j in range(i + 1, n):
            # rows/cols of the 4x4 rdm: bit0 = site i, bit1 = site j
            rho = reduced_density_matrix(psi, [i, j]).reshape(2, 2, 2, 2)
            corr = np.einsum("jiJI,bJj,aIi->ab", rho, pauli, pauli).real
            block = corr - np.outer(m[i], m[j])
            c[3 * i:3 * i + 3, 3 * j:3 * j + 3] = block
            c[3 * j:3 * j + 3, 3 * i:3 * i + 3] = block.T
    return c


def _max_on_sphere(q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Global maximizer of ``x^T q x + 2 b^T x`` over unit 3-vectors."""
    w, v = np.linalg.eigh(q)
    c = v.T @ b
    top = w[-1]
    deg = w >= top - 1e-12
    cnorm = np.linalg.norm(c)
    if cnorm < 1e-14:
        return v[:, -1]

    def g(lam):
        return np.sum(c**2 / (lam - w) ** 2) - 1

    def root(lo):
        # g(top + |c|) <= 0, with equality when the block is a multiple of I
        hi = top + cnorm
        if g(hi) >= 0:
            return hi
        return brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)

    cdeg = np.linalg.norm(c[deg])
    if cdeg > 1e-12 * cnorm:
        lam = root(top + 0.5 * cdeg)
        x = v @ (c / (lam - w))
    else:
        y = np.where(deg, 0.0, c / np.where(deg, 1.0, top - w))
        r = 1 - y @ y
        if r < 0:
            lam = root(top + 1e-14 * max(1.0, abs(top)))
            x = v @ (c / (lam - w))
        else:
            x = v @ y + np.sqrt(r) * v[:, -1]
    return x / np.linalg.norm(x)


def _seesaw(c: np.ndarray, dirs: np.ndarray, max_sweeps: int, tol: float):
    n = dirs.shape[0]
    x = dirs.reshape(-1).copy()
    value = x @ c @ x
    for sweep in range(1, max_sweeps + 1):
        for i in range(n):
            sl = slice(3 * i, 3 * i + 3)
            q = c[sl, sl]
            b = c[sl] @ x - q @ x[sl]
            x[sl] = _max_on_sphere(q, b)
        new = x @ c @ x
        if new - value < tol:
            return max(new, value), x.reshape(n, 3), True, sweep
        value = new
    return value, x.reshape(n, 3), False, max_sweeps


@dataclass(frozen=True)
class EffectiveSizeReport:
    value: float
    optimizer: CollectiveObservable = field(repr=False)
    certified_upper_bound: float
    restarts_used: int
    converged: bool = True
    sweeps: int = 0

    @property
    def gap(self) -> float:
        return self.certified_upper_bound - self.value


def nf_effective_size(psi: PureState, restarts: int = 16, seed: int = 0,
                      max_sweeps: int = 500, tol: float = 1e-10) -> EffectiveSizeReport:
    """Maximize ``F(psi, A)/4N`` over the collective class by see-saw ascent.

    Runs from the all-x, all-y and all-z starts plus ``restarts`` random
    ones. Each site update is the exact maximizer of the variance with all
    other directions fixed, so every run ascends monotonically. The largest
    eigenvalue of the covariance matrix bounds the optimum from above.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = psi.num_qubits
    c = covariance_matrix(psi)
    cert = float(np.linalg.eigvalsh(c)[-1])

    starts = [np.tile(np.eye(3)[k], (n, 1)) for k in range(3)]
    for child in np.random.SeedSequence(seed).spawn(restarts):
        g = np.random.default_rng(child).normal(size=(n, 3))
        starts.append(g / np.linalg.norm(g, axis=1, keepdims=True))

    best = (-np.inf, None, True, 0)
    all_converged = True
    total_sweeps = 0
    for d in starts:
        val, dirs, ok, sweeps = _seesaw(c, d, max_sweeps, tol)
        all_converged &= ok
        total_sweeps += sweeps
        if val > best[0]:
            best = (val, dirs, ok, sweeps)
    value = best[0] / n
    return EffectiveSizeReport(
        value=float(value),
        optimizer=CollectiveObservable(best[1] / np.linalg.norm(best[1], axis=1, keepdims=True)),
        certified_upper_bound=max(cert, float(value)),
        restarts_used=len(starts),
        converged=bool(all_converged),
        sweeps=total_sweeps,
    )


# -- geometric entanglement and the symmetric-state bound --------------------

def geometric_entanglement_site(psi: PureState, site: int = 0) -> float:
    rho = reduced_single_site(psi, site)
    return float(1 - np.linalg.eigvalsh(rho)[-1])


def is_permutation_symmetric(psi: PureState, tol: float = 1e-8) -> bool:
    """Invariance under every adjacent transposition (these generate S_N)."""
    for i in range(psi.num_qubits - 1):
        swapped = swap_sites(psi, i, i + 1)
        if np.linalg.norm(swapped.amplitudes - psi.amplitudes) > tol:
            return False
    return True


def nd_upper_bound_symmetric(psi: PureState) -> float:
    """``2N(1 - lambda_max)`` for an exchange-symmetric state."""
    if not is_permutation_symmetric(psi):
        raise StateError("upper bound only holds for exchange-symmetric states")
    return 2 * psi.num_qubits * geometric_entanglement_site(psi, 0)


def cramer_rao_bound(fisher: float, n_copies: int = 1) -> float:
    if fisher <= 0 or n_copies < 1:
        raise ValueError("need fisher > 0 and n_copies >= 1")
    return float(1 / np.sqrt(n_copies * fisher))
