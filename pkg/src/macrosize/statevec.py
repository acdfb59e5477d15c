"""Dense pure-state simulation for small qubit registers.

Bit convention: qubit ``i`` is bit ``i`` of the basis index, so the
amplitude of ``|x_{N-1} ... x_1 x_0>`` sits at ``sum_i x_i 2**i``.
States are treated as immutable; every operation returns a new object.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_QUBITS = 22
NORM_TOL = 1e-12
PRUNE_TOL = 1e-14

SQRT1_2 = 1 / np.sqrt(2)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2
PAULIS = (X, Y, Z)


class StateError(ValueError):
    """Invalid state, site index or operator."""


class Basis(enum.Enum):
    Z_BASIS = "z"
    X_BASIS = "x"


@dataclass(frozen=True)
class LocalOperator:
    """A 2x2 operator, with entries given in either the z or the x basis."""

    matrix: np.ndarray
    basis: Basis = Basis.Z_BASIS

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise StateError(f"local operator must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("local operator has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def z_matrix(self) -> np.ndarray:
        """Matrix in the computational basis."""
        if self.basis is Basis.X_BASIS:
            return H @ self.matrix @ H
        return self.matrix

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=tol))

    def require_hermitian(self) -> "LocalOperator":
        if not self.is_hermitian():
            raise StateError("observable must be Hermitian")
        return self


def _check_qubits(n: int) -> None:
    if n < 1:
        raise StateError("need at least one qubit")
    if n > MAX_QUBITS:
        raise StateError(f"{n} qubits exceeds the dense-engine cap of {MAX_QUBITS}")


@dataclass(frozen=True)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_qubits(self.num_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise StateError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.size}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1) > 1e-10:
            raise StateError(f"state not normalized (norm^2 = {norm2})")
        amps = amps / np.sqrt(norm2)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec) -> "PureState":
        """Normalize ``vec`` and wrap it."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(np.log2(vec.size)))
        if 2**n != vec.size:
            raise StateError("vector length is not a power of two")
        norm = np.linalg.norm(vec)
        if norm < 1e-300:
            raise StateError("cannot normalize a zero vector")
        return cls(n, vec / norm)

    @classmethod
    def product(cls, local_states: Sequence) -> "PureState":
        """Tensor product; ``local_states[i]`` is the state of qubit ``i``."""
        vec = np.ones(1, dtype=complex)
        for s in local_states:
            vec = np.kron(np.asarray(s, dtype=complex), vec)
        return cls.from_vector(vec)

    @classmethod
    def zeros(cls, n: int) -> "PureState":
        _check_qubits(n)
        vec = np.zeros(2**n, dtype=complex)
        vec[0] = 1
        return cls(n, vec)

    @classmethod
    def plus(cls, n: int) -> "PureState":
        _check_qubits(n)
        return cls(n, np.full(2**n, 2 ** (-n / 2), dtype=complex))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2


def _check_site(n: int, site: int) -> None:
    if not 0 <= site < n:
        raise StateError(f"site {site} out of range for {n} qubits")


def _matrix(op) -> np.ndarray:
    if isinstance(op, LocalOperator):
        return op.z_matrix
    return np.asarray(op, dtype=complex)


def apply_local(amps: np.ndarray, n: int, site: int, matrix: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to ``site`` of a raw amplitude vector (no renormalization)."""
    t = amps.reshape(2 ** (n - 1 - site), 2, 2**site)
    return np.einsum("ab,xbz->xaz", matrix, t).reshape(-1)


def apply_single_unnormalized(state: PureState, site: int, op) -> np.ndarray:
    """Raw ``op|psi>``; its squared norm is the branch weight <psi|op^dag op|psi>."""
    _check_site(state.num_qubits, site)
    return apply_local(state.amplitudes, state.num_qubits, site, _matrix(op))


def apply_single(state: PureState, site: int, op) -> PureState:
    """Apply ``op`` to one qubit and renormalize."""
    return PureState.from_vector(apply_single_unnormalized(state, site, op))


def _bit_masks(n: int, sites: Sequence[int]) -> list[np.ndarray]:
    idx = np.arange(2**n)
    return [((idx >> s) & 1).astype(bool) for s in sites]


def apply_cz(state: PureState, site_i: int, site_j: int) -> PureState:
    n = state.num_qubits
    _check_site(n, site_i)
    _check_site(n, site_j)
    if site_i == site_j:
        raise StateError("CZ needs two distinct sites")
    bi, bj = _bit_masks(n, (site_i, site_j))
    amps = state.amplitudes.copy()
    amps[bi & bj] *= -1
    return PureState(n, amps)


def apply_cz_layer(state: PureState, pairs: Sequence[tuple[int, int]]) -> PureState:
    """All CZ gates of ``pairs`` in a single diagonal pass (they commute)."""
    n = state.num_qubits
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for i, j in pairs:
        _check_site(n, i)
        _check_site(n, j)
        if i == j:
            raise StateError("CZ needs two distinct sites")
        parity ^= (idx >> i) & (idx >> j) & 1
    return PureState(n, state.amplitudes * (1 - 2 * parity))


@dataclass(frozen=True)
class Branch:
    probability: float
    state: PureState
    label: tuple[int, ...]


@dataclass(frozen=True)
class BranchEnsemble:
    """Outcome ensemble ``{|phi_a>, p_a}`` of a local measurement.

    ``label[k]`` is the outcome index on ``sites[k]``. When the measured
    qubits were discarded, ``remaining_sites`` lists the original index of
    each qubit in the branch states (in order); otherwise it is ``None``.
    """

    sites: tuple[int, ...]
    branches: list[Branch]
    remaining_sites: tuple[int, ...] | None = None

    def __post_init__(self):
        total = sum(b.probability for b in self.branches)
        if abs(total - 1) > 1e-10:
            raise StateError(f"branch probabilities sum to {total}")

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)


def check_povm(povm: Sequence, tol: float = 1e-10) -> list[np.ndarray]:
    mats = [_matrix(m) for m in povm]
    total = sum(m.conj().T @ m for m in mats)
    if not np.allclose(total, I2, atol=tol):
        raise StateError("POVM is incomplete: sum of M^dag M differs from identity")
    return mats


def _rank_one_factors(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(m)
    if s[1] > 1e-12 * max(s[0], 1e-300):
        raise StateError("discarding measured qubits requires rank-1 measurement operators")
    return u[:, 0] * s[0], vh[0]


def measure_sites(state: PureState, sites: Sequence[int], povm: Sequence,
                  discard: bool = False) -> BranchEnsemble:
    """Measure ``povm`` on every listed site and return all outcome branches.

    Branches with probability below ``PRUNE_TOL`` are dropped. With
    ``discard=True`` every operator must be rank one, ``M = |u><v|``; the
    measured qubit is then left in ``|u>`` and is removed from the branch
    states, which keeps memory flat when many qubits are measured.
    """
    n = state.num_qubits
    sites = tuple(int(s) for s in sites)
    for s in sites:
        _check_site(n, s)
    if len(set(sites)) != len(sites):
        raise StateError("measured sites overlap")
    mats = check_povm(povm)

    live = list(range(n))
    pending = [((), state.amplitudes)]
    for site in sites:
        pos = live.index(site)
        width = len(live)
        nxt = []
        for label, amps in pending:
            for k, m in enumerate(mats):
                if discard:
                    u, v = _rank_one_factors(m)
                    t = amps.reshape(2 ** (width - 1 - pos), 2, 2**pos)
                    out = np.linalg.norm(u) * np.einsum("b,xbz->xz", v, t).reshape(-1)
                else:
                    out = apply_local(amps, width, pos, m)
                w = float(np.vdot(out, out).real)
                if w >= PRUNE_TOL:
                    nxt.append((label + (k,), out))
        pending = nxt
        if discard:
            live.pop(pos)

    total = sum(float(np.vdot(a, a).real) for _, a in pending)
    branches = []
    for label, amps in pending:
        w = float(np.vdot(amps, amps).real)
        if discard and not live:
            raise StateError("cannot discard every qubit")
        branches.append(Branch(w / total, PureState.from_vector(amps), label))
    return BranchEnsemble(sites, branches, tuple(live) if discard else None)


def reduced_density_matrix(state: PureState, sites: Sequence[int]) -> np.ndarray:
    """Reduced state on ``sites``; row index bit ``k`` is the value of ``sites[k]``."""
    n = state.num_qubits
    sites = list(sites)
    for s in sites:
        _check_site(n, s)
    t = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - s for s in reversed(sites)]
    m = np.moveaxis(t, axes, range(len(sites))).reshape(2 ** len(sites), -1)
    return m @ m.conj().T


def reduced_single_site(state: PureState, site: int) -> np.ndarray:
    return reduced_density_matrix(state, [site])


def expectation(state: PureState, sites: Sequence[int], ops: Sequence) -> float:
    """<psi| prod_k ops[k]_{sites[k]} |psi> for Hermitian local factors."""
    if len(sites) != len(ops):
        raise StateError("need one operator per site")
    if len(set(sites)) != len(sites):
        raise StateError("sites must be distinct")
    n = state.num_qubits
    amps = state.amplitudes
    for s, op in zip(sites, ops):
        if isinstance(op, LocalOperator):
            op.require_hermitian()
            m = op.z_matrix
        else:
            m = np.asarray(op, dtype=complex)
            if not np.allclose(m, m.conj().T, atol=1e-12):
                raise StateError("observable must be Hermitian")
        _check_site(n, s)
        amps = apply_local(amps, n, s, m)
    val = np.vdot(state.amplitudes, amps)
    if abs(val.imag) > 1e-10:
        raise StateError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


def swap_sites(state: PureState, i: int, j: int) -> PureState:
    n = state.num_qubits
    t = state.amplitudes.reshape([2] * n)
    t = np.swapaxes(t, n - 1 - i, n - 1 - j)
    return PureState(n, t.reshape(-1))


def basis_states(n: int):
    """Yield bit tuples (qubit 0 first) in basis-index order."""
    for idx in range(2**n):
        yield tuple((idx >> k) & 1 for k in range(n))


def index_of(bits: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def ghz_vector(n: int) -> np.ndarray:
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = vec[-1] = SQRT1_2
    return vec


__all__ = [
    "Basis", "Branch", "BranchEnsemble", "LocalOperator", "PureState", "StateError",
    "apply_cz", "apply_cz_layer", "apply_single", "apply_single_unnormalized",
    "expectation", "measure_sites", "reduced_density_matrix", "reduced_single_site",
    "swap_sites", "X", "Y", "Z", "H", "I2", "MAX_QUBITS",
]
