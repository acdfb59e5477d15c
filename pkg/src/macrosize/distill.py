"""GHZ distillation protocols, ideal and with perturbed local measurements."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from . import gf2
from .families import (DecoratedLattice, SurfaceLattice, cluster_state, cycle_basis,
                       generalized_ghz, surface_code_ground)
from .measures import nd_upper_bound_symmetric
from .statevec import (Basis, LocalOperator, PureState, StateError, X, H,
                       apply_local, ghz_vector, measure_sites)

ENUM_CAP_BITS = 22


class DistillationError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementModel:
    """Perturbed two-outcome local measurement ``{E, Ebar}``.

    ``E^dag E`` is ``[[1, conj(delta)], [delta, eps]]`` in ``basis``, rescaled
    by ``1/max(1, lambda_max)`` so that ``Ebar^dag Ebar = I - E^dag E`` is
    positive. Branch-relative quantities do not depend on that scale.
    """

    eps: float
    delta: complex = 0.0
    basis: Basis = Basis.X_BASIS

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps < 0:
            raise DistillationError(f"eps must be a finite nonnegative number, got {self.eps}")
        if abs(self.delta) ** 2 > self.eps + 1e-12:
            raise DistillationError("|delta|^2 must not exceed eps (E^dag E must be positive)")

    @property
    def effect(self) -> np.ndarray:
        """Unscaled ``E^dag E`` in the model basis."""
        d = complex(self.delta)
        return np.array([[1, d.conjugate()], [d, self.eps]], dtype=complex)

    @property
    def scale(self) -> float:
        return 1 / max(1.0, float(np.linalg.eigvalsh(self.effect)[-1]))

    def operators(self) -> tuple[LocalOperator, LocalOperator]:
        e = _psd_sqrt(self.scale * self.effect)
        ebar = _psd_sqrt(np.eye(2) - self.scale * self.effect)
        return LocalOperator(e, self.basis), LocalOperator(ebar, self.basis)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


@dataclass(frozen=True)
class Outcome:
    probability: float
    ghz_subset: tuple[int, ...]
    fidelity: float
    multiplicity: int = 1
    label: tuple = ()
    correction: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        # a single-qubit "GHZ" counts as size 0
        n = len(self.ghz_subset)
        return n if n >= 2 else 0


@dataclass
class DistillationResult:
    protocol: str
    outcomes: list[Outcome]
    parameters: dict = field(default_factory=dict)

    @property
    def expected_size(self) -> float:
        return expected_size(self)

    @property
    def min_fidelity(self) -> float:
        return min(o.fidelity for o in self.outcomes)

    @property
    def total_probability(self) -> float:
        return sum(o.probability * o.multiplicity for o in self.outcomes)

    def to_record(self) -> dict:
        return {
            "protocol": self.protocol,
            "parameters": self.parameters,
            "expected_size": self.expected_size,
            "min_fidelity": self.min_fidelity,
            "outcomes": [
                {"probability": o.probability, "multiplicity": o.multiplicity,
                 "ghz_subset": list(o.ghz_subset), "size": o.size, "fidelity": o.fidelity,
                 "label": list(o.label), "correction": list(o.correction)}
                for o in self.outcomes
            ],
        }


def expected_size(result: DistillationResult) -> float:
    return float(sum(o.probability * o.multiplicity * o.size for o in result.outcomes))


def _apply_x(state: PureState, sites: Sequence[int]) -> PureState:
    amps = state.amplitudes
    for s in sites:
        amps = apply_local(amps, state.num_qubits, s, X)
    return PureState(state.num_qubits, amps)


def _ghz_fidelity(state: PureState) -> float:
    return float(abs(np.vdot(ghz_vector(state.num_qubits), state.amplitudes)) ** 2)


_X_PROJECTORS = (LocalOperator(np.diag([1.0, 0.0]), Basis.X_BASIS),
                 LocalOperator(np.diag([0.0, 1.0]), Basis.X_BASIS))
_Z_PROJECTORS = (LocalOperator(np.diag([1.0, 0.0])), LocalOperator(np.diag([0.0, 1.0])))


def cluster_correction(lattice: DecoratedLattice, a_outcome: Sequence[int],
                       fixed_site: int = 0) -> np.ndarray | None:
    """Solve ``a(b) = a_outcome`` with ``b[fixed_site] = 0``; None if no such ``b``.

    The returned ``b`` lists the B sites that need a sigma^x correction.
    """
    inc = lattice.incidence()
    keep = [v for v in range(lattice.num_b) if v != fixed_site]
    sol = gf2.solve(inc[:, keep], np.asarray(a_outcome, dtype=np.uint8))
    if sol is None:
        return None
    b = np.zeros(lattice.num_b, dtype=np.uint8)
    b[keep] = sol
    return b


def cluster_distill_ideal(lattice: DecoratedLattice, fixed_site: int = 0) -> DistillationResult:
    """Measure every A qubit in the x basis and undo the resulting sigma^x pattern on B."""
    psi = cluster_state(lattice)
    ens = measure_sites(psi, lattice.a_sites, _X_PROJECTORS, discard=True)
    assert list(ens.remaining_sites) == lattice.b_sites
    outcomes = []
    for br in ens:
        b = cluster_correction(lattice, br.label, fixed_site)
        if b is None:
            raise DistillationError(f"outcome {br.label} has no consistent B pattern")
        flips = tuple(int(s) for s in np.nonzero(b)[0])
        fixed = _apply_x(br.state, flips)
        outcomes.append(Outcome(br.probability, tuple(lattice.b_sites), _ghz_fidelity(fixed),
                                label=br.label, correction=flips))
    return DistillationResult("cluster_ideal", outcomes,
                              {"extents": list(lattice.extents), "fixed_site": fixed_site})


def kitaev_correction(lattice: SurfaceLattice, a_bits: Sequence[int]) -> np.ndarray | None:
    """Loop bits ``c_B`` (first loop edge fixed to 0) closing the measured ``c_A``."""
    a_sites = lattice.a_sites
    loop = list(lattice.loop)
    inc_a = lattice.vertex_incidence(a_sites).astype(np.int64)
    rhs = (inc_a @ np.asarray(a_bits, dtype=np.int64)) % 2
    sol = gf2.solve(lattice.vertex_incidence(loop), rhs)
    if sol is None:
        return None
    if sol[0]:
        sol ^= 1
    return sol


def kitaev_distill_ideal(lattice: SurfaceLattice) -> DistillationResult:
    """z-measure every qubit off the loop; flip loop qubits so each branch is GHZ."""
    psi = surface_code_ground(lattice)
    a_sites = lattice.a_sites
    loop = list(lattice.loop)
    if not a_sites:
        return DistillationResult("kitaev_ideal", [
            Outcome(1.0, tuple(sorted(loop)), _ghz_fidelity(psi))], {"extents": [lattice.rows, lattice.cols]})
    ens = measure_sites(psi, a_sites, _Z_PROJECTORS, discard=True)
    pos = {s: k for k, s in enumerate(ens.remaining_sites)}
    outcomes = []
    for br in ens:
        cb = kitaev_correction(lattice, br.label)
        if cb is None:
            raise DistillationError(f"outcome {br.label} is not closable on the loop")
        flips = tuple(pos[loop[k]] for k in np.nonzero(cb)[0])
        fixed = _apply_x(br.state, flips)
        outcomes.append(Outcome(br.probability, tuple(ens.remaining_sites), _ghz_fidelity(fixed),
                                label=br.label,
                                correction=tuple(loop[k] for k in np.nonzero(cb)[0])))
    return DistillationResult("kitaev_ideal", outcomes,
                              {"extents": [lattice.rows, lattice.cols], "loop": loop})


# -- generalized GHZ ---------------------------------------------------------

def ggz_filter(eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Success/failure operators; success maps ``|+-eps>`` onto ``|+->`` up to a common factor."""
    t = np.tan(eps / 2)
    success = np.diag([t, 1.0]).astype(complex)
    failure = np.diag([np.sqrt(max(0.0, 1 - t * t)), 0.0]).astype(complex)
    return success, failure


def _ggz_branch(psi: PureState, pattern: Sequence[int], eps: float):
    success, failure = ggz_filter(eps)
    amps = psi.amplitudes
    for site, ok in enumerate(pattern):
        amps = apply_local(amps, psi.num_qubits, site, success if ok else failure)
    p = float(np.vdot(amps, amps).real)
    if p < 1e-14:
        return p, None, 0.0
    subset = [s for s, ok in enumerate(pattern) if ok]
    # Hadamards on the successful sites turn |+>^S + |->^S into GHZ_S
    for s in subset:
        amps = apply_local(amps, psi.num_qubits, s, H)
    amps = amps / np.sqrt(p)
    target = np.zeros_like(amps)
    mask = sum(1 << s for s in subset)
    if subset:
        target[0] = target[mask] = 1 / np.sqrt(2)
    else:
        target[0] = 1
    return p, tuple(subset), float(abs(np.vdot(target, amps)) ** 2)


def generalized_ghz_distill(n: int, eps: float, exhaustive: bool = False) -> DistillationResult:
    """Local filtering protocol for ``|eps>^n + |-eps>^n``.

    Each qubit gets the two-outcome filter ``{diag(tan(eps/2), 1), failure}``;
    successful qubits end up in an x-basis GHZ (rotated back by Hadamards)
    and failed ones in ``|0>``. Outcomes are grouped by number of successes
    unless ``exhaustive`` is set, in which case every pattern is simulated.
    """
    if not 0 < eps <= np.pi / 2:
        raise DistillationError("eps must lie in (0, pi/2]")
    psi = generalized_ghz(n, eps)
    outcomes = []
    if exhaustive:
        for pattern in itertools.product((1, 0), repeat=n):
            p, subset, fid = _ggz_branch(psi, pattern, eps)
            if subset is not None:
                outcomes.append(Outcome(p, subset, fid, label=pattern))
    else:
        for s in range(n, -1, -1):
            pattern = (1,) * s + (0,) * (n - s)
            p, subset, fid = _ggz_branch(psi, pattern, eps)
            if subset is not None:
                outcomes.append(Outcome(p, subset, fid, multiplicity=comb(n, s), label=pattern))
    res = DistillationResult("generalized_ghz_filter", outcomes, {"n": n, "eps": eps})
    if abs(res.total_probability - 1) > 1e-10:
        raise DistillationError(f"outcome probabilities sum to {res.total_probability}")
    return res


def ggz_expected_size_closed_form(n: int, eps: float) -> float:
    """``n a (1 - b^(n-1)) / (1 + b^n)`` with ``a = 2 sin^2(eps/2)``, ``b = cos(eps)``."""
    a = 2 * np.sin(eps / 2) ** 2
    b = np.cos(eps)
    return float(n * a * (1 - b ** (n - 1)) / (1 + b**n))


def identity_protocol(psi: PureState) -> DistillationResult:
    """Trivial protocol: keep the state; valid only if it already is GHZ."""
    fid = _ghz_fidelity(psi)
    if fid < 1 - 1e-9:
        raise DistillationError("input is not a GHZ state")
    return DistillationResult("identity", [Outcome(1.0, tuple(range(psi.num_qubits)), fid)],
                              {"n": psi.num_qubits})


def protocol_vs_bound(n: int, eps: float) -> tuple[float, float]:
    res = generalized_ghz_distill(n, eps)
    return res.expected_size, nd_upper_bound_symmetric(generalized_ghz(n, eps))


# -- perturbed cluster distillation -------------------------------------------

def perturbed_cluster_branch(lattice: DecoratedLattice, model: MeasurementModel) -> PureState:
    """Normalized post-measurement state for outcome E on every A qubit."""
    e, _ = model.operators()
    psi = cluster_state(lattice)
    amps = psi.amplitudes
    m = e.z_matrix
    for s in lattice.a_sites:
        amps = apply_local(amps, psi.num_qubits, s, m)
    norm = np.linalg.norm(amps)
    if norm < 1e-150:
        raise DistillationError("the all-E branch has zero probability")
    return PureState(psi.num_qubits, amps / norm)


def _b_configurations(num_b: int, fixed_site: int) -> np.ndarray:
    free = [v for v in range(num_b) if v != fixed_site]
    idx = np.arange(2 ** len(free))
    bits = np.zeros((idx.size, num_b), dtype=np.uint8)
    for k, v in enumerate(free):
        bits[:, v] = (idx >> k) & 1
    return bits


def perturbed_cluster_fisher_closed_form(lattice: DecoratedLattice, eps: float,
                                         fixed_site: int = 0) -> float:
    """``sum_b eps^|a(b)| (N_B - 2|b|)^2 / sum_b eps^|a(b)|`` over ``b`` with one site fixed."""
    if lattice.num_b > ENUM_CAP_BITS:
        raise DistillationError(f"{lattice.num_b} B sites exceed the enumeration cap")
    if eps < 0:
        raise DistillationError("eps must be nonnegative")
    b = _b_configurations(lattice.num_b, fixed_site)
    a_weight = lattice.bond_pattern(b).sum(axis=1)
    mag = lattice.num_b - 2 * b.sum(axis=1).astype(np.int64)
    w = np.power(float(eps), a_weight)
    return float(np.sum(w * mag**2) / np.sum(w))


# -- perturbed Kitaev distillation --------------------------------------------

def perturbed_kitaev_branch(lattice: SurfaceLattice, model: MeasurementModel) -> PureState:
    e, _ = model.operators()
    psi = surface_code_ground(lattice)
    amps = psi.amplitudes
    m = e.z_matrix
    for s in lattice.a_sites:
        amps = apply_local(amps, psi.num_qubits, s, m)
    return PureState(psi.num_qubits, amps / np.linalg.norm(amps))


def kitaev_zb2_dense(lattice: SurfaceLattice, model: MeasurementModel) -> float:
    psi = perturbed_kitaev_branch(lattice, model)
    n = psi.num_qubits
    idx = np.arange(2**n)
    ones = np.zeros(2**n, dtype=np.int64)
    for s in lattice.loop:
        ones += (idx >> s) & 1
    mag = len(lattice.loop) - 2 * ones
    return float(np.sum(np.abs(psi.amplitudes) ** 2 * mag**2))


def perturbed_kitaev_zb2(lattice: SurfaceLattice, model: MeasurementModel,
                         weight: str = "magnetization", cap: int = 1 << 20) -> float:
    """``<Z_B^2>`` of the all-E branch from the closed-loop / deformation double sum.

    ``weight="magnetization"`` uses ``(N_B - 2|c_B|)^2``; ``weight="literal"``
    uses ``(N_B - |c_B|)^2``. Only the former matches direct simulation.
    """
    if weight not in ("magnetization", "literal"):
        raise ValueError("weight must be 'magnetization' or 'literal'")
    if model.basis is not Basis.Z_BASIS:
        raise DistillationError("Kitaev distillation measures in the z basis")
    loops = gf2.span(cycle_basis(lattice, range(lattice.num_qubits)))
    deform = gf2.span(cycle_basis(lattice, lattice.a_sites))
    if loops.shape[0] * deform.shape[0] > cap:
        raise DistillationError("loop enumeration exceeds cap")
    a = np.asarray(lattice.a_sites, dtype=int)
    b = np.asarray(lattice.loop, dtype=int)
    n_b = len(b)
    c_a = loops[:, a].astype(np.int64)
    z_a = deform[:, a].astype(np.int64)
    cb = loops[:, b].sum(axis=1)
    sq = (n_b - 2 * cb) ** 2 if weight == "magnetization" else (n_b - cb) ** 2
    d = complex(model.delta)
    # <c+z|E^dag E|c>: delta where (out, in) = (1, 0), conj(delta) where (0, 1), eps where both 1
    n10 = (1 - c_a) @ z_a.T
    n01 = c_a @ z_a.T
    n11 = c_a @ (1 - z_a).T
    w = (np.power(d, n10) * np.power(d.conjugate(), n01) * np.power(float(model.eps), n11))
    z = w.sum().real
    return float((w.sum(axis=1).real * sq).sum() / z)
