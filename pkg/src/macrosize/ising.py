"""Classical Ising backends: exact enumeration, 1D transfer matrix, Monte Carlo.

Couplings are dimensionless (``beta_J``). Annealed bond dilution follows
the configuration weight ``prod_e [q e^{-bJ}]^{f_e} (e^{-2bJ})^{b_e (1 - f_e)}``
with ``q = p/(1-p)``, ``b_e`` the unsatisfied-bond indicator and ``f_e`` the
"bond removed" indicator.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .families import SurfaceLattice

EXACT_CAP = 20


class IsingError(ValueError):
    pass


# -- parameter maps -------------------------------------------------------------

def map_cluster_params(eps: float) -> float:
    """``eps = exp(-2 beta J)``."""
    if not 0 < eps <= 1:
        raise IsingError(f"eps must lie in (0, 1], got {eps}")
    return -math.log(eps) / 2


def map_kitaev_params(eps: float, delta: float) -> tuple[float, float]:
    """Solve ``eps = exp(-2bJ)``, ``delta = p/(1-p) exp(-bJ)`` for ``(bJ, p)``."""
    if not 0 < eps <= 1:
        raise IsingError(f"eps must lie in (0, 1], got {eps}")
    if delta < 0 or not math.isfinite(delta):
        raise IsingError("delta must be a finite nonnegative real")
    beta_j = -math.log(eps) / 2
    root = math.sqrt(eps)
    p = delta / (delta + root)
    if not 0 <= p < 1:
        raise IsingError("no dilution probability in [0, 1) reproduces this delta")
    return beta_j, p


def unmap_kitaev_params(beta_j: float, p: float) -> tuple[float, float]:
    if beta_j < 0 or not 0 <= p < 1:
        raise IsingError("need beta_J >= 0 and p in [0, 1)")
    return math.exp(-2 * beta_j), p / (1 - p) * math.exp(-beta_j)


def griffiths_lower_bound(eps: float) -> float:
    """Leading-order low-temperature bound ``<M^2>/N^2 >= 1 - 2 eps^4``.

    Only meaningful asymptotically as eps -> 0; the constant is not exact.
    """
    if not 0 < eps < 1:
        raise IsingError("eps must lie in (0, 1)")
    return 1 - 2 * eps**4


# -- models -----------------------------------------------------------------------

@dataclass(frozen=True)
class IsingModel:
    """Ferromagnet on an open (or periodic) square lattice, optionally with annealed dilution."""

    extents: tuple[int, ...]
    beta_J: float
    dilution_p: float = 0.0
    boundary: str = "free"
    dilution_kind: str = "annealed"
    constrained_bonds: bool = False

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not ext or any(e < 1 for e in ext):
            raise IsingError("extents must be positive")
        object.__setattr__(self, "extents", ext)
        if math.isnan(self.beta_J) or self.beta_J < 0:
            raise IsingError("beta_J must be >= 0")
        if not 0 <= self.dilution_p < 1:
            raise IsingError("dilution_p must lie in [0, 1)")
        if self.boundary not in ("free", "periodic"):
            raise IsingError("boundary must be 'free' or 'periodic'")
        if self.dilution_kind != "annealed":
            raise IsingError("only annealed dilution is supported")

    @property
    def dimension(self) -> int:
        return len(self.extents)

    @property
    def num_spins(self) -> int:
        return math.prod(self.extents)

    @property
    def eps(self) -> float:
        return math.exp(-2 * self.beta_J)

    @property
    def removed_weight(self) -> float:
        """Weight of a removed bond, ``p/(1-p) exp(-bJ)``."""
        p = self.dilution_p
        return p / (1 - p) * math.exp(-self.beta_J)

    def bonds(self) -> list[tuple[int, int]]:
        ext = self.extents
        sites = list(itertools.product(*(range(e) for e in ext)))
        pos = {s: k for k, s in enumerate(sites)}
        out = []
        for s in sites:
            for axis in range(len(ext)):
                t = list(s)
                t[axis] += 1
                if t[axis] == ext[axis]:
                    if self.boundary != "periodic" or ext[axis] < 3:
                        continue
                    t[axis] = 0
                out.append((pos[s], pos[tuple(t)]))
        return out

    def neighbors(self) -> list[list[tuple[int, int]]]:
        """Per spin: list of (neighbor, bond index)."""
        nb = [[] for _ in range(self.num_spins)]
        for k, (i, j) in enumerate(self.bonds()):
            nb[i].append((j, k))
            nb[j].append((i, k))
        return nb


def _log_weights(unsat: np.ndarray, beta_j: float) -> np.ndarray:
    if math.isinf(beta_j):
        return np.where(unsat == unsat.min(), 0.0, -np.inf)
    return -2 * beta_j * unsat


def _spin_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1 - 2 * ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int8)


def exact_m2(model: IsingModel) -> float:
    """Exact Boltzmann average of ``M^2`` by enumerating all spin configurations.

    With dilution every bond variable is summed out independently, giving a
    per-bond weight ``eps^{b_e} + q exp(-bJ)``.
    """
    n = model.num_spins
    if n > EXACT_CAP:
        raise IsingError(f"{n} spins exceed the exact-enumeration cap {EXACT_CAP}")
    spins = _spin_table(n)
    mag = spins.sum(axis=1).astype(np.int64)
    bonds = model.bonds()
    if model.dilution_p == 0:
        unsat = np.zeros(2**n, dtype=np.int64)
        for i, j in bonds:
            unsat += spins[:, i] != spins[:, j]
        logw = _log_weights(unsat, model.beta_J)
    elif not model.constrained_bonds:
        logw = np.zeros(2**n)
        r = model.removed_weight
        for i, j in bonds:
            logw += np.log(np.where(spins[:, i] == spins[:, j], 1.0, model.eps) + r)
    else:
        # removed bonds restricted to sums of spin stars
        stars = np.zeros((n, len(bonds)), dtype=np.uint8)
        for k, (i, j) in enumerate(bonds):
            stars[i, k] = stars[j, k] = 1
        patterns = gf2.span(stars[_independent_rows(stars)])
        unsat = np.stack([spins[:, i] != spins[:, j] for i, j in bonds], axis=1).astype(np.int64)
        w = np.zeros(2**n)
        r = model.removed_weight
        for f in patterns:
            on = f.astype(bool)
            w += r ** int(on.sum()) * model.eps ** unsat[:, ~on].sum(axis=1)
        logw = np.log(w)
    logw -= logw.max()
    w = np.exp(logw)
    return float(np.sum(w * mag**2) / np.sum(w))


def _independent_rows(m: np.ndarray) -> list[int]:
    """Indices of a maximal independent subset of rows (mod 2)."""
    keep: list[int] = []
    for k in range(m.shape[0]):
        if gf2.rank(m[keep + [k]]) > len(keep):
            keep.append(k)
    return keep


def exact_correlators(model: IsingModel) -> np.ndarray:
    """Matrix of ``<s_i s_j>`` by enumeration (pure or independently diluted bonds)."""
    n = model.num_spins
    if n > EXACT_CAP:
        raise IsingError("too many spins for enumeration")
    spins = _spin_table(n).astype(float)
    logw = np.zeros(2**n)
    r = model.removed_weight
    for i, j in model.bonds():
        same = spins[:, i] == spins[:, j]
        if r == 0:
            logw += np.where(same, 0.0, -2 * model.beta_J)
        else:
            logw += np.log(np.where(same, 1.0, model.eps) + r)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    return (spins * w[:, None]).T @ spins


def transfer_matrix_m2_1d(length: int, beta_J: float) -> float:
    """Exact ``<M^2>`` of the open chain from transfer matrices.

    ``Z(h)`` is propagated as a power series in a uniform field ``h``
    truncated at second order; ``<M^2> = Z''(0)/Z(0)``.
    """
    if length < 2:
        raise IsingError("chain length must be >= 2")
    if beta_J < 0:
        raise IsingError("beta_J must be >= 0")
    t = 1.0 if math.isinf(beta_J) else math.tanh(beta_J)
    bond = np.array([[1 + t, 1 - t], [1 - t, 1 + t]]) / 2
    s = np.array([1.0, -1.0])
    # series coefficients of exp(h s) on the diagonal
    field_series = [np.ones(2), s, s**2 / 2]
    vec = [f.copy() for f in field_series]
    for _ in range(length - 1):
        moved = [bond @ v for v in vec]
        vec = [sum(field_series[a] * moved[k - a] for a in range(k + 1)) for k in range(3)]
        scale = vec[0].sum()
        vec = [v / scale for v in vec]
    z0 = vec[0].sum()
    z2 = vec[2].sum()
    return float(2 * z2 / z0)


def m2_1d_closed_form(length: int, beta_J: float) -> float:
    """``N + 2 sum_{i<j} tanh(bJ)^{j-i}``, the open-chain correlator sum."""
    t = 1.0 if math.isinf(beta_J) else math.tanh(beta_J)
    return float(length + 2 * sum((length - d) * t**d for d in range(1, length)))


# -- Monte Carlo -----------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    sweeps: int
    seed: int
    autocorrelation_time: float
    flagged: bool = False
    correlators: np.ndarray | None = field(default=None, repr=False, compare=False)


def blocking_error(samples: np.ndarray, min_blocks: int = 32) -> tuple[float, float]:
    """Standard error from the blocking plateau, and the implied integrated autocorrelation time."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise IsingError("need at least two samples")
    naive = x.std(ddof=1) / math.sqrt(n)
    best = naive
    while x.size >= 2 * min_blocks:
        x = 0.5 * (x[: x.size // 2 * 2 : 2] + x[1 : x.size // 2 * 2 : 2])
        best = max(best, x.std(ddof=1) / math.sqrt(x.size))
    tau = 0.5 * (best / naive) ** 2 if naive > 0 else 0.5
    floor = np.finfo(float).eps * max(1.0, abs(float(np.mean(samples))))
    return max(best, floor), tau


def _wolff_cluster(spins, nb, p_add, rng, n) -> int:
    seed = int(rng.integers(n))
    s0 = spins[seed]
    spins[seed] = -s0
    stack = [seed]
    size = 1
    while stack:
        i = stack.pop()
        for j, _ in nb[i]:
            if spins[j] == s0 and rng.random() < p_add:
                spins[j] = -s0
                stack.append(j)
                size += 1
    return size


def _dilute_sweep(spins, f, nb, bonds, eps, removed, constrained, rng):
    n = len(spins)
    for _ in range(n):
        i = int(rng.integers(n))
        ratio = 1.0
        for j, k in nb[i]:
            if not f[k]:
                ratio *= eps if spins[i] == spins[j] else 1 / eps
        if ratio >= 1 or rng.random() < ratio:
            spins[i] = -spins[i]
    if removed == 0:
        return
    moves = n if constrained else len(bonds)
    for _ in range(moves):
        if constrained:
            group = [k for _, k in nb[int(rng.integers(n))]]
        else:
            group = [int(rng.integers(len(bonds)))]
        ratio = 1.0
        for k in group:
            i, j = bonds[k]
            present = eps if spins[i] != spins[j] else 1.0
            ratio *= present / removed if f[k] else removed / present
        if ratio >= 1 or rng.random() < ratio:
            for k in group:
                f[k] ^= 1


def mc_m2(model: IsingModel, sweeps: int, burn_in: int = 0, seed: int = 0,
          correlators: bool = False) -> McEstimate:
    """Monte Carlo estimate of ``<M^2>``.

    Pure models use Wolff cluster updates. One sweep is a fixed number of
    clusters chosen so that about N spins flip; the count is frozen from
    the mean cluster size over the first burn-in sweeps, since stopping on
    the running flip count would bias the measurement. Diluted models use single-spin Metropolis plus
    bond moves; with ``constrained_bonds`` a bond move toggles every bond
    around one spin, so removed-bond patterns stay closed loops in the
    dual lattice.
    """
    if not sweeps > burn_in >= 0:
        raise IsingError("need sweeps > burn_in >= 0")
    rng = np.random.default_rng(seed)
    n = model.num_spins
    nb = model.neighbors()
    bonds = model.bonds()
    spins = [1] * n if model.beta_J > 0.3 else [int(s) for s in rng.choice([-1, 1], size=n)]
    f = [0] * len(bonds)
    p_add = 1 - model.eps
    samples = np.empty(sweeps - burn_in)
    corr = np.zeros((n, n)) if correlators else None
    pilot = min(burn_in, 50)
    sizes: list[int] = []
    clusters = None
    for sweep in range(sweeps):
        if model.dilution_p == 0:
            if sweep < pilot:
                flipped = 0
                while flipped < n:
                    size = _wolff_cluster(spins, nb, p_add, rng, n)
                    flipped += size
                    sizes.append(size)
            else:
                if clusters is None:
                    clusters = max(1, round(n * len(sizes) / sum(sizes))) if sizes else 1
                for _ in range(clusters):
                    _wolff_cluster(spins, nb, p_add, rng, n)
        else:
            _dilute_sweep(spins, f, nb, bonds, model.eps, model.removed_weight,
                          model.constrained_bonds, rng)
        if sweep >= burn_in:
            m = sum(spins)
            samples[sweep - burn_in] = m * m
            if correlators:
                s = np.asarray(spins, dtype=float)
                corr += np.outer(s, s)
    err, tau = blocking_error(samples)
    if correlators:
        corr /= samples.size
    return McEstimate(float(samples.mean()), err, sweeps, seed, tau,
                      flagged=tau > sweeps / 50, correlators=corr)


# -- Kitaev loop image --------------------------------------------------------------

@dataclass(frozen=True)
class LoopImage:
    """Spin model dual to a surface patch: one spin per plaquette, fixed +1 exterior.

    Bonds sit on the A edges; bond-removal patterns are restricted to the
    closed configurations of ``bond_edges`` (given as rows of ``f_basis``).
    ``pairs`` lists, for every B edge, the two spins it separates (-1 is the
    exterior).
    """

    spins: tuple[int, ...]
    bond_edges: tuple[int, ...]
    bond_ends: tuple[tuple[int, int], ...]
    f_basis: np.ndarray
    pairs: tuple[tuple[int, int], ...]


def loop_image(lattice: SurfaceLattice, region: str = "all") -> LoopImage:
    """The full dual model, or only its ``'inside'``/``'outside'`` section."""
    faces = list(range(lattice.rows * lattice.cols))
    sides = lattice.edge_faces()
    inside = set(lattice.inside_faces())
    if region == "all":
        spins, edges = faces, lattice.a_sites
    elif region == "inside":
        spins, edges = sorted(inside), lattice.split_a_sites()[0]
    elif region == "outside":
        spins, edges = [f for f in faces if f not in inside], lattice.split_a_sites()[1]
    else:
        raise IsingError("region must be 'all', 'inside' or 'outside'")
    if edges:
        ker = gf2.nullspace(lattice.vertex_incidence(edges))
    else:
        ker = np.zeros((0, 0), dtype=np.uint8)
    pairs = []
    for e in lattice.loop:
        f, g = sides[e]
        pairs.append((f, g) if f in inside or f == -1 and g not in inside else (g, f))
    return LoopImage(tuple(spins), tuple(edges), tuple(sides[e] for e in edges), ker, tuple(pairs))


def _image_enumeration(img: LoopImage, beta_j: float, p: float):
    """Spin table (with the exterior as last column) and configuration weights."""
    n = len(img.spins)
    if n > EXACT_CAP:
        raise IsingError("too many plaquette spins for enumeration")
    col = {s: k for k, s in enumerate(img.spins)}
    col[-1] = n
    spins = np.hstack([_spin_table(n), np.ones((2**n, 1), dtype=np.int8)]) if n else np.ones((1, 1), dtype=np.int8)
    eps = math.exp(-2 * beta_j)
    removed = p / (1 - p) * math.exp(-beta_j)
    unsat = np.stack([spins[:, col[f]] != spins[:, col[g]] for f, g in img.bond_ends], axis=1) \
        if img.bond_ends else np.zeros((spins.shape[0], 0), dtype=bool)
    fs = gf2.span(img.f_basis) if img.bond_ends else np.zeros((1, 0), dtype=np.uint8)
    w = np.zeros(spins.shape[0])
    for fpat in fs:
        on = fpat.astype(bool)
        w += removed ** on.sum() * eps ** (unsat[:, ~on].sum(axis=1))
    return spins, col, w


def dilute_loop_zb2(lattice: SurfaceLattice, beta_J: float, p: float) -> float:
    """``<(sum_B s_in s_out)^2>`` of the full dual model, summing spins and allowed bond patterns."""
    img = loop_image(lattice, "all")
    spins, col, w = _image_enumeration(img, beta_J, p)
    prod = sum(spins[:, col[a]].astype(np.int64) * spins[:, col[b]] for a, b in img.pairs)
    return float(np.sum(w * prod**2) / np.sum(w))


def _section_correlators(img: LoopImage, beta_j: float, p: float) -> dict:
    spins, col, w = _image_enumeration(img, beta_j, p)
    w = w / w.sum()
    keys = list(col)
    out = {}
    for a in keys:
        for b in keys:
            out[a, b] = float(np.sum(w * spins[:, col[a]] * spins[:, col[b]]))
    return out


def sections_independent(lattice: SurfaceLattice) -> bool:
    """True when every allowed bond pattern splits into inside and outside parts."""
    ins, outs = lattice.split_a_sites()
    total = gf2.nullspace(lattice.vertex_incidence(lattice.a_sites)).shape[0] if lattice.a_sites else 0
    part = sum(gf2.nullspace(lattice.vertex_incidence(r)).shape[0] for r in (ins, outs) if r)
    return total == part


def kitaev_zb2_from_correlators(lattice: SurfaceLattice, beta_J: float, p: float) -> float:
    """``N_B + 2 sum_{i<j} <s_i s_j>_in <s_i s_j>_out`` with independent inside/outside sections.

    Exact whenever :func:`sections_independent` holds (always at ``p = 0``).
    """
    inner = loop_image(lattice, "inside")
    outer = loop_image(lattice, "outside")
    cin = _section_correlators(inner, beta_J, p)
    cout = _section_correlators(outer, beta_J, p)
    pairs = loop_image(lattice, "all").pairs
    n_b = len(pairs)
    total = float(n_b)
    for i in range(n_b):
        for j in range(i + 1, n_b):
            (ai, bi), (aj, bj) = pairs[i], pairs[j]
            total += 2 * cin[ai, aj] * cout[bi, bj]
    return total
