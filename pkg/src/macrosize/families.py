"""State families and the lattices that define them.

Decorated lattices put a B qubit on every vertex of a d-dimensional
open square lattice and an A qubit on every edge. Qubits are numbered B
first (vertices in C order) and then A (edges in construction order).

Surface lattices put one qubit on every edge of a planar patch of
``rows x cols`` plaquettes. Horizontal edges come first, then vertical ones.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from . import gf2
from .statevec import MAX_QUBITS, PureState, StateError, apply_cz_layer


class LatticeError(ValueError):
    """Invalid lattice description."""


def ghz(n: int) -> PureState:
    if n < 1:
        raise StateError("GHZ state needs n >= 1")
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = vec[-1] = 1 / np.sqrt(2)
    return PureState(n, vec)


def generalized_ghz(n: int, eps: float) -> PureState:
    """State proportional to ``|eps>^n + |-eps>^n`` with ``|+-eps> = cos(eps/2)|0> +- sin(eps/2)|1>``.

    The normalization uses the exact overlap ``<eps|-eps>^n = cos(eps)^n``.
    """
    if n < 1:
        raise StateError("need n >= 1")
    if not 0 <= eps <= np.pi:
        raise StateError(f"eps must lie in [0, pi], got {eps}")
    c, s = np.cos(eps / 2), np.sin(eps / 2)
    plus = np.ones(1)
    minus = np.ones(1)
    for _ in range(n):
        plus = np.kron(np.array([c, s]), plus)
        minus = np.kron(np.array([c, -s]), minus)
    norm2 = 2 + 2 * np.cos(eps) ** n
    if norm2 < 1e-24:
        raise StateError("the two branches cancel for this (n, eps)")
    return PureState(n, (plus + minus) / np.sqrt(norm2))


def dicke(n: int, k: int) -> PureState:
    if n < 1:
        raise StateError("need n >= 1")
    if not 0 <= k <= n:
        raise StateError(f"excitation number k={k} outside [0, {n}]")
    idx = np.arange(2**n)
    weight = np.zeros(2**n, dtype=np.int64)
    for q in range(n):
        weight += (idx >> q) & 1
    vec = np.where(weight == k, 1 / np.sqrt(comb(n, k)), 0).astype(complex)
    return PureState(n, vec)


# -- decorated lattices / cluster states ---------------------------------------

@dataclass(frozen=True)
class DecoratedLattice:
    """B qubits on the vertices, A qubits on the edges of an open square lattice."""

    extents: tuple[int, ...]
    vertices: list[tuple[int, ...]] = field(init=False, repr=False)
    edges: list[tuple[int, int]] = field(init=False, repr=False)

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not ext or any(e < 1 for e in ext):
            raise LatticeError(f"extents must be positive integers, got {self.extents}")
        object.__setattr__(self, "extents", ext)
        verts = list(itertools.product(*(range(e) for e in ext)))
        if len(verts) < 2:
            raise LatticeError("a decorated lattice needs at least two vertices")
        pos = {v: k for k, v in enumerate(verts)}
        edges = []
        for v in verts:
            for axis in range(len(ext)):
                w = list(v)
                w[axis] += 1
                if tuple(w) in pos:
                    edges.append((pos[v], pos[tuple(w)]))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)

    @property
    def dimension(self) -> int:
        return len(self.extents)

    @property
    def num_b(self) -> int:
        return len(self.vertices)

    @property
    def num_a(self) -> int:
        return len(self.edges)

    @property
    def num_qubits(self) -> int:
        return self.num_b + self.num_a

    @property
    def b_sites(self) -> list[int]:
        return list(range(self.num_b))

    @property
    def a_sites(self) -> list[int]:
        return list(range(self.num_b, self.num_qubits))

    def a_neighbors(self, k: int) -> tuple[int, int]:
        """The two B sites adjacent to the ``k``-th A site."""
        return self.edges[k]

    @property
    def cz_pairs(self) -> list[tuple[int, int]]:
        pairs = []
        for k, (u, v) in enumerate(self.edges):
            a = self.num_b + k
            pairs += [(a, u), (a, v)]
        return pairs

    def bond_pattern(self, b: Sequence[int]) -> np.ndarray:
        """``a(b)``: 1 on every edge whose endpoints differ."""
        b = np.asarray(b, dtype=np.uint8)
        e = np.asarray(self.edges)
        return b[..., e[:, 0]] ^ b[..., e[:, 1]]

    def incidence(self) -> np.ndarray:
        """Edge x vertex incidence matrix (mod 2)."""
        m = np.zeros((self.num_a, self.num_b), dtype=np.uint8)
        for k, (u, v) in enumerate(self.edges):
            m[k, u] = m[k, v] = 1
        return m

    def to_json(self) -> dict:
        return {"kind": "decorated", "dimension": self.dimension, "extents": list(self.extents)}


def cluster_state(lattice: DecoratedLattice) -> PureState:
    """CZ between every neighboring pair, applied to ``|+>^N``."""
    if lattice.num_qubits > MAX_QUBITS:
        raise StateError(f"cluster state needs {lattice.num_qubits} qubits (cap {MAX_QUBITS})")
    return apply_cz_layer(PureState.plus(lattice.num_qubits), lattice.cz_pairs)


# -- planar surface code -----------------------------------------------------

@dataclass(frozen=True)
class LoopConfiguration:
    bits: np.ndarray
    lattice: "SurfaceLattice" = field(repr=False, compare=False)

    @property
    def boundary(self) -> np.ndarray:
        """Vertex parity vector; all zero for closed configurations."""
        return (self.lattice.vertex_incidence().astype(np.int64) @ self.bits) % 2

    @property
    def is_closed(self) -> bool:
        return not self.boundary.any()

    def on_edges(self) -> list[int]:
        return [int(e) for e in np.nonzero(self.bits)[0]]


@dataclass(frozen=True)
class SurfaceLattice:
    """Planar patch of ``rows x cols`` plaquettes with qubits on edges.

    All boundaries are smooth, so plaquettes generate every closed curve
    and the ground state is unique. ``loop`` is the ordered edge list of
    the distillation loop B; by default a centered rectangle.
    """

    rows: int
    cols: int
    loop: tuple[int, ...] | None = None
    edge_vertices: list[tuple[tuple[int, int], tuple[int, int]]] = field(init=False, repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise LatticeError("plaquette extents must be positive")
        ev = []
        for r in range(self.rows + 1):
            for c in range(self.cols):
                ev.append(((r, c), (r, c + 1)))
        for r in range(self.rows):
            for c in range(self.cols + 1):
                ev.append(((r, c), (r + 1, c)))
        object.__setattr__(self, "edge_vertices", ev)
        if self.loop is None:
            object.__setattr__(self, "loop", tuple(self.default_loop()))
        else:
            object.__setattr__(self, "loop", tuple(int(e) for e in self.loop))
        self._validate_loop()

    # geometry
    @property
    def num_qubits(self) -> int:
        return len(self.edge_vertices)

    def h_edge(self, r: int, c: int) -> int:
        return r * self.cols + c

    def v_edge(self, r: int, c: int) -> int:
        return (self.rows + 1) * self.cols + r * (self.cols + 1) + c

    @property
    def vertices(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.rows + 1) for c in range(self.cols + 1)]

    def edge_index(self, u: tuple[int, int], v: tuple[int, int]) -> int:
        u, v = sorted([tuple(u), tuple(v)])
        if u[0] == v[0] and v[1] == u[1] + 1 and 0 <= u[0] <= self.rows and 0 <= u[1] < self.cols:
            return self.h_edge(*u)
        if u[1] == v[1] and v[0] == u[0] + 1 and 0 <= u[0] < self.rows and 0 <= u[1] <= self.cols:
            return self.v_edge(*u)
        raise LatticeError(f"{u}-{v} is not an edge of the {self.rows}x{self.cols} patch")

    @property
    def plaquettes(self) -> list[tuple[int, int, int, int]]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                out.append((self.h_edge(r, c), self.v_edge(r, c + 1),
                            self.h_edge(r + 1, c), self.v_edge(r, c)))
        return out

    @property
    def stars(self) -> list[tuple[int, ...]]:
        touching = {v: [] for v in self.vertices}
        for e, (u, v) in enumerate(self.edge_vertices):
            touching[u].append(e)
            touching[v].append(e)
        return [tuple(touching[v]) for v in self.vertices]

    def vertex_incidence(self, edges: Sequence[int] | None = None) -> np.ndarray:
        """Vertex x edge incidence (mod 2), restricted to ``edges`` if given."""
        edges = range(self.num_qubits) if edges is None else list(edges)
        vidx = {v: k for k, v in enumerate(self.vertices)}
        m = np.zeros((len(vidx), len(edges)), dtype=np.uint8)
        for j, e in enumerate(edges):
            u, v = self.edge_vertices[e]
            m[vidx[u], j] = m[vidx[v], j] = 1
        return m

    def face_edges(self) -> list[tuple[int, int, int, int]]:
        return self.plaquettes

    def edge_faces(self) -> list[tuple[int, int]]:
        """The two faces on either side of each edge; -1 is the exterior."""
        sides = [[] for _ in range(self.num_qubits)]
        for f, es in enumerate(self.plaquettes):
            for e in es:
                sides[e].append(f)
        return [tuple(s + [-1] * (2 - len(s))) for s in sides]

    # distillation loop
    def rectangle_loop(self, r0: int, c0: int, r1: int, c1: int) -> list[int]:
        """Boundary of the plaquette block ``[r0, r1) x [c0, c1)``, in traversal order."""
        if not (0 <= r0 < r1 <= self.rows and 0 <= c0 < c1 <= self.cols):
            raise LatticeError("rectangle outside the patch")
        top = [self.h_edge(r0, c) for c in range(c0, c1)]
        right = [self.v_edge(r, c1) for r in range(r0, r1)]
        bottom = [self.h_edge(r1, c) for c in reversed(range(c0, c1))]
        left = [self.v_edge(r, c0) for r in reversed(range(r0, r1))]
        return top + right + bottom + left

    def default_loop(self) -> list[int]:
        r0 = 1 if self.rows > 2 else 0
        c0 = 1 if self.cols > 2 else 0
        return self.rectangle_loop(r0, c0, self.rows - r0, self.cols - c0)

    def with_loop(self, loop: Iterable[int]) -> "SurfaceLattice":
        return SurfaceLattice(self.rows, self.cols, tuple(loop))

    def _validate_loop(self) -> None:
        loop = list(self.loop)
        if len(loop) < 4:
            raise LatticeError("loop B needs at least four edges")
        if len(set(loop)) != len(loop):
            raise LatticeError("loop B repeats an edge")
        for pos, e in enumerate(loop):
            if not 0 <= e < self.num_qubits:
                raise LatticeError(f"loop edge at position {pos} ({e}) is not on the lattice")
        degree: dict = {}
        for e in loop:
            for v in self.edge_vertices[e]:
                degree[v] = degree.get(v, 0) + 1
        bad = [v for v, d in degree.items() if d != 2]
        if bad:
            raise LatticeError(f"loop B is not a simple closed curve at vertices {bad}")
        # single component
        adj: dict = {}
        for e in loop:
            u, v = self.edge_vertices[e]
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(adj):
            raise LatticeError("loop B has more than one component")

    @property
    def b_sites(self) -> list[int]:
        return list(self.loop)

    @property
    def a_sites(self) -> list[int]:
        loop = set(self.loop)
        return [e for e in range(self.num_qubits) if e not in loop]

    def inside_faces(self) -> list[int]:
        """Faces enclosed by loop B (flood fill from the exterior)."""
        loop = set(self.loop)
        sides = self.edge_faces()
        adj = {f: set() for f in range(-1, self.rows * self.cols)}
        for e, (f, g) in enumerate(sides):
            if e not in loop:
                adj[f].add(g)
                adj[g].add(f)
        seen = {-1}
        stack = [-1]
        while stack:
            for g in adj[stack.pop()]:
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        return [f for f in range(self.rows * self.cols) if f not in seen]

    def split_a_sites(self) -> tuple[list[int], list[int]]:
        """A edges inside and outside loop B."""
        inside = set(self.inside_faces())
        sides = self.edge_faces()
        ins, outs = [], []
        for e in self.a_sites:
            f, g = sides[e]
            (ins if f in inside else outs).append(e)
            if (f in inside) != (g in inside):
                raise LatticeError("an A edge crosses loop B")
        return ins, outs

    def to_json(self) -> dict:
        return {"kind": "surface", "dimension": 2, "extents": [self.rows, self.cols],
                "loop": [[list(u), list(v)] for u, v in (self.edge_vertices[e] for e in self.loop)]}


def cycle_basis(lattice: SurfaceLattice, region: Sequence[int]) -> np.ndarray:
    """Basis of closed configurations supported on ``region``, as full edge bit rows."""
    region = sorted(set(int(e) for e in region))
    full = np.zeros((0, lattice.num_qubits), dtype=np.uint8)
    if not region:
        return full
    ker = gf2.nullspace(lattice.vertex_incidence(region))
    out = np.zeros((ker.shape[0], lattice.num_qubits), dtype=np.uint8)
    out[:, region] = ker
    return out


def enumerate_closed_loops(lattice: SurfaceLattice, region: Sequence[int],
                           cap: int = 1 << 16) -> list[LoopConfiguration]:
    """Every configuration with empty boundary supported on ``region``."""
    for e in region:
        if not 0 <= e < lattice.num_qubits:
            raise LatticeError(f"region edge {e} not on the lattice")
    basis = cycle_basis(lattice, region)
    if 2 ** basis.shape[0] > cap:
        raise LatticeError(f"{2 ** basis.shape[0]} loop configurations exceed cap {cap}")
    if basis.shape[0] == 0:
        return [LoopConfiguration(np.zeros(lattice.num_qubits, dtype=np.uint8), lattice)]
    return [LoopConfiguration(row, lattice) for row in gf2.span(basis)]


def _flip_mask(edges: Iterable[int]) -> int:
    return sum(1 << int(e) for e in edges)


def surface_code_ground(lattice: SurfaceLattice) -> PureState:
    """Apply prod_p (I + x_p)/sqrt(2) to ``|0...0>`` and check the stabilizers."""
    n = lattice.num_qubits
    if n > MAX_QUBITS:
        raise StateError(f"surface code needs {n} qubits (cap {MAX_QUBITS})")
    idx = np.arange(2**n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1
    for p in lattice.plaquettes:
        amps = (amps + amps[idx ^ _flip_mask(p)]) / np.sqrt(2)
    amps /= np.linalg.norm(amps)
    state = PureState(n, amps)
    for p in lattice.plaquettes:
        if not np.allclose(amps[idx ^ _flip_mask(p)], amps, atol=1e-10):
            raise StateError("plaquette stabilizer violated")
    for s in lattice.stars:
        parity = np.zeros(2**n, dtype=np.int64)
        for e in s:
            parity ^= (idx >> e) & 1
        if np.any(np.abs(amps[parity == 1]) > 1e-10):
            raise StateError("star stabilizer violated")
    return state


# -- lattice files -------------------------------------------------------------

def _schema() -> dict:
    return json.loads((Path(__file__).parent / "schemas" / "lattice.schema.json").read_text())


def lattice_from_dict(data: dict):
    """Build a lattice from its JSON description; errors name the offending position."""
    validator = jsonschema.Draft7Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise LatticeError(f"lattice file invalid at {where}: {e.message}")
    if data["kind"] == "decorated":
        if len(data["extents"]) != data["dimension"]:
            raise LatticeError("lattice file invalid at extents: length must equal dimension")
        return DecoratedLattice(tuple(data["extents"]))
    rows, cols = data["extents"]
    lat = SurfaceLattice(rows, cols)
    if "loop" in data:
        edges = []
        for pos, (u, v) in enumerate(data["loop"]):
            try:
                edges.append(lat.edge_index(tuple(u), tuple(v)))
            except LatticeError as exc:
                raise LatticeError(f"lattice file invalid at loop/{pos}: {exc}") from None
        lat = lat.with_loop(edges)
    return lat


def load_lattice(path: str | Path):
    return lattice_from_dict(json.loads(Path(path).read_text()))
