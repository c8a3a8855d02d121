"""Periodic 3D cluster lattice, slab partitions and emission orders.

The lattice lives on the fine cubic grid ``Z_L^3`` (``L`` even). Sites with
exactly one odd coordinate are *edge* qubits, sites with exactly two odd
coordinates are *face* qubits. All-odd sites carry primal checks (product of
``X`` on the six face qubits around them) and all-even sites carry dual checks
(product of ``X`` on the six edge qubits around them). A ``Z`` error on a face
qubit flips two primal checks, on an edge qubit two dual checks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

PRIMAL_OBSERVABLES = ("primal_x", "primal_y", "primal_z")
DUAL_OBSERVABLES = ("dual_x", "dual_y", "dual_z")
OBSERVABLE_NAMES = PRIMAL_OBSERVABLES + DUAL_OBSERVABLES

_STEPS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def parity_class(coord: Sequence[int]) -> Tuple[int, int, int]:
    return (coord[0] % 2, coord[1] % 2, coord[2] % 2)


@dataclass(frozen=True)
class ClusterGraph:
    """Graph state target plus its checks and logical observables.

    ``coords`` is ``None`` for abstract graphs built with :meth:`from_edges`;
    those have no checks or observables and are only used to exercise the
    compilers.
    """

    num_vertices: int
    edges: np.ndarray  # (E, 2), rows sorted (u < v)
    L: Optional[int] = None
    coords: Optional[np.ndarray] = None  # (V, 3)
    primal_checks: Tuple[np.ndarray, ...] = ()
    dual_checks: Tuple[np.ndarray, ...] = ()
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    check_sites: Tuple[Tuple[int, int, int], ...] = ()
    neighbors: Tuple[Tuple[int, ...], ...] = ()

    @classmethod
    def from_edges(cls, num_vertices: int, edges) -> "ClusterGraph":
        pairs = sorted({(min(u, v), max(u, v)) for u, v in edges})
        for u, v in pairs:
            if u == v or not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ValueError(f"invalid edge {(u, v)}")
        arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(num_vertices=num_vertices, edges=arr, neighbors=_adjacency(num_vertices, arr))

    @property
    def num_checks(self) -> int:
        return len(self.primal_checks) + len(self.dual_checks)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def index_of(self, coord: Sequence[int]) -> int:
        if self.L is None:
            raise ValueError("abstract graph has no coordinates")
        x, y, z = (int(c) % self.L for c in coord)
        return self._index_lookup()[x, y, z]

    def _index_lookup(self) -> np.ndarray:
        L = self.L
        table = np.full((L, L, L), -1, dtype=np.int64)
        table[self.coords[:, 0], self.coords[:, 1], self.coords[:, 2]] = np.arange(self.num_vertices)
        return table

    def is_face(self, v: int) -> bool:
        return int((self.coords[v] % 2).sum()) == 2

    def sector_of(self, v: int) -> str:
        """``'primal'`` for face qubits, ``'dual'`` for edge qubits."""
        return "primal" if self.is_face(v) else "dual"

    def to_json(self) -> str:
        doc = {
            "L": self.L,
            "num_vertices": self.num_vertices,
            "coords": None if self.coords is None else self.coords.tolist(),
            "edges": self.edges.tolist(),
            "primal_checks": [c.tolist() for c in self.primal_checks],
            "dual_checks": [c.tolist() for c in self.dual_checks],
            "observables": {k: self.observables[k].tolist() for k in self.observables},
        }
        return json.dumps(doc, indent=None, separators=(",", ":"))


def _adjacency(n: int, edges: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    adj: List[List[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[int(u)].append(int(v))
        adj[int(v)].append(int(u))
    return tuple(tuple(sorted(a)) for a in adj)


def build_rhg(L: int) -> ClusterGraph:
    """Build the periodic ``L x L x L`` topological cluster lattice."""
    if not isinstance(L, (int, np.integer)) or L < 4 or L % 2:
        raise ValueError(f"L must be an even integer >= 4, got {L!r}")
    L = int(L)
    coords = [c for c in product(range(L), repeat=3) if sum(v % 2 for v in c) in (1, 2)]
    coords_arr = np.array(coords, dtype=np.int64)
    lookup = np.full((L, L, L), -1, dtype=np.int64)
    lookup[coords_arr[:, 0], coords_arr[:, 1], coords_arr[:, 2]] = np.arange(len(coords))

    def at(x, y, z):
        return int(lookup[x % L, y % L, z % L])

    edges = set()
    for i, (x, y, z) in enumerate(coords):
        for dx, dy, dz in _STEPS:
            j = at(x + dx, y + dy, z + dz)
            if j >= 0:
                edges.add((min(i, j), max(i, j)))
    edge_arr = np.array(sorted(edges), dtype=np.int64)

    primal, dual, sites = [], [], []
    for parity, bucket in (((1, 1, 1), primal), ((0, 0, 0), dual)):
        for c in product(range(parity[0], L, 2), range(parity[1], L, 2), range(parity[2], L, 2)):
            support = sorted(at(c[0] + dx, c[1] + dy, c[2] + dz) for dx, dy, dz in _STEPS)
            bucket.append(np.array(support, dtype=np.int64))
            sites.append(c)

    observables = {}
    for axis, name in enumerate(PRIMAL_OBSERVABLES):
        # face qubits whose primal-cell edge crosses the plane at coordinate 0
        klass = [1, 1, 1]
        klass[axis] = 0
        mask = (coords_arr[:, axis] == 0) & np.all(coords_arr % 2 == klass, axis=1)
        observables[name] = np.flatnonzero(mask)
    for axis, name in enumerate(DUAL_OBSERVABLES):
        klass = [0, 0, 0]
        klass[axis] = 1
        mask = (coords_arr[:, axis] == 1) & np.all(coords_arr % 2 == klass, axis=1)
        observables[name] = np.flatnonzero(mask)

    return ClusterGraph(
        num_vertices=len(coords),
        edges=edge_arr,
        L=L,
        coords=coords_arr,
        primal_checks=tuple(primal),
        dual_checks=tuple(dual),
        observables=observables,
        check_sites=tuple(sites),
        neighbors=_adjacency(len(coords), edge_arr),
    )


@dataclass(frozen=True)
class SlabPartition:
    """Assignment of every vertex to one of ``n_e`` emitters.

    ``cross_edges`` maps an ordered slab pair ``(s, s')`` with ``s < s'`` to the
    edges joining them. ``thickness`` is empty for partitions of abstract
    graphs.
    """

    graph: ClusterGraph
    n_e: int
    slab_of: np.ndarray
    thickness: Tuple[int, ...] = ()
    z_start: Tuple[int, ...] = ()
    cross_edges: Dict[Tuple[int, int], List[Tuple[int, int]]] = field(default_factory=dict)

    @classmethod
    def from_assignment(cls, graph: ClusterGraph, slab_of, **kw) -> "SlabPartition":
        slab_of = np.asarray(slab_of, dtype=np.int64)
        n_e = int(slab_of.max()) + 1 if len(slab_of) else 1
        cross: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        for u, v in graph.edges:
            su, sv = int(slab_of[u]), int(slab_of[v])
            if su != sv:
                key = (min(su, sv), max(su, sv))
                pair = (int(u), int(v)) if su < sv else (int(v), int(u))
                cross.setdefault(key, []).append(pair)
        return cls(graph=graph, n_e=n_e, slab_of=slab_of, cross_edges=cross, **kw)

    @property
    def no_interruption_eligible(self) -> bool:
        L = self.graph.L
        if L is None:
            return False
        return self.n_e == 1 or (self.n_e % 2 == 0 and L % self.n_e == 0)

    def slab_vertices(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.slab_of == s)

    def cross_partners(self) -> Dict[int, List[int]]:
        partners: Dict[int, List[int]] = {}
        for pairs in self.cross_edges.values():
            for u, v in pairs:
                partners.setdefault(u, []).append(v)
                partners.setdefault(v, []).append(u)
        return partners


def partition_slabs(g: ClusterGraph, n_e: int, allow_interruption: bool = False) -> SlabPartition:
    """Cut the lattice into ``n_e`` slabs stacked along ``z``.

    Uneven thicknesses (``L % n_e != 0``) are only produced when
    ``allow_interruption`` is set; such partitions need idle steps.
    """
    if g.L is None:
        raise ValueError("partition_slabs needs a lattice graph")
    L = g.L
    if n_e < 1:
        raise ValueError("n_e must be >= 1")
    if n_e > L // 2:
        raise ValueError(f"n_e={n_e} exceeds the largest allowed value L/2={L // 2}")
    if L % n_e and not allow_interruption:
        raise ValueError(f"L={L} is not divisible by n_e={n_e}; pass allow_interruption=True")
    bounds = [round(s * L / n_e) for s in range(n_e + 1)]
    thickness = tuple(bounds[s + 1] - bounds[s] for s in range(n_e))
    z = g.coords[:, 2]
    slab_of = np.searchsorted(np.array(bounds[1:]), z, side="right")
    return SlabPartition.from_assignment(
        g, slab_of, thickness=thickness, z_start=tuple(bounds[:-1])
    )


def validate_matching_condition(p: SlabPartition) -> List[int]:
    """Vertices that meet more than one edge of a single cross-edge set."""
    bad = set()
    for pairs in p.cross_edges.values():
        seen: Dict[int, int] = {}
        for u, v in pairs:
            seen[u] = seen.get(u, 0) + 1
            seen[v] = seen.get(v, 0) + 1
        bad.update(v for v, c in seen.items() if c > 1)
    return sorted(bad)


@dataclass(frozen=True)
class EmissionOrder:
    """Per-slab vertex sequences and their lockstep global schedule.

    ``steps[j][s]`` is the vertex emitted by slab ``s`` at global step ``j`` or
    ``-1`` when that emitter is idle.
    """

    sequences: Tuple[Tuple[int, ...], ...]
    steps: Tuple[Tuple[int, ...], ...]
    step_of: Dict[int, int]

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def idle_steps(self) -> int:
        return self.n_steps - max((len(s) for s in self.sequences), default=0)

    def position(self, v: int) -> int:
        return self.step_of[v]


def _fold(i: int, L: int) -> int:
    # 0, L-1, 1, L-2, ... keeps periodic neighbours at most two positions apart
    return 2 * i if i < L // 2 else 2 * (L - 1 - i) + 1


def slab_sequences(p: SlabPartition) -> List[List[int]]:
    g = p.graph
    seqs = []
    for s in range(p.n_e):
        verts = p.slab_vertices(s)
        if g.L is None:
            seqs.append([int(v) for v in verts])
            continue
        L = g.L
        t, z0 = p.thickness[s], p.z_start[s]
        mirror = p.n_e > 1 and s % 2 == 1

        def key(v, t=t, z0=z0, mirror=mirror):
            x, y, z = g.coords[v]
            w = int(z) - z0
            return (_fold(int(x), L), _fold(int(y), L), t - 1 - w if mirror else w)

        seqs.append(sorted((int(v) for v in verts), key=key))
    return seqs


def emission_order(p: SlabPartition, sequences: Optional[Sequence[Sequence[int]]] = None) -> EmissionOrder:
    """Schedule slab sequences so cross-edge endpoints are emitted together.

    A slab whose next vertex has a cross partner waits (idles) until the partner
    is also at the head of its own sequence.
    """
    bad = validate_matching_condition(p)
    if bad:
        raise ValueError(f"partition violates the matching condition at vertices {bad[:10]}")
    seqs = [list(s) for s in (sequences if sequences is not None else slab_sequences(p))]
    partners = p.cross_partners()
    slab_of = p.slab_of
    heads = [0] * len(seqs)
    steps: List[Tuple[int, ...]] = []
    step_of: Dict[int, int] = {}
    remaining = sum(len(s) for s in seqs)
    while remaining:
        current = [seqs[s][heads[s]] if heads[s] < len(seqs[s]) else -1 for s in range(len(seqs))]
        row = []
        for s, v in enumerate(current):
            ready = v >= 0 and all(current[int(slab_of[w])] == w for w in partners.get(v, ()))
            row.append(v if ready else -1)
        if all(v < 0 for v in row):
            raise ValueError("emission schedule deadlocked; cross partners are out of order")
        for s, v in enumerate(row):
            if v >= 0:
                heads[s] += 1
                step_of[v] = len(steps)
                remaining -= 1
        steps.append(tuple(row))
    return EmissionOrder(
        sequences=tuple(tuple(s) for s in seqs), steps=tuple(steps), step_of=step_of
    )


def max_wait(order: EmissionOrder, g: ClusterGraph) -> int:
    """Largest gap between a vertex's emission and its last neighbour's."""
    worst = 0
    for v, j in order.step_of.items():
        last = max((order.step_of[u] for u in g.neighbors[v]), default=j)
        worst = max(worst, last - j)
    return worst
