"""Matching graphs and minimum-weight perfect matching decoders.

Two decoders share one :class:`MatchingGraph`:

* :func:`decode` is the reference decoder. It computes shortest paths with
  integer-scaled weights, runs exact blossom matching (networkx) on the
  complete graph of flagged detectors and breaks cost ties towards the
  lexicographically smallest pairing, like :func:`brute_force_match`.
* :class:`BatchDecoder` wraps PyMatching for throughput.

Erased qubits have the weight of their elementary edge set to zero.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .dem import DetectorErrorModel, xor_probability

WEIGHT_SCALE = 10**6
UNSEEN_WEIGHT = 30.0  # edge never produced by any fault (p ~ 1e-13)
MAX_BRUTE_FORCE = 10


def probability_weight(p: float) -> float:
    if p <= 0:
        return UNSEEN_WEIGHT
    if p >= 0.5:
        return 0.0
    return float(-np.log(p / (1 - p)))


@dataclass
class MatchingGraph:
    """One sector's decoding graph.

    Nodes are the sector's detectors, numbered from zero (global index =
    ``offset + node``). Parallel edges are kept only if their observable masks
    differ; the cheaper one is used for decoding.
    """

    sector: int
    offset: int
    num_nodes: int
    num_observables: int
    u: np.ndarray
    v: np.ndarray
    prob: np.ndarray
    weight: np.ndarray
    obs: np.ndarray  # uint64 observable bitmask per edge
    erasure_edge: Dict[int, int] = field(default_factory=dict)  # graph vertex -> edge

    @property
    def num_edges(self) -> int:
        return len(self.u)

    def weights_with_erasure(self, erased: Optional[np.ndarray]) -> np.ndarray:
        w = self.weight.copy()
        if erased is not None:
            for vtx in np.flatnonzero(erased):
                e = self.erasure_edge.get(int(vtx))
                if e is not None:
                    w[e] = 0.0
        return w

    def is_connected(self) -> bool:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_nodes))
        g.add_edges_from(zip(self.u.tolist(), self.v.tolist()))
        return nx.is_connected(g) if self.num_nodes else True

    # -- integer shortest paths used by the reference decoders -------------------
    def _adjacency(self, weights: np.ndarray) -> List[Dict[int, Tuple[int, int]]]:
        """Cheapest edge per neighbour as ``(int weight, obs mask)``; ties -> smaller mask."""
        iw = np.rint(weights * WEIGHT_SCALE).astype(np.int64)
        adj: List[Dict[int, Tuple[int, int]]] = [dict() for _ in range(self.num_nodes)]
        for a, b, w, m in zip(self.u.tolist(), self.v.tolist(), iw.tolist(), self.obs.tolist()):
            for x, y in ((a, b), (b, a)):
                cur = adj[x].get(y)
                if cur is None or (w, m) < cur:
                    adj[x][y] = (w, m)
        return adj

    @staticmethod
    def _dijkstra(adj, src: int) -> Tuple[Dict[int, int], Dict[int, int]]:
        """Distances and path observable masks; ties resolved by smaller node ids."""
        dist = {src: 0}
        mask = {src: 0}
        done = set()
        heap = [(0, src, 0)]
        while heap:
            d, x, m = heapq.heappop(heap)
            if x in done:
                continue
            done.add(x)
            mask[x] = m
            for y, (w, em) in sorted(adj[x].items()):
                nd = d + w
                if y not in dist or nd < dist[y]:
                    dist[y] = nd
                    heapq.heappush(heap, (nd, y, m ^ em))
        return dist, mask

    def pair_table(self, nodes: Sequence[int], weights: Optional[np.ndarray] = None):
        """Integer shortest-path costs and observable masks between ``nodes``."""
        adj = self._adjacency(self.weight if weights is None else weights)
        n = len(nodes)
        cost = np.zeros((n, n), dtype=np.int64)
        masks = np.zeros((n, n), dtype=np.uint64)
        for i, a in enumerate(nodes):
            dist, mask = self._dijkstra(adj, a)
            for j, b in enumerate(nodes):
                if b not in dist:
                    raise ValueError(f"detectors {a} and {b} are disconnected")
                cost[i, j] = dist[b]
                masks[i, j] = mask[b]
        return cost, masks


def dem_to_matching(
    dem: DetectorErrorModel, weights: str = "probability"
) -> Tuple[MatchingGraph, MatchingGraph]:
    """Primal and dual matching graphs of a decomposed DEM."""
    if weights not in ("probability", "uniform"):
        raise ValueError(f"unknown weight mode {weights!r}")
    D, P = dem.num_detectors, dem.num_primal
    bounds = ((0, P), (P, D))
    merged: List[Dict[Tuple[int, int, int], float]] = [dict(), dict()]
    for e in dem.entries:
        comps = e.components or ((e.detectors, e.observables),)
        for dets, obs in comps:
            if not dets:
                continue
            if len(dets) == 1:
                raise ValueError(f"boundary-type entry on detector {dets[0]} cannot occur on the torus")
            if len(dets) > 2:
                raise ValueError(f"entry {dets} not decomposed")
            s = dem.sector_of_detector(dets[0])
            if dem.sector_of_detector(dets[1]) != s:
                raise ValueError(f"component {dets} spans both sectors")
            lo = bounds[s][0]
            key = (dets[0] - lo, dets[1] - lo, sum(1 << k for k in obs))
            merged[s][key] = xor_probability(merged[s].get(key, 0.0), e.probability)
    for dets, obs in dem.elementary.values():
        if len(dets) == 2:
            s = dem.sector_of_detector(dets[0])
            lo = bounds[s][0]
            merged[s].setdefault((dets[0] - lo, dets[1] - lo, sum(1 << k for k in obs)), 0.0)

    graphs = []
    for s, (lo, hi) in enumerate(bounds):
        keys = sorted(merged[s])
        u = np.array([k[0] for k in keys], dtype=np.int64)
        v = np.array([k[1] for k in keys], dtype=np.int64)
        om = np.array([k[2] for k in keys], dtype=np.uint64)
        pr = np.array([merged[s][k] for k in keys], dtype=np.float64)
        if weights == "uniform":
            w = np.where(pr > 0, 1.0, UNSEEN_WEIGHT)
        else:
            w = np.array([probability_weight(p) for p in pr])
        index = {k: i for i, k in enumerate(keys)}
        er: Dict[int, int] = {}
        for q, (dets, obs) in dem.elementary.items():
            if len(dets) == 2 and lo <= dets[0] < hi:
                er[q] = index[(dets[0] - lo, dets[1] - lo, sum(1 << k for k in obs))]
        graphs.append(MatchingGraph(s, lo, hi - lo, dem.num_observables, u, v, pr, w, om, er))
    return graphs[0], graphs[1]


# -- syndromes ------------------------------------------------------------------


@dataclass
class Syndrome:
    detectors: np.ndarray  # (D,) flip bits
    erasures: Optional[np.ndarray] = None  # (V,) bool by graph vertex


@dataclass
class Correction:
    observables: np.ndarray  # (O,) predicted flips
    cost: int = 0  # integer-scaled matching cost summed over decoded sectors
    pairs: Tuple[Tuple[int, int], ...] = ()


def _sector_nodes(mg: MatchingGraph, s: Syndrome) -> List[int]:
    bits = np.asarray(s.detectors)[mg.offset : mg.offset + mg.num_nodes]
    nodes = [int(i) for i in np.flatnonzero(bits)]
    if len(nodes) % 2:
        raise ValueError(f"odd number ({len(nodes)}) of flipped detectors in sector {mg.sector}")
    return nodes


def _mask_to_bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> k) & 1 for k in range(n)], dtype=np.uint8)


def _blossom_cost(cost: np.ndarray, idx: Sequence[int]) -> int:
    if not idx:
        return 0
    g = nx.Graph()
    for a, b in itertools.combinations(idx, 2):
        g.add_edge(a, b, weight=int(cost[a, b]))
    m = nx.min_weight_matching(g)
    return int(sum(cost[a, b] for a, b in m))


def _match_sector(mg: MatchingGraph, s: Syndrome) -> Tuple[int, int, List[Tuple[int, int]]]:
    nodes = _sector_nodes(mg, s)
    if not nodes:
        return 0, 0, []
    cost, masks = mg.pair_table(nodes, mg.weights_with_erasure(s.erasures))
    best = _blossom_cost(cost, list(range(len(nodes))))
    # lexicographically smallest optimal pairing
    rest = list(range(len(nodes)))
    spent = 0
    pairs = []
    while rest:
        a = rest[0]
        for b in rest[1:]:
            remaining = [x for x in rest if x not in (a, b)]
            if spent + cost[a, b] + _blossom_cost(cost, remaining) == best:
                pairs.append((a, b))
                spent += int(cost[a, b])
                rest = remaining
                break
        else:  # pragma: no cover - blossom optimum must be reachable
            raise RuntimeError("blossom optimum not reproduced")
    mask = 0
    for a, b in pairs:
        mask ^= int(masks[a, b])
    return best, mask, [(nodes[a], nodes[b]) for a, b in pairs]


def decode(graphs: Sequence[MatchingGraph], s: Syndrome) -> Correction:
    """Reference exact decoder over one or more sector graphs."""
    total, mask, pairs = 0, 0, []
    n_obs = graphs[0].num_observables
    for mg in graphs:
        c, m, p = _match_sector(mg, s)
        total += c
        mask ^= m
        pairs += [(mg.offset + a, mg.offset + b) for a, b in p]
    return Correction(_mask_to_bits(mask, n_obs), total, tuple(pairs))


def brute_force_match(graphs: Sequence[MatchingGraph], s: Syndrome) -> Correction:
    """Exhaustive minimum over all pairings; ties go to the lexicographically first pairing."""
    total, mask, all_pairs = 0, 0, []
    n_obs = graphs[0].num_observables
    for mg in graphs:
        nodes = _sector_nodes(mg, s)
        if len(nodes) > MAX_BRUTE_FORCE:
            raise ValueError(f"{len(nodes)} flipped detectors exceed the brute-force limit {MAX_BRUTE_FORCE}")
        if not nodes:
            continue
        cost, masks = mg.pair_table(nodes, mg.weights_with_erasure(s.erasures))
        best = None
        for pairing in _pairings(list(range(len(nodes)))):
            c = sum(int(cost[a, b]) for a, b in pairing)
            if best is None or c < best[0]:
                best = (c, pairing)
        c, pairing = best
        total += c
        for a, b in pairing:
            mask ^= int(masks[a, b])
        all_pairs += [(mg.offset + nodes[a], mg.offset + nodes[b]) for a, b in pairing]
    return Correction(_mask_to_bits(mask, n_obs), total, tuple(all_pairs))


def _pairings(items: List[int]):
    """All perfect pairings in lexicographic order."""
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        b = items[i]
        for rest in _pairings(items[1:i] + items[i + 1 :]):
            yield [(a, b)] + rest


# -- batch decoding -------------------------------------------------------------


class BatchDecoder:
    """PyMatching-backed decoder for many shots."""

    def __init__(self, graphs: Sequence[MatchingGraph]):
        import pymatching

        self._pm = pymatching
        self.graphs = list(graphs)
        self.num_observables = self.graphs[0].num_observables
        self._checks = []
        self._faults = []
        self._base = []
        for mg in self.graphs:
            E = mg.num_edges
            rows = np.concatenate([mg.u, mg.v])
            cols = np.concatenate([np.arange(E), np.arange(E)])
            H = sp.csc_matrix((np.ones(2 * E, dtype=np.uint8), (rows, cols)), shape=(mg.num_nodes, E))
            fr, fc = [], []
            for e, m in enumerate(mg.obs.tolist()):
                for k in range(self.num_observables):
                    if (m >> k) & 1:
                        fr.append(k)
                        fc.append(e)
            F = sp.csc_matrix(
                (np.ones(len(fr), dtype=np.uint8), (fr, fc)), shape=(self.num_observables, E)
            )
            self._checks.append(H)
            self._faults.append(F)
            self._base.append(self._matching(H, F, mg.weight))

    def _matching(self, H, F, w):
        return self._pm.Matching.from_check_matrix(H, weights=w, faults_matrix=F, merge_strategy="smallest-weight")

    def decode_batch(self, detectors: np.ndarray, erasures: Optional[np.ndarray] = None) -> np.ndarray:
        """Predicted observable flips, shape ``(shots, O)``."""
        S = detectors.shape[0]
        out = np.zeros((S, self.num_observables), dtype=np.uint8)
        for mg, H, F, base in zip(self.graphs, self._checks, self._faults, self._base):
            sub = np.ascontiguousarray(detectors[:, mg.offset : mg.offset + mg.num_nodes], dtype=np.uint8)
            if (sub.sum(axis=1) % 2).any():
                raise ValueError(f"odd number of flipped detectors in sector {mg.sector}")
            hit = np.zeros(S, dtype=bool)
            if erasures is not None and mg.erasure_edge:
                verts = np.fromiter(mg.erasure_edge.keys(), dtype=np.int64)
                hit = erasures[:, verts].any(axis=1)
            plain = np.flatnonzero(~hit)
            if len(plain):
                out[plain] ^= base.decode_batch(sub[plain])
            for i in np.flatnonzero(hit):
                if not sub[i].any():
                    continue
                m = self._matching(H, F, mg.weights_with_erasure(erasures[i]))
                out[i] ^= m.decode(sub[i])
        return out
