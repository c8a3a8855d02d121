"""Detector error models.

Signatures are computed with a single backward (Heisenberg) sweep: for every
qubit we track which detectors and observables would be flipped by an ``X`` or a
``Z`` inserted at the current point of the circuit. Bit ``i < D`` of a mask is
detector ``i``; bit ``D + k`` is observable ``k``.

Text format, one fault per line::

    error(0.001) D3 D7 L0
    error(0.0002) D1 D4 ^ D9 D12

``^`` separates the size-2 sector components of a decomposed fault. Lines
starting with ``#`` are comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import Circuit
from .noise import PAULIS_1Q, PAULIS_2Q, FaultLocation

N_SECTOR_OBS = 3


def _bits(x: int) -> List[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def xor_probability(p: float, q: float) -> float:
    return p * (1 - q) + q * (1 - p)


class NondeterministicError(ValueError):
    pass


class DecompositionError(ValueError):
    pass


@dataclass
class Channel:
    """One noise channel: with ``probability`` one of ``terms`` (uniform) fires."""

    index: int
    name: str
    qubits: Tuple[int, ...]
    probability: float
    paulis: Tuple[str, ...]
    terms: List[int]  # signature masks aligned with paulis
    erase_vertex: int = -1


@dataclass
class SweepResult:
    num_detectors: int
    num_observables: int
    channels: List[Channel]
    elementary: Dict[int, int]  # data qubit -> signature of Z just before its MX


def _record_masks(c: Circuit) -> List[int]:
    D = c.num_detectors
    masks = [0] * c.num_measurements
    for i, recs in enumerate(c.detectors()):
        for r in recs:
            masks[r] ^= 1 << i
    for k, recs in c.observables().items():
        for r in recs:
            masks[r] ^= 1 << (D + k)
    return masks


def sweep_signatures(c: Circuit) -> SweepResult:
    """Backward sweep producing the signature of every Pauli term of every channel."""
    nq = c.num_qubits
    recmask = _record_masks(c)
    ox = [0] * nq
    oz = [0] * nq
    rec = c.num_measurements
    channels: List[Channel] = []
    elementary: Dict[int, int] = {}
    for idx in range(len(c.instructions) - 1, -1, -1):
        ins = c.instructions[idx]
        name = ins.name
        t = ins.targets
        if name == "MX":
            for q in reversed(t):
                rec -= 1
                ox[q] ^= recmask[rec]
                if q in c.data_vertex:
                    elementary[q] = ox[q]
        elif name == "MZ":
            for q in reversed(t):
                rec -= 1
                oz[q] ^= recmask[rec]
        elif name == "H":
            for q in t:
                ox[q], oz[q] = oz[q], ox[q]
        elif name == "CZ":
            for a, b in reversed(ins.pairs()):
                oz[b] ^= ox[a]
                oz[a] ^= ox[b]
        elif name == "CNOT":
            for a, b in reversed(ins.pairs()):
                ox[b] ^= ox[a]
                oz[a] ^= oz[b]
        elif name in ("INIT0", "INITP"):
            for q in t:
                bad = ox[q] if name == "INIT0" else oz[q]
                if bad:
                    raise NondeterministicError(
                        f"instruction {idx} ({name} {q}) makes detectors/observables {_bits(bad)[:6]} random"
                    )
                ox[q] = 0
                oz[q] = 0
        elif name == "DEPOL1":
            for q in t:
                sx, sz = oz[q], ox[q]  # X flips Z-sensitive parities and vice versa
                channels.append(Channel(idx, name, (q,), float(ins.arg), PAULIS_1Q, [sx, sx ^ sz, sz]))
        elif name == "DEPOL2":
            for a, b in ins.pairs():
                terms = []
                for P in PAULIS_2Q:
                    m = 0
                    for letter, q in zip(P, (a, b)):
                        if letter in "XY":
                            m ^= oz[q]
                        if letter in "YZ":
                            m ^= ox[q]
                    terms.append(m)
                channels.append(Channel(idx, name, (a, b), float(ins.arg), PAULIS_2Q, terms))
        elif name == "ZERR":
            for q in t:
                channels.append(Channel(idx, name, (q,), float(ins.arg), ("Z",), [ox[q]]))
        elif name == "HERALD_ERASE":
            for q in t:
                channels.append(
                    Channel(idx, name, (q,), float(ins.arg), ("ERASE",), [ox[q]], c.data_vertex.get(q, -1))
                )
    for q in range(nq):
        if ox[q]:
            raise NondeterministicError(f"qubit {q} starts in |0> but parities {_bits(ox[q])[:6]} need its X")
    channels.reverse()
    return SweepResult(c.num_detectors, c.num_observables, channels, elementary)


def fault_signature(c: Circuit, f: FaultLocation) -> int:
    """Signature mask of one fault, by forward propagation."""
    from .sim.frame import propagate_fault

    dets, obs = propagate_fault(c, f)
    m = 0
    for d in dets:
        m |= 1 << d
    for k in obs:
        m |= 1 << (c.num_detectors + k)
    return m


# -- DEM ------------------------------------------------------------------------


@dataclass(frozen=True)
class DemEntry:
    probability: float
    detectors: Tuple[int, ...]
    observables: Tuple[int, ...]
    # elementary pieces (two detectors each, one sector) whose XOR is the signature
    components: Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], ...] = ()


@dataclass
class DetectorErrorModel:
    num_detectors: int
    num_observables: int
    num_primal: int
    entries: List[DemEntry]
    undetectable: List[DemEntry] = field(default_factory=list)
    elementary: Dict[int, Tuple[Tuple[int, ...], Tuple[int, ...]]] = field(default_factory=dict)  # by graph vertex

    def sector_of_detector(self, d: int) -> int:
        return 0 if d < self.num_primal else 1

    @staticmethod
    def sector_of_observable(k: int) -> int:
        return 0 if k < N_SECTOR_OBS else 1

    def to_text(self) -> str:
        lines = [
            f"# detectors {self.num_detectors} primal {self.num_primal} observables {self.num_observables}"
        ]
        for e in self.entries + self.undetectable:
            parts = []
            comps = e.components or ((e.detectors, e.observables),)
            for dets, obs in comps:
                parts.append(" ".join([f"D{d}" for d in dets] + [f"L{k}" for k in obs]))
            lines.append(f"error({e.probability!r}) " + " ^ ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DetectorErrorModel":
        header = re.search(r"detectors (\d+) primal (\d+) observables (\d+)", text)
        entries: List[DemEntry] = []
        undetectable: List[DemEntry] = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = re.fullmatch(r"error\(([^)]+)\)\s*(.*)", line)
            if not m:
                raise ValueError(f"bad DEM line: {line!r}")
            prob = float(m.group(1))
            comps = []
            dets_all: set = set()
            obs_all: set = set()
            for part in m.group(2).split("^"):
                toks = part.split()
                dets = tuple(int(x[1:]) for x in toks if x[0] == "D")
                obs = tuple(int(x[1:]) for x in toks if x[0] == "L")
                if any(x[0] not in "DL" for x in toks):
                    raise ValueError(f"bad DEM token in {line!r}")
                comps.append((dets, obs))
                dets_all ^= set(dets)
                obs_all ^= set(obs)
            e = DemEntry(prob, tuple(sorted(dets_all)), tuple(sorted(obs_all)), tuple(comps) if len(comps) > 1 else ())
            (entries if dets_all else undetectable).append(e)
        if header:
            D, P, O = (int(header.group(i)) for i in (1, 2, 3))
        else:
            D = 1 + max((d for e in entries for d in e.detectors), default=-1)
            P = D // 2
            O = 1 + max((k for e in entries + undetectable for k in e.observables), default=-1)
        return cls(D, O, P, entries, undetectable)


def _mask_parts(mask: int, D: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    bits = _bits(mask)
    return tuple(b for b in bits if b < D), tuple(b - D for b in bits if b >= D)


def _paths(a: int, b: int, adj: Dict[int, List[Tuple[int, int]]], max_len: int) -> List[Tuple[List[Tuple[int, int]], int]]:
    """Simple paths ``a -> b`` of at most ``max_len`` elementary edges, as (edges, observable mask)."""
    out = []

    def walk(u, seen, edges, mask):
        if u == b:
            out.append((list(edges), mask))
            return
        if len(edges) == max_len:
            return
        for w, m in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                edges.append((min(u, w), max(u, w)))
                walk(w, seen, edges, mask ^ m)
                edges.pop()
                seen.discard(w)

    walk(a, {a}, [], 0)
    return out


def _decompose(
    dets: List[int], obs_mask: int, edges: Dict[Tuple[int, int], List[int]], max_len: int = 3
) -> Optional[List[Tuple[Tuple[int, int], int]]]:
    """Express a sector signature as elementary edges whose XOR reproduces it.

    Detectors are paired and each pair is joined by a short path of elementary
    edges; among all choices the one with the fewest edges wins (first found on
    ties, in sorted order).
    """
    adj: Dict[int, List[Tuple[int, int]]] = {}
    for (u, v), masks in edges.items():
        for m in masks:
            adj.setdefault(u, []).append((v, m))
            adj.setdefault(v, []).append((u, m))
    best: List = [None, None]

    def rec(rest, mask, acc):
        if best[0] is not None and len(acc) >= best[0]:
            return
        if not rest:
            if mask == obs_mask:
                best[0], best[1] = len(acc), list(acc)
            return
        d0 = rest[0]
        for i in range(1, len(rest)):
            for path, m in _paths(d0, rest[i], adj, max_len):
                rec(rest[1:i] + rest[i + 1 :], mask ^ m, acc + [(e, None) for e in path] + [(None, m)])

    rec(sorted(dets), 0, [])
    if best[1] is None:
        return None
    # rebuild (edge, mask) pieces: masks were recorded per path, so redo the walk per edge
    pieces: List[Tuple[Tuple[int, int], int]] = []
    pending: List[Tuple[int, int]] = []
    for e, m in best[1]:
        if e is not None:
            pending.append(e)
        else:
            pieces.extend(_assign_masks(pending, m, edges))
            pending = []
    return pieces


def _assign_masks(path: List[Tuple[int, int]], mask: int, edges: Dict[Tuple[int, int], List[int]]):
    """Pick one observable mask per edge of ``path`` so that they XOR to ``mask``."""

    def rec(i, acc):
        if i == len(path):
            return [] if acc == mask else None
        for m in edges[path[i]]:
            sub = rec(i + 1, acc ^ m)
            if sub is not None:
                return [(path[i], m)] + sub
        return None

    return rec(0, 0)


def merge_signatures(sigs: Dict[int, float], p: float, mask: int) -> None:
    sigs[mask] = xor_probability(sigs.get(mask, 0.0), p)


def build_dem(c: Circuit, num_primal: Optional[int] = None, method: str = "sweep") -> DetectorErrorModel:
    """Merged and sector-decomposed detector error model of a noisy circuit.

    ``method="propagate"`` pushes every fault forward individually; it is slow
    and meant as a cross-check of the default backward sweep.
    """
    D = c.num_detectors
    O = c.num_observables
    P = D // 2 if num_primal is None else num_primal
    sweep = sweep_signatures(c)
    sigs: Dict[int, float] = {}
    origin: Dict[int, Tuple[int, str, Tuple[int, ...]]] = {}
    for ch in sweep.channels:
        share = ch.probability / len(ch.terms)
        for P_, mask in zip(ch.paulis, ch.terms):
            if method == "propagate":
                mask = fault_signature(c, FaultLocation(ch.index, P_, ch.qubits, share))
            if mask:
                merge_signatures(sigs, share if ch.name != "HERALD_ERASE" else share / 2, mask)
                origin.setdefault(mask, (ch.index, P_, ch.qubits))

    det_primal = (1 << P) - 1
    det_dual = ((1 << D) - 1) ^ det_primal
    obs_primal = ((1 << min(O, N_SECTOR_OBS)) - 1) << D
    obs_dual = (((1 << O) - 1) << D) ^ obs_primal

    edges: Dict[Tuple[int, int], List[int]] = {}
    elementary = {}
    for q, mask in sweep.elementary.items():
        dets, obs = _mask_parts(mask, D)
        elementary[c.data_vertex[q]] = (dets, obs)
        if len(dets) == 2:
            ms = edges.setdefault(tuple(dets), [])
            om = mask >> D
            if om not in ms:
                ms.append(om)

    entries: List[DemEntry] = []
    undetectable: List[DemEntry] = []
    for mask in sorted(sigs):
        prob = sigs[mask]
        if prob == 0.0:
            continue
        dets, obs = _mask_parts(mask, D)
        comps = []
        for dm, om in ((det_primal, obs_primal), (det_dual, obs_dual)):
            sd = _bits(mask & dm)
            so = (mask & om) >> D
            if not sd and not so:
                continue
            if len(sd) <= 2:
                comps.append((tuple(sd), tuple(_bits(so))))
                continue
            pieces = _decompose(sd, so, edges)
            if pieces is None:
                idx, pauli, qubits = origin[mask]
                raise DecompositionError(
                    f"fault {pauli} on qubits {qubits} after instruction {idx} has undecomposable "
                    f"sector signature {sd}"
                )
            comps.extend((pair, tuple(_bits(m))) for pair, m in pieces)
        e = DemEntry(prob, dets, obs, tuple(comps) if len(comps) > 1 else ())
        (entries if dets else undetectable).append(e)
    return DetectorErrorModel(D, O, P, entries, undetectable, elementary)


# -- sampling table ------------------------------------------------------------


@dataclass
class FaultTable:
    """Channel-level description used by the fast sampler.

    A channel fires with ``prob[c]``; it then applies one of its terms chosen
    uniformly. Erasure channels additionally herald ``erase_vertex[c]`` and
    apply their single term with probability one half.
    """

    num_detectors: int
    num_observables: int
    num_vertices: int
    prob: np.ndarray
    term_ptr: np.ndarray
    erase_vertex: np.ndarray
    det_ptr: np.ndarray
    det_idx: np.ndarray
    obs_bits: np.ndarray  # (T,) uint64 observable bitmask per term

    @property
    def num_channels(self) -> int:
        return len(self.prob)


def fault_table(c: Circuit, sweep: Optional[SweepResult] = None) -> FaultTable:
    sweep = sweep or sweep_signatures(c)
    D = sweep.num_detectors
    # single-term channels with equal signature merge exactly by XOR
    single: Dict[int, float] = {}
    multi: List[Channel] = []
    erase: List[Channel] = []
    for ch in sweep.channels:
        if ch.name == "HERALD_ERASE":
            erase.append(ch)
        elif len(ch.terms) == 1:
            if ch.terms[0]:
                merge_signatures(single, ch.probability, ch.terms[0])
        elif any(ch.terms):
            multi.append(ch)
    probs: List[float] = []
    terms: List[int] = []
    ptr = [0]
    ev: List[int] = []
    for mask in sorted(single):
        probs.append(single[mask])
        terms.append(mask)
        ptr.append(len(terms))
        ev.append(-1)
    for ch in multi + erase:
        probs.append(ch.probability)
        terms.extend(ch.terms)
        ptr.append(len(terms))
        ev.append(ch.erase_vertex)
    det_ptr = [0]
    det_idx: List[int] = []
    obs = np.zeros(len(terms), dtype=np.uint64)
    for i, m in enumerate(terms):
        dets, o = _mask_parts(m, D)
        det_idx.extend(dets)
        det_ptr.append(len(det_idx))
        obs[i] = sum(1 << k for k in o)
    return FaultTable(
        num_detectors=D,
        num_observables=sweep.num_observables,
        num_vertices=len(c.data_vertex),
        prob=np.asarray(probs, dtype=np.float64),
        term_ptr=np.asarray(ptr, dtype=np.int64),
        erase_vertex=np.asarray(ev, dtype=np.int64),
        det_ptr=np.asarray(det_ptr, dtype=np.int64),
        det_idx=np.asarray(det_idx, dtype=np.int64),
        obs_bits=obs,
    )
