"""Pauli-frame sampling and single-fault propagation.

All circuits are Clifford and all noise is Pauli or heralded erasure, so a
shot is fully described by the Pauli frame relative to the noiseless reference
run: an ``MX`` outcome flips iff the measured qubit carries a ``Z`` component,
an ``MZ`` outcome flips iff it carries an ``X`` component.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from ..circuit import MEASUREMENTS, NOISE, Circuit
from ..noise import PAULIS_1Q, PAULIS_2Q, FaultLocation
from .rng import counter_uniform

_X1 = np.array([P in "XY" for P in PAULIS_1Q], dtype=np.uint8)
_Z1 = np.array([P in "YZ" for P in PAULIS_1Q], dtype=np.uint8)
_X2 = np.array([[P[i] in "XY" for P in PAULIS_2Q] for i in range(2)], dtype=np.uint8)
_Z2 = np.array([[P[i] in "YZ" for P in PAULIS_2Q] for i in range(2)], dtype=np.uint8)


@dataclass
class FrameShots:
    detectors: np.ndarray  # (shots, D) uint8
    observables: np.ndarray  # (shots, O) uint8
    erasures: np.ndarray  # (shots, V) bool, indexed by graph vertex
    faults: List[FaultLocation] = field(default_factory=list)


def frame_sample_batch(c: Circuit, seed: int, shots: int, start: int = 0, log: bool = False) -> FrameShots:
    """Sample shots ``start .. start+shots-1``.

    Row ``i`` depends only on ``(seed, start + i)``; with ``log=True`` the fired
    faults are returned (only meaningful for a single shot).
    """
    nq = c.num_qubits
    shot_ids = np.arange(start, start + shots, dtype=np.uint64)
    x = np.zeros((nq, shots), dtype=np.uint8)
    z = np.zeros((nq, shots), dtype=np.uint8)
    flips: List[np.ndarray] = []
    erased = np.zeros((shots, len(c.data_vertex)), dtype=bool)
    fired: List[FaultLocation] = []
    channel = 0

    def draw(lane):
        return counter_uniform(seed, shot_ids, channel, lane)

    for idx, ins in enumerate(c.instructions):
        name = ins.name
        t = ins.targets
        if name == "H":
            for q in t:
                x[q], z[q] = z[q].copy(), x[q].copy()
        elif name == "CZ":
            for a, b in ins.pairs():
                z[a] ^= x[b]
                z[b] ^= x[a]
        elif name == "CNOT":
            for a, b in ins.pairs():
                x[b] ^= x[a]
                z[a] ^= z[b]
        elif name in ("INIT0", "INITP"):
            for q in t:
                x[q] = 0
                z[q] = 0
        elif name == "MX":
            flips.extend(z[q].copy() for q in t)
        elif name == "MZ":
            flips.extend(x[q].copy() for q in t)
        elif name == "DEPOL1":
            for q in t:
                hit = draw(0) < ins.arg
                term = np.minimum((draw(1) * 3).astype(np.int64), 2)
                x[q] ^= hit * _X1[term]
                z[q] ^= hit * _Z1[term]
                if log and hit[0]:
                    fired.append(FaultLocation(idx, PAULIS_1Q[term[0]], (q,), ins.arg / 3))
                channel += 1
        elif name == "DEPOL2":
            for a, b in ins.pairs():
                hit = draw(0) < ins.arg
                term = np.minimum((draw(1) * 15).astype(np.int64), 14)
                x[a] ^= hit * _X2[0, term]
                z[a] ^= hit * _Z2[0, term]
                x[b] ^= hit * _X2[1, term]
                z[b] ^= hit * _Z2[1, term]
                if log and hit[0]:
                    fired.append(FaultLocation(idx, PAULIS_2Q[term[0]], (a, b), ins.arg / 15))
                channel += 1
        elif name == "ZERR":
            for q in t:
                hit = (draw(0) < ins.arg).astype(np.uint8)
                z[q] ^= hit
                if log and hit[0]:
                    fired.append(FaultLocation(idx, "Z", (q,), ins.arg))
                channel += 1
        elif name == "HERALD_ERASE":
            for q in t:
                hit = draw(0) < ins.arg
                coin = draw(2) < 0.5
                erased[:, c.data_vertex[q]] |= hit
                z[q] ^= (hit & coin).astype(np.uint8)
                if log and hit[0] and coin[0]:
                    fired.append(FaultLocation(idx, "ERASE", (q,), ins.arg))
                channel += 1

    rec = np.array(flips, dtype=np.uint8).reshape(-1, shots)
    dets = c.detectors()
    det = np.zeros((shots, len(dets)), dtype=np.uint8)
    for i, recs in enumerate(dets):
        det[:, i] = np.bitwise_xor.reduce(rec[list(recs)], axis=0) if recs else 0
    obs_map = c.observables()
    n_obs = c.num_observables
    obs = np.zeros((shots, n_obs), dtype=np.uint8)
    for k, recs in obs_map.items():
        obs[:, k] = np.bitwise_xor.reduce(rec[list(recs)], axis=0) if recs else 0
    return FrameShots(det, obs, erased, fired)


def frame_sample(c: Circuit, seed: int, shot_index: int, log: bool = False) -> FrameShots:
    """One shot; identical to row ``shot_index`` of any batch covering it."""
    return frame_sample_batch(c, seed, 1, start=shot_index, log=log)


def record_maps(c: Circuit) -> Tuple[Dict[int, List[int]], Dict[int, List[int]]]:
    """Measurement record index -> detectors / observables containing it."""
    rec_det: Dict[int, List[int]] = {}
    for i, recs in enumerate(c.detectors()):
        for r in recs:
            rec_det.setdefault(r, []).append(i)
    rec_obs: Dict[int, List[int]] = {}
    for k, recs in c.observables().items():
        for r in recs:
            rec_obs.setdefault(r, []).append(k)
    return rec_det, rec_obs


def propagate_fault(
    c: Circuit, f: FaultLocation, maps: Optional[Tuple[dict, dict]] = None
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Push one Pauli forward from just after instruction ``f.index``.

    Returns the sorted flipped detector and observable indices.
    """
    rec_det, rec_obs = maps if maps is not None else record_maps(c)
    xs: Set[int] = set()
    zs: Set[int] = set()
    pauli = "Z" if f.pauli == "ERASE" else f.pauli
    for P, q in zip(pauli, f.qubits):
        if P in "XY":
            xs ^= {q}
        if P in "YZ":
            zs ^= {q}
    n_rec = sum(len(ins.targets) for ins in c.instructions[: f.index + 1] if ins.name in MEASUREMENTS)
    det: Set[int] = set()
    obs: Set[int] = set()
    for ins in c.instructions[f.index + 1 :]:
        name = ins.name
        if not (xs or zs):
            break
        if name == "H":
            for q in ins.targets:
                hx, hz = q in xs, q in zs
                if hx != hz:
                    xs ^= {q}
                    zs ^= {q}
        elif name == "CZ":
            for a, b in ins.pairs():
                ax, bx = a in xs, b in xs
                if bx:
                    zs ^= {a}
                if ax:
                    zs ^= {b}
        elif name == "CNOT":
            for a, b in ins.pairs():
                if a in xs:
                    xs ^= {b}
                if b in zs:
                    zs ^= {a}
        elif name in ("INIT0", "INITP"):
            for q in ins.targets:
                xs.discard(q)
                zs.discard(q)
        elif name in MEASUREMENTS:
            for q in ins.targets:
                flipped = q in (zs if name == "MX" else xs)
                if flipped:
                    det ^= set(rec_det.get(n_rec, ()))
                    obs ^= set(rec_obs.get(n_rec, ()))
                n_rec += 1
    return tuple(sorted(det)), tuple(sorted(obs))
