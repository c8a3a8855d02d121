"""Fast exact sampler over a :class:`~emitarray.dem.FaultTable`.

Channels are independent, so for each distinct firing probability the fired
``(shot, channel)`` positions are drawn as a Bernoulli process via geometric
gaps. Detector parities are then accumulated with one ``np.unique`` pass.
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..dem import FaultTable


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)]))


def _bernoulli_positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Sorted indices ``< n`` of a Bernoulli(p) process."""
    if p <= 0.0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(n, dtype=np.int64)
    if p > 0.2:
        return np.flatnonzero(rng.random(n) < p)
    chunks = []
    pos = -1
    while True:
        expect = (n - pos) * p
        size = int(expect + 6.0 * np.sqrt(expect) + 16)
        gaps = rng.geometric(p, size=size).astype(np.int64)
        run = pos + np.cumsum(gaps)
        chunks.append(run[run < n])
        if run[-1] >= n:
            break
        pos = int(run[-1])
    return np.concatenate(chunks)


class DemSampler:
    """Samples detector flips, observable flips and erasure masks."""

    def __init__(self, table: FaultTable):
        self.table = table
        t = table
        self._groups = []
        for p in np.unique(t.prob):
            if p > 0:
                self._groups.append((float(p), np.flatnonzero(t.prob == p)))
        self._n_terms = np.diff(t.term_ptr)
        self._det_count = np.diff(t.det_ptr)

    def sample(
        self, shots: int, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(detectors (S,D) uint8, observables (S,O) uint8, erasures (S,V) bool)``."""
        t = self.table
        D, O, V = t.num_detectors, t.num_observables, t.num_vertices
        shot_parts = []
        chan_parts = []
        for p, chans in self._groups:
            pos = _bernoulli_positions(rng, shots * len(chans), p)
            shot_parts.append(pos // len(chans))
            chan_parts.append(chans[pos % len(chans)])
        if shot_parts:
            shot = np.concatenate(shot_parts)
            chan = np.concatenate(chan_parts)
        else:
            shot = np.empty(0, dtype=np.int64)
            chan = np.empty(0, dtype=np.int64)

        erasures = np.zeros((shots, V), dtype=bool)
        ev = t.erase_vertex[chan]
        is_erase = ev >= 0
        if is_erase.any():
            erasures[shot[is_erase], ev[is_erase]] = True
            keep = ~is_erase | (rng.random(len(chan)) < 0.5)
            shot, chan = shot[keep], chan[keep]

        nt = self._n_terms[chan]
        term = t.term_ptr[chan] + (rng.random(len(chan)) * nt).astype(np.int64).clip(max=nt - 1)

        counts = self._det_count[term]
        starts = t.det_ptr[term]
        total = int(counts.sum())
        dets = np.zeros((shots, D), dtype=np.uint8)
        if total:
            rep_shot = np.repeat(shot, counts)
            offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            det_idx = t.det_idx[np.repeat(starts, counts) + offs]
            keys, mult = np.unique(rep_shot * D + det_idx, return_counts=True)
            odd = keys[mult % 2 == 1]
            dets[odd // D, odd % D] = 1

        obs_word = np.zeros(shots, dtype=np.uint64)
        ob = t.obs_bits[term]
        nz = ob != 0
        np.bitwise_xor.at(obs_word, shot[nz], ob[nz])
        obs = ((obs_word[:, None] >> np.arange(O, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.uint8)
        return dets, obs, erasures


def sample_table(
    table: FaultTable, shots: int, seed: int, *keys: int, batch: int = 1 << 14
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic in ``(seed, keys, batch)``; batches use independent streams."""
    s = DemSampler(table)
    parts = []
    for b, start in enumerate(range(0, shots, batch)):
        parts.append(s.sample(min(batch, shots - start), make_rng(seed, *keys, b)))
    if not parts:
        D, O, V = table.num_detectors, table.num_observables, table.num_vertices
        return np.zeros((0, D), np.uint8), np.zeros((0, O), np.uint8), np.zeros((0, V), bool)
    return tuple(np.concatenate(x) for x in zip(*parts))  # type: ignore[return-value]
