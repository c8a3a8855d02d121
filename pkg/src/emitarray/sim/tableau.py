"""Stabilizer tableau simulator used as a correctness oracle.

Aaronson-Gottesman (CHP) tableau with destabilizers. Random measurement
outcomes are resolved to ``+1`` (bit 0) unless a forced outcome is supplied, and
every outcome is recorded.
"""
from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..circuit import NOISE, Circuit


def _g(x1, z1, x2, z2):
    """Exponent of ``i`` picked up when multiplying single-qubit Paulis."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1
        self.record: List[int] = []

    # -- Clifford gates ---------------------------------------------------------
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def pauli_x(self, a: int) -> None:
        self.r ^= self.z[:, a]

    def pauli_z(self, a: int) -> None:
        self.r ^= self.x[:, a]

    # -- row algebra -----------------------------------------------------------
    def _rowsum_into(self, rows: np.ndarray, src: int) -> None:
        """Multiply row ``src`` into every row in ``rows``."""
        if len(rows) == 0:
            return
        g = _g(self.x[src][None, :], self.z[src][None, :], self.x[rows], self.z[rows]).sum(axis=1)
        total = (2 * self.r[rows].astype(np.int64) + 2 * int(self.r[src]) + g) % 4
        self.r[rows] = (total == 2).astype(np.uint8)
        self.x[rows] ^= self.x[src]
        self.z[rows] ^= self.z[src]

    def _product_of(self, rows: Iterable[int]) -> Tuple[np.ndarray, np.ndarray, int]:
        x = np.zeros(self.n, dtype=np.uint8)
        z = np.zeros(self.n, dtype=np.uint8)
        phase = 0
        for i in rows:
            g = int(_g(self.x[i], self.z[i], x, z).sum())
            phase = (phase + 2 * int(self.r[i]) + g) % 4
            x ^= self.x[i]
            z ^= self.z[i]
        return x, z, phase

    # -- measurement -------------------------------------------------------------
    def measure_z(self, a: int, forced: Optional[int] = None) -> int:
        n = self.n
        stab_hits = np.flatnonzero(self.x[n:, a]) + n
        if len(stab_hits):
            p = int(stab_hits[0])
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            self._rowsum_into(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            outcome = 0 if forced is None else int(forced)
            self.r[p] = outcome
        else:
            rows = np.flatnonzero(self.x[:n, a]) + n
            _, _, phase = self._product_of(rows)
            outcome = 1 if phase == 2 else 0
        self.record.append(outcome)
        return outcome

    def measure_x(self, a: int, forced: Optional[int] = None) -> int:
        self.h(a)
        out = self.measure_z(a, forced)
        self.h(a)
        return out

    def reset_zero(self, a: int) -> None:
        if self.measure_z(a):
            self.pauli_x(a)
        self.record.pop()

    def reset_plus(self, a: int) -> None:
        self.reset_zero(a)
        self.h(a)

    # -- queries -------------------------------------------------------------------
    def expectation(self, xs: Sequence[int], zs: Sequence[int]) -> int:
        """Expectation of the Pauli with ``X`` on ``xs`` and ``Z`` on ``zs``.

        Qubits in both ``xs`` and ``zs`` carry ``Y``. Returns ``+1``/``-1`` if
        the Pauli is in the stabilizer group up to sign, else ``0``.
        """
        n = self.n
        px = np.zeros(n, dtype=np.uint8)
        pz = np.zeros(n, dtype=np.uint8)
        px[list(xs)] = 1
        pz[list(zs)] = 1
        anti = (self.x[n:] @ pz + self.z[n:] @ px) % 2
        if anti.any():
            return 0
        anti_destab = np.flatnonzero((self.x[:n] @ pz + self.z[:n] @ px) % 2)
        x, z, phase = self._product_of(anti_destab + n)
        assert np.array_equal(x, px) and np.array_equal(z, pz)
        return 1 if phase == 0 else -1

    def stabilizers(self) -> List[str]:
        out = []
        for i in range(self.n, 2 * self.n):
            chars = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.x[i], self.z[i]))
            out.append(("-" if self.r[i] else "+") + chars)
        return out


def tableau_run(c: Circuit, forced: Optional[Dict[int, int]] = None, skip_data_measurements: bool = False) -> Tableau:
    """Execute the noiseless part of ``c`` on a fresh ``|0...0>`` tableau.

    ``forced`` maps measurement-record index to a forced outcome for random
    measurements.
    """
    forced = forced or {}
    t = Tableau(c.num_qubits)
    for ins in c.instructions:
        name = ins.name
        if name in NOISE or name in ("TICK", "DETECTOR", "OBSERVABLE"):
            continue
        if name == "H":
            for q in ins.targets:
                t.h(q)
        elif name == "CZ":
            for a, b in ins.pairs():
                t.cz(a, b)
        elif name == "CNOT":
            for a, b in ins.pairs():
                t.cnot(a, b)
        elif name == "INIT0":
            for q in ins.targets:
                t.reset_zero(q)
        elif name == "INITP":
            for q in ins.targets:
                t.reset_plus(q)
        elif name == "MZ":
            for q in ins.targets:
                t.measure_z(q, forced.get(len(t.record)))
        elif name == "MX":
            if skip_data_measurements:
                continue
            for q in ins.targets:
                t.measure_x(q, forced.get(len(t.record)))
    return t
