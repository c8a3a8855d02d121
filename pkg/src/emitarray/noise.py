"""Error models attached to compiled circuits, and fault enumeration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

from .circuit import GATES_1Q, GATES_2Q, INITS, Circuit, Instruction

PAULIS_1Q = ("X", "Y", "Z")
PAULIS_2Q = tuple(a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II")
LOSS_MODES = ("flat_L2_over_ne", "residence")


@dataclass(frozen=True)
class NoiseSpec:
    p: float = 0.0
    pe_ratio: float = 1.0
    eta_z: float = 0.0
    eta_loss: float = 0.0
    loss_mode: str = "flat_L2_over_ne"
    loss_constant: float = 1.0
    readout_gate: bool = True  # DEPOL1(p) for the basis change preceding each data MX

    def __post_init__(self):
        for name in ("p", "eta_z", "eta_loss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.pe_ratio < 0 or self.p * self.pe_ratio > 1.0:
            raise ValueError(f"emitter-emitter rate p*pe_ratio={self.p * self.pe_ratio} outside [0, 1]")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"unknown loss mode {self.loss_mode!r}")

    @property
    def pe(self) -> float:
        return self.p * self.pe_ratio

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def attach_circuit_noise(c: Circuit, spec: NoiseSpec) -> Circuit:
    """Depolarize after every gate and initialization.

    Emitter-emitter ``CZ`` gates get ``DEPOL2(p * pe_ratio)``; everything else
    gets strength ``p``. Zero-strength channels are omitted. With
    ``readout_gate`` a photon's X readout is a Hadamard followed by a Z
    measurement, so its ``DEPOL1(p)`` lands just before the ``MX``.
    """
    if spec.p == 0:
        return c
    anc = c.ancilla_set
    out: List[Instruction] = []
    for ins in c.instructions:
        if spec.readout_gate and ins.name == "MX":
            data = tuple(q for q in ins.targets if q in c.data_vertex)
            if data:
                out.append(Instruction("DEPOL1", data, spec.p))
        out.append(ins)
        if ins.name in GATES_1Q or ins.name in INITS:
            out.append(Instruction("DEPOL1", ins.targets, spec.p))
        elif ins.name in GATES_2Q:
            for a, b in ins.pairs():
                rate = spec.pe if (a in anc and b in anc) else spec.p
                if rate > 0:
                    out.append(Instruction("DEPOL2", (a, b), rate))
    return c.with_instructions(out)


def attach_dephasing(c: Circuit, spec: NoiseSpec) -> Circuit:
    """Apply ``ZERR(eta_z)`` before every ``TICK`` to each data qubit in flight.

    A data qubit is in flight from its emission step until the step before its
    ``MX``; it therefore receives ``residence`` dephasing channels.
    """
    if spec.eta_z == 0:
        return c
    by_tick: dict = {}
    for q, v in c.data_vertex.items():
        for t in range(c.emit_tick[v], c.measure_tick[v]):
            by_tick.setdefault(t, []).append(q)
    out: List[Instruction] = []
    tick = 0
    for ins in c.instructions:
        if ins.name == "TICK":
            qs = sorted(by_tick.get(tick, ()))
            if qs:
                out.append(Instruction("ZERR", tuple(qs), spec.eta_z))
            tick += 1
        out.append(ins)
    return c.with_instructions(out)


def loss_probability(c: Circuit, spec: NoiseSpec, L: int, n_e: int, v: int) -> float:
    if spec.loss_mode == "flat_L2_over_ne":
        return spec.loss_constant * spec.eta_loss * L * L / n_e
    return spec.loss_constant * spec.eta_loss * c.residence(v)


def attach_loss(c: Circuit, spec: NoiseSpec, L: int, n_e: int) -> Circuit:
    """Heralded erasure on every data qubit just before its ``MX``."""
    if spec.eta_loss == 0:
        return c
    out: List[Instruction] = []
    for ins in c.instructions:
        if ins.name == "MX" and ins.targets[0] in c.data_vertex:
            q = ins.targets[0]
            prob = loss_probability(c, spec, L, n_e, c.data_vertex[q])
            if prob >= 1.0 + 1e-12:
                raise ValueError(f"per-qubit loss probability {prob} >= 1")
            out.append(Instruction("HERALD_ERASE", (q,), min(prob, 1.0)))
        out.append(ins)
    return c.with_instructions(out)


def attach_noise(c: Circuit, spec: NoiseSpec, L: Optional[int] = None, n_e: int = 1) -> Circuit:
    c = attach_circuit_noise(c, spec)
    c = attach_dephasing(c, spec)
    if spec.eta_loss:
        if L is None:
            raise ValueError("loss noise needs the lattice size L")
        c = attach_loss(c, spec, L, n_e)
    return c


@dataclass(frozen=True)
class FaultLocation:
    """One Pauli term of one noise channel.

    ``pauli`` is a 1- or 2-letter string over ``IXYZ`` aligned with ``qubits``
    or ``"ERASE"`` (erasure followed by a ``Z`` on the erased qubit).
    """

    index: int
    pauli: str
    qubits: Tuple[int, ...]
    probability: float


def channel_terms(ins: Instruction) -> List[Tuple[str, Tuple[int, ...], float]]:
    """Pauli terms of a noise instruction as ``(pauli, qubits, probability)``."""
    if ins.arg is None or ins.name not in ("DEPOL1", "DEPOL2", "ZERR", "HERALD_ERASE"):
        return []
    p = float(ins.arg)
    terms = []
    if ins.name == "DEPOL1":
        for q in ins.targets:
            terms += [(P, (q,), p / 3) for P in PAULIS_1Q]
    elif ins.name == "DEPOL2":
        for a, b in ins.pairs():
            terms += [(P, (a, b), p / 15) for P in PAULIS_2Q]
    elif ins.name == "ZERR":
        terms += [("Z", (q,), p) for q in ins.targets]
    elif ins.name == "HERALD_ERASE":
        terms += [("ERASE", (q,), p) for q in ins.targets]
    return terms


def enumerate_faults(c: Circuit) -> List[FaultLocation]:
    faults = []
    for i, ins in enumerate(c.instructions):
        for pauli, qubits, prob in channel_terms(ins):
            faults.append(FaultLocation(i, pauli, qubits, prob))
    return faults
