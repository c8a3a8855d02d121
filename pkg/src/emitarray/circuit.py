"""Timed Clifford circuit representation and its text format.

Grammar (one instruction per line)::

    line        := instruction | directive | comment | ""
    instruction := NAME [ "(" number ")" ] { " " integer }
    directive   := "#!" key { " " token }
    comment     := "#" text

``TICK`` lines separate time steps. ``DETECTOR`` and ``OBSERVABLE(k)`` list
absolute measurement-record indices (0-based, in measurement order).
Directive lines carry qubit roles and per-data-qubit timing so a parsed circuit
is equivalent to the one that was emitted; plain comments are discarded.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

GATES_1Q = {"H"}
GATES_2Q = {"CZ", "CNOT"}
INITS = {"INITP", "INIT0"}
MEASUREMENTS = {"MX", "MZ"}
NOISE_1Q = {"DEPOL1", "ZERR", "HERALD_ERASE"}
NOISE_2Q = {"DEPOL2"}
NOISE = NOISE_1Q | NOISE_2Q
ANNOTATIONS = {"DETECTOR", "OBSERVABLE", "TICK"}
OPCODES = GATES_1Q | GATES_2Q | INITS | MEASUREMENTS | NOISE | ANNOTATIONS
_WITH_ARG = NOISE | {"OBSERVABLE"}


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: Tuple[int, ...] = ()
    arg: Optional[float] = None

    def __post_init__(self):
        if self.name not in OPCODES:
            raise ValueError(f"unknown opcode {self.name!r}")
        if (self.arg is None) == (self.name in _WITH_ARG):
            raise ValueError(f"{self.name} {'requires' if self.arg is None else 'takes no'} argument")
        if self.name in GATES_2Q | NOISE_2Q and len(self.targets) % 2:
            raise ValueError(f"{self.name} needs target pairs")
        if any(t < 0 for t in self.targets):
            raise ValueError(f"{self.name} has a negative target")

    def pairs(self) -> List[Tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]

    def to_text(self) -> str:
        head = self.name
        if self.arg is not None:
            arg = int(self.arg) if self.name == "OBSERVABLE" else self.arg
            head += f"({arg!r})"
        return " ".join([head, *map(str, self.targets)])


@dataclass(frozen=True)
class Circuit:
    """Instruction list plus qubit roles and delay-line timing.

    Qubits ``0..n_e-1`` are emitters (ancillas); every other qubit is a data
    qubit whose graph vertex is ``data_vertex[q]``. ``emit_tick``,
    ``last_tick`` and ``measure_tick`` are indexed by vertex.
    """

    instructions: Tuple[Instruction, ...]
    num_qubits: int
    ancillas: Tuple[int, ...]
    data_vertex: Dict[int, int] = field(default_factory=dict)
    emit_tick: Tuple[int, ...] = ()
    last_tick: Tuple[int, ...] = ()
    measure_tick: Tuple[int, ...] = ()
    protocol: str = ""

    # -- derived quantities -------------------------------------------------
    @property
    def num_ticks(self) -> int:
        return sum(1 for ins in self.instructions if ins.name == "TICK")

    @property
    def num_measurements(self) -> int:
        return sum(len(ins.targets) for ins in self.instructions if ins.name in MEASUREMENTS)

    @property
    def num_detectors(self) -> int:
        return sum(1 for ins in self.instructions if ins.name == "DETECTOR")

    @property
    def num_observables(self) -> int:
        ks = [int(ins.arg) for ins in self.instructions if ins.name == "OBSERVABLE"]
        return max(ks) + 1 if ks else 0

    def is_ancilla(self, q: int) -> bool:
        return q in self.ancilla_set

    @property
    def ancilla_set(self) -> frozenset:
        return frozenset(self.ancillas)

    def qubit_of_vertex(self) -> Dict[int, int]:
        return {v: q for q, v in self.data_vertex.items()}

    def residence(self, v: int) -> int:
        """Number of time steps vertex ``v`` spends between emission and measurement."""
        return self.measure_tick[v] - self.emit_tick[v]

    def measurement_records(self) -> List[Tuple[str, int]]:
        recs = []
        for ins in self.instructions:
            if ins.name in MEASUREMENTS:
                recs.extend((ins.name, q) for q in ins.targets)
        return recs

    def detectors(self) -> List[Tuple[int, ...]]:
        return [ins.targets for ins in self.instructions if ins.name == "DETECTOR"]

    def observables(self) -> Dict[int, Tuple[int, ...]]:
        obs: Dict[int, Tuple[int, ...]] = {}
        for ins in self.instructions:
            if ins.name == "OBSERVABLE":
                obs[int(ins.arg)] = obs.get(int(ins.arg), ()) + ins.targets
        return obs

    def count(self, name: str) -> int:
        return sum(1 for ins in self.instructions if ins.name == name)

    def without_noise(self) -> "Circuit":
        return replace(self, instructions=tuple(i for i in self.instructions if i.name not in NOISE))

    def with_instructions(self, instructions: Iterable[Instruction]) -> "Circuit":
        return replace(self, instructions=tuple(instructions))

    # -- text format ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [
            f"#! qubits {self.num_qubits}",
            "#! ancillas " + " ".join(map(str, self.ancillas)),
        ]
        if self.protocol:
            lines.append(f"#! protocol {self.protocol}")
        if self.data_vertex:
            flat = []
            for q in sorted(self.data_vertex):
                v = self.data_vertex[q]
                flat += [q, v, self.emit_tick[v], self.last_tick[v], self.measure_tick[v]]
            lines.append("#! data " + " ".join(map(str, flat)))
        lines.extend(ins.to_text() for ins in self.instructions)
        return "\n".join(lines) + "\n"


def parse_instruction(line: str) -> Instruction:
    head, *rest = line.split()
    arg = None
    if "(" in head:
        if not head.endswith(")"):
            raise ValueError(f"malformed instruction {line!r}")
        head, raw = head[:-1].split("(", 1)
        arg = float(raw)
    try:
        targets = tuple(int(t) for t in rest)
    except ValueError as exc:
        raise ValueError(f"malformed targets in {line!r}") from exc
    return Instruction(head, targets, arg)


def parse_circuit(text: str) -> Circuit:
    instructions: List[Instruction] = []
    num_qubits = 0
    ancillas: Tuple[int, ...] = ()
    protocol = ""
    data: Sequence[int] = ()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#!"):
            key, *vals = line[2:].split()
            if key == "qubits":
                num_qubits = int(vals[0])
            elif key == "ancillas":
                ancillas = tuple(int(v) for v in vals)
            elif key == "protocol":
                protocol = vals[0] if vals else ""
            elif key == "data":
                data = [int(v) for v in vals]
            continue
        if line.startswith("#"):
            continue
        try:
            instructions.append(parse_instruction(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not num_qubits:
        used = [q for ins in instructions if ins.name not in {"DETECTOR", "OBSERVABLE", "TICK"} for q in ins.targets]
        num_qubits = max(used, default=-1) + 1
    data_vertex: Dict[int, int] = {}
    nv = len(data) // 5
    emit, last, meas = [0] * nv, [0] * nv, [0] * nv
    for i in range(nv):
        q, v, e, l, m = data[5 * i : 5 * i + 5]
        data_vertex[q] = v
        emit[v], last[v], meas[v] = e, l, m
    return Circuit(
        instructions=tuple(instructions),
        num_qubits=num_qubits,
        ancillas=ancillas,
        data_vertex=data_vertex,
        emit_tick=tuple(emit),
        last_tick=tuple(last),
        measure_tick=tuple(meas),
        protocol=protocol,
    )
