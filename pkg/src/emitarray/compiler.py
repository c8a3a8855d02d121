"""Compile emitter protocols into timed Clifford circuits.

Every protocol grows the target graph one vertex per emitter per time step.
Each emitter ``Q_s`` is, at any moment, linked by a graph edge to at most one
already-emitted data qubit (the quasi-subgraph picture). Adding vertex ``k``
applies ``CZ(Q_s, i)`` for the earlier in-slab neighbours ``i`` of ``k``
symmetric-differenced with the current link, an emitter-emitter ``CZ`` for
every cross edge of ``k``, then ``CNOT(Q_s, k)`` and ``H(Q_s)``. The symmetric
difference is exactly the redundant-gate elision of the single- and
multi-emitter protocols.

``S1``/``M1`` keep the emitter coherent and disentangle with a final ``CZ``.
``S2``/``M2`` disentangle, measure and reset the emitter whenever the next
vertex in its sequence is not adjacent to the current one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import Circuit, Instruction
from .lattice import (
    OBSERVABLE_NAMES,
    ClusterGraph,
    EmissionOrder,
    SlabPartition,
    emission_order,
    validate_matching_condition,
)

PROTOCOLS = ("S1", "S2", "M1", "M2")


@dataclass
class _Step:
    init0: List[int]
    cz: List[Tuple[int, int]]
    cross: List[Tuple[int, int]]
    swap: List[Tuple[int, int]]  # (ancilla, data) -> CNOT then H
    reset: List[Tuple[int, int]]  # (ancilla, data) -> CZ, MZ, INITP
    final: List[Tuple[int, int]]  # (ancilla, data) -> CZ


def _check_order(g: ClusterGraph, p: SlabPartition, order: EmissionOrder) -> None:
    seen = sorted(v for seq in order.sequences for v in seq)
    if seen != list(range(g.num_vertices)):
        raise ValueError("emission order does not cover every vertex exactly once")
    for s, seq in enumerate(order.sequences):
        if any(int(p.slab_of[v]) != s for v in seq):
            raise ValueError(f"sequence {s} contains vertices of another slab")


def _order_targets(targets, link):
    # disentangling the previous link first keeps hook errors at weight <= 4
    rest = sorted(t for t in targets if t != link)
    return [link] + rest if link in targets else rest


def compile_protocol(
    g: ClusterGraph,
    partition: SlabPartition,
    order: EmissionOrder,
    step_rule: str = "S1",
    measure: str = "asap",
    protocol: str = "",
) -> Circuit:
    """Shared engine behind :func:`compile_s1`, :func:`compile_s2` and :func:`compile_m`."""
    if step_rule not in ("S1", "S2"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    if measure not in ("asap", "end"):
        raise ValueError(f"unknown measurement mode {measure!r}")
    _check_order(g, partition, order)
    bad = validate_matching_condition(partition)
    if bad:
        raise ValueError(f"partition violates the matching condition at vertices {bad[:10]}")

    n_e = len(order.sequences)
    nv = g.num_vertices
    dq = lambda v: n_e + v  # noqa: E731
    slab_of = partition.slab_of
    partners = partition.cross_partners()
    next_in_seq: Dict[int, Optional[int]] = {}
    for seq in order.sequences:
        for a, b in zip(seq, seq[1:]):
            next_in_seq[a] = b
        if seq:
            next_in_seq[seq[-1]] = None

    emitted = np.zeros(nv, dtype=bool)
    link: List[Optional[int]] = [None] * n_e
    last_tick = [-1] * nv
    steps: List[_Step] = []
    for j, row in enumerate(order.steps):
        st = _Step([], [], [], [], [], [])
        for s, k in enumerate(row):
            if k < 0:
                continue
            st.init0.append(k)
            targets = {i for i in g.neighbors[k] if emitted[i] and int(slab_of[i]) == s}
            if link[s] is not None:
                targets ^= {link[s]}
            for i in _order_targets(targets, link[s]):
                st.cz.append((s, i))
                last_tick[i] = j
            for w in partners.get(k, ()):
                t = int(slab_of[w])
                if s < t:
                    if order.step_of.get(w) != j:
                        raise ValueError(f"cross partners {k} and {w} are not emitted together")
                    st.cross.append((s, t))
            st.swap.append((s, k))
            last_tick[k] = j
            link[s] = k
        for s, k in enumerate(row):
            if k < 0:
                continue
            emitted[k] = True
            nxt = next_in_seq[k]
            if step_rule == "S2" and (nxt is None or not g.has_edge(k, nxt)):
                st.reset.append((s, k))
                link[s] = None
            elif nxt is None and link[s] is not None:
                st.final.append((s, k))
                link[s] = None
        steps.append(st)

    n_steps = len(steps)
    emit_tick = [order.step_of[v] for v in range(nv)]
    if measure == "asap":
        measure_tick = [t + 1 for t in last_tick]
    else:
        measure_tick = [n_steps] * nv
    to_measure: Dict[int, List[int]] = {}
    for v in range(nv):
        to_measure.setdefault(measure_tick[v], []).append(v)

    ins: List[Instruction] = []
    record: Dict[int, int] = {}
    n_rec = 0

    def mx(vs):
        nonlocal n_rec
        for v in sorted(vs, key=lambda v: (emit_tick[v], v)):
            ins.append(Instruction("MX", (dq(v),)))
            record[v] = n_rec
            n_rec += 1

    for j, st in enumerate(steps):
        mx(to_measure.get(j, ()))
        if j == 0:
            ins.extend(Instruction("INITP", (s,)) for s in range(n_e))
        ins.extend(Instruction("INIT0", (dq(k),)) for k in st.init0)
        ins.extend(Instruction("CZ", (s, dq(i))) for s, i in st.cz)
        ins.extend(Instruction("CZ", (s, t)) for s, t in st.cross)
        for s, k in st.swap:
            ins.append(Instruction("CNOT", (s, dq(k))))
        for s, k in st.swap:
            ins.append(Instruction("H", (s,)))
        for s, k in st.reset:
            ins.append(Instruction("CZ", (s, dq(k))))
        for s, k in st.reset:
            ins.append(Instruction("MZ", (s,)))
            n_rec += 1
        for s, k in st.reset:
            ins.append(Instruction("INITP", (s,)))
        for s, k in st.final:
            ins.append(Instruction("CZ", (s, dq(k))))
        ins.append(Instruction("TICK"))
    mx(to_measure.get(n_steps, ()))

    for check in list(g.primal_checks) + list(g.dual_checks):
        ins.append(Instruction("DETECTOR", tuple(sorted(record[v] for v in check))))
    for k, name in enumerate(OBSERVABLE_NAMES):
        if name in g.observables:
            recs = tuple(sorted(record[int(v)] for v in g.observables[name]))
            ins.append(Instruction("OBSERVABLE", recs, float(k)))

    return Circuit(
        instructions=tuple(ins),
        num_qubits=n_e + nv,
        ancillas=tuple(range(n_e)),
        data_vertex={dq(v): v for v in range(nv)},
        emit_tick=tuple(emit_tick),
        last_tick=tuple(last_tick),
        measure_tick=tuple(measure_tick),
        protocol=protocol or step_rule,
    )


def _single_slab(g: ClusterGraph, order: Optional[EmissionOrder]) -> Tuple[SlabPartition, EmissionOrder]:
    p = SlabPartition.from_assignment(g, np.zeros(g.num_vertices, dtype=np.int64))
    if g.L is not None:
        p = SlabPartition(graph=g, n_e=1, slab_of=p.slab_of, thickness=(g.L,), z_start=(0,))
    if order is None:
        order = emission_order(p)
    if len(order.sequences) != 1:
        raise ValueError("single-emitter protocols need a single-slab emission order")
    return p, order


def compile_s1(g: ClusterGraph, order: Optional[EmissionOrder] = None, measure: str = "asap") -> Circuit:
    p, order = _single_slab(g, order)
    return compile_protocol(g, p, order, "S1", measure, protocol="S1")


def compile_s2(g: ClusterGraph, order: Optional[EmissionOrder] = None, measure: str = "asap") -> Circuit:
    p, order = _single_slab(g, order)
    return compile_protocol(g, p, order, "S2", measure, protocol="S2")


def compile_m(
    g: ClusterGraph,
    partition: SlabPartition,
    order: Optional[EmissionOrder] = None,
    variant: str = "M1",
    measure: str = "asap",
) -> Circuit:
    if variant not in ("M1", "M2"):
        raise ValueError(f"variant must be M1 or M2, got {variant!r}")
    if order is None:
        order = emission_order(partition)
    rule = "S1" if variant == "M1" else "S2"
    return compile_protocol(g, partition, order, rule, measure, protocol=variant)


def compile_named(
    protocol: str,
    g: ClusterGraph,
    n_e: int = 1,
    measure: str = "asap",
    allow_interruption: bool = True,
) -> Circuit:
    """Compile a lattice for ``protocol`` with ``n_e`` emitters (``S*`` need 1)."""
    from .lattice import partition_slabs

    if protocol in ("S1", "S2"):
        if n_e != 1:
            raise ValueError(f"{protocol} is a single-emitter protocol")
        return (compile_s1 if protocol == "S1" else compile_s2)(g, measure=measure)
    if protocol in ("M1", "M2"):
        p = partition_slabs(g, n_e, allow_interruption=allow_interruption)
        return compile_m(g, p, variant=protocol, measure=measure)
    raise ValueError(f"unknown protocol {protocol!r}")


@dataclass
class VerifyReport:
    ok: bool
    checked: int
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_cluster_state(c: Circuit, g: ClusterGraph) -> VerifyReport:
    """Tableau check that ``c`` prepares the graph state of ``g``.

    Data measurements are skipped; every canonical stabilizer ``X_v prod Z_N(v)``
    must hold with sign ``+1`` and every ancilla must end in ``|+>``.
    """
    from .sim.tableau import tableau_run

    t = tableau_run(c.without_noise(), skip_data_measurements=True)
    qubit_of = {v: q for q, v in c.data_vertex.items()}
    checked = 0
    for v in range(g.num_vertices):
        if v not in qubit_of:
            return VerifyReport(False, checked, f"vertex {v} is never emitted")
        zs = [qubit_of[int(u)] for u in g.neighbors[v]]
        val = t.expectation([qubit_of[v]], zs)
        checked += 1
        if val != 1:
            state = "absent" if val == 0 else "has sign -1"
            return VerifyReport(False, checked, f"stabilizer X_{v} Z_{sorted(int(u) for u in g.neighbors[v])} {state}")
    for q in c.ancillas:
        val = t.expectation([q], [])
        checked += 1
        if val != 1:
            return VerifyReport(False, checked, f"ancilla {q} is not disentangled in |+>")
    return VerifyReport(True, checked)
