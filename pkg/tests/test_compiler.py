import numpy as np
import pytest

from emitarray.compiler import compile_m, compile_named, compile_s1, compile_s2, verify_cluster_state
from emitarray.lattice import ClusterGraph, SlabPartition, emission_order, partition_slabs
from emitarray.sim.tableau import tableau_run

from conftest import circuit, cycle_graph, lattice, path_graph, two_slab_graph


def test_path3_stabilizers():
    g = path_graph(3)
    for compile_fn in (compile_s1, compile_s2):
        c = compile_fn(g)
        t = tableau_run(c, skip_data_measurements=True)
        q = {v: q for q, v in c.data_vertex.items()}
        assert t.expectation([q[0]], [q[1]]) == 1
        assert t.expectation([q[1]], [q[0], q[2]]) == 1
        assert t.expectation([q[2]], [q[1]]) == 1
        assert t.expectation([0], []) == 1


@pytest.mark.parametrize("n", [1, 2, 5, 8])
@pytest.mark.parametrize("compile_fn", [compile_s1, compile_s2])
def test_paths_and_cycles(n, compile_fn):
    assert verify_cluster_state(compile_fn(path_graph(n)), path_graph(n))
    if n >= 3:
        assert verify_cluster_state(compile_fn(cycle_graph(n)), cycle_graph(n))


def test_single_vertex_circuit():
    c = compile_s1(path_graph(1))
    assert c.count("INIT0") == 1 and c.count("MX") == 1
    assert verify_cluster_state(c, path_graph(1))


def test_empty_graph_passes():
    g = ClusterGraph.from_edges(3, [])
    assert verify_cluster_state(compile_s2(g), g)


def test_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(15):
        n = int(rng.integers(2, 9))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
        g = ClusterGraph.from_edges(n, edges)
        for compile_fn in (compile_s1, compile_s2):
            rep = verify_cluster_state(compile_fn(g), g)
            assert rep, rep.message


@pytest.mark.parametrize("variant", ["M1", "M2"])
def test_two_slab_example(variant):
    g, p = two_slab_graph()
    c = compile_m(g, p, variant=variant)
    rep = verify_cluster_state(c, g)
    assert rep, rep.message
    anc = set(c.ancillas)
    cross = [i for i in c.instructions if i.name == "CZ" and set(i.targets) <= anc]
    assert len(cross) == 2


@pytest.mark.parametrize("protocol,n_e", [("S1", 1), ("S2", 1), ("M1", 2), ("M2", 2)])
def test_lattice_l4(protocol, n_e):
    c = circuit(protocol, 4, n_e)
    rep = verify_cluster_state(c, lattice(4))
    assert rep, rep.message
    assert rep.checked == 48 + n_e


def test_deleted_cz_fails_naming_stabilizer():
    c = circuit("S1", 4)
    idx = next(i for i, ins in enumerate(c.instructions) if ins.name == "CZ" and ins.targets[1] >= 1)
    broken = c.with_instructions(c.instructions[:idx] + c.instructions[idx + 1 :])
    rep = verify_cluster_state(broken, lattice(4))
    assert not rep
    assert "X_" in rep.message


@pytest.mark.parametrize("protocol,n_e", [("S1", 1), ("S2", 1), ("M1", 2), ("M2", 2)])
def test_structural_invariants(protocol, n_e):
    c = circuit(protocol, 4, n_e)
    anc = set(c.ancillas)
    init0, mx = [], []
    for ins in c.instructions:
        if ins.name == "CNOT":
            assert all(a in anc and b not in anc for a, b in ins.pairs())
        elif ins.name == "CZ":
            assert all(a in anc for a, b in ins.pairs())
        elif ins.name == "MX":
            assert all(q not in anc for q in ins.targets)
            mx.extend(ins.targets)
        elif ins.name == "MZ":
            assert all(q in anc for q in ins.targets)
        elif ins.name == "INIT0":
            init0.extend(ins.targets)
    data = sorted(c.data_vertex)
    assert sorted(init0) == data and sorted(mx) == data
    if protocol in ("S1", "M1"):
        assert c.count("MZ") == 0


def test_s2_mz_count_equals_raster_breaks():
    g = lattice(4)
    seq = emission_order(partition_slabs(g, 1)).sequences[0]
    breaks = sum(1 for a, b in zip(seq, seq[1:]) if not g.has_edge(a, b)) + 1
    assert circuit("S2", 4).count("MZ") == breaks


def test_m1_cross_cz_count_l8():
    g = lattice(8)
    p = partition_slabs(g, 2)
    c = compile_named("M1", g, 2)
    n_cross = sum(len(v) for v in p.cross_edges.values())
    cross = sum(len(i.pairs()) for i in c.instructions if i.name == "CZ" and max(i.targets) < 2)
    assert cross == n_cross == 2 * (n_cross // 2)


def test_interruption_needed_for_uneven_partition():
    g = lattice(8)
    p = partition_slabs(g, 3, allow_interruption=True)
    assert not p.no_interruption_eligible
    order = emission_order(p)
    c = compile_m(g, p, order)
    assert verify_cluster_state(c, g)


@pytest.mark.parametrize("L", [4, 8])
def test_residence_bounds_single_emitter(L):
    c = circuit("S1", L)
    res = [c.residence(v) for v in range(lattice(L).num_vertices)]
    assert min(res) >= 1
    assert max(res) <= 1.5 * L * L + 2 * L


def test_two_emitters_halve_max_residence():
    L = 8
    r1 = max(circuit("S1", L).residence(v) for v in range(lattice(L).num_vertices))
    r2 = max(circuit("M1", L, 2).residence(v) for v in range(lattice(L).num_vertices))
    assert abs(r2 - r1 / 2) <= 2 * L


def test_measure_end_defers_all_mx():
    c = compile_s1(path_graph(4), measure="end")
    assert len(set(c.measure_tick)) == 1
    assert verify_cluster_state(c, path_graph(4))


def test_bad_partition_rejected():
    g = ClusterGraph.from_edges(4, [(0, 2), (0, 3)])
    p = SlabPartition.from_assignment(g, [0, 0, 1, 1])
    with pytest.raises(ValueError):
        compile_m(g, p)
