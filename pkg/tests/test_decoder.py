import numpy as np
import pytest

from emitarray.decoder import (
    BatchDecoder,
    Syndrome,
    brute_force_match,
    decode,
    dem_to_matching,
    probability_weight,
)
from emitarray.dem import DemEntry, DetectorErrorModel, build_dem, fault_table
from emitarray.noise import NoiseSpec, attach_noise
from emitarray.sim import DemSampler, make_rng

from conftest import circuit, lattice


def toy_dem(entries):
    return DetectorErrorModel(4, 6, 2, entries)


def test_single_edge_weight():
    primal, dual = dem_to_matching(toy_dem([DemEntry(0.01, (0, 1), (0,))]))
    assert primal.num_edges == 1 and dual.num_edges == 0
    assert primal.weight[0] == pytest.approx(-np.log(0.01 / 0.99))


def test_parallel_edges_merge():
    primal, _ = dem_to_matching(toy_dem([DemEntry(0.01, (0, 1), ()), DemEntry(0.02, (0, 1), ())]))
    p = 0.01 + 0.02 - 2 * 0.01 * 0.02
    assert primal.num_edges == 1
    assert primal.weight[0] == pytest.approx(-np.log(p / (1 - p)))


def test_uniform_weights():
    primal, _ = dem_to_matching(toy_dem([DemEntry(0.01, (0, 1), ())]), weights="uniform")
    assert primal.weight[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dem_to_matching(toy_dem([]), weights="nope")


def test_weights_positive_below_half():
    for p in (1e-6, 0.1, 0.49):
        assert 0 < probability_weight(p) < np.inf


def test_adjacent_pair_returns_edge_mask():
    graphs = dem_to_matching(toy_dem([DemEntry(0.01, (0, 1), (0,)), DemEntry(0.01, (2, 3), (4,))]))
    corr = decode(graphs, Syndrome(np.array([1, 1, 0, 0], dtype=np.uint8)))
    assert corr.observables.tolist() == [1, 0, 0, 0, 0, 0]
    corr = decode(graphs, Syndrome(np.array([1, 1, 1, 1], dtype=np.uint8)))
    assert corr.observables.tolist() == [1, 0, 0, 0, 1, 0]


def test_dephasing_only_edge_count():
    c = attach_noise(circuit("S1", 4), NoiseSpec(eta_z=1e-3))
    primal, dual = dem_to_matching(build_dem(c))
    g = lattice(4)
    n_face = sum(g.is_face(v) for v in range(g.num_vertices))
    assert primal.num_edges == n_face == 24
    assert dual.num_edges == g.num_vertices - n_face
    assert primal.is_connected() and dual.is_connected()


@pytest.fixture(scope="module")
def l4_graphs():
    c = attach_noise(circuit("S2", 4), NoiseSpec(p=2e-3, eta_z=1e-3))
    return dem_to_matching(build_dem(c))


def test_empty_syndrome(l4_graphs):
    corr = decode(l4_graphs, Syndrome(np.zeros(16, dtype=np.uint8)))
    assert not corr.observables.any() and corr.cost == 0 and corr.pairs == ()


def test_odd_flips_raise(l4_graphs):
    s = np.zeros(16, dtype=np.uint8)
    s[3] = 1
    with pytest.raises(ValueError):
        decode(l4_graphs, Syndrome(s))
    with pytest.raises(ValueError):
        BatchDecoder(l4_graphs).decode_batch(s[None, :])


def test_agrees_with_brute_force(l4_graphs):
    rng = np.random.default_rng(4)
    for _ in range(60):
        s = np.zeros(16, dtype=np.uint8)
        for lo in (0, 8):
            k = 2 * int(rng.integers(0, 3))
            s[lo + rng.choice(8, k, replace=False)] = 1
        a, b = decode(l4_graphs, Syndrome(s)), brute_force_match(l4_graphs, Syndrome(s))
        assert a.cost == b.cost


def test_pairings_tie_break():
    # square 0-1-2-3-0 with equal weights: both pairings cost 2, the first is kept
    dem = DetectorErrorModel(
        8, 6, 4, [DemEntry(0.1, (0, 1), ()), DemEntry(0.1, (1, 2), (0,)), DemEntry(0.1, (2, 3), ()), DemEntry(0.1, (0, 3), ())]
    )
    graphs = dem_to_matching(dem)
    s = Syndrome(np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=np.uint8))
    b = brute_force_match(graphs, s)
    assert b.pairs == ((0, 1), (2, 3))
    assert decode(graphs, s).cost == b.cost


def test_erasure_zeroes_edge(l4_graphs):
    primal = l4_graphs[0]
    vtx, edge = next(iter(primal.erasure_edge.items()))
    erased = np.zeros(48, dtype=bool)
    erased[vtx] = True
    w = primal.weights_with_erasure(erased)
    assert w[edge] == 0 and np.count_nonzero(w != primal.weight) == 1
    s = np.zeros(16, dtype=np.uint8)
    s[[primal.u[edge], primal.v[edge]]] = 1
    corr = decode(l4_graphs, Syndrome(s, erased))
    assert corr.cost == 0


def test_batch_decoder_matches_reference():
    c = attach_noise(circuit("S1", 4), NoiseSpec(p=3e-3))
    dem = build_dem(c)
    graphs = dem_to_matching(dem)
    dets, obs, _ = DemSampler(fault_table(c)).sample(300, make_rng(9))
    pred = BatchDecoder(graphs).decode_batch(dets)
    ref = np.array([decode(graphs, Syndrome(d)).observables for d in dets])
    # equal-cost matchings may legitimately differ in their observable mask
    assert np.mean(np.any(pred[:, :1] != ref[:, :1], axis=1)) < 0.03


def test_batch_decoder_with_erasures():
    c = attach_noise(circuit("S1", 4), NoiseSpec(eta_loss=2e-3), L=4)
    graphs = dem_to_matching(build_dem(c))
    dets, obs, er = DemSampler(fault_table(c)).sample(200, make_rng(3))
    pred = BatchDecoder(graphs).decode_batch(dets, er)
    ref = np.array([decode(graphs, Syndrome(d, e)).observables for d, e in zip(dets, er)])
    assert pred.shape == ref.shape
    assert np.mean(np.any(pred[:, :1] != ref[:, :1], axis=1)) < 0.05
