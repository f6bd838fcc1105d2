"""Network construction, serialization, probabilities and expected matrices."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clocksync.clock import ClockParams, DelayModel
from clocksync.topology import (
    Arc,
    Network,
    centers,
    expected_gamma_d,
    expected_laplacian,
    generate_geometric,
    has_spanning_tree,
    mute_in_arcs,
    probability_profile,
    repair_connectivity,
)

from conftest import make_line_network


def _arc(gamma=1.0, p=0.9):
    return Arc(gamma, p, DelayModel(0.1))


class TestValidation:
    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            Arc(-1.0, 0.9, DelayModel(0.1))

    def test_p_hear_range(self):
        with pytest.raises(ValueError):
            Arc(1.0, 0.0, DelayModel(0.1))
        with pytest.raises(ValueError):
            Arc(1.0, 1.1, DelayModel(0.1))

    def test_self_arc_rejected(self):
        with pytest.raises(ValueError):
            Network(2, {(0, 0): _arc()}, np.ones(2),
                    [ClockParams(1.0), ClockParams(1.0)])

    def test_rate_shape(self):
        with pytest.raises(ValueError):
            Network(2, {}, np.ones(3),
                    [ClockParams(1.0), ClockParams(1.0)])

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            Network(2, {}, np.array([1.0, 0.0]),
                    [ClockParams(1.0), ClockParams(1.0)])


class TestSerialization:
    def test_round_trip(self, tmp_path):
        net = generate_geometric(8, 0.5, 0.2, seed=3)
        path = tmp_path / "net.json"
        net.save(path)
        loaded = Network.load(path)
        assert loaded.to_dict() == net.to_dict()

    def test_bad_schema_version(self):
        with pytest.raises(ValueError):
            Network.from_dict({"schema_version": 999, "n": 2,
                               "nodes": [], "arcs": []})


class TestConnectivity:
    def test_line_has_center(self):
        # 0 -> 1 -> 2: only node 0 reaches everyone
        arcs = {(0, 1): _arc(), (1, 2): _arc()}
        net = Network(3, arcs, np.ones(3), [ClockParams(1.0)] * 3)
        assert centers(net) == [0]
        assert has_spanning_tree(net)

    def test_disconnected_has_no_center(self):
        net = Network(3, {(0, 1): _arc()}, np.ones(3), [ClockParams(1.0)] * 3)
        assert centers(net) == []
        assert not has_spanning_tree(net)

    def test_cycle_all_centers(self):
        arcs = {(0, 1): _arc(), (1, 2): _arc(), (2, 0): _arc()}
        net = Network(3, arcs, np.ones(3), [ClockParams(1.0)] * 3)
        assert centers(net) == [0, 1, 2]

    def test_repair_identity_on_connected(self):
        arcs = {(0, 1): _arc(), (1, 2): _arc()}
        net = Network(3, arcs, np.ones(3), [ClockParams(1.0)] * 3)
        assert repair_connectivity(net) is net

    def test_repair_connects(self):
        net = Network(4, {(0, 1): _arc(), (2, 3): _arc()},
                      np.ones(4), [ClockParams(1.0)] * 4)
        fixed = repair_connectivity(net)
        assert has_spanning_tree(fixed)
        # minimal: merging two source components needs exactly one new arc
        assert len(fixed.arcs) == len(net.arcs) + 1


class TestGenerate:
    def test_basic_properties(self):
        net = generate_geometric(10, 0.5, 0.1, seed=0)
        assert net.n == 10
        assert has_spanning_tree(net)
        alphas = net.alphas()
        assert np.all((alphas >= 0.96) & (alphas <= 1.04))
        betas = net.betas()
        assert np.all((betas >= -0.2) & (betas <= 0.2))

    def test_deterministic(self):
        a = generate_geometric(10, 0.5, 0.1, seed=7)
        b = generate_geometric(10, 0.5, 0.1, seed=7)
        assert a.to_dict() == b.to_dict()

    def test_seed_changes_layout(self):
        a = generate_geometric(10, 0.5, 0.1, seed=1)
        b = generate_geometric(10, 0.5, 0.1, seed=2)
        assert a.to_dict() != b.to_dict()

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(3, 20), seed=st.integers(0, 10_000))
    def test_always_repaired(self, n, seed):
        net = generate_geometric(n, 0.4, 0.2, seed=seed)
        assert has_spanning_tree(net)


class TestProbabilityProfile:
    def test_two_node_oracle(self):
        # equal rates: pi = [1/2, 1/2]; one arc 0->1 with p_hear = 0.8:
        # pi_arc[1,0] = 0.4, n_bar = 0.4, p = [0, 1]
        net = make_line_network(p_hear=0.8, two_way=False)
        prof = probability_profile(net)
        assert prof.pi == pytest.approx([0.5, 0.5])
        assert prof.pi_arc[1, 0] == pytest.approx(0.4)
        assert prof.n_bar == pytest.approx(0.4)
        assert prof.p == pytest.approx([0.0, 1.0])

    def test_pi_sums_to_one(self):
        net = generate_geometric(12, 0.5, 0.1, seed=5)
        prof = probability_profile(net)
        assert prof.pi.sum() == pytest.approx(1.0)
        assert prof.p.sum() == pytest.approx(1.0)
        assert prof.n_bar == pytest.approx(prof.pi_arc.sum())

    def test_unequal_rates(self):
        net = make_line_network(mu=1.0)
        net.rates = np.array([3.0, 1.0])
        prof = probability_profile(net)
        assert prof.pi == pytest.approx([0.75, 0.25])


class TestExpectedMatrices:
    def test_laplacian_row_sums_zero(self):
        net = generate_geometric(10, 0.5, 0.1, seed=2)
        lap = expected_laplacian(net, probability_profile(net))
        assert np.allclose(lap.sum(axis=1), 0.0)

    def test_two_node_oracle(self):
        # arc 0->1, gamma=2, p_hear=0.5, pi_0=1/2:
        # off-diagonal entry 2 * 0.5 * 0.5 = 0.5
        net = make_line_network(gamma=2.0, p_hear=0.5, two_way=False)
        lap = expected_laplacian(net, probability_profile(net))
        assert lap == pytest.approx(np.array([[0.0, 0.0], [0.5, -0.5]]))

    def test_gamma_d_is_minus_diagonal(self):
        net = generate_geometric(10, 0.5, 0.1, seed=4)
        prof = probability_profile(net)
        lap = expected_laplacian(net, prof)
        gd = expected_gamma_d(net, prof)
        assert np.allclose(np.diag(gd), -np.diag(lap))

    def test_mute_in_arcs(self):
        net = generate_geometric(8, 0.5, 0.1, seed=6)
        muted = mute_in_arcs(net, 3)
        for (j, i), arc in muted.arcs.items():
            if i == 3:
                assert arc.gamma == 0.0
            else:
                assert arc.gamma == net.arcs[(j, i)].gamma
