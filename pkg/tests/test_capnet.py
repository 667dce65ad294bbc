import numpy as np
import pytest

from abkit import capnet, quantize
from abkit.capnet import (
    CapacitanceMatrix,
    CapacitanceNetwork,
    build_matrix,
    floating_pair_transform,
    parse_netlist,
    reduce_and_invert,
    transform_matrix,
)
from abkit.errors import InputError, SingularNetworkError


def random_network(rng: np.random.Generator, n: int = 5) -> CapacitanceNetwork:
    nodes = tuple(f"n{i}" for i in range(n))
    ground = {node: float(rng.uniform(1.0, 100.0)) for node in nodes}
    pairs = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < 0.6:
                pairs[(nodes[i], nodes[j])] = float(rng.uniform(0.1, 20.0))
    return CapacitanceNetwork(nodes, ground, pairs)


class TestNetworkType:
    def test_pair_keys_are_unordered(self):
        net = CapacitanceNetwork(("a", "b"), {"a": 1.0}, {("b", "a"): 2.0})
        assert net.pair_cap("a", "b") == net.pair_cap("b", "a") == 2.0

    def test_negative_capacitance_rejected(self):
        with pytest.raises(InputError, match="must be finite and >= 0"):
            CapacitanceNetwork(("a",), {"a": -1.0}, {})

    def test_self_pair_rejected(self):
        with pytest.raises(InputError, match="self-pairs"):
            CapacitanceNetwork(("a", "b"), {}, {("a", "a"): 1.0})

    def test_duplicate_nodes_rejected(self):
        with pytest.raises(InputError, match="duplicate"):
            CapacitanceNetwork(("a", "a"), {}, {})

    def test_unknown_pair_node_rejected(self):
        with pytest.raises(InputError, match="unknown node"):
            CapacitanceNetwork(("a", "b"), {}, {("a", "c"): 1.0})

    def test_scaled(self):
        net = CapacitanceNetwork(("a", "b"), {"a": 2.0, "b": 4.0}, {("a", "b"): 1.0})
        doubled = net.scaled(2.0)
        assert doubled.ground_cap("a") == 4.0
        assert doubled.pair_cap("a", "b") == 2.0


class TestBuildMatrix:
    def test_single_node(self):
        net = CapacitanceNetwork(("q",), {"q": 100.0}, {})
        m = build_matrix(net, ("q",))
        assert m.entries.shape == (1, 1)
        assert m.entries[0, 0] == 100.0

    def test_two_node_sum_rule(self):
        net = CapacitanceNetwork(
            ("1", "2"), {"1": 50.0, "2": 50.0}, {("1", "2"): 10.0}
        )
        m = build_matrix(net, ("1", "2"))
        assert np.allclose(m.entries, [[60.0, -10.0], [-10.0, 60.0]])

    def test_five_node_assembled_by_hand(self):
        # Hand assembly from the diagonal-total / negated-pair rule, written
        # out term by term, against the generic builder.
        net = quantize.coupled_pair_netlist(29.5, 6.67, 6.75, 83.8, 83.9)
        c1 = net.ground_cap("1")
        c2 = net.ground_cap("4")
        expected = np.array(
            [
                [c1, 0.0, 0.0, 0.0, 0.0],
                [0.0, c1 + 6.67, -6.67, 0.0, 0.0],
                [0.0, -6.67, 29.5 + 6.67 + 6.75, -6.75, 0.0],
                [0.0, 0.0, -6.75, c2 + 6.75, 0.0],
                [0.0, 0.0, 0.0, 0.0, c2],
            ]
        )
        m = build_matrix(net, ("1", "2", "3", "4", "5"))
        assert np.allclose(m.entries, expected, rtol=1e-14, atol=1e-12)

    def test_row_sums_equal_ground_caps(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            net = random_network(rng)
            m = build_matrix(net, net.nodes)
            sums = m.entries.sum(axis=1)
            expected = np.array([net.ground_cap(n) for n in net.nodes])
            assert np.allclose(sums, expected, rtol=0, atol=1e-10)

    def test_unknown_node_in_order(self):
        net = CapacitanceNetwork(("a", "b"), {"a": 1.0, "b": 1.0}, {})
        with pytest.raises(InputError, match="unknown node label 'c'"):
            build_matrix(net, ("a", "c"))

    def test_order_must_be_permutation(self):
        net = CapacitanceNetwork(("a", "b"), {"a": 1.0, "b": 1.0}, {})
        with pytest.raises(InputError, match="permutation"):
            build_matrix(net, ("a", "a"))


class TestCapacitanceMatrixType:
    def test_asymmetric_rejected(self):
        with pytest.raises(InputError, match="not symmetric"):
            CapacitanceMatrix(("a", "b"), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_negative_definite_rejected(self):
        with pytest.raises(InputError, match="positive semidefinite"):
            CapacitanceMatrix(("a", "b"), np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestFloatingPairTransform:
    def test_five_node_reference_matrix(self):
        # Two pad pairs around a passthrough island; pair order chosen so the
        # difference modes are (flux 2 - flux 1) and (flux 4 - flux 5).
        t = floating_pair_transform(
            [("1", "2"), ("5", "4")], ["3"], order=["1", "2", "3", "4", "5"]
        )
        expected = np.array(
            [
                [1, 1, 0, 0, 0],
                [-1, 1, 0, 0, 0],
                [0, 0, 1, 0, 0],
                [0, 0, 0, 1, 1],
                [0, 0, 0, 1, -1],
            ],
            dtype=float,
        )
        assert np.array_equal(t.matrix, expected)
        assert [m.kind for m in t.mode_labels] == [
            "free", "qubit", "intermediate", "free", "qubit",
        ]
        assert t.mode_names("qubit") == ("2-1", "4-5")

    def test_passthrough_only_identity(self):
        t = floating_pair_transform([], ["1"])
        assert np.array_equal(t.matrix, np.eye(1))
        assert t.mode_labels[0].kind == "intermediate"

    def test_single_pair_block(self):
        t = floating_pair_transform([("a", "b")], [])
        assert np.array_equal(t.matrix, np.array([[1.0, 1.0], [-1.0, 1.0]]))
        assert t.mode_names("free") == ("a+b",)
        assert t.mode_names("qubit") == ("b-a",)

    def test_entries_are_signs(self):
        t = floating_pair_transform([("1", "2"), ("5", "4")], ["3"], order="12345")
        assert set(np.unique(t.matrix)) <= {-1.0, 0.0, 1.0}

    def test_overlapping_pairs_rejected(self):
        with pytest.raises(InputError, match="more than once"):
            floating_pair_transform([("a", "b"), ("b", "c")], [])

    def test_node_in_pair_and_passthrough_rejected(self):
        with pytest.raises(InputError, match="also appears in a pair"):
            floating_pair_transform([("a", "b")], ["a"])


class TestTransformMatrix:
    def test_identity_transform(self):
        net = CapacitanceNetwork(("1", "2"), {"1": 50.0, "2": 50.0}, {("1", "2"): 10.0})
        m = build_matrix(net, ("1", "2"))
        ident = capnet.ModeTransform(
            np.eye(2),
            (capnet.ModeLabel("1", "intermediate"), capnet.ModeLabel("2", "intermediate")),
        )
        out = transform_matrix(m, ident)
        assert np.allclose(out.entries, m.entries, rtol=0, atol=1e-14)

    def test_two_by_two_dual_path(self):
        m = CapacitanceMatrix(("1", "2"), np.array([[60.0, -10.0], [-10.0, 60.0]]))
        t = floating_pair_transform([("1", "2")], [])
        out = transform_matrix(m, t)
        s_inv = np.linalg.inv(t.matrix)
        direct = s_inv.T @ m.entries @ s_inv
        assert np.allclose(out.entries, direct, rtol=1e-12, atol=1e-14)

    def test_five_node_against_brute_force(self):
        net = quantize.coupled_pair_netlist(29.5, 6.67, 6.75, 83.8, 83.9)
        m = build_matrix(net, net.nodes)
        t = floating_pair_transform([("1", "2"), ("5", "4")], ["3"], order=net.nodes)
        out = transform_matrix(m, t)
        s_inv = np.linalg.inv(t.matrix)
        assert np.allclose(out.entries, s_inv.T @ m.entries @ s_inv, rtol=1e-12, atol=1e-12)

    def test_congruence_preserves_psd_and_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            net = random_network(rng, 4)
            m = build_matrix(net, net.nodes)
            s = rng.uniform(-2, 2, size=(4, 4))
            while abs(np.linalg.det(s)) < 0.1:
                s = rng.uniform(-2, 2, size=(4, 4))
            t = capnet.ModeTransform(
                s, tuple(capnet.ModeLabel(f"m{i}", "intermediate") for i in range(4))
            )
            out = transform_matrix(m, t)  # construction re-validates symmetry/PSD
            assert np.linalg.eigvalsh(out.entries).min() > -1e-9 * np.abs(out.entries).max()

    def test_dimension_mismatch(self):
        m = CapacitanceMatrix(("1",), np.array([[5.0]]))
        t = floating_pair_transform([("a", "b")], [])
        with pytest.raises(InputError, match="dimension mismatch"):
            transform_matrix(m, t)


class TestReduceAndInvert:
    def test_one_by_one(self):
        m = CapacitanceMatrix(("q",), np.array([[80.0]]))
        block = reduce_and_invert(m, ("q",))
        assert block.entries[0, 0] == pytest.approx(1.0 / 80.0, rel=1e-15)

    def test_two_by_two_closed_form(self):
        a, b, c = 60.0, -10.0, 55.0
        m = CapacitanceMatrix(("x", "y"), np.array([[a, b], [b, c]]))
        block = reduce_and_invert(m, ("x", "y"))
        det = a * c - b * b
        expected = np.array([[c, -b], [-b, a]]) / det
        assert np.allclose(block.entries, expected, rtol=1e-12, atol=0)

    def test_inverse_reconstructs_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            net = random_network(rng, 5)
            m = build_matrix(net, net.nodes)
            block = reduce_and_invert(m, net.nodes)
            ident = m.entries @ block.entries
            assert np.allclose(ident, np.eye(5), rtol=0, atol=1e-10)

    def test_high_precision_oracle(self):
        # Same reduction in 50-digit arithmetic via mpmath.
        import mpmath as mp

        net = quantize.coupled_pair_netlist(29.5, 6.67, 6.75, 83.8, 83.9)
        m = build_matrix(net, net.nodes)
        t = floating_pair_transform([("1", "2"), ("5", "4")], ["3"], order=net.nodes)
        modes = transform_matrix(m, t)
        block = reduce_and_invert(modes, ("2-1", "4-5"))

        with mp.workdps(50):
            c_mp = mp.matrix([[mp.mpf(v) for v in row] for row in m.entries.tolist()])
            s_mp = mp.matrix([[mp.mpf(v) for v in row] for row in t.matrix.tolist()])
            s_inv = s_mp**-1
            ct = s_inv.T * c_mp * s_inv
            a_mp = ct**-1
            qubit_idx = [1, 4]
            for bi, mi in enumerate(qubit_idx):
                for bj, mj in enumerate(qubit_idx):
                    ref = float(a_mp[mi, mj])
                    assert block.entries[bi, bj] == pytest.approx(ref, rel=1e-12, abs=1e-18)

    def test_permutation_round_trip(self):
        rng = np.random.default_rng(19)
        net = random_network(rng, 5)
        keep = net.nodes[:2]
        m1 = build_matrix(net, net.nodes)
        perm = list(net.nodes[::-1])
        m2 = build_matrix(net, perm)
        b1 = reduce_and_invert(m1, keep)
        b2 = reduce_and_invert(m2, keep)
        assert np.allclose(b1.entries, b2.entries, rtol=1e-12, atol=1e-18)

    def test_singular_names_decoupled_mode(self):
        # A node pair with no ground anywhere: the sum mode carries no charge.
        net = CapacitanceNetwork(("a", "b"), {}, {("a", "b"): 5.0})
        m = build_matrix(net, ("a", "b"))
        t = floating_pair_transform([("a", "b")], [])
        modes = transform_matrix(m, t)
        with pytest.raises(SingularNetworkError, match="a\\+b"):
            reduce_and_invert(modes, ("b-a",))

    def test_unknown_keep_label(self):
        m = CapacitanceMatrix(("x",), np.array([[2.0]]))
        with pytest.raises(InputError, match="unknown label"):
            reduce_and_invert(m, ("y",))


class TestNetlistJson:
    GOOD = '{"nodes": ["1", "2"], "ground": {"1": 50.0, "2": 50.0}, "pairs": [{"a": "1", "b": "2", "c_fF": 10.0}]}'

    def test_round_trip(self):
        net = parse_netlist(self.GOOD)
        assert net.nodes == ("1", "2")
        assert net.pair_cap("2", "1") == 10.0
        m = build_matrix(net, ("1", "2"))
        assert m.entries[0, 0] == 60.0

    def test_unknown_top_key_rejected(self):
        with pytest.raises(InputError, match="unknown key 'extra'"):
            parse_netlist('{"nodes": [], "extra": 1}')

    def test_unknown_pair_key_rejected(self):
        bad = '{"nodes": ["1", "2"], "ground": {}, "pairs": [{"a": "1", "b": "2", "cap": 1.0}]}'
        with pytest.raises(InputError, match="exactly keys a, b, c_fF"):
            parse_netlist(bad)

    def test_duplicate_pair_rejected(self):
        bad = (
            '{"nodes": ["1", "2"], "ground": {}, "pairs": '
            '[{"a": "1", "b": "2", "c_fF": 1.0}, {"a": "2", "b": "1", "c_fF": 2.0}]}'
        )
        with pytest.raises(InputError, match="duplicate pair"):
            parse_netlist(bad)

    def test_invalid_json(self):
        with pytest.raises(InputError, match="invalid JSON"):
            parse_netlist("{nope")

    def test_unknown_ground_node(self):
        with pytest.raises(InputError, match="unknown node 'z'"):
            parse_netlist('{"nodes": ["1"], "ground": {"z": 1.0}, "pairs": []}')
