import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from parsinggait.gps import ParsingFrame, binarize
from parsinggait.gps.types import DRESS, HEAD, LEFT_FOOT, TORSO
from parsinggait.partgraph import (coarse_graph, fine_graph, get_graph, group_mask, group_masks,
                                   is_connected, normalize_adjacency)

frames = arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.integers(0, 11))


def dense_oracle(a):
    a_hat = np.asarray(a, float) + np.eye(len(a))
    d = np.diag(a_hat.sum(1) ** -0.5)
    return d @ a_hat @ d


class TestFine:
    def test_size_and_symmetry(self):
        g = fine_graph()
        assert g.num_nodes == 11
        assert np.array_equal(g.adjacency, g.adjacency.T)
        assert not np.diag(g.adjacency).any()

    def test_entries(self):
        g = fine_graph()
        assert g.adjacency[HEAD - 1, TORSO - 1] == 1
        assert g.adjacency[HEAD - 1, LEFT_FOOT - 1] == 0
        assert g.adjacency.sum() == 2 * 12

    def test_normalized_oracle(self):
        g = fine_graph()
        np.testing.assert_allclose(g.normalized, dense_oracle(g.adjacency), atol=1e-15)
        assert np.all(g.normalized[g.adjacency + np.eye(11) > 0] > 0)
        assert g.normalized.max() <= 1.0

    def test_singleton_partition(self):
        assert [sorted(s) for s in fine_graph().node_labels] == [[k] for k in range(1, 12)]


class TestCoarse:
    def test_groups(self):
        g = coarse_graph()
        assert g.num_nodes == 5
        assert g.node_labels[0] == {HEAD, TORSO, DRESS} == {1, 2, 11}
        assert [sorted(s) for s in g.node_labels[1:]] == [[3, 5], [4, 6], [7, 9], [8, 10]]

    def test_star(self):
        a = coarse_graph().adjacency
        expected = np.zeros((5, 5))
        expected[0, 1:] = expected[1:, 0] = 1
        np.testing.assert_array_equal(a, expected)
        np.testing.assert_allclose(coarse_graph().normalized, dense_oracle(expected), atol=1e-15)

    def test_connected(self):
        for g in (fine_graph(), coarse_graph()):
            assert is_connected(g.adjacency + np.eye(g.num_nodes))

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            get_graph("medium")


class TestNormalize:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(normalize_adjacency(np.zeros((4, 4))), np.eye(4))

    def test_two_node_path(self):
        out = normalize_adjacency([[0, 1], [1, 0]])
        assert np.all(out == 0.5)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            normalize_adjacency([[0, 1], [0, 0]])

    @settings(max_examples=50)
    @given(st.integers(1, 8), st.randoms(use_true_random=False))
    def test_symmetric_output(self, n, r):
        a = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                a[i, j] = a[j, i] = r.random() < 0.4
        out = normalize_adjacency(a)
        np.testing.assert_allclose(out, out.T, atol=0)

    @pytest.mark.parametrize("name", ["fine", "coarse"])
    def test_permutation(self, name, rng):
        g = get_graph(name)
        for _ in range(5):
            perm = rng.permutation(g.num_nodes)
            P = np.eye(g.num_nodes)[perm]
            np.testing.assert_allclose(g.permuted(perm).normalized, P @ g.normalized @ P.T, atol=1e-15)


class TestMasks:
    def test_absent_part(self):
        m = group_mask(ParsingFrame(np.full((3, 3), 2)), fine_graph(), HEAD - 1)
        assert not m.any()

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            group_mask(ParsingFrame(np.zeros((2, 2))), coarse_graph(), 5)

    @given(frames)
    def test_fine_partition(self, f):
        fine = fine_graph()
        total = sum(group_mask(f, fine, i) for i in range(11))
        np.testing.assert_array_equal(total, binarize(ParsingFrame(f)).labels)

    @given(frames)
    def test_coarse_is_union(self, f):
        fine, coarse = fine_graph(), coarse_graph()
        for node, labels in enumerate(coarse.node_labels):
            union = np.zeros(f.shape, np.uint8)
            for lab in labels:
                union |= group_mask(f, fine, lab - 1)
            np.testing.assert_array_equal(group_mask(f, coarse, node), union)

    @given(frames)
    def test_batched_matches_single(self, f):
        g = coarse_graph()
        all_ = group_masks(f, g)
        for node in range(g.num_nodes):
            np.testing.assert_array_equal(all_[node], group_mask(f, g, node))
