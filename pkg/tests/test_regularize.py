import json

import numpy as np
import pytest

import latent_consensus as lc
from latent_consensus.regularize import (
    BackgroundAugmentation,
    DiscreteRegularization,
    HubAugmentation,
    RegularizationSpec,
)

import oracles
from conftest import TWO_BLOCK_JBAR, background_pair, hub_pair


def random_laplacian(n, seed):
    return lc.laplacian(lc.random_digraph(n, seed))


class TestHubAugment:
    def test_single_agent_symmetric_pair(self):
        h = HubAugmentation(np.zeros((1, 1)), 1.0, np.ones(1))
        np.testing.assert_array_equal(lc.hub_augment(h), [[1.0, -1.0], [-1.0, 1.0]])

    def test_two_block_fixture_is_laplacian(self, two_block_L):
        augmented = lc.hub_augment(HubAugmentation(two_block_L, 0.1, 0.1 * np.ones(4)))
        lc.validate_laplacian(augmented)
        assert augmented.shape == (5, 5)

    @pytest.mark.parametrize("seed", range(5))
    def test_augmented_graph_gains_spanning_in_tree(self, seed):
        L = random_laplacian(4, seed)
        augmented = lc.hub_augment(HubAugmentation(L, 0.5, np.zeros(4)))
        assert lc.has_spanning_in_tree(lc.from_dependency_matrix(-augmented))

    def test_rejects_bad_parameters(self, two_block_L):
        with pytest.raises(ValueError, match="positive"):
            HubAugmentation(two_block_L, 0.0, np.ones(4))
        with pytest.raises(ValueError, match="nonnegative"):
            HubAugmentation(two_block_L, 0.5, np.array([1.0, -1.0, 1.0, 1.0]))
        with pytest.raises(ValueError, match="length"):
            HubAugmentation(two_block_L, 0.5, np.ones(3))


class TestHubEigenprojection:
    def test_single_agent_symmetric_pair_splits_evenly(self):
        h = HubAugmentation(np.zeros((1, 1)), 1.0, np.ones(1))
        np.testing.assert_allclose(lc.hub_eigenprojection(h), [[0.5, 0.5], [0.5, 0.5]])

    def test_two_block_matches_algebraic(self, two_block_L):
        h = HubAugmentation(two_block_L, 0.1, 0.1 * np.ones(4))
        assembled = lc.hub_augment(h)
        closed = lc.hub_eigenprojection(h)
        assert np.abs(closed - lc.eigenprojection(assembled).matrix).max() <= 1e-9

    def test_symmetric_links_hub_weight_is_exact(self, two_block_L):
        for delta in (1.0, 1e-2, 1e-4):
            row = lc.hub_eigenprojection(
                HubAugmentation(two_block_L, delta, delta * np.ones(4))
            )[0]
            assert row[-1] == 1.0 / 5.0

    def test_symmetric_assembly_equals_general_formula(self, two_block_L):
        delta = 0.25
        sym = lc.hub_eigenprojection(HubAugmentation(two_block_L, delta, delta * np.ones(4)))
        resolvent = lc.parametric_forest_matrix(two_block_L, 1.0 / delta)
        expected = np.append(np.ones(4) @ resolvent, 1.0) / 5.0
        np.testing.assert_allclose(sym[0], expected, atol=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_closed_form_matches_assembled(self, seed):
        rng = np.random.default_rng(seed)
        L = random_laplacian(2 + seed % 4, seed)
        n = L.shape[0]
        h = HubAugmentation(L, float(rng.uniform(1e-3, 1.0)), rng.uniform(0.05, 1.0, n))
        closed = lc.hub_eigenprojection(h)
        algebraic = lc.eigenprojection(lc.hub_augment(h)).matrix
        assert np.abs(closed - algebraic).max() <= 1e-8

    def test_rows_identical_bitwise_and_sum_to_one(self, two_block_L):
        closed = lc.hub_eigenprojection(HubAugmentation(two_block_L, 0.3, np.ones(4)))
        for row in closed[1:]:
            assert (row == closed[0]).all()
        assert abs(closed[0].sum() - 1.0) <= 1e-10

    def test_one_way_hub_makes_hub_state_the_consensus(self):
        # agents only listen to the hub, so its state carries all the weight
        h = HubAugmentation(np.zeros((2, 2)), 0.5, np.zeros(2))
        closed = lc.hub_eigenprojection(h)
        np.testing.assert_allclose(closed[0], [0.0, 0.0, 1.0], atol=1e-15)
        algebraic = lc.eigenprojection(lc.hub_augment(h)).matrix
        assert np.abs(closed - algebraic).max() <= 1e-12


class TestSymmetricHubLimit:
    def test_two_block_fixture(self, two_block_L):
        # column sums of the fixture projection are (1.5, 0.5, 1.6, 0.4)
        expected = np.array([1.5, 0.5, 1.6, 0.4, 1.0]) / 5.0
        np.testing.assert_allclose(lc.symmetric_hub_limit(two_block_L)[0], expected, atol=1e-12)

    def test_zero_laplacian_splits_evenly(self):
        np.testing.assert_allclose(
            lc.symmetric_hub_limit(np.zeros((2, 2)))[0], np.full(3, 1.0 / 3.0), atol=1e-15
        )

    @pytest.mark.parametrize("seed", range(4))
    def test_hub_weight_is_always_one_over_n_plus_one(self, seed):
        L = random_laplacian(3 + seed, seed)
        assert lc.symmetric_hub_limit(L)[0][-1] == 1.0 / (L.shape[0] + 1)

    @pytest.mark.parametrize("seed", range(4))
    def test_is_the_small_delta_limit_of_the_closed_form(self, seed):
        L = random_laplacian(4, seed)
        limit = lc.symmetric_hub_limit(L)[0]
        row = lc.hub_eigenprojection(HubAugmentation(L, 1e-8, 1e-8 * np.ones(4)))[0]
        assert np.abs(row - limit).max() <= 1e-5


class TestSubordinateHubLimit:
    def test_two_block_uniform(self, two_block_L):
        row = lc.subordinate_hub_limit(two_block_L, np.full(4, 0.25))[0]
        np.testing.assert_allclose(row, [0.375, 0.125, 0.4, 0.1, 0.0], atol=1e-12)

    def test_zero_laplacian_point_mass(self):
        row = lc.subordinate_hub_limit(np.zeros((3, 3)), np.array([1.0, 0.0, 0.0]))[0]
        np.testing.assert_allclose(row, [1.0, 0.0, 0.0, 0.0], atol=1e-15)

    def test_sqrt_delta_sweep_converges_to_limit(self, two_block_L):
        # v = sqrt(delta) * vtilde keeps delta/s -> 0; convergence is O(sqrt(delta)).
        vtilde = np.full(4, 0.25)
        limit = lc.subordinate_hub_limit(two_block_L, vtilde)[0]
        gaps = []
        for delta in (1e-2, 1e-4, 1e-6, 1e-8):
            row = lc.hub_eigenprojection(
                HubAugmentation(two_block_L, delta, np.sqrt(delta) * vtilde)
            )[0]
            gaps.append(np.abs(row - limit).max())
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 2e-4
        assert gaps[-1] <= gaps[0] / 50.0

    def test_constant_v_sweep_reaches_limit_fast(self, two_block_L):
        # s = 1 also satisfies the subordination condition and converges O(delta).
        vtilde = np.full(4, 0.25)
        limit = lc.subordinate_hub_limit(two_block_L, vtilde)[0]
        row = lc.hub_eigenprojection(HubAugmentation(two_block_L, 1e-8, vtilde))[0]
        assert np.abs(row - limit).max() <= 1e-5

    def test_requires_distribution(self, two_block_L):
        with pytest.raises(ValueError, match="sum to 1"):
            lc.subordinate_hub_limit(two_block_L, np.full(4, 0.3))


class TestBackground:
    def test_uniform_v_adds_complete_digraph(self, two_block_L):
        b = BackgroundAugmentation(two_block_L, 0.01, np.full(4, 0.25))
        expected = two_block_L + 0.01 * (np.eye(4) - np.full((4, 4), 0.25))
        np.testing.assert_allclose(lc.background_laplacian(b), expected, atol=1e-15)
        assert lc.has_spanning_in_tree(lc.from_dependency_matrix(-lc.background_laplacian(b)))

    def test_zero_base(self):
        b = BackgroundAugmentation(np.zeros((3, 3)), 2.0, np.full(3, 1.0 / 3.0))
        expected = 2.0 * (np.eye(3) - np.full((3, 3), 1.0 / 3.0))
        np.testing.assert_allclose(lc.background_laplacian(b), expected, atol=1e-15)

    def test_zero_base_eigenprojection_is_rank_one_v(self):
        v = np.array([0.2, 0.3, 0.5])
        b = BackgroundAugmentation(np.zeros((3, 3)), 0.7, v)
        np.testing.assert_allclose(lc.background_eigenprojection(b), np.outer(np.ones(3), v), atol=1e-12)

    def test_two_block_matches_algebraic(self, two_block_L):
        b = BackgroundAugmentation(two_block_L, 0.1, np.full(4, 0.25))
        closed = lc.background_eigenprojection(b)
        algebraic = lc.eigenprojection(lc.background_laplacian(b)).matrix
        assert np.abs(closed - algebraic).max() <= 1e-9

    @pytest.mark.parametrize("seed", range(8))
    def test_closed_form_matches_assembled(self, seed):
        rng = np.random.default_rng(seed + 50)
        L = random_laplacian(2 + seed % 4, seed + 50)
        n = L.shape[0]
        v = rng.uniform(0.05, 1.0, n)
        v /= v.sum()
        b = BackgroundAugmentation(L, float(rng.uniform(1e-3, 1.0)), v)
        closed = lc.background_eigenprojection(b)
        algebraic = lc.eigenprojection(lc.background_laplacian(b)).matrix
        assert np.abs(closed - algebraic).max() <= 1e-8

    def test_limit_two_block_fixture(self, two_block_L):
        row = lc.background_limit(two_block_L, np.full(4, 0.25))[0]
        np.testing.assert_allclose(row, [0.375, 0.125, 0.4, 0.1], atol=1e-12)

    def test_limit_zero_base(self):
        v = np.array([0.6, 0.4])
        np.testing.assert_allclose(
            lc.background_limit(np.zeros((2, 2)), v), np.outer(np.ones(2), v), atol=1e-15
        )

    def test_small_delta_closed_form_approaches_limit(self, two_block_L):
        v = np.full(4, 0.25)
        limit = lc.background_limit(two_block_L, v)[0]
        row = lc.background_eigenprojection(BackgroundAugmentation(two_block_L, 1e-8, v))[0]
        assert np.abs(row - limit).max() <= 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_subordinate_hub_agent_columns(self, seed):
        L = random_laplacian(5, seed)
        u = np.full(5, 0.2)
        sub = lc.subordinate_hub_limit(L, u)[0][:5]
        bg = lc.background_limit(L, u)[0]
        assert np.abs(sub - bg).max() <= 1e-12


class TestDiscreteHub:
    def test_single_agent_blocks(self):
        d = DiscreteRegularization(np.eye(1), 0.5, np.ones(1))
        np.testing.assert_array_equal(lc.degroot_hub_matrix(d), [[0.5, 0.5], [1.0, 0.0]])

    def test_two_cycle_square_has_positive_hub_column(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        d = DiscreteRegularization(p, 0.5, np.full(2, 0.5))
        q = lc.degroot_hub_matrix(d)
        assert (np.linalg.matrix_power(q, 2)[:, 2] > 0).all()

    @pytest.mark.parametrize("seed", range(4))
    def test_rows_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.1, 1.0, (4, 4))
        p /= p.sum(axis=1, keepdims=True)
        d = DiscreteRegularization(p, float(rng.uniform(0.05, 1.0)), np.full(4, 0.25))
        q = lc.degroot_hub_matrix(d)
        np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_entry_in_v_is_rejected(self):
        d = DiscreteRegularization(np.eye(2), 0.5, np.array([1.0, 0.0]))
        with pytest.raises(ValueError, match="regularity"):
            lc.degroot_hub_matrix(d)
        with pytest.raises(ValueError, match="regularity"):
            lc.degroot_hub_eigenprojection(d)

    def test_single_agent_eigenprojection_matches_power_iteration(self):
        d = DiscreteRegularization(np.eye(1), 0.5, np.ones(1))
        # power-iterating Q = [[0.5, 0.5], [1, 0]] settles on (2/3, 1/3)
        q = lc.degroot_hub_matrix(d)
        iterated = oracles.power_iterate_limit(q, np.array([1.0, 0.0]), 200)
        row = lc.degroot_hub_eigenprojection(d)[0]
        np.testing.assert_allclose(row, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)
        assert abs(row @ np.array([1.0, 0.0]) - iterated[0]) <= 1e-12

    def test_small_delta_approaches_limit(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        v = np.full(2, 0.5)
        limit = lc.degroot_hub_limit(p, v)[0]
        np.testing.assert_allclose(limit, [0.5, 0.5, 0.0], atol=1e-12)
        row = lc.degroot_hub_eigenprojection(DiscreteRegularization(p, 1e-6, v))[0]
        assert np.abs(row[:2] - limit[:2]).max() <= 1e-5

    @pytest.mark.parametrize("seed", range(8))
    def test_closed_form_matches_assembled(self, seed):
        rng = np.random.default_rng(seed + 200)
        n = 2 + seed % 4
        p = rng.uniform(0.0, 1.0, (n, n))
        p /= p.sum(axis=1, keepdims=True)
        v = rng.uniform(0.05, 1.0, n)
        v /= v.sum()
        d = DiscreteRegularization(p, float(rng.uniform(1e-3, 1.0)), v)
        q = lc.degroot_hub_matrix(d)
        closed = lc.degroot_hub_eigenprojection(d)
        algebraic = lc.eigenprojection(np.eye(n + 1) - q).matrix
        assert np.abs(closed - algebraic).max() <= 1e-8


class TestPagerank:
    def test_full_damping_forgets_p(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        v = np.array([0.3, 0.7])
        d = DiscreteRegularization(p, 1.0, v)
        np.testing.assert_allclose(lc.pagerank_matrix(d), np.outer(np.ones(2), v), atol=1e-15)

    def test_two_cycle_standard_damping(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        d = DiscreteRegularization(p, 0.15, np.full(2, 0.5))
        m = lc.pagerank_matrix(d)
        assert (m > 0).all()
        np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_stationary_row_is_the_power_limit(self, seed):
        rng = np.random.default_rng(seed + 300)
        n = 3
        p = rng.uniform(0.0, 1.0, (n, n))
        p /= p.sum(axis=1, keepdims=True)
        v = rng.uniform(0.1, 1.0, n)
        v /= v.sum()
        d = DiscreteRegularization(p, 0.15, v)
        m = lc.pagerank_matrix(d)
        w = lc.pagerank_power_limit(d)[0]
        # stationarity: w is a left fixed vector of the damped matrix
        assert np.abs(w @ m - w).max() <= 1e-12
        iterated = oracles.power_iterate_limit(m, np.arange(1.0, n + 1.0), 400)
        assert np.abs(w @ np.arange(1.0, n + 1.0) - iterated[0]).max() <= 1e-10

    def test_limit_agrees_with_continuous_background(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        v = np.full(2, 0.5)
        L = np.eye(2) - p
        discrete = lc.pagerank_limit(p, v)[0]
        continuous = lc.background_limit(L, v)[0]
        assert np.abs(discrete - continuous).max() <= 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_limit_agrees_with_background_for_random_pooling(self, seed):
        rng = np.random.default_rng(seed + 400)
        n = 4
        p = rng.uniform(0.0, 1.0, (n, n))
        p /= p.sum(axis=1, keepdims=True)
        v = rng.uniform(0.05, 1.0, n)
        v /= v.sum()
        discrete = lc.pagerank_limit(p, v)[0]
        continuous = lc.background_limit(np.eye(n) - p, v)[0]
        assert np.abs(discrete - continuous).max() <= 1e-10


class TestRankOneAssembly:
    """Every closed-form eigenprojection is assembled by tiling one row."""

    def producers(self, L):
        n = L.shape[0]
        u = np.full(n, 1.0 / n)
        p = np.eye(n) - L / (2.0 * max(1.0, float(np.diag(L).max())))
        d = DiscreteRegularization(p, 0.4, u)
        return [
            lc.hub_eigenprojection(HubAugmentation(L, 0.3, np.ones(n))),
            lc.symmetric_hub_limit(L),
            lc.subordinate_hub_limit(L, u),
            lc.background_eigenprojection(BackgroundAugmentation(L, 0.3, u)),
            lc.background_limit(L, u),
            lc.degroot_hub_eigenprojection(d),
            lc.degroot_hub_limit(p, u),
            lc.pagerank_power_limit(d),
            lc.pagerank_limit(p, u),
        ]

    @pytest.mark.parametrize("seed", range(3))
    def test_rows_identical_bitwise_and_rows_sum_to_one(self, seed):
        L = random_laplacian(4, seed + 600)
        for matrix in self.producers(L):
            for row in matrix[1:]:
                assert (row == matrix[0]).all()
            assert abs(matrix[0].sum() - 1.0) <= 1e-10


class TestLaplacianPairIdentity:
    def test_zero_pair(self):
        assert lc.laplacian_pair_identity_residual(np.zeros((2, 2)), np.zeros((2, 2)), 0.5) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_hub_pair(self, seed):
        L = random_laplacian(4, seed)
        a, c = hub_pair(L, np.ones(4))
        assert lc.laplacian_pair_identity_residual(a, c, 0.3) <= 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_background_pair(self, seed):
        L = random_laplacian(4, seed)
        a, c = background_pair(L, np.full(4, 0.25))
        assert lc.laplacian_pair_identity_residual(a, c, 0.7) <= 1e-8

    def test_rejects_non_conforming_pair(self, two_block_L):
        with pytest.raises(ValueError, match="residual"):
            lc.laplacian_pair_identity_residual(two_block_L, two_block_L, 0.5)


class TestRegularizationSpec:
    def test_parse_round_trip(self):
        text = '{"method": "background", "delta": 0.5, "v": [0.25, 0.25, 0.25, 0.25], "vtilde": null}'
        spec = lc.parse_regularization_spec(text)
        assert spec.method == "background"
        assert spec.delta == 0.5
        again = lc.parse_regularization_spec(lc.serialize_regularization_spec(spec))
        assert again.method == spec.method and again.delta == spec.delta
        np.testing.assert_array_equal(again.v, spec.v)

    def test_null_delta_means_limit(self):
        spec = lc.parse_regularization_spec('{"method": "hub-symmetric", "delta": null}')
        assert spec.delta is None

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ('{"method": "nope"}', "unknown method"),
            ('{"method": "pagerank", "delta": 1.5}', r"\(0, 1\]"),
            ('{"method": "background", "delta": -1.0}', "positive"),
            ('{"method": "hub-symmetric", "v": [1.0]}', "leave v"),
            ('{"method": "hub-subordinate", "v": [1.0]}', "vtilde"),
            ('{"method": "background", "vtilde": [1.0]}', "not vtilde"),
            ('{"method": "background", "v": [0.5, 0.1]}', "sum to 1"),
            ('{"delta": 0.5}', "method"),
            ('{"method": "background", "bogus": 1}', "unknown spec keys"),
        ],
    )
    def test_rejects_invalid_specs(self, text, fragment):
        with pytest.raises(ValueError, match=fragment):
            lc.parse_regularization_spec(text)

    def test_serialized_form_is_valid_json(self):
        spec = RegularizationSpec("hub-subordinate", 0.1, vtilde=np.array([0.5, 0.5]))
        data = json.loads(lc.serialize_regularization_spec(spec))
        assert data["method"] == "hub-subordinate"
        assert data["vtilde"] == [0.5, 0.5]
