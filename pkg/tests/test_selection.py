import numpy as np
import pytest
from sklearn.base import clone

from painpipe.errors import ContractError
from painpipe.selection import (
    FeatureRanking,
    ReliefFSelector,
    SymmetricUncertaintySelector,
    discretize,
    entropy,
    make_selector,
    rank_features,
    read_ranking,
    relieff_weights,
    select_top,
    symmetric_uncertainty,
    write_ranking,
)

from oracles import entropy_direct, relieff_direct, symmetric_uncertainty_direct

# hand-derived: H(X)=H(Y)=1, H(X,Y) = (2/3)log2(3) + (1/3)log2(6)
SU_JOINT_2112 = 0.0817041659455109


class TestEntropy:
    def test_degenerate_distribution(self):
        assert entropy([3, 3, 3, 3]) == 0.0

    def test_uniform_binary(self):
        assert entropy([0, 1, 0, 1]) == pytest.approx(1.0, abs=1e-15)

    def test_quarter_quarter_half(self):
        assert entropy([0, 1, 2, 2]) == pytest.approx(1.5, abs=1e-15)

    def test_matches_direct_oracle(self, rng):
        for _ in range(10):
            symbols = rng.integers(0, 5, size=rng.integers(2, 40))
            assert entropy(symbols) == pytest.approx(entropy_direct(symbols), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            entropy([])


class TestDiscretize:
    def test_constant_feature_single_symbol(self):
        assert set(discretize(np.full(7, 3.3), bins=4)) == {0}

    def test_binary_values_two_bins(self):
        out = discretize(np.array([0.0, 1.0, 0.0, 1.0]), bins=2)
        assert out.tolist() == [0, 1, 0, 1]

    def test_uniform_grid_three_bins(self):
        # half-open equal-width bins over [0, 9], last bin closed
        out = discretize(np.arange(10, dtype=float), bins=3)
        counts = np.bincount(out, minlength=3)
        assert sorted(counts.tolist()) == [3, 3, 4]
        assert out[0] == 0 and out[9] == 2

    def test_too_few_bins_rejected(self):
        with pytest.raises(ContractError):
            discretize(np.arange(4.0), bins=1)


class TestSymmetricUncertainty:
    def test_identical_balanced_binary_is_one(self):
        x = np.array([0, 1, 0, 1, 1, 0])
        assert symmetric_uncertainty(x, x) == 1.0

    def test_su_of_feature_with_itself_is_one(self, rng):
        for _ in range(5):
            x = rng.normal(size=30)
            assert symmetric_uncertainty(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_product_distribution_is_zero(self):
        # joint factorizes exactly: p(x) = (1/2, 1/2), p(y) = (1/3, 2/3)
        x = np.array([0, 0, 0, 1, 1, 1])
        y = np.array([0, 1, 1, 0, 1, 1])
        assert abs(symmetric_uncertainty(x, y)) <= 1e-12

    def test_joint_2112_regression_value(self):
        x = np.array([0, 0, 1, 0, 1, 1])
        y = np.array([0, 0, 0, 1, 1, 1])
        assert symmetric_uncertainty(x, y) == pytest.approx(SU_JOINT_2112, abs=1e-12)

    def test_matches_direct_oracle_on_discrete_input(self, rng):
        for _ in range(10):
            n = int(rng.integers(4, 60))
            x = rng.integers(0, 4, size=n)
            y = rng.integers(0, 2, size=n)
            got = symmetric_uncertainty(x, y)
            want = symmetric_uncertainty_direct(x, y)
            assert got == pytest.approx(max(0.0, min(1.0, want)), abs=1e-12)

    def test_symmetric(self, rng):
        for _ in range(10):
            n = int(rng.integers(4, 50))
            x = rng.normal(size=n)
            y = rng.integers(0, 3, size=n).astype(float)
            assert symmetric_uncertainty(x, y) == pytest.approx(
                symmetric_uncertainty(y, x), abs=1e-12)

    def test_invariant_under_symbol_relabeling(self, rng):
        x = rng.integers(0, 4, size=40)
        y = rng.integers(0, 2, size=40)
        perm = np.array([2, 0, 3, 1])
        assert symmetric_uncertainty(perm[x], y) == pytest.approx(
            symmetric_uncertainty(x, y), abs=1e-12)

    def test_range_zero_one(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 50))
            value = symmetric_uncertainty(rng.normal(size=n), rng.integers(0, 2, size=n))
            assert 0.0 <= value <= 1.0

    def test_constant_feature_scores_zero(self):
        y = np.array([0, 1, 0, 1])
        assert symmetric_uncertainty(np.full(4, 2.0), y) == 0.0


class TestReliefF:
    def test_constant_feature_weight_exactly_zero(self, rng):
        X = rng.normal(size=(20, 3))
        X[:, 1] = 4.25
        y = (rng.random(20) > 0.5).astype(int)
        y[:3] = [0, 1, 0]  # both classes present
        weights = relieff_weights(X, y, k_neighbors=2)
        assert weights[1] == 0.0

    def test_separating_feature_ranked_first(self, rng):
        n = 30
        y = np.array([0, 1] * (n // 2))
        X = np.column_stack([y.astype(float), rng.uniform(size=n)])
        weights = relieff_weights(X, y, k_neighbors=1)
        assert weights[0] > weights[1]
        oracle = relieff_direct(X, y, k_neighbors=1)
        assert np.allclose(weights, oracle, atol=1e-12)

    def test_matches_oracle_on_ten_instance_fixture(self, rng):
        X = rng.normal(size=(10, 4))
        y = np.array([0, 0, 0, 0, 1, 1, 1, 1, 1, 0])
        got = relieff_weights(X, y, k_neighbors=3)
        want = relieff_direct(X, y, k_neighbors=3)
        assert np.max(np.abs(got - want)) < 1e-12

    def test_weights_within_unit_interval(self, rng):
        X = rng.normal(size=(24, 5))
        y = rng.integers(0, 2, size=24)
        y[:4] = [0, 0, 1, 1]
        weights = relieff_weights(X, y, k_neighbors=2)
        assert np.all(weights >= -1.0) and np.all(weights <= 1.0)

    def test_affine_rescaling_keeps_ranking_and_weights(self, rng):
        X = rng.normal(size=(30, 6))
        y = rng.integers(0, 2, size=30)
        y[:4] = [0, 0, 1, 1]
        base = relieff_weights(X, y, k_neighbors=3)
        scales = rng.uniform(0.5, 20.0, size=6)
        offsets = rng.normal(scale=10.0, size=6)
        rescaled = relieff_weights(X * scales + offsets, y, k_neighbors=3)
        assert np.allclose(base, rescaled, atol=1e-9)
        assert np.array_equal(np.argsort(-base, kind="stable"),
                              np.argsort(-rescaled, kind="stable"))

    def test_sampling_deterministic_given_seed(self, rng):
        X = rng.normal(size=(40, 4))
        y = rng.integers(0, 2, size=40)
        y[:4] = [0, 0, 1, 1]
        a = relieff_weights(X, y, k_neighbors=2, sample_count=15, seed=5)
        b = relieff_weights(X, y, k_neighbors=2, sample_count=15, seed=5)
        assert np.array_equal(a, b)

    def test_single_class_rejected(self, rng):
        X = rng.normal(size=(10, 2))
        with pytest.raises(ContractError):
            relieff_weights(X, np.zeros(10, dtype=int), k_neighbors=1)

    def test_k_too_large_rejected(self, rng):
        X = rng.normal(size=(6, 2))
        y = np.array([0, 0, 0, 1, 1, 1])
        with pytest.raises(ContractError, match="need >="):
            relieff_weights(X, y, k_neighbors=3)


class TestRankingAndSelect:
    def test_select_all_in_rank_order(self):
        ranking = rank_features(np.array([0.1, 0.9, 0.5]), ["a", "b", "c"], "su")
        assert select_top(ranking, 3) == ["b", "c", "a"]

    def test_ties_keep_lower_column_index_first(self):
        ranking = rank_features(np.array([0.5, 0.9, 0.5, 0.5]), ["a", "b", "c", "d"], "su")
        assert ranking.names == ("b", "a", "c", "d")

    def test_select_too_many_rejected(self):
        ranking = rank_features(np.array([0.1, 0.2]), ["a", "b"], "su")
        with pytest.raises(ContractError):
            select_top(ranking, 3)

    def test_wide_matrix_top_five(self, rng):
        X = rng.normal(size=(12, 4096))
        y = np.array([0, 1] * 6)
        selector = SymmetricUncertaintySelector(n_features=5).fit(X, y)
        assert len(selector.selected_names()) == 5

    def test_ranking_csv_roundtrip(self, tmp_path):
        ranking = rank_features(np.array([0.25, 0.75, -0.5]), ["a", "b", "c"], "relieff")
        path = tmp_path / "ranking.csv"
        write_ranking(path, ranking)
        loaded = read_ranking(path)
        assert loaded == ranking

    def test_non_monotone_scores_rejected(self):
        with pytest.raises(ContractError):
            FeatureRanking(method="su", names=("a", "b"), scores=(0.1, 0.9))


class TestSelectors:
    def test_su_selector_transform_picks_columns(self, rng):
        y = np.array([0, 1] * 10)
        X = np.column_stack([rng.normal(size=20), y.astype(float), rng.normal(size=20)])
        selector = SymmetricUncertaintySelector(n_features=1, feature_names=["n0", "lab", "n1"])
        reduced = selector.fit(X, y).transform(X)
        assert selector.selected_names() == ["lab"]
        assert reduced.shape == (20, 1)
        assert np.array_equal(reduced[:, 0], X[:, 1])

    def test_relieff_selector_matches_function(self, rng):
        X = rng.normal(size=(26, 5))
        y = rng.integers(0, 2, size=26)
        y[:4] = [0, 0, 1, 1]
        selector = ReliefFSelector(n_features=3, k_neighbors=2).fit(X, y)
        direct = relieff_weights(X, y, k_neighbors=2)
        assert np.array_equal(selector.scores_, direct)

    def test_selectors_are_cloneable(self):
        for selector in (SymmetricUncertaintySelector(n_features=7, bins=8),
                         ReliefFSelector(n_features=4, k_neighbors=5, seed=3)):
            dup = clone(selector)
            assert dup.get_params() == selector.get_params()

    def test_make_selector_rejects_unknown_method(self):
        with pytest.raises(ContractError):
            make_selector("pca", 5)
