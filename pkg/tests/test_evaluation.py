import math

import numpy as np
import pytest

from painpipe.errors import ContractError
from painpipe.evaluation import (
    DelongResult,
    SplitPlan,
    accuracy,
    auc,
    delong_test,
    format_percent,
    subject_split,
)

from oracles import auc_pairwise, delong_components


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0
        assert format_percent(1.0) == "100.00"

    def test_half_correct(self):
        assert accuracy([1, 1, 0, 0], [1, 0, 0, 1]) == 0.5
        assert format_percent(0.5) == "50.00"

    def test_table_scale_division(self):
        # 2735 of 3026 correct
        assert format_percent(2735 / 3026) == "90.38"

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            accuracy([], [])


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_scores_equal(self):
        assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5

    def test_hand_fixture(self):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        # pairs: (.35 > .1), (.35 < .4), (.8 > .1), (.8 > .4) -> 3/4
        assert auc(scores, labels) == 0.75

    def test_equals_pairwise_oracle_exactly(self, rng):
        for trial in range(25):
            n = int(rng.integers(4, 120))
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            scores = np.round(rng.normal(size=n), 2)  # rounding forces ties
            assert auc(scores, labels) == auc_pairwise(scores, labels)

    def test_invariant_under_monotone_transform(self, rng):
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        scores = rng.normal(size=50)
        base = auc(scores, labels)
        assert auc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc(3.0 * scores + 11.0, labels) == pytest.approx(base, abs=1e-12)

    def test_complement_when_no_ties(self, rng):
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        scores = rng.normal(size=40)  # continuous, ties almost surely absent
        assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ContractError):
            auc([0.1, 0.2], [1, 1])


class TestDelong:
    def fixture_scores(self, rng, n=40):
        labels = np.array([0, 1] * (n // 2))
        scores_a = rng.normal(size=n) + 0.8 * labels
        scores_b = rng.normal(size=n) + 0.3 * labels
        return labels, scores_a, scores_b

    def test_identical_sets_give_z_zero_p_one(self, rng):
        labels, scores, _ = self.fixture_scores(rng)
        result = delong_test(labels, scores, scores)
        assert abs(result.z) <= 1e-12
        assert abs(result.p_value - 1.0) <= 1e-12
        assert not result.significant

    def test_swap_negates_z_keeps_p(self, rng):
        labels, a, b = self.fixture_scores(rng)
        r1 = delong_test(labels, a, b)
        r2 = delong_test(labels, b, a)
        assert r1.z == pytest.approx(-r2.z, abs=1e-12)
        assert r1.p_value == pytest.approx(r2.p_value, abs=1e-12)
        assert r1.auc_a == r2.auc_b and r1.auc_b == r2.auc_a

    def test_variance_components_match_direct_oracle(self, rng):
        labels, a, b = self.fixture_scores(rng, n=40)
        n_pos = int(labels.sum())
        n_neg = labels.size - n_pos

        v10_a, v01_a = delong_components(a, labels)
        v10_b, v01_b = delong_components(b, labels)

        def cov(u, w):
            return ((u - u.mean()) * (w - w.mean())).sum() / (len(u) - 1)

        variance = (cov(v10_a, v10_a) + cov(v10_b, v10_b) - 2 * cov(v10_a, v10_b)) / n_pos \
            + (cov(v01_a, v01_a) + cov(v01_b, v01_b) - 2 * cov(v01_a, v01_b)) / n_neg
        diff = v10_a.mean() - v10_b.mean()
        want_z = diff / math.sqrt(variance)
        want_p = math.erfc(abs(want_z) / math.sqrt(2))

        result = delong_test(labels, a, b)
        assert result.z == pytest.approx(want_z, abs=1e-10)
        assert result.p_value == pytest.approx(want_p, abs=1e-10)
        assert result.auc_a == pytest.approx(auc_pairwise(a, labels), abs=1e-12)

    def test_strongly_better_scorer_flags_significant(self, rng):
        n = 200
        labels = np.array([0, 1] * (n // 2))
        good = labels + 0.01 * rng.normal(size=n)
        noisy = rng.normal(size=n)
        result = delong_test(labels, good, noisy)
        assert result.significant
        assert result.p_value < 0.05

    def test_mismatched_labels_rejected(self, rng):
        with pytest.raises(ContractError):
            delong_test([0, 1], [0.1, 0.2], [0.1, 0.2, 0.3])


class TestSubjectSplit:
    def test_sixteen_fifteen_split(self):
        subjects = [f"s{i:02d}" for i in range(31)]
        plan = subject_split(subjects, test_fraction=15 / 31, seed=0)
        assert len(plan.train_subjects) == 16
        assert len(plan.test_subjects) == 15

    def test_two_subjects_half(self):
        plan = subject_split(["a", "b"], test_fraction=0.5, seed=3)
        assert len(plan.train_subjects) == 1
        assert len(plan.test_subjects) == 1

    def test_same_seed_identical(self):
        subjects = [f"s{i}" for i in range(10)]
        a = subject_split(subjects, 0.4, seed=11)
        b = subject_split(subjects, 0.4, seed=11)
        assert a == b

    def test_different_seeds_differ(self):
        subjects = [f"s{i}" for i in range(12)]
        plans = {subject_split(subjects, 0.5, seed=s).train_subjects for s in range(20)}
        assert len(plans) > 1

    def test_disjoint_and_covering(self):
        subjects = [f"s{i}" for i in range(9)] * 3  # repeated instance rows
        plan = subject_split(subjects, 0.33, seed=7)
        train, test = set(plan.train_subjects), set(plan.test_subjects)
        assert not train & test
        assert train | test == set(f"s{i}" for i in range(9))

    def test_masks_never_overlap(self):
        rng = np.random.default_rng(0)
        subjects = [f"s{int(i)}" for i in rng.integers(0, 8, size=50)]
        plan = subject_split(subjects, 0.5, seed=2)
        train_mask = plan.train_mask(subjects)
        test_mask = plan.test_mask(subjects)
        assert not np.any(train_mask & test_mask)
        assert np.all(train_mask | test_mask)

    def test_empty_side_rejected(self):
        with pytest.raises(ContractError):
            subject_split(["a", "b", "c"], test_fraction=0.01, seed=0)

    def test_subjects_on_both_sides_rejected(self):
        with pytest.raises(ContractError, match="both sides"):
            SplitPlan(train_subjects=("a", "b"), test_subjects=("b",), seed=0)
