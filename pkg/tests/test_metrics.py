"""Ranking metrics against brute-force evaluators and hand arithmetic."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anomrank.data import BooleanDataset, GroundTruth
from anomrank.metrics import (avf_scores, dcg, ndcg, rank_by_score,
                              relative_improvement)


def brute_force_ndcg(relevances):
    """Direct evaluation: DCG over the given order divided by DCG of the
    ideal (sorted-descending) order."""
    gain = 0.0
    for i, rel in enumerate(relevances, start=1):
        gain += rel / math.log2(i + 1)
    ideal = 0.0
    for i, rel in enumerate(sorted(relevances, reverse=True), start=1):
        ideal += rel / math.log2(i + 1)
    return gain / ideal if ideal > 0 else None


def as_ranking(relevances):
    """Wrap a relevance sequence as a RankedList plus its GroundTruth."""
    ranking = [(f"r{i:02d}", float(len(relevances) - i)) for i in range(len(relevances))]
    truth = GroundTruth({f"r{i:02d}" for i, rel in enumerate(relevances) if rel})
    return ranking, truth


class TestDcg:
    def test_single_hit_at_top(self):
        assert dcg([1, 0, 0]) == pytest.approx(1.0)

    def test_hit_at_second_position(self):
        assert dcg([0, 1, 0]) == pytest.approx(1.0 / math.log2(3), abs=1e-12)

    def test_two_hits(self):
        assert dcg([1, 1]) == pytest.approx(1.0 + 1.0 / math.log2(3), abs=1e-12)

    def test_all_zero(self):
        assert dcg([0, 0, 0, 0]) == 0.0

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            dcg([0, 2])


class TestNdcg:
    def test_perfect_ranking_is_one(self):
        ranking, truth = as_ranking([1, 1, 0, 0])
        assert ndcg(ranking, truth).ndcg == 1.0

    def test_worked_example_middle_position(self):
        ranking, truth = as_ranking([0, 1, 0])
        assert ndcg(ranking, truth).ndcg == pytest.approx(0.63093, abs=1e-5)

    def test_exhaustive_against_brute_force(self):
        # every placement of 1-3 anomalies in lists of length <= 6
        for n in range(1, 7):
            for k in range(1, min(3, n) + 1):
                for positions in itertools.combinations(range(n), k):
                    rel = [1 if i in positions else 0 for i in range(n)]
                    ranking, truth = as_ranking(rel)
                    report = ndcg(ranking, truth)
                    assert report.ndcg == pytest.approx(brute_force_ndcg(rel),
                                                        abs=1e-12)
                    assert report.n_anomalies == k
                    assert report.n_records == n

    def test_anomaly_free_ranking_is_degenerate_one(self):
        ranking, truth = as_ranking([0, 0, 0])
        report = ndcg(ranking, truth)
        assert report.ndcg == 1.0
        assert report.degenerate
        assert report.idcg == 0.0

    def test_top_block_permutation_invariance(self):
        # all anomalies inside the top-k block: exactly 1 regardless of order
        ids = [f"r{i}" for i in range(6)]
        truth = GroundTruth(set(ids[:3]))
        for perm in itertools.permutations(ids[:3]):
            ranking = [(rid, float(10 - i)) for i, rid in enumerate(list(perm) + ids[3:])]
            assert ndcg(ranking, truth).ndcg == 1.0

    def test_upward_swap_never_decreases(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            rel = (rng.random(8) < 0.3).astype(int).tolist()
            ranking, truth = as_ranking(rel)
            before = ndcg(ranking, truth).ndcg
            swaps = [i for i in range(1, len(rel)) if rel[i] == 1 and rel[i - 1] == 0]
            for i in swaps:
                swapped = list(rel)
                swapped[i - 1], swapped[i] = swapped[i], swapped[i - 1]
                r2, t2 = as_ranking(swapped)
                assert ndcg(r2, t2).ndcg >= before

    def test_missing_truth_ids_warn(self):
        ranking, _ = as_ranking([1, 0])
        truth = GroundTruth({"r00", "ghost"})
        with pytest.warns(UserWarning):
            ndcg(ranking, truth)

    def test_report_serialization_field_names(self):
        ranking, truth = as_ranking([1, 0])
        payload = ndcg(ranking, truth).to_json()
        assert set(payload) == {"ndcg", "dcg", "idcg", "n_anomalies",
                                "n_records", "degenerate"}


class TestRankByScore:
    def test_descending(self):
        assert rank_by_score({"a": 0.3, "b": 0.9}) == [("b", 0.9), ("a", 0.3)]

    def test_tie_broken_by_id(self):
        assert rank_by_score({"b": 0.5, "a": 0.5}) == [("a", 0.5), ("b", 0.5)]

    def test_permutation_of_inputs(self):
        rng = np.random.default_rng(3)
        scores = {f"r{i}": float(rng.random()) for i in range(30)}
        ranked = rank_by_score(scores)
        assert sorted(rid for rid, _ in ranked) == sorted(scores)
        values = [s for _, s in ranked]
        assert values == sorted(values, reverse=True)


class TestRelativeImprovement:
    def test_reported_gain(self):
        assert relative_improvement(0.77, 0.94) == pytest.approx(22.08, abs=0.01)

    def test_no_gain_is_zero(self):
        assert relative_improvement(0.5, 0.5) == 0.0

    def test_doubling_is_plus_hundred(self):
        assert relative_improvement(0.5, 1.0) == pytest.approx(100.0)

    def test_non_positive_baseline_rejected(self):
        with pytest.raises(ValueError):
            relative_improvement(0.0, 0.5)
        with pytest.raises(ValueError):
            relative_improvement(-0.1, 0.5)

    @given(st.floats(min_value=1e-3, max_value=1.0),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=100, deadline=None)
    def test_sign_tracks_direction(self, baseline, max_al):
        delta = relative_improvement(baseline, max_al)
        if max_al > baseline:
            assert delta > 0
        elif max_al < baseline:
            assert delta < 0


def brute_force_avf(matrix):
    n, d = matrix.shape
    out = []
    for i in range(n):
        total = 0.0
        for j in range(d):
            count = 0
            for k in range(n):
                if matrix[k, j] == matrix[i, j]:
                    count += 1
            total += count / n
        out.append(total / d)
    return out


class TestAvf:
    def test_worked_three_row_example(self):
        # rows [1,1],[1,1],[0,1]: row3 = (1/3 + 1)/2, rows 1-2 = (2/3 + 1)/2
        ds = BooleanDataset(["r1", "r2", "r3"], ["x", "y"],
                            np.array([[1, 1], [1, 1], [0, 1]]))
        ranked = avf_scores(ds)
        assert ranked[0][0] == "r3"
        assert -ranked[0][1] == pytest.approx(2 / 3)
        assert -ranked[1][1] == pytest.approx(5 / 6)
        assert -ranked[2][1] == pytest.approx(5 / 6)

    def test_identical_rows_tie_broken_by_id(self):
        ds = BooleanDataset(["c", "a", "b"], ["x"], np.ones((3, 1)))
        assert [rid for rid, _ in avf_scores(ds)] == ["a", "b", "c"]

    def test_matches_nested_loop_counter(self):
        rng = np.random.default_rng(42)
        matrix = (rng.random((50, 8)) < 0.5).astype(np.uint8)
        ds = BooleanDataset([f"r{i:02d}" for i in range(50)],
                            [f"a{j}" for j in range(8)], matrix)
        expected = dict(zip(ds.record_ids, brute_force_avf(matrix)))
        for rid, negated in avf_scores(ds):
            assert -negated == pytest.approx(expected[rid], abs=1e-12)

    def test_scores_in_unit_interval(self):
        rng = np.random.default_rng(5)
        ds = BooleanDataset([f"r{i}" for i in range(30)], [f"a{j}" for j in range(5)],
                            (rng.random((30, 5)) < 0.3).astype(np.uint8))
        for _, negated in avf_scores(ds):
            assert 0.0 < -negated <= 1.0

    def test_duplicating_a_record_never_lowers_its_avf(self):
        rng = np.random.default_rng(11)
        matrix = (rng.random((12, 4)) < 0.4).astype(np.uint8)
        ids = [f"r{i:02d}" for i in range(12)]
        base = dict(avf_scores(BooleanDataset(ids, list("wxyz"), matrix)))
        dup = np.vstack([matrix, matrix[3]])
        grown = dict(avf_scores(BooleanDataset(ids + ["rdup"], list("wxyz"), dup)))
        assert -grown["r03"] >= -base["r03"]
