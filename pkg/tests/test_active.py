"""Active-learning loop: threshold arithmetic, uncertainty selection,
smoothing, bookkeeping invariants, frozen-model re-ranking, early exit,
and suspend/resume."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anomrank import metrics
from anomrank.active import (ALConfig, GroundTruthOracle, OracleQuery,
                             OracleSuspended, compute_threshold, gaussian_smooth,
                             resume_active_learning, run_active_learning,
                             select_uncertain)
from anomrank.augment import GanConfig
from anomrank.data import (GroundTruth, SynthConfig, generate_synthetic,
                           make_splits)
from anomrank.model import Hyperparams, anomaly_scores


class TestComputeThreshold:
    def test_nearest_rank_example(self):
        assert compute_threshold(range(1, 11), 80) == 8

    def test_constant_scores(self):
        assert compute_threshold([3.5] * 7, 80) == 3.5

    def test_q_hundred_is_max(self):
        assert compute_threshold([4.0, 9.0, 1.0], 100) == 9.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_threshold([], 80)

    def test_percentile_bounds(self):
        with pytest.raises(ValueError):
            compute_threshold([1.0], 0)
        with pytest.raises(ValueError):
            compute_threshold([1.0], 101)

    @given(st.lists(st.floats(min_value=-1e6, max_value=1e6,
                              allow_nan=False), min_size=1, max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_at_most_a_fifth_strictly_above(self, scores):
        tau = compute_threshold(scores, 80)
        above = sum(1 for s in scores if s > tau)
        assert above <= math.ceil(0.2 * len(scores))


class TestSelectUncertain:
    def test_exact_threshold_selected_first(self):
        order = select_uncertain({"a": 0.5, "b": 0.7, "c": 0.2}, 0.5, 3)
        assert order[0] == "a"

    def test_worked_example(self):
        assert select_uncertain({"a": 0.1, "b": 0.49, "c": 0.9}, 0.5, 1) == ["b"]

    def test_budget_covers_pool(self):
        # a and c tie at distance 0.4; ascending id breaks the tie
        scores = {"a": 0.1, "b": 0.4, "c": 0.9}
        order = select_uncertain(scores, 0.5, 10)
        assert order == ["b", "a", "c"]

    def test_ties_by_ascending_id(self):
        assert select_uncertain({"b": 0.6, "a": 0.4}, 0.5, 2) == ["a", "b"]

    def test_budget_validated(self):
        with pytest.raises(ValueError):
            select_uncertain({"a": 0.5}, 0.5, 0)


def brute_force_smooth(series, sigma):
    """Independent vectorized smoother used as the oracle."""
    values = np.asarray(series, dtype=np.float64)
    radius = int(np.ceil(3.0 * sigma))
    kernel = np.exp(-np.arange(-radius, radius + 1) ** 2 / (2.0 * sigma ** 2))
    padded = np.zeros(len(values) + 2 * radius)
    padded[radius:radius + len(values)] = values
    mask = np.zeros_like(padded)
    mask[radius:radius + len(values)] = 1.0
    out = np.empty_like(values)
    for i in range(len(values)):
        window = slice(i, i + 2 * radius + 1)
        out[i] = (kernel * padded[window]).sum() / (kernel * mask[window]).sum()
    return out


class TestGaussianSmooth:
    def test_constant_series_unchanged(self):
        np.testing.assert_allclose(gaussian_smooth([0.8] * 9), [0.8] * 9, rtol=1e-12)

    def test_interior_impulse_symmetric_and_unit_mass(self):
        # sigma 1 -> radius 3; the kernel fits inside a centered length-13 series
        series = [0.0] * 13
        series[6] = 1.0
        out = gaussian_smooth(series, sigma=1.0)
        np.testing.assert_allclose(out, out[::-1], rtol=1e-12)
        assert sum(out) == pytest.approx(1.0, abs=1e-12)
        assert max(out) == out[6]

    def test_short_impulse_symmetric(self):
        out = gaussian_smooth([0.0, 0.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(out, out[::-1], rtol=1e-12)

    def test_matches_brute_force_everywhere(self):
        rng = np.random.default_rng(23)
        series = rng.random(40)
        np.testing.assert_allclose(gaussian_smooth(series, 2.0),
                                   brute_force_smooth(series, 2.0), rtol=1e-12)

    def test_length_preserved(self):
        assert len(gaussian_smooth(list(range(7)))) == 7

    def test_validation(self):
        with pytest.raises(ValueError):
            gaussian_smooth([])
        with pytest.raises(ValueError):
            gaussian_smooth([1.0], sigma=0.0)


class TestGroundTruthOracle:
    def test_listed_id_is_anomalous(self):
        oracle = GroundTruthOracle(GroundTruth({"bad"}))
        labels = oracle.label([OracleQuery("q1", "bad", 0.9, 0.1)])
        assert labels[0].label == "anomalous"

    def test_unlisted_id_is_normal(self):
        oracle = GroundTruthOracle(GroundTruth({"bad"}))
        labels = oracle.label([OracleQuery("q1", "fine", 0.2, 0.1)])
        assert labels[0].label == "normal"


def scripted_scenario(seed=42, n=300, d=16, rate=0.04):
    dataset, truth = generate_synthetic(
        SynthConfig(n, d, rate, normal_density=0.15, anomaly_flip_count=4,
                    seed=seed))
    splits = make_splits(dataset, truth, 0.2, 0.1, seed=seed)
    hyper = Hyperparams(latent_dim=4, attention_tokens=2, learning_rate=0.01,
                        batch_size=64, max_epochs=15, patience=5)
    config = ALConfig(n_iterations=5, query_budget=8, retrain_epochs=5,
                      gan=GanConfig(steps=60, learning_rate=1e-3))
    return dataset, truth, splits, hyper, config


class TestRunActiveLearning:
    def test_bookkeeping_invariants(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        model, state = run_active_learning(dataset, truth, splits,
                                           GroundTruthOracle(truth),
                                           hyper, config, seed=1)
        assert len(state.history) <= config.n_iterations
        pool = set(splits.unlabeled_pool)
        labeled = set(splits.labeled_normal)
        anomalies = set()
        for rec in state.history:
            queried = set(rec.queried_ids)
            assert queried <= pool
            pool -= queried
            assert rec.n_labeled_normal + rec.n_labeled_anomalous == len(queried)
            assert rec.n_synthetic == rec.n_labeled_normal or rec.augmentation_skipped
            assert 0.0 <= rec.ndcg_pool <= 1.0
            assert 0.0 <= rec.ndcg_full <= 1.0
            assert rec.wall_time >= 0.0
            labeled |= {r for r in queried if r not in truth.anomalous_ids}
            anomalies |= queried & truth.anomalous_ids
        assert state.unlabeled_pool == pool
        assert state.labeled_normal_real == labeled
        assert state.known_anomalies == anomalies
        assert not state.labeled_normals & state.unlabeled_pool
        assert not state.known_anomalies & state.labeled_normals
        for sid in state.synthetic_rows:
            assert sid.startswith("synth-")
            assert sid not in state.unlabeled_pool

    def test_pool_shrinks_by_exactly_queried(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        _, state = run_active_learning(dataset, truth, splits,
                                       GroundTruthOracle(truth), hyper, config,
                                       seed=2)
        size = len(splits.unlabeled_pool)
        for rec in state.history:
            size -= len(rec.queried_ids)
        assert len(state.unlabeled_pool) == size

    def test_frozen_model_ndcg_changes_only_through_membership(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        hyper = Hyperparams(latent_dim=4, attention_tokens=2, max_epochs=0)
        config = ALConfig(n_iterations=4, query_budget=10, retrain_epochs=0,
                          gan=GanConfig(steps=5))
        model, state = run_active_learning(dataset, truth, splits,
                                           GroundTruthOracle(truth),
                                           hyper, config, seed=3)
        scores = dict(zip(dataset.record_ids,
                          anomaly_scores(model, dataset.rows_for(dataset.record_ids))))
        pool = set(splits.unlabeled_pool)
        for rec in state.history:
            ranked = metrics.rank_by_score({rid: scores[rid] for rid in pool})
            expected = metrics.ndcg(
                ranked, GroundTruth(truth.anomalous_ids & pool))
            assert rec.ndcg_pool == pytest.approx(expected.ndcg, abs=1e-12)
            pool -= set(rec.queried_ids)

    def test_anomaly_free_pool_is_degenerate_and_stops(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        empty_truth = GroundTruth(set())
        splits = make_splits(dataset, empty_truth, 0.2, 0.1, seed=1)
        _, state = run_active_learning(dataset, empty_truth, splits,
                                       GroundTruthOracle(empty_truth),
                                       hyper, config, seed=4)
        assert len(state.history) == 1
        assert state.history[0].ndcg_pool == 1.0
        assert state.history[0].pool_degenerate

    def test_stops_when_pool_exhausted(self):
        dataset, truth, splits, hyper, config = scripted_scenario(n=60, rate=0.05)
        config = ALConfig(n_iterations=40, query_budget=50, retrain_epochs=2,
                          gan=GanConfig(steps=5))
        _, state = run_active_learning(dataset, truth, splits,
                                       GroundTruthOracle(truth), hyper, config,
                                       seed=5)
        assert not state.unlabeled_pool or state.history[-1].ndcg_pool == 1.0
        assert len(state.history) < 40

    def test_frozen_threshold_stays_constant(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        config = ALConfig(n_iterations=3, query_budget=8, retrain_epochs=2,
                          recalibrate_threshold=False, gan=GanConfig(steps=5))
        _, state = run_active_learning(dataset, truth, splits,
                                       GroundTruthOracle(truth), hyper, config,
                                       seed=6)
        taus = [rec.tau for rec in state.history]
        assert len(set(taus)) == 1

    def test_max_full_ndcg_at_least_first_iteration(self):
        dataset, truth, splits, hyper, config = scripted_scenario()
        _, state = run_active_learning(dataset, truth, splits,
                                       GroundTruthOracle(truth), hyper, config,
                                       seed=42)
        full = [rec.ndcg_full for rec in state.history]
        assert max(full) >= full[0]


class SuspendingOracle:
    """Answers from ground truth until a chosen iteration, then suspends."""

    def __init__(self, truth, fail_at_call):
        self.inner = GroundTruthOracle(truth)
        self.calls = 0
        self.fail_at_call = fail_at_call

    def label(self, queries):
        self.calls += 1
        if self.calls == self.fail_at_call:
            raise OracleSuspended("analyst went home")
        return self.inner.label(queries)


class TestSuspendResume:
    def test_resume_completes_identically(self, tmp_path):
        dataset, truth, splits, hyper, config = scripted_scenario()
        full_dir = tmp_path / "full"
        run_active_learning(dataset, truth, splits, GroundTruthOracle(truth),
                            hyper, config, seed=9, run_dir=full_dir)
        part_dir = tmp_path / "part"
        with pytest.raises(OracleSuspended):
            run_active_learning(dataset, truth, splits,
                                SuspendingOracle(truth, fail_at_call=3),
                                hyper, config, seed=9, run_dir=part_dir)
        snap = json.loads((part_dir / "state.json").read_text())
        assert snap["iteration"] == 2
        resume_active_learning(part_dir, dataset, truth, GroundTruthOracle(truth))

        def stripped(path):
            out = []
            for line in (path / "history.jsonl").read_text().splitlines():
                rec = json.loads(line)
                rec.pop("wall_time")
                out.append(json.dumps(rec, sort_keys=True))
            return out

        assert stripped(part_dir) == stripped(full_dir)

    def test_run_directory_artifacts(self, tmp_path):
        dataset, truth, splits, hyper, config = scripted_scenario()
        config = ALConfig(n_iterations=2, query_budget=8, retrain_epochs=2,
                          gan=GanConfig(steps=10))
        run_dir = tmp_path / "run"
        _, state = run_active_learning(dataset, truth, splits,
                                       GroundTruthOracle(truth), hyper, config,
                                       seed=10, run_dir=run_dir)
        assert (run_dir / "state.json").exists()
        lines = (run_dir / "history.jsonl").read_text().splitlines()
        assert len(lines) == len(state.history)
        for it in range(1, len(state.history) + 1):
            ranking = run_dir / f"ranking_iter{it:03d}.csv"
            assert ranking.exists()
            header = ranking.read_text().splitlines()[0]
            assert header == "id,score,rank"
            assert (run_dir / f"model_iter{it:03d}.json").exists()


class TestALConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ALConfig(n_iterations=0)
        with pytest.raises(ValueError):
            ALConfig(query_budget=0)
        with pytest.raises(ValueError):
            ALConfig(percentile=0.0)
        with pytest.raises(ValueError):
            ALConfig(percentile=100.0)

    def test_round_trip(self):
        config = ALConfig(n_iterations=7, query_budget=3, percentile=75.0)
        assert ALConfig.from_json(config.to_json()) == config
