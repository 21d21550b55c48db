"""Oracle-driven active learning over a shrinking unlabeled pool.

Each iteration retrains the detector on the labeled-normal pool (real plus
synthetic rows), ranks the unlabeled pool, records nDCG against ground
truth, sets a percentile threshold on the pool scores, queries the oracle
for the records closest to that threshold, absorbs confirmed normals (with
1:1 GAN augmentation) into the labeled pool, and ledgers confirmed
anomalies away from all training data.

Run directories hold a resumable `state.json` snapshot per completed
iteration, `history.jsonl`, a `ranking_iter<k>.csv` per iteration, and
model checkpoints.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .augment import GanConfig, sample_synthetic, train_gan
from .data import BooleanDataset, GroundTruth, Splits
from .model import (DualAdversarialAutoencoder, Hyperparams, anomaly_scores, fit,
                    load_checkpoint, save_checkpoint)
from .nn import restore_rng, rng_state

STATE_SCHEMA = 1


class OracleSuspended(RuntimeError):
    """The oracle session closed before answering; the run state on disk is
    resumable."""


@dataclass
class ALConfig:
    n_iterations: int = 40
    query_budget: int = 32
    percentile: float = 80.0
    recalibrate_threshold: bool = True
    gan: GanConfig = field(default_factory=GanConfig)
    retrain_epochs: int = 100

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be at least 1")
        if self.query_budget < 1:
            raise ValueError("query_budget must be at least 1")
        if not 0.0 < self.percentile < 100.0:
            raise ValueError(f"percentile must lie in (0, 100), got {self.percentile}")
        if self.retrain_epochs < 0:
            raise ValueError("retrain_epochs must be non-negative")

    def to_json(self) -> dict:
        return {"n_iterations": self.n_iterations, "query_budget": self.query_budget,
                "percentile": self.percentile,
                "recalibrate_threshold": self.recalibrate_threshold,
                "gan": self.gan.to_json(), "retrain_epochs": self.retrain_epochs}

    @classmethod
    def from_json(cls, payload: dict) -> "ALConfig":
        payload = dict(payload)
        payload["gan"] = GanConfig.from_json(payload["gan"])
        return cls(**payload)


@dataclass
class OracleQuery:
    query_id: str
    record_id: str
    anomaly_score: float
    uncertainty: float


@dataclass
class OracleLabel:
    query_id: str
    record_id: str
    label: str  # "normal" | "anomalous"


class GroundTruthOracle:
    """Answers every query instantly from known ground truth."""

    def __init__(self, truth: GroundTruth):
        self._anomalous = set(truth.anomalous_ids)

    def label(self, queries: list[OracleQuery]) -> list[OracleLabel]:
        return [OracleLabel(q.query_id, q.record_id,
                            "anomalous" if q.record_id in self._anomalous else "normal")
                for q in queries]


@dataclass
class IterationRecord:
    iteration: int
    tau: float
    ndcg_pool: float
    ndcg_full: float
    pool_degenerate: bool
    full_degenerate: bool
    queried_ids: list[str]
    n_labeled_normal: int
    n_labeled_anomalous: int
    n_synthetic: int
    augmentation_skipped: bool
    wall_time: float

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration, "tau": self.tau,
            "ndcg_pool": self.ndcg_pool, "ndcg_full": self.ndcg_full,
            "pool_degenerate": self.pool_degenerate,
            "full_degenerate": self.full_degenerate,
            "queried_ids": list(self.queried_ids),
            "n_labeled_normal": self.n_labeled_normal,
            "n_labeled_anomalous": self.n_labeled_anomalous,
            "n_synthetic": self.n_synthetic,
            "augmentation_skipped": self.augmentation_skipped,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "IterationRecord":
        return cls(**payload)


@dataclass
class ActiveLearningState:
    """Pool bookkeeping across iterations.

    labeled_normals (the autoencoder training pool) is the union of the real
    oracle/cold-start ids and the synthetic ids; confirmed anomalies are
    ledgered separately and never train the autoencoders.
    """

    labeled_normal_real: set[str]
    unlabeled_pool: set[str]
    validation: list[str]
    full_pool: list[str]
    known_anomalies: set[str] = field(default_factory=set)
    synthetic_rows: dict[str, np.ndarray] = field(default_factory=dict)
    iteration: int = 0
    tau: float | None = None
    history: list[IterationRecord] = field(default_factory=list)

    @property
    def labeled_normals(self) -> set[str]:
        return self.labeled_normal_real | set(self.synthetic_rows)

    def check_invariants(self) -> None:
        if self.labeled_normals & self.unlabeled_pool:
            raise AssertionError("labeled and unlabeled pools overlap")
        if self.known_anomalies & self.labeled_normals:
            raise AssertionError("a known anomaly entered the training pool")


def compute_threshold(scores, percentile: float) -> float:
    """Nearest-rank percentile: ascending sort, value at 1-based index
    ceil(q/100 * N). q may be anywhere in (0, 100]."""
    values = sorted(float(s) for s in scores)
    if not values:
        raise ValueError("cannot take a percentile of no scores")
    if not 0.0 < percentile <= 100.0:
        raise ValueError(f"percentile must lie in (0, 100], got {percentile}")
    index = math.ceil(percentile * len(values) / 100.0)
    return values[index - 1]


def select_uncertain(scores_by_id: dict[str, float], tau: float,
                     budget: int) -> list[str]:
    """The budget ids whose scores sit closest to the threshold, ordered by
    increasing |score - tau| with ties broken by ascending id."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    order = sorted(scores_by_id, key=lambda rid: (abs(scores_by_id[rid] - tau), rid))
    return order[:budget]


def gaussian_smooth(series, sigma: float = 2.0) -> list[float]:
    """Discrete Gaussian smoothing, kernel truncated at 3*sigma and
    renormalized where it overhangs the series boundary. Length preserved;
    a constant series passes through unchanged."""
    values = [float(v) for v in series]
    if not values:
        raise ValueError("cannot smooth an empty series")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    weights = [math.exp(-(m * m) / (2.0 * sigma * sigma))
               for m in range(-radius, radius + 1)]
    n = len(values)
    out = []
    for i in range(n):
        lo = max(0, i - radius)
        hi = min(n - 1, i + radius)
        window = weights[lo - i + radius:hi - i + radius + 1]
        total = sum(window)
        out.append(sum(w * values[j] for w, j in zip(window, range(lo, hi + 1))) / total)
    return out


def _restricted_truth(truth: GroundTruth, ids) -> GroundTruth:
    return GroundTruth(truth.anomalous_ids & set(ids))


def _ranking_rows(ranked: metrics.RankedList, known_anomalies: set[str]) -> list[dict]:
    return [{"rank": rank, "id": rid, "score": score,
             "is_known_anomaly": rid in known_anomalies}
            for rank, (rid, score) in enumerate(ranked, start=1)]


def _write_ranking_csv(path, ranked: metrics.RankedList) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,score,rank\n")
        for rank, (rid, score) in enumerate(ranked, start=1):
            fh.write(f"{rid},{score!r},{rank}\n")


def _telemetry(state: ActiveLearningState) -> dict:
    last = state.history[-1].to_json() if state.history else None
    return {
        "iteration": state.iteration,
        "tau": state.tau,
        "pool_sizes": {
            "labeled_normal": len(state.labeled_normal_real),
            "synthetic": len(state.synthetic_rows),
            "unlabeled": len(state.unlabeled_pool),
            "known_anomalies": len(state.known_anomalies),
        },
        "last_record": last,
        "history": [r.to_json() for r in state.history],
    }


def save_state(state: ActiveLearningState, rng, seed: int, model_seed: int,
               hyper: Hyperparams, config: ALConfig, path) -> None:
    payload = {
        "schema_version": STATE_SCHEMA,
        "seed": seed,
        "model_seed": model_seed,
        "hyperparams": hyper.to_json(),
        "config": config.to_json(),
        "iteration": state.iteration,
        "tau": state.tau,
        "labeled_normal_real": sorted(state.labeled_normal_real),
        "synthetic": {rid: "".join(str(int(c)) for c in row)
                      for rid, row in sorted(state.synthetic_rows.items())},
        "unlabeled_pool": sorted(state.unlabeled_pool),
        "known_anomalies": sorted(state.known_anomalies),
        "validation": list(state.validation),
        "full_pool": list(state.full_pool),
        "history": [r.to_json() for r in state.history],
        "rng_state": rng_state(rng),
        "checkpoint": f"model_iter{state.iteration:03d}.json",
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True))
        fh.write("\n")


def load_state(path):
    """Returns (state, rng, seed, model_seed, hyper, config, checkpoint_name)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != STATE_SCHEMA:
        raise ValueError(f"unsupported state schema: {payload.get('schema_version')}")
    state = ActiveLearningState(
        labeled_normal_real=set(payload["labeled_normal_real"]),
        unlabeled_pool=set(payload["unlabeled_pool"]),
        validation=list(payload["validation"]),
        full_pool=list(payload["full_pool"]),
        known_anomalies=set(payload["known_anomalies"]),
        synthetic_rows={rid: np.array([int(c) for c in bits], dtype=np.uint8)
                        for rid, bits in payload["synthetic"].items()},
        iteration=payload["iteration"],
        tau=payload["tau"],
        history=[IterationRecord.from_json(r) for r in payload["history"]],
    )
    return (state, restore_rng(payload["rng_state"]), payload["seed"],
            payload["model_seed"], Hyperparams.from_json(payload["hyperparams"]),
            ALConfig.from_json(payload["config"]), payload["checkpoint"])


def _training_rows(state: ActiveLearningState, dataset: BooleanDataset) -> np.ndarray:
    real = dataset.rows_for(sorted(state.labeled_normal_real))
    if not state.synthetic_rows:
        return real
    synth = np.stack([state.synthetic_rows[rid]
                      for rid in sorted(state.synthetic_rows)]).astype(np.float64)
    return np.vstack([real, synth])


def run_active_learning(dataset: BooleanDataset, truth: GroundTruth, splits: Splits,
                        oracle, hyper: Hyperparams | None = None,
                        config: ALConfig | None = None, seed: int = 0,
                        run_dir=None, board=None):
    """Fresh active-learning run. Returns (model, state).

    `board`, when given, receives telemetry and rankings after every
    completed iteration (see the oracle service). A suspended oracle raises
    OracleSuspended after the last completed iteration was snapshotted.
    """
    hyper = hyper or Hyperparams()
    config = config or ALConfig()
    ss = np.random.SeedSequence(seed)
    model_ss, loop_ss = ss.spawn(2)
    model_seed = int(model_ss.generate_state(1)[0])
    rng = np.random.default_rng(loop_ss)
    model = DualAdversarialAutoencoder(dataset.n_attributes, hyper, model_seed)
    state = ActiveLearningState(
        labeled_normal_real=set(splits.labeled_normal),
        unlabeled_pool=set(splits.unlabeled_pool),
        validation=sorted(splits.validation),
        full_pool=sorted(splits.unlabeled_pool),
    )
    return _run_loop(dataset, truth, oracle, model, state, rng, seed, model_seed,
                     hyper, config, run_dir, board)


def resume_active_learning(run_dir, dataset: BooleanDataset, truth: GroundTruth,
                           oracle, board=None):
    """Continue a run from its last completed-iteration snapshot."""
    run_path = Path(run_dir)
    state, rng, seed, model_seed, hyper, config, checkpoint = load_state(
        run_path / "state.json")
    model = load_checkpoint(run_path / checkpoint)
    return _run_loop(dataset, truth, oracle, model, state, rng, seed, model_seed,
                     hyper, config, run_dir, board)


def _snapshot(state, rng, seed, model_seed, hyper, config, model, run_path) -> None:
    if run_path is None:
        return
    save_checkpoint(model, run_path / f"model_iter{state.iteration:03d}.json")
    save_state(state, rng, seed, model_seed, hyper, config, run_path / "state.json")
    with open(run_path / "history.jsonl", "w", encoding="utf-8") as fh:
        for record in state.history:
            fh.write(json.dumps(record.to_json(), sort_keys=True))
            fh.write("\n")


def _run_loop(dataset, truth, oracle, model, state, rng, seed, model_seed,
              hyper, config, run_dir, board):
    run_path = Path(run_dir) if run_dir is not None else None
    if run_path is not None:
        run_path.mkdir(parents=True, exist_ok=True)
        if state.iteration == 0:
            _snapshot(state, rng, seed, model_seed, hyper, config, model, run_path)
    if board is not None:
        board.publish_iteration(_telemetry(state), state.iteration, None)
    while state.iteration < config.n_iterations and state.unlabeled_pool:
        started = time.perf_counter()
        it = state.iteration + 1
        epochs = hyper.max_epochs if it == 1 else config.retrain_epochs
        if epochs > 0:
            fit(model, _training_rows(state, dataset),
                dataset.rows_for(state.validation), rng, max_epochs=epochs)
        pool_ids = sorted(state.unlabeled_pool)
        pool_scores = anomaly_scores(model, dataset.rows_for(pool_ids))
        scores_by_id = {rid: float(s) for rid, s in zip(pool_ids, pool_scores)}
        ranked_pool = metrics.rank_by_score(scores_by_id)
        rep_pool = metrics.ndcg(ranked_pool, _restricted_truth(truth, pool_ids))
        full_scores = anomaly_scores(model, dataset.rows_for(state.full_pool))
        ranked_full = metrics.rank_by_score(
            {rid: float(s) for rid, s in zip(state.full_pool, full_scores)})
        rep_full = metrics.ndcg(ranked_full, _restricted_truth(truth, state.full_pool))
        if config.recalibrate_threshold or state.tau is None:
            tau = compute_threshold(scores_by_id.values(), config.percentile)
        else:
            tau = state.tau
        selected = select_uncertain(scores_by_id, tau, config.query_budget)
        queries = [OracleQuery(f"it{it:03d}-q{j:03d}", rid, scores_by_id[rid],
                               abs(scores_by_id[rid] - tau))
                   for j, rid in enumerate(selected)]
        labels = oracle.label(queries)
        answered = {lab.record_id: lab.label for lab in labels}
        if set(answered) != set(selected):
            raise OracleSuspended("oracle did not answer every query")
        normal_ids = sorted(rid for rid in selected if answered[rid] == "normal")
        anomaly_ids = sorted(rid for rid in selected if answered[rid] == "anomalous")
        state.labeled_normal_real |= set(normal_ids)
        state.known_anomalies |= set(anomaly_ids)
        state.unlabeled_pool -= set(selected)
        n_synth = 0
        skipped = False
        if len(normal_ids) >= config.gan.min_pool:
            gan = train_gan(dataset.rows_for(normal_ids), config.gan, rng)
            synth_ids, synth_rows = sample_synthetic(gan, len(normal_ids), rng,
                                                     iteration=it)
            state.synthetic_rows.update(zip(synth_ids, synth_rows))
            n_synth = len(synth_ids)
        else:
            skipped = True
        record = IterationRecord(
            iteration=it, tau=tau,
            ndcg_pool=rep_pool.ndcg, ndcg_full=rep_full.ndcg,
            pool_degenerate=rep_pool.degenerate, full_degenerate=rep_full.degenerate,
            queried_ids=list(selected),
            n_labeled_normal=len(normal_ids), n_labeled_anomalous=len(anomaly_ids),
            n_synthetic=n_synth, augmentation_skipped=skipped,
            wall_time=time.perf_counter() - started)
        state.history.append(record)
        state.iteration = it
        state.tau = tau
        state.check_invariants()
        if run_path is not None:
            _write_ranking_csv(run_path / f"ranking_iter{it:03d}.csv", ranked_pool)
            _snapshot(state, rng, seed, model_seed, hyper, config, model, run_path)
        if board is not None:
            board.publish_iteration(_telemetry(state), it,
                                    _ranking_rows(ranked_pool, state.known_anomalies))
        if rep_pool.ndcg == 1.0:
            break
    return model, state
