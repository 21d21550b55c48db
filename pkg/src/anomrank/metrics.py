"""Ranking metrics and the rare-value baseline scorer.

A RankedList is a list of (record_id, score) pairs in descending score
order with ties broken by ascending id, so every ranking in the repo is a
deterministic permutation of its inputs.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .data import BooleanDataset, GroundTruth

RankedList = list[tuple[str, float]]


def rank_by_score(scores_by_id: dict[str, float]) -> RankedList:
    """Descending by score, ties broken by ascending record id."""
    order = sorted(scores_by_id, key=lambda rid: (-scores_by_id[rid], rid))
    return [(rid, float(scores_by_id[rid])) for rid in order]


def dcg(relevances) -> float:
    """Discounted cumulative gain over binary relevances in rank order,
    1-based positions: sum of rel_i / log2(i + 1)."""
    rel = np.asarray(list(relevances), dtype=np.float64)
    if rel.size == 0:
        return 0.0
    if not np.all((rel == 0.0) | (rel == 1.0)):
        raise ValueError("relevances must all be 0 or 1")
    positions = np.arange(1, rel.size + 1, dtype=np.float64)
    return float(np.sum(rel / np.log2(positions + 1.0)))


@dataclass
class MetricsReport:
    ndcg: float
    dcg: float
    idcg: float
    n_anomalies: int
    n_records: int
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "ndcg": self.ndcg,
            "dcg": self.dcg,
            "idcg": self.idcg,
            "n_anomalies": self.n_anomalies,
            "n_records": self.n_records,
            "degenerate": self.degenerate,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def ndcg(ranking: RankedList, truth: GroundTruth) -> MetricsReport:
    """Normalized DCG of a ranking against ground truth.

    The ideal DCG places every anomaly present in the ranking at the top, so
    the score is exactly 1 when all anomalies occupy the leading positions
    regardless of their mutual order. A ranking with no anomalies in it is
    degenerate and reported as 1.0 with the flag set.
    """
    ids = [rid for rid, _ in ranking]
    missing = truth.anomalous_ids - set(ids)
    if missing:
        warnings.warn(f"{len(missing)} ground-truth ids missing from the ranking",
                      stacklevel=2)
    rel = [1 if rid in truth.anomalous_ids else 0 for rid in ids]
    n_anom = sum(rel)
    gain = dcg(rel)
    if n_anom == 0:
        return MetricsReport(1.0, gain, 0.0, 0, len(ids), degenerate=True)
    ideal = dcg([1] * n_anom + [0] * (len(ids) - n_anom))
    return MetricsReport(gain / ideal, gain, ideal, n_anom, len(ids))


def relative_improvement(baseline: float, max_al: float) -> float:
    """Signed percentage gain of a peak score over a baseline score."""
    if baseline <= 0.0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return (max_al - baseline) / baseline * 100.0


def avf_scores(dataset: BooleanDataset) -> RankedList:
    """Attribute-value-frequency baseline: rare attribute values score low.

    A record's AVF is the mean over attributes of the frequency of its own
    cell value in that column. Rare values make anomalies, so the ranking is
    ascending by AVF; scores are emitted negated to keep the descending
    RankedList convention.
    """
    if dataset.n_records == 0:
        raise ValueError("AVF on an empty dataset")
    x = dataset.matrix
    n = x.shape[0]
    ones = x.sum(axis=0, dtype=np.int64)
    # integer counts divided once, so each cell frequency is exactly count/N
    freq_one = ones / n
    freq_zero = (n - ones) / n
    value_freq = np.where(x == 1, freq_one, freq_zero)
    # sequential accumulation over attributes keeps the result bit-identical
    # to a per-record left-to-right reference sum
    total = np.zeros(n)
    for j in range(x.shape[1]):
        total += value_freq[:, j]
    avf = total / x.shape[1]
    return rank_by_score({rid: -float(s) for rid, s in zip(dataset.record_ids, avf)})
