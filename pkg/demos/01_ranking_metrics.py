"""Ranking metrics on a tiny boolean dataset.

Builds a 6-process matrix where one process exhibits rare attribute values,
scores it with the frequency baseline, and walks through DCG/nDCG.
"""

import numpy as np

from anomrank import BooleanDataset, GroundTruth, avf_scores, dcg, ndcg

# six processes, five attributes; p5 alone touches attr3/attr4
matrix = np.array([
    [1, 1, 0, 0, 0],
    [1, 1, 0, 0, 0],
    [1, 0, 1, 0, 0],
    [1, 1, 0, 0, 0],
    [1, 0, 1, 0, 0],
    [0, 0, 0, 1, 1],
])
dataset = BooleanDataset([f"p{i}" for i in range(6)],
                         [f"attr{j}" for j in range(5)], matrix)
truth = GroundTruth({"p5"})

print("attribute-value-frequency ranking (most anomalous first):")
ranking = avf_scores(dataset)
for rank, (rid, score) in enumerate(ranking, start=1):
    marker = "  <- planted anomaly" if rid in truth.anomalous_ids else ""
    print(f"  {rank}. {rid}  avf={-score:.3f}{marker}")

report = ndcg(ranking, truth)
print(f"\nnDCG of that ranking: {report.ndcg:.4f}"
      f"  (dcg={report.dcg:.4f}, ideal={report.idcg:.4f})")

print("\nhand-checks of the discounted gain:")
print("  relevance [1,0,0] ->", dcg([1, 0, 0]))
print("  relevance [0,1,0] ->", round(dcg([0, 1, 0]), 5), "(= 1/log2(3))")
