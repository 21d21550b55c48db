"""Boolean per-process datasets: loading, validation, splits, and a planted
anomaly synthesizer.

The interchange format is a UTF-8 CSV with a header row, the record id in the
first column, and "0"/"1" cells. Ground truth is one anomalous record id per
line, with `#` comments ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VIEW_TAGS = ("PE", "PX", "PP", "PN", "PA", "SYNTH")


class DataFormatError(ValueError):
    """A file does not follow the boolean-dataset format."""


class DataIntegrityError(ValueError):
    """File contents are well-formed but internally inconsistent."""


@dataclass
class BooleanDataset:
    """N x d matrix over {0, 1} with record ids and attribute names."""

    record_ids: list[str]
    attribute_names: list[str]
    matrix: np.ndarray
    view_tag: str = "SYNTH"

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.uint8)
        n, d = self.matrix.shape
        if len(self.record_ids) != n:
            raise DataIntegrityError(
                f"{len(self.record_ids)} record ids for {n} matrix rows")
        if len(self.attribute_names) != d:
            raise DataIntegrityError(
                f"{len(self.attribute_names)} attribute names for {d} columns")
        if len(set(self.record_ids)) != n:
            raise DataIntegrityError("record ids are not unique")
        if self.view_tag not in VIEW_TAGS:
            raise DataIntegrityError(f"unknown view tag {self.view_tag!r}")
        if self.matrix.size and self.matrix.max(initial=0) > 1:
            raise DataFormatError("matrix cells must all be 0 or 1")
        self._row_of = {rid: i for i, rid in enumerate(self.record_ids)}

    @property
    def n_records(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.matrix.shape[1]

    def row_index(self, record_id: str) -> int:
        try:
            return self._row_of[record_id]
        except KeyError:
            raise DataIntegrityError(f"unknown record id {record_id!r}") from None

    def rows_for(self, record_ids) -> np.ndarray:
        """Float64 submatrix for the given ids, in the given order."""
        idx = [self.row_index(r) for r in record_ids]
        return self.matrix[idx].astype(np.float64)

    def active_attributes(self, record_id: str) -> list[str]:
        row = self.matrix[self.row_index(record_id)]
        return [name for name, cell in zip(self.attribute_names, row) if cell]


@dataclass
class GroundTruth:
    """The set of record ids known to be anomalous."""

    anomalous_ids: set[str] = field(default_factory=set)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.anomalous_ids

    def bind(self, dataset: BooleanDataset) -> "GroundTruth":
        unknown = sorted(self.anomalous_ids - set(dataset.record_ids))
        if unknown:
            raise DataIntegrityError(
                f"ground-truth ids not present in the dataset: {unknown}")
        return self


@dataclass
class Splits:
    """Disjoint labeled-normal, unlabeled, and validation id pools."""

    labeled_normal: set[str]
    unlabeled_pool: set[str]
    validation: set[str]

    def __post_init__(self):
        if (self.labeled_normal & self.unlabeled_pool
                or self.labeled_normal & self.validation
                or self.unlabeled_pool & self.validation):
            raise DataIntegrityError("split pools overlap")


@dataclass
class SynthConfig:
    """Generator settings for a planted-anomaly boolean dataset.

    Normal rows draw each attribute from a per-attribute base rate centered
    on normal_density; anomaly rows are normal rows with the globally rarest
    anomaly_flip_count attributes forced on.
    """

    n_records: int
    n_attributes: int
    anomaly_rate: float
    normal_density: float = 0.2
    anomaly_flip_count: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.n_records < 1 or self.n_attributes < 1:
            raise ValueError("n_records and n_attributes must be positive")
        if not 0.0 < self.anomaly_rate < 0.5:
            raise ValueError(f"anomaly_rate must lie in (0, 0.5), got {self.anomaly_rate}")
        if not 0.0 < self.normal_density < 1.0:
            raise ValueError("normal_density must lie in (0, 1)")
        if not 0 < self.anomaly_flip_count <= self.n_attributes:
            raise ValueError("anomaly_flip_count must lie in [1, n_attributes]")


def load_csv(path, view_tag: str = "SYNTH") -> BooleanDataset:
    """Parse a boolean dataset file. Row order is preserved."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file, expected a header row")
    header = lines[0].split(",")
    if len(header) < 2:
        raise DataFormatError(f"{path}: header must name an id column and attributes")
    attribute_names = header[1:]
    ids: list[str] = []
    seen: set[str] = set()
    rows = np.zeros((len(lines) - 1, len(attribute_names)), dtype=np.uint8)
    for r, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != len(header):
            raise DataFormatError(
                f"{path}: row {r} has {len(cells)} cells, expected {len(header)}")
        rid = cells[0]
        if rid in seen:
            raise DataIntegrityError(f"{path}: duplicate record id {rid!r} at row {r}")
        seen.add(rid)
        ids.append(rid)
        for c, cell in enumerate(cells[1:], start=1):
            if cell == "0":
                continue
            if cell == "1":
                rows[r - 1, c - 1] = 1
            else:
                raise DataFormatError(
                    f"{path}: row {r}, column {c}: expected 0 or 1, got {cell!r}")
    return BooleanDataset(ids, attribute_names, rows, view_tag)


def write_csv(dataset: BooleanDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id," + ",".join(dataset.attribute_names) + "\n")
        for rid, row in zip(dataset.record_ids, dataset.matrix):
            fh.write(rid + "," + ",".join(str(int(c)) for c in row) + "\n")


def load_ground_truth(path, dataset: BooleanDataset | None = None) -> GroundTruth:
    """One anomalous id per line; blank lines and `#` comments are ignored."""
    ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ids.add(line)
    truth = GroundTruth(ids)
    if dataset is not None:
        truth.bind(dataset)
    return truth


def write_ground_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid in sorted(truth.anomalous_ids):
            fh.write(rid + "\n")


def make_splits(dataset: BooleanDataset, truth: GroundTruth,
                cold_start_fraction: float = 0.2,
                validation_fraction: float = 0.1, seed: int = 0) -> Splits:
    """Cold-start splits drawn from the normal population.

    The labeled pool and validation set are disjoint seeded samples of the
    normal records; the unlabeled pool is everything else, anomalies
    included.
    """
    for name, frac in (("cold_start_fraction", cold_start_fraction),
                       ("validation_fraction", validation_fraction)):
        if not 0.0 < frac < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {frac}")
    normals = sorted(set(dataset.record_ids) - truth.anomalous_ids)
    n_labeled = math.ceil(cold_start_fraction * len(normals))
    n_val = math.ceil(validation_fraction * len(normals))
    if n_labeled + n_val >= len(normals):
        raise ValueError(
            f"cold start ({n_labeled}) plus validation ({n_val}) would cover "
            f"all {len(normals)} normal records")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(normals))
    labeled = {normals[i] for i in order[:n_labeled]}
    validation = {normals[i] for i in order[n_labeled:n_labeled + n_val]}
    unlabeled = set(dataset.record_ids) - labeled - validation
    return Splits(labeled, unlabeled, validation)


def generate_synthetic(config: SynthConfig) -> tuple[BooleanDataset, GroundTruth]:
    """Planted-anomaly dataset mimicking extreme class imbalance.

    Anomaly count is exactly round(anomaly_rate * n_records). Deterministic
    per seed.
    """
    rng = np.random.default_rng(config.seed)
    n, d = config.n_records, config.n_attributes
    # per-attribute base rates drawn once, centered on normal_density
    base_rates = np.clip(
        config.normal_density * rng.uniform(0.25, 1.75, size=d), 0.01, 0.95)
    matrix = (rng.random((n, d)) < base_rates).astype(np.uint8)
    n_anomalies = int(math.floor(config.anomaly_rate * n + 0.5))
    anomaly_rows = rng.choice(n, size=n_anomalies, replace=False) if n_anomalies else []
    rare = np.argsort(base_rates, kind="stable")[:config.anomaly_flip_count]
    for r in anomaly_rows:
        matrix[r, rare] = 1
    width = max(5, len(str(n - 1)))
    ids = [f"p{i:0{width}d}" for i in range(n)]
    truth = GroundTruth({ids[r] for r in anomaly_rows})
    return BooleanDataset(ids, [f"attr{j}" for j in range(d)], matrix, "SYNTH"), truth
