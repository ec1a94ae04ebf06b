"""Subjective-score curation: normalization, aggregation, screening, selection.

Raters score items on a 1-5 scale along two dimensions (content consistency
and depth consistency). Each rater's scores are Z-score normalized per
dimension, mapped linearly onto [1, 100] using the dimension-wide extrema,
and averaged per item; the final per-item score is the mean of the two
dimension scores. Before normalization, raters whose scores fall outside
the 95% interval around the cross-rater mean too often (rate above 5%) can
be screened out. A separate selection step keeps, per item, the best-scored
candidate iff its score reaches the retention threshold.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UndefinedStatisticError

DIMENSIONS = ("content", "depth")
SCORE_MIN, SCORE_MAX = 1, 5
RESCALE_LO, RESCALE_HI = 1.0, 100.0
OUTLIER_Z = 1.96
RETAIN_THRESHOLD = 90.0


@dataclass(frozen=True)
class ScoreTable:
    """Raw scores: (rater, item, dimension) -> 1..5, NaN where missing."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    scores: np.ndarray  # (R, I, 2) float64

    def __post_init__(self):
        arr = np.array(self.scores, dtype=np.float64, copy=True)
        if arr.shape != (len(self.raters), len(self.items), len(DIMENSIONS)):
            raise DimensionError(
                f"scores must be (raters, items, 2), got {arr.shape} for "
                f"{len(self.raters)} raters and {len(self.items)} items"
            )
        present = ~np.isnan(arr)
        values = arr[present]
        if np.any((values < SCORE_MIN) | (values > SCORE_MAX)):
            raise DimensionError(f"scores must lie in [{SCORE_MIN}, {SCORE_MAX}]")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)
        object.__setattr__(self, "raters", tuple(self.raters))
        object.__setattr__(self, "items", tuple(self.items))

    @classmethod
    def from_records(cls, records) -> "ScoreTable":
        """Build from (rater, item, dimension, score) tuples; order of first
        appearance fixes the rater and item order."""
        raters: list[str] = []
        items: list[str] = []
        seen_r: dict[str, int] = {}
        seen_i: dict[str, int] = {}
        cells: list[tuple[int, int, int, float]] = []
        for rater, item, dim, score in records:
            if dim not in DIMENSIONS:
                raise DimensionError(f"dimension must be one of {DIMENSIONS}, got {dim!r}")
            if rater not in seen_r:
                seen_r[rater] = len(raters)
                raters.append(rater)
            if item not in seen_i:
                seen_i[item] = len(items)
                items.append(item)
            cells.append((seen_r[rater], seen_i[item], DIMENSIONS.index(dim), float(score)))
        scores = np.full((len(raters), len(items), len(DIMENSIONS)), np.nan)
        for r, i, d, s in cells:
            scores[r, i, d] = s
        return cls(tuple(raters), tuple(items), scores)


@dataclass(frozen=True)
class NormalizedTable:
    """Z-scored (or rescaled) values in the same (R, I, 2) layout."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    values: np.ndarray
    degenerate: np.ndarray  # (R, 2) bool: rater-dimension had no spread


@dataclass(frozen=True)
class MosResult:
    items: tuple[str, ...]
    m_content: np.ndarray  # (I,), NaN where the item had no valid scores
    m_depth: np.ndarray
    m: np.ndarray
    item_valid: np.ndarray  # (I,) bool
    rater_valid: np.ndarray  # (R,) bool
    excluded_raters: tuple[str, ...] = field(default=())

    @property
    def excluded_count(self) -> int:
        return len(self.excluded_raters)


def zscore_normalize(table: ScoreTable, population_sigma: bool = True) -> NormalizedTable:
    """Per rater and dimension: (score - mean) / sigma over that rater's scores.

    Sigma is the population standard deviation by default (sample with
    `population_sigma=False`). Rater-dimensions with fewer than two scores or
    zero spread are flagged degenerate and their values set to NaN.
    """
    scores = table.scores
    n_raters = len(table.raters)
    z = np.full_like(scores, np.nan)
    degenerate = np.zeros((n_raters, len(DIMENSIONS)), dtype=bool)
    ddof = 0 if population_sigma else 1
    for r in range(n_raters):
        for d in range(len(DIMENSIONS)):
            vals = scores[r, :, d]
            present = ~np.isnan(vals)
            count = int(present.sum())
            if count < 2:
                degenerate[r, d] = count > 0
                continue
            mu = vals[present].mean()
            sigma = vals[present].std(ddof=ddof)
            if sigma == 0.0:
                degenerate[r, d] = True
                continue
            z[r, present, d] = (vals[present] - mu) / sigma
    return NormalizedTable(table.raters, table.items, z, degenerate)


def rescale_scores(normalized: NormalizedTable) -> NormalizedTable:
    """Map z-scores onto [1, 100] linearly, per dimension over the whole table."""
    z = normalized.values
    out = np.full_like(z, np.nan)
    for d in range(len(DIMENSIONS)):
        vals = z[:, :, d]
        present = ~np.isnan(vals)
        if not present.any():
            continue
        lo = vals[present].min()
        hi = vals[present].max()
        if hi == lo:
            raise UndefinedStatisticError(
                f"all {DIMENSIONS[d]} z-scores are equal; range mapping undefined"
            )
        # normalized position first so the extrema land exactly on 1 and 100
        t = (vals[present] - lo) / (hi - lo)
        out[:, :, d][present] = t * (RESCALE_HI - RESCALE_LO) + RESCALE_LO
    return NormalizedTable(normalized.raters, normalized.items, out, normalized.degenerate)


def aggregate_mos(
    rescaled: NormalizedTable,
    rater_valid: np.ndarray | None = None,
    excluded_raters: tuple[str, ...] = (),
) -> MosResult:
    """Per-item means over valid raters; the final score averages the two
    dimensions. Items without a valid score in both dimensions are flagged
    invalid and carry NaN."""
    vals = rescaled.values
    n_raters, n_items, _ = vals.shape
    if rater_valid is None:
        rater_valid = np.ones(n_raters, dtype=bool)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # empty-slice means
        m_c = np.nanmean(vals[rater_valid, :, 0], axis=0) if rater_valid.any() else np.full(n_items, np.nan)
        m_d = np.nanmean(vals[rater_valid, :, 1], axis=0) if rater_valid.any() else np.full(n_items, np.nan)
    item_valid = ~(np.isnan(m_c) | np.isnan(m_d))
    m = (m_c + m_d) / 2.0
    return MosResult(
        items=rescaled.items,
        m_content=m_c,
        m_depth=m_d,
        m=m,
        item_valid=item_valid,
        rater_valid=np.array(rater_valid, copy=True),
        excluded_raters=tuple(excluded_raters),
    )


def filter_raters(
    table: ScoreTable, outlier_rate_cap: float = 0.05
) -> tuple[ScoreTable, tuple[str, ...]]:
    """Drop raters whose outlier rate exceeds the cap.

    A score is an outlier when it falls outside mean +- 1.96 sigma of that
    item-dimension's cross-rater distribution (population sigma). With fewer
    than three raters screening is skipped with a warning.
    """
    scores = table.scores
    n_raters = len(table.raters)
    if n_raters < 3:
        warnings.warn("fewer than 3 raters; outlier screening skipped", stacklevel=2)
        return table, ()
    outlier = np.zeros_like(scores, dtype=bool)
    for i in range(len(table.items)):
        for d in range(len(DIMENSIONS)):
            vals = scores[:, i, d]
            present = ~np.isnan(vals)
            if present.sum() < 2:
                continue
            mu = vals[present].mean()
            sigma = vals[present].std(ddof=0)
            outlier[present, i, d] = np.abs(vals[present] - mu) > OUTLIER_Z * sigma
    present_counts = (~np.isnan(scores)).reshape(n_raters, -1).sum(axis=1)
    outlier_counts = outlier.reshape(n_raters, -1).sum(axis=1)
    with np.errstate(invalid="ignore"):
        rates = np.where(present_counts > 0, outlier_counts / np.maximum(present_counts, 1), 0.0)
    keep = rates <= outlier_rate_cap
    if keep.all():
        return table, ()
    excluded = tuple(r for r, k in zip(table.raters, keep) if not k)
    kept_raters = tuple(r for r, k in zip(table.raters, keep) if k)
    return ScoreTable(kept_raters, table.items, scores[keep]), excluded


def run_mos_pipeline(
    table: ScoreTable,
    outlier_rate_cap: float = 0.05,
    population_sigma: bool = True,
    screen: bool = True,
) -> MosResult:
    """Screening, normalization, rescaling, and aggregation in one call."""
    excluded: tuple[str, ...] = ()
    if screen:
        table, excluded = filter_raters(table, outlier_rate_cap)
    normalized = zscore_normalize(table, population_sigma=population_sigma)
    rescaled = rescale_scores(normalized)
    return aggregate_mos(rescaled, excluded_raters=excluded)


@dataclass(frozen=True)
class SelectionRecord:
    item: str
    source: str
    score: float
    retained: bool


def select_depth_maps(
    candidates: dict[str, list[tuple[str, float]]],
    threshold: float = RETAIN_THRESHOLD,
) -> list[SelectionRecord]:
    """Per item: keep the best-scoring candidate iff it reaches the threshold.

    Ties go to the smallest source id. Items whose best score falls below the
    threshold are marked not retained.
    """
    out = []
    for item, cands in candidates.items():
        if not cands:
            raise DimensionError(f"item {item!r} has no candidates")
        best_source, best_score = cands[0]
        for source, score in cands[1:]:
            if score > best_score or (score == best_score and source < best_source):
                best_source, best_score = source, score
        out.append(
            SelectionRecord(item, best_source, float(best_score), bool(best_score >= threshold))
        )
    return out


def read_score_csv(path) -> ScoreTable:
    """Read "rater,item,dimension,score" rows (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"rater", "item", "dimension", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DimensionError(f"{path}: expected header with columns {sorted(required)}")
        records = [(row["rater"], row["item"], row["dimension"], float(row["score"])) for row in reader]
    return ScoreTable.from_records(records)


def read_candidate_csv(path) -> dict[str, list[tuple[str, float]]]:
    """Read "item,source,score" rows (header required), preserving item order."""
    out: dict[str, list[tuple[str, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"item", "source", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DimensionError(f"{path}: expected header with columns {sorted(required)}")
        for row in reader:
            out.setdefault(row["item"], []).append((row["source"], float(row["score"])))
    return out


def write_mos_csv(result: MosResult, path) -> None:
    """Write "item,m_content,m_depth,m" for every valid item."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", "m_content", "m_depth", "m"])
        for idx, item in enumerate(result.items):
            if result.item_valid[idx]:
                writer.writerow(
                    [
                        item,
                        f"{result.m_content[idx]:.17g}",
                        f"{result.m_depth[idx]:.17g}",
                        f"{result.m[idx]:.17g}",
                    ]
                )


def write_selection_csv(records: list[SelectionRecord], path) -> None:
    """Write "item,source,score,retained" for every item."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", "source", "score", "retained"])
        for rec in records:
            writer.writerow([rec.item, rec.source, f"{rec.score:.17g}", int(rec.retained)])
