"""Latent variable scores.

Interval data admits direct scores (standardized weighted composites).
Ordinal data only pins each subject's composite to an interval bounded by
the weighted thresholds of the chosen categories; a category on the latent
scale is then assigned by the mode, median, or mean of a standard normal
restricted to that interval.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .distributions import truncated_normal_mean, truncated_normal_median
from .errors import DataError
from .model import DataMatrix, PathModel
from .polychoric import THRESHOLD_BOUND, ThresholdSet

__all__ = [
    "LatentThresholds",
    "direct_scores",
    "raw_scale_scores",
    "latent_thresholds",
    "predict_categories",
    "concordance_table",
]

RULES = ("mode", "median", "mean")

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentThresholds:
    """Aggregated cut points per latent variable.

    The interior cut points are the weighted (standardizing-weight) sums of
    the indicator cut points; the outer boundaries are fixed at -4 and +4.
    ``sets(j)`` tiles the latent axis into the homogeneous-response
    intervals A_i = (a_{i-1}, a_i].
    """

    cuts: tuple[np.ndarray, ...]
    category_counts: tuple[int, ...]

    def padded(self, j: int) -> np.ndarray:
        return np.concatenate([[-THRESHOLD_BOUND], self.cuts[j], [THRESHOLD_BOUND]])


def direct_scores(data: DataMatrix, standardizing_weights: np.ndarray) -> np.ndarray:
    """Composite scores for interval data: standardized indicators times SW.

    With weights converged on this dataset's correlation matrix the score
    columns have mean 0 and unit sample variance.
    """
    x = data.values
    centered = x - x.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        j = int(np.argmin(sd))
        raise DataError(f"zero-variance indicator '{data.columns[j]}'")
    return (centered / sd) @ standardizing_weights


def raw_scale_scores(data: DataMatrix, raw_weights: np.ndarray) -> np.ndarray:
    """Weighted averages of the raw indicator values (weights rescaled to sum 1).

    For ordinal codes 1..I and nonnegative weights the result stays on the
    original category scale, which is what the concordance report rounds.
    """
    v = raw_weights / raw_weights.sum(axis=0)
    return data.values @ v


def latent_thresholds(
    threshold_sets: list[ThresholdSet], standardizing_weights: np.ndarray, model: PathModel
) -> LatentThresholds:
    """Aggregate indicator thresholds into per-latent thresholds.

    All indicators of a block must share one category count; mixed counts
    make the homogeneous-response sets undefined and raise DataError.
    """
    if len(threshold_sets) != model.n_indicators:
        raise DataError("one ThresholdSet per indicator is required")
    cuts = []
    counts = []
    for j, latent in enumerate(model.latent_names):
        block = model.block_slice(j)
        block_sets = threshold_sets[block]
        cats = {ts.category_count for ts in block_sets}
        if len(cats) != 1:
            raise DataError(
                f"block '{latent}' has heterogeneous category counts {sorted(cats)}; "
                "a common number of categories per block is required"
            )
        w = standardizing_weights[block, j]
        stacked = np.vstack([ts.cuts for ts in block_sets])
        cuts.append(w @ stacked)
        counts.append(cats.pop())
    return LatentThresholds(cuts=tuple(cuts), category_counts=tuple(counts))


def _subject_intervals(codes, padded_thresholds, block_weights, latent):
    """Per-subject interval endpoints (alpha, beta] on the latent scale."""
    lower = np.zeros(codes.shape[0])
    upper = np.zeros(codes.shape[0])
    for h, w in enumerate(block_weights):
        lower += w * np.take(padded_thresholds[h], codes[:, h] - 1)
        upper += w * np.take(padded_thresholds[h], codes[:, h])
    swapped = lower > upper
    if np.any(swapped):
        # Possible only with negative weights after orientation correction.
        logger.warning(
            "block '%s': %d subject interval(s) reversed by negative weights; endpoints swapped",
            latent,
            int(swapped.sum()),
        )
        lower[swapped], upper[swapped] = upper[swapped].copy(), lower[swapped].copy()
    return lower, upper


def _overlap_probabilities(alpha, beta, padded_cuts):
    """P(C intersect A_i) for every homogeneous set A_i.

    The first and last sets are extended to -inf/+inf so the sets tile the
    whole axis: the overlaps then sum exactly to P(C) even when weighted
    endpoints fall outside [-4, 4].
    """
    lower_bounds = np.concatenate([[-np.inf], padded_cuts[1:-1]])
    upper_bounds = np.concatenate([padded_cuts[1:-1], [np.inf]])
    hi = ndtr(np.minimum(beta[:, None], upper_bounds[None, :]))
    lo = ndtr(np.maximum(alpha[:, None], lower_bounds[None, :]))
    return np.clip(hi - lo, 0.0, None)


def _bin_statistic(stat, interior_cuts):
    # A_i = (a_{i-1}, a_i]: first interval takes everything <= a_1, the
    # last everything above a_{I-1}.
    return np.searchsorted(interior_cuts, stat, side="left") + 1


def predict_categories(
    data: DataMatrix,
    lt: LatentThresholds,
    threshold_sets: list[ThresholdSet],
    standardizing_weights: np.ndarray,
    model: PathModel,
    rule: str = "mode",
) -> np.ndarray:
    """Assign a latent category to every subject and latent variable.

    rule
        "mode":   the homogeneous set with the largest probability overlap
                  with the subject's interval (ties go to the lower
                  category);
        "median": the set containing the median of the standard normal
                  restricted to the subject's interval;
        "mean":   the same with the truncated mean.
    """
    if rule not in RULES:
        raise DataError(f"unknown prediction rule '{rule}'; expected one of {RULES}")
    if not data.all_ordinal:
        raise DataError("category prediction requires ordinal data")
    if data.columns != model.indicator_names:
        raise DataError("data columns do not match the model's indicator order")
    n = data.n_rows
    out = np.empty((n, model.n_latents), dtype=int)
    for j, latent in enumerate(model.latent_names):
        block = model.block_slice(j)
        block_sets = threshold_sets[block]
        codes = np.column_stack(
            [block_sets[h].map_codes(data.codes(block.start + h)) for h in range(len(block_sets))]
        )
        padded = [ts.padded() for ts in block_sets]
        w = standardizing_weights[block, j]
        alpha, beta = _subject_intervals(codes, padded, w, latent)
        if rule == "mode":
            out[:, j] = np.argmax(_overlap_probabilities(alpha, beta, lt.padded(j)), axis=1) + 1
        else:
            try:
                if rule == "median":
                    stat = truncated_normal_median(alpha, beta)
                else:
                    stat = truncated_normal_mean(alpha, beta)
            except ValueError as exc:
                raise DataError(f"latent '{latent}': {exc}") from None
            out[:, j] = _bin_statistic(stat, lt.cuts[j])
    return out


def concordance_table(predicted: np.ndarray, reference: np.ndarray):
    """Percent agreement per latent: exact and within one category."""
    predicted = np.asarray(predicted)
    reference = np.asarray(reference)
    if predicted.shape != reference.shape:
        raise DataError("concordance inputs must have identical shapes")
    diff = np.abs(predicted - reference)
    return {
        "exact": 100.0 * (diff == 0).mean(axis=0),
        "within_one": 100.0 * (diff <= 1).mean(axis=0),
    }
