"""Marginal thresholds and the pairwise polychoric correlation matrix.

Each ordinal indicator is modeled as a discretized standard normal
variable: observed category i corresponds to the latent value falling
between consecutive thresholds. Thresholds are estimated from marginal
cumulative frequencies, then each pairwise correlation is obtained by
maximizing the two-way table's likelihood over the correlation alone
(two-step estimation: thresholds stay fixed).

Stored thresholds are clipped to [-4, 4]; inside the pair likelihood the
outermost category boundaries are open (+/-inf).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from .distributions import _bvn_cdf_finite, bvn_cdf, std_normal_quantile
from .errors import ConvergenceError, DataError
from .model import DataMatrix

__all__ = [
    "RHO_BOUND",
    "THRESHOLD_BOUND",
    "ThresholdSet",
    "ContingencyTable",
    "CorrelationMatrix",
    "PairResult",
    "estimate_thresholds",
    "cell_probabilities",
    "polychoric_pair",
    "polychoric_matrix",
    "pearson_matrix",
    "nearest_pd_repair",
    "crosstab",
]

RHO_BOUND = 0.999
THRESHOLD_BOUND = 4.0
_PD_TOL = 1e-10
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class ThresholdSet:
    """Estimated thresholds of one ordinal variable on the standard-normal scale.

    ``cuts`` holds the I_k - 1 interior cut points, strictly increasing and
    clipped to [-4, 4]. ``categories`` maps each internal category index
    (1-based) back to the original observed code; unused codes are collapsed
    away so the internal codes are always contiguous.
    """

    cuts: np.ndarray
    categories: tuple[int, ...]

    @property
    def category_count(self) -> int:
        return len(self.categories)

    def padded(self) -> np.ndarray:
        """Cut points with the clipped boundaries -4 and +4 attached."""
        return np.concatenate([[-THRESHOLD_BOUND], self.cuts, [THRESHOLD_BOUND]])

    def open_bounds(self) -> np.ndarray:
        """Cut points with open boundaries, as used inside the likelihood."""
        return np.concatenate([[-np.inf], self.cuts, [np.inf]])

    def map_codes(self, codes: np.ndarray) -> np.ndarray:
        """Translate original codes to contiguous internal codes 1..I_k."""
        lookup = {code: i + 1 for i, code in enumerate(self.categories)}
        try:
            return np.array([lookup[int(c)] for c in codes])
        except KeyError as exc:
            raise DataError(f"category code {exc.args[0]} was not seen at threshold estimation") from None


@dataclass(frozen=True)
class ContingencyTable:
    """Two-way count table with zero-cell smoothing.

    ``epsilon`` replaces zero counts only; observed counts are never
    altered. ``epsilon=0`` disables the substitution entirely, in which
    case empty cells simply contribute nothing to the pair likelihood.
    """

    counts: np.ndarray
    epsilon: float = 0.5

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2:
            raise DataError("contingency table must be 2-D")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise DataError("contingency table counts must be nonnegative integers")
        if self.epsilon < 0:
            raise DataError("smoothing epsilon must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def smoothed(self) -> np.ndarray:
        return np.where(self.counts == 0, self.epsilon, self.counts)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric correlation matrix with provenance and PD bookkeeping."""

    values: np.ndarray
    kind: str  # "pearson" | "polychoric"
    pd_status: str  # "positive-definite" | "repaired" | "failed"

    @classmethod
    def build(cls, values, kind, repair=False) -> "CorrelationMatrix":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError("correlation matrix must be square")
        if np.max(np.abs(values - values.T)) > 1e-12:
            raise DataError("correlation matrix must be symmetric")
        if np.max(np.abs(np.diag(values) - 1.0)) > 1e-12:
            raise DataError("correlation matrix must have a unit diagonal")
        values = 0.5 * (values + values.T)
        np.fill_diagonal(values, 1.0)
        if np.linalg.eigvalsh(values).min() > _PD_TOL:
            return cls(values=values, kind=kind, pd_status="positive-definite")
        if repair:
            return nearest_pd_repair(cls(values=values, kind=kind, pd_status="failed"))
        return cls(values=values, kind=kind, pd_status="failed")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values).min())


@dataclass(frozen=True)
class PairResult:
    rho: float
    loglik: float


def estimate_thresholds(column, max_categories=None) -> ThresholdSet:
    """Estimate one variable's thresholds from its marginal frequencies.

    Each interior threshold is the standard-normal quantile of the
    cumulative relative frequency up to that category; values beyond +/-4
    are clipped to +/-4. Categories never chosen by any respondent are
    collapsed away (the original codes are retained in ``categories``).

    Raises
    ------
    DataError
        On an empty column, invalid codes, or a single observed category.
    """
    column = np.asarray(column)
    if column.size == 0:
        raise DataError("cannot estimate thresholds from an empty column")
    codes = column.astype(float)
    if np.any(codes != np.round(codes)) or np.any(codes < 1):
        raise DataError("ordinal codes must be integers >= 1")
    codes = codes.astype(int)
    if max_categories is not None and np.any(codes > int(max_categories)):
        raise DataError(f"ordinal code exceeds declared maximum {max_categories}")
    observed, counts = np.unique(codes, return_counts=True)
    if observed.size < 2:
        raise DataError("single observed category: no interior threshold estimable")
    cumulative = np.cumsum(counts) / codes.size
    cuts = std_normal_quantile(cumulative[:-1])
    cuts = np.clip(np.atleast_1d(cuts), -THRESHOLD_BOUND, THRESHOLD_BOUND)
    if np.any(np.diff(cuts) <= 0):
        raise DataError("thresholds not strictly increasing after clipping at +/-4")
    return ThresholdSet(cuts=cuts, categories=tuple(int(c) for c in observed))


def cell_probabilities(thresholds_h: ThresholdSet, thresholds_k: ThresholdSet, rho: float) -> np.ndarray:
    """Cell probabilities of the discretized bivariate normal.

    Entry (i, j) is the probability of observing internal categories
    (i+1, j+1); the cells sum to 1 for any admissible rho.
    """
    bh = thresholds_h.open_bounds()
    bk = thresholds_k.open_bounds()
    grid_h, grid_k = np.meshgrid(bh, bk, indexing="ij")
    lower_cdf = bvn_cdf(grid_h, grid_k, rho)
    return np.diff(np.diff(lower_cdf, axis=0), axis=1)


def polychoric_pair(
    table: ContingencyTable,
    thresholds_h: ThresholdSet,
    thresholds_k: ThresholdSet,
    *,
    xatol: float = 1e-8,
) -> PairResult:
    """Maximize the table loglikelihood over the correlation alone.

    The search runs over [-0.999, 0.999]: a coarse scan locates the basin,
    a bounded Brent refinement polishes it, and the clip bounds themselves
    are kept as candidates so perfectly concordant tables return exactly
    the bound.

    Raises
    ------
    DataError
        If the table is degenerate (all mass in one row or column) or its
        shape disagrees with the threshold sets.
    ConvergenceError
        If the 1-D optimizer reports failure; carries the best rho found.
    """
    counts = table.counts
    if counts.shape != (thresholds_h.category_count, thresholds_k.category_count):
        raise DataError(
            f"table shape {counts.shape} does not match threshold categories "
            f"({thresholds_h.category_count}, {thresholds_k.category_count})"
        )
    if np.count_nonzero(counts.sum(axis=1)) < 2 or np.count_nonzero(counts.sum(axis=0)) < 2:
        raise DataError("degenerate table: all mass in one row or column")
    smoothed = table.smoothed()

    # Boundary corners of the CDF grid involve +/-inf limits and do not
    # depend on rho; precompute them and only refresh the interior corners
    # inside the likelihood.
    cuts_h = thresholds_h.cuts
    cuts_k = thresholds_k.cuts
    corner_cdf = np.zeros((cuts_h.size + 2, cuts_k.size + 2))
    corner_cdf[-1, 1:-1] = ndtr(cuts_k)
    corner_cdf[1:-1, -1] = ndtr(cuts_h)
    corner_cdf[-1, -1] = 1.0
    grid_h = np.repeat(cuts_h, cuts_k.size)
    grid_k = np.tile(cuts_k, cuts_h.size)

    def loglik(rho):
        corner_cdf[1:-1, 1:-1] = _bvn_cdf_finite(grid_h, grid_k, rho).reshape(
            cuts_h.size, cuts_k.size
        )
        probs = np.diff(np.diff(corner_cdf, axis=0), axis=1)
        return float(np.sum(smoothed * np.log(np.maximum(probs, _LOG_FLOOR))))

    scan = np.linspace(-RHO_BOUND, RHO_BOUND, 21)
    scan_ll = np.array([loglik(r) for r in scan])
    best = int(np.argmax(scan_ll))
    lo = scan[max(best - 1, 0)]
    hi = scan[min(best + 1, scan.size - 1)]
    result = minimize_scalar(
        lambda r: -loglik(r), bounds=(lo, hi), method="bounded", options={"xatol": xatol}
    )
    if not result.success:
        raise ConvergenceError(
            f"polychoric optimizer failed: {result.message}", best=float(result.x)
        )
    candidates = [(float(result.x), -float(result.fun))]
    for bound in (-RHO_BOUND, RHO_BOUND):
        if lo == bound or hi == bound:
            candidates.append((bound, loglik(bound)))
    rho, ll = max(candidates, key=lambda c: c[1])
    return PairResult(rho=rho, loglik=ll)


def crosstab(codes_h: np.ndarray, codes_k: np.ndarray, n_h: int, n_k: int) -> np.ndarray:
    """Count table of two contiguous 1-based code vectors."""
    counts = np.zeros((n_h, n_k))
    np.add.at(counts, (np.asarray(codes_h) - 1, np.asarray(codes_k) - 1), 1.0)
    return counts


def polychoric_matrix(
    data: DataMatrix,
    epsilon: float = 0.5,
    repair_pd: bool = False,
    max_workers: int | None = None,
):
    """Thresholds plus the full pairwise polychoric correlation matrix.

    Parameters
    ----------
    data : DataMatrix
        All columns must be ordinal.
    epsilon : float
        Smoothing value substituted for zero cells in each pair table.
    repair_pd : bool
        Project a non-positive-definite result to the nearest admissible
        matrix instead of flagging it as failed.
    max_workers : int, optional
        Solve the K(K-1)/2 pair problems in a thread pool of this size;
        results do not depend on scheduling.

    Returns
    -------
    (CorrelationMatrix, list[ThresholdSet])
    """
    if not data.all_ordinal:
        raise DataError("polychoric correlations require all columns to be ordinal")
    thresholds = []
    collapsed = []
    for j in range(data.n_cols):
        try:
            ts = estimate_thresholds(data.codes(j))
        except DataError as exc:
            raise DataError(f"column '{data.columns[j]}': {exc}") from None
        thresholds.append(ts)
        collapsed.append(ts.map_codes(data.codes(j)))

    def solve_pair(pair):
        h, k = pair
        counts = crosstab(
            collapsed[h], collapsed[k], thresholds[h].category_count, thresholds[k].category_count
        )
        try:
            fit = polychoric_pair(
                ContingencyTable(counts=counts, epsilon=epsilon), thresholds[h], thresholds[k]
            )
        except (DataError, ConvergenceError) as exc:
            raise type(exc)(
                f"pair ('{data.columns[h]}', '{data.columns[k]}'): {exc}"
            ) from None
        return h, k, fit.rho

    pairs = list(itertools.combinations(range(data.n_cols), 2))
    if max_workers is not None and max_workers > 1 and pairs:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            solved = list(pool.map(solve_pair, pairs))
    else:
        solved = [solve_pair(p) for p in pairs]

    values = np.eye(data.n_cols)
    for h, k, rho in solved:
        values[h, k] = values[k, h] = rho
    return CorrelationMatrix.build(values, kind="polychoric", repair=repair_pd), thresholds


def pearson_matrix(data) -> CorrelationMatrix:
    """Pearson correlation matrix of a DataMatrix or raw N x K array."""
    values = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    sd = values.std(axis=0, ddof=1)
    if np.any(sd == 0):
        j = int(np.argmin(sd))
        name = data.columns[j] if isinstance(data, DataMatrix) else str(j)
        raise DataError(f"zero-variance column '{name}'")
    corr = np.corrcoef(values, rowvar=False)
    if corr.ndim == 0:  # single column
        corr = np.array([[1.0]])
    return CorrelationMatrix.build(corr, kind="pearson")


def nearest_pd_repair(matrix, min_eigenvalue: float = 1e-8, max_iter: int = 200) -> CorrelationMatrix:
    """Project a symmetric matrix to a nearby unit-diagonal PD matrix.

    Alternates eigenvalue clipping with diagonal renormalization; if the
    iteration stalls, a final convex blend with the identity guarantees the
    eigenvalue floor. Already-compliant inputs are returned unchanged.
    """
    if isinstance(matrix, CorrelationMatrix):
        values, kind = matrix.values, matrix.kind
        if matrix.pd_status != "failed" and np.linalg.eigvalsh(values).min() >= min_eigenvalue:
            return matrix
    else:
        values, kind = np.asarray(matrix, dtype=float), "pearson"
    a = 0.5 * (values + values.T)
    for _ in range(max_iter):
        eigval, eigvec = np.linalg.eigh(a)
        if eigval.min() >= min_eigenvalue:
            break
        eigval = np.maximum(eigval, min_eigenvalue)
        a = (eigvec * eigval) @ eigvec.T
        a = 0.5 * (a + a.T)
        a = np.clip(a, -1.0, 1.0)
        np.fill_diagonal(a, 1.0)
    lam = np.linalg.eigvalsh(a).min()
    if lam < min_eigenvalue:
        delta = (min_eigenvalue - lam) / (1.0 - lam)
        a = (1.0 - delta) * a + delta * np.eye(a.shape[0])
        np.fill_diagonal(a, 1.0)
    return CorrelationMatrix(values=a, kind=kind, pd_status="repaired")
