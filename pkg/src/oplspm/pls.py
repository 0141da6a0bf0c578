"""The two PLS weight engines.

``score_based_pls_fit`` is the classical iterative algorithm on observed
data: composites are rebuilt from the indicators every pass, instrumental
variables follow the centroid scheme, and Mode A weight updates use
covariances with the instrumental variables.

``matrix_pls_fit`` runs the same iteration expressed purely in terms of
the indicator correlation matrix, so it applies unchanged when that matrix
is polychoric and no observation-level scores exist. On the Pearson
correlation matrix of an interval dataset the two engines produce the same
weights; indicators are standardized (unit sample variance) in the
score-based engine to match.

Within one pass the composites are built from the weights rescaled to sum
to one per block (the outer-approximation normalization), while the
reported weight matrix carries the block orientation sign; both engines
apply the same convention, which keeps them in lockstep even when an
orientation flips during the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError
from .model import DataMatrix, PathModel
from .polychoric import CorrelationMatrix

__all__ = [
    "INNER_SCHEME",
    "FitTrace",
    "WeightState",
    "MatrixPLSResult",
    "ScorePLSResult",
    "initial_weights",
    "matrix_pls_fit",
    "score_based_pls_fit",
]

# The only inner weighting scheme implemented: instrumental variables are
# sign-weighted sums of each composite's graph neighbors.
INNER_SCHEME = "centroid"

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 300


def _sign0(x):
    # sign with sign(0) := +1, so an exactly-zero correlation never stalls
    # the centroid scheme or zeroes out a block orientation.
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)


@dataclass
class FitTrace:
    """Per-iteration weight-change record of one fit."""

    deltas: list[float] = field(default_factory=list)
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.deltas)


@dataclass
class WeightState:
    """Converged weights: raw (block columns summing to +/-1) and standardizing."""

    raw: np.ndarray
    standardized: np.ndarray
    iterations: int
    delta: float


@dataclass
class MatrixPLSResult:
    weights: WeightState
    latent_correlations: np.ndarray
    trace: FitTrace


@dataclass
class ScorePLSResult:
    weights: WeightState
    scores: np.ndarray
    trace: FitTrace


def initial_weights(model: PathModel) -> np.ndarray:
    """Starting weights 1/p_j on each block, zero elsewhere."""
    chi = model.weight_pattern()
    return chi / chi.sum(axis=0)


def _matrix_step(sigma, t_sym, chi, weights, model):
    """One weight update from the current raw weights.

    Returns the updated raw weights together with the intermediate
    quantities, so invariants can be checked iteration by iteration.
    """
    v = weights / weights.sum(axis=0)
    scale = np.sqrt(np.diag(v.T @ sigma @ v))
    sw = v / scale
    p_yy = sw.T @ sigma @ sw
    upsilon = t_sym * _sign0(p_yy)
    sigma_xz = sigma @ sw @ upsilon
    c = chi * sigma_xz
    colsum = c.sum(axis=0)
    if np.any(colsum == 0.0):
        j = int(np.flatnonzero(colsum == 0.0)[0])
        raise ConvergenceError(
            f"singular block: zero weight-update column sum for latent "
            f"'{model.latent_names[j]}'"
        )
    sigma_xy = sigma @ sw
    orientation = _sign0(np.where(chi == 1.0, _sign0(sigma_xy), 0.0).sum(axis=0))
    new_weights = (c / colsum) * orientation
    internals = {
        "standardizing_weights": sw,
        "latent_correlations": p_yy,
        "upsilon": upsilon,
        "sigma_xz": sigma_xz,
        "sigma_xy": sigma_xy,
        "c": c,
        "orientation": orientation,
    }
    return new_weights, internals


def _as_sigma_values(sigma_xx, model) -> np.ndarray:
    if isinstance(sigma_xx, CorrelationMatrix):
        if sigma_xx.pd_status == "failed":
            raise DataError(
                "correlation matrix is not positive definite; re-run with PD repair enabled"
            )
        values = sigma_xx.values
    else:
        values = np.asarray(sigma_xx, dtype=float)
    k = model.n_indicators
    if values.shape != (k, k):
        raise DataError(f"correlation matrix is {values.shape}, model expects ({k}, {k})")
    return values


def matrix_pls_fit(
    sigma_xx,
    model: PathModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MatrixPLSResult:
    """Iterate the correlation-matrix form of the PLS algorithm.

    Parameters
    ----------
    sigma_xx : CorrelationMatrix or array
        Indicator correlation matrix (Pearson or polychoric), positive
        definite, in the model's indicator order.
    tol : float
        Frobenius-norm threshold on the raw-weight change.
    max_iter : int
        Iteration cap; exceeding it raises ConvergenceError with the trace.
    """
    sigma = _as_sigma_values(sigma_xx, model)
    chi = model.weight_pattern()
    t = model.inner_adjacency
    t_sym = t + t.T
    trace = FitTrace(tol=tol, max_iter=max_iter)
    weights = initial_weights(model)
    for _ in range(max_iter):
        new_weights, _ = _matrix_step(sigma, t_sym, chi, weights, model)
        delta = float(np.linalg.norm(new_weights - weights))
        trace.deltas.append(delta)
        weights = new_weights
        if delta < tol:
            trace.converged = True
            break
    if not trace.converged:
        raise ConvergenceError(
            f"matrix PLS did not converge in {max_iter} iterations "
            f"(last delta {trace.deltas[-1]:.3e})",
            trace=trace,
        )
    scale = np.sqrt(np.diag(weights.T @ sigma @ weights))
    sw = weights / scale
    p_yy = sw.T @ sigma @ sw
    state = WeightState(
        raw=weights, standardized=sw, iterations=trace.iterations, delta=trace.deltas[-1]
    )
    return MatrixPLSResult(weights=state, latent_correlations=p_yy, trace=trace)


def _standardize_columns(matrix, what):
    sd = matrix.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        raise DataError(f"zero-variance {what}")
    return matrix / sd


def score_based_pls_fit(
    data: DataMatrix,
    model: PathModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ScorePLSResult:
    """Classical score-based PLS on interval data.

    Indicators are centered and standardized, composite scores are rebuilt
    and re-standardized every pass (1/(N-1) variance estimator), and the
    returned scores come from the converged standardizing weights.
    """
    if not data.all_interval:
        raise DataError("score-based PLS requires interval data; use the matrix engine instead")
    if data.columns != model.indicator_names:
        raise DataError("data columns do not match the model's indicator order")
    x = data.values
    n = data.n_rows
    centered = x - x.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        j = int(np.argmin(sd))
        raise DataError(f"zero-variance indicator '{data.columns[j]}'")
    z = centered / sd

    chi = model.weight_pattern()
    t_sym = model.inner_adjacency + model.inner_adjacency.T
    trace = FitTrace(tol=tol, max_iter=max_iter)
    weights = initial_weights(model)
    scores = _standardize_columns(z @ (weights / weights.sum(axis=0)), "composite")
    for _ in range(max_iter):
        score_cov = scores.T @ scores / (n - 1)
        upsilon = t_sym * _sign0(score_cov)
        instrumental = scores @ upsilon
        c = chi * (z.T @ instrumental) / (n - 1)
        colsum = c.sum(axis=0)
        if np.any(colsum == 0.0):
            j = int(np.flatnonzero(colsum == 0.0)[0])
            raise ConvergenceError(
                f"singular block: zero weight-update column sum for latent "
                f"'{model.latent_names[j]}'"
            )
        sigma_xy = z.T @ scores / (n - 1)
        orientation = _sign0(np.where(chi == 1.0, _sign0(sigma_xy), 0.0).sum(axis=0))
        new_weights = (c / colsum) * orientation
        delta = float(np.linalg.norm(new_weights - weights))
        trace.deltas.append(delta)
        weights = new_weights
        if delta < tol:
            trace.converged = True
            break
        scores = _standardize_columns(z @ (weights / weights.sum(axis=0)), "composite")
    if not trace.converged:
        raise ConvergenceError(
            f"score-based PLS did not converge in {max_iter} iterations "
            f"(last delta {trace.deltas[-1]:.3e})",
            trace=trace,
        )
    composite = z @ weights
    sw = weights / composite.std(axis=0, ddof=1)
    state = WeightState(
        raw=weights, standardized=sw, iterations=trace.iterations, delta=trace.deltas[-1]
    )
    return ScorePLSResult(weights=state, scores=z @ sw, trace=trace)
