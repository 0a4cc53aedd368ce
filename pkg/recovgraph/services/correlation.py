import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from recovgraph.core.config import DEFAULT_RIDGE_LADDER
from recovgraph.core.errors import NumericalError
from recovgraph.models.schemas import CorrelationStructure, SessionSeries

logger = logging.getLogger(__name__)

INVERSE_TOLERANCE = 1e-6
CLIP_TOLERANCE = 1e-9


def pearson_matrix(series: SessionSeries) -> np.ndarray:
    """Inter-column correlation of a standardised series, sum_t r_s r_s' / (q - 1)."""
    x = series.values
    pearson = x.T @ x / (series.q - 1)
    pearson = (pearson + pearson.T) / 2
    np.fill_diagonal(pearson, 1.0)
    return np.clip(pearson, -1.0, 1.0)


def _cholesky_inverse(matrix: np.ndarray) -> np.ndarray:
    factor = linalg.cho_factor(matrix, lower=True, check_finite=False)
    inverse = linalg.cho_solve(factor, np.eye(matrix.shape[0]), check_finite=False)
    return (inverse + inverse.T) / 2


def _residual(inverse: np.ndarray, matrix: np.ndarray) -> float:
    return float(np.max(np.abs(inverse @ matrix - np.eye(matrix.shape[0]))))


def precision_matrix(
    pearson: np.ndarray,
    ridge_ladder: Sequence[float] = DEFAULT_RIDGE_LADDER,
    cond_limit: float = 1e12,
) -> Tuple[np.ndarray, float]:
    """Invert the correlation matrix, escalating a ridge until the inverse is usable.

    Returns the precision matrix and the ridge that was needed (0.0 for a clean
    inversion).
    """
    pearson = np.array(pearson, dtype=float)
    np.fill_diagonal(pearson, 1.0)
    identity = np.eye(pearson.shape[0])

    for lam in [0.0, *ridge_ladder]:
        shifted = pearson + lam * identity
        if np.linalg.cond(shifted) > cond_limit:
            continue
        try:
            theta = _cholesky_inverse(shifted)
        except np.linalg.LinAlgError:
            continue
        if _residual(theta, shifted) < INVERSE_TOLERANCE:
            if lam > 0:
                logger.warning("Correlation matrix near-singular; inverted with ridge %.0e", lam)
            return theta, lam

    raise NumericalError(
        f"correlation matrix could not be inverted even with ridge {ridge_ladder[-1]:.0e}"
    )


def partial_correlation(precision: np.ndarray) -> np.ndarray:
    precision = np.asarray(precision, dtype=float)
    diag = np.diag(precision)
    if np.any(diag <= 0):
        raise NumericalError("precision matrix has a non-positive diagonal entry")

    partial = -precision / np.sqrt(np.outer(diag, diag))
    np.fill_diagonal(partial, 1.0)

    excursion = np.max(np.abs(partial)) - 1.0
    if excursion > CLIP_TOLERANCE:
        raise NumericalError(f"partial correlation exceeds 1 by {excursion:.3e}")
    return np.clip(partial, -1.0, 1.0)


def correlation_structure(
    series: SessionSeries,
    ridge_ladder: Sequence[float] = DEFAULT_RIDGE_LADDER,
    cond_limit: float = 1e12,
) -> CorrelationStructure:
    pearson = pearson_matrix(series)
    precision, ridge = precision_matrix(pearson, ridge_ladder, cond_limit)
    return CorrelationStructure(
        pearson=pearson,
        precision=precision,
        partial=partial_correlation(precision),
        ridge_applied=ridge,
    )
