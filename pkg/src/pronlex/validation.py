"""Input validation helpers shared by the numeric estimators."""
from __future__ import annotations

import numpy as np

__all__ = ["as_likelihood_matrix", "check_theta"]


def as_likelihood_matrix(X) -> np.ndarray:
    """Coerce to a 2-D float64 array of strictly positive, finite likelihoods.

    Accepts anything array-like as well as evidence objects exposing ``tau``.
    """
    if hasattr(X, "tau"):
        X = X.tau
    tau = np.asarray(X, dtype=np.float64)
    if tau.ndim != 2:
        raise ValueError(f"expected a 2-D utterance-by-candidate matrix, got shape {tau.shape}")
    if tau.shape[0] == 0 or tau.shape[1] == 0:
        raise ValueError(f"matrix must have at least one row and one column, got shape {tau.shape}")
    if not np.all(np.isfinite(tau)):
        raise ValueError("matrix entries must be finite")
    if np.any(tau <= 0.0):
        raise ValueError("matrix entries must be strictly positive (floor them first)")
    return tau


def check_theta(theta, n_candidates: int, require_positive: bool = False) -> np.ndarray:
    """Validate a mixture weight vector of the given length."""
    th = np.asarray(theta, dtype=np.float64)
    if th.shape != (n_candidates,):
        raise ValueError(f"expected weight vector of shape ({n_candidates},), got {th.shape}")
    if not np.all(np.isfinite(th)):
        raise ValueError("weights must be finite")
    if np.any(th < 0.0):
        raise ValueError("weights must be non-negative")
    if require_positive and np.any(th == 0.0):
        raise ValueError("initial weights must be strictly positive")
    if abs(float(th.sum()) - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {float(th.sum())!r}")
    return th
