"""Mixture-weight estimation over pronunciation candidates.

Each utterance u of a word contributes acoustic likelihoods tau[u, b] for
every candidate b; the model is a mixture over candidates with weights
theta, fit to maximize sum_u log(sum_b tau[u, b] * theta[b]).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .validation import as_likelihood_matrix, check_theta

__all__ = ["PronModel", "EMResult", "log_likelihood", "run_em", "PronunciationModelEM"]


@dataclass(frozen=True)
class PronModel:
    """Mixture weights over one word's pronunciation candidates."""

    word: str
    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64)
        if th.ndim != 1:
            raise ValueError(f"theta must be a vector, got shape {th.shape}")
        if np.any(th < 0.0) or not np.all(np.isfinite(th)):
            raise ValueError("theta components must be finite and non-negative")
        if abs(float(th.sum()) - 1.0) > 1e-9:
            raise ValueError(f"theta must sum to 1, got {float(th.sum())!r}")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    def __len__(self):
        return len(self.theta)


@dataclass(frozen=True)
class EMResult:
    """Outcome of one EM run.

    ``history`` holds the objective after initialization and after each
    update, so ``history[-1] == log_likelihood`` and
    ``len(history) == iterations + 1``.
    """

    theta_star: PronModel
    log_likelihood: float
    iterations: int
    converged: bool
    history: tuple[float, ...]


def log_likelihood(ev, theta) -> float:
    """Objective of Eq. sum_u log(sum_b tau[u, b] * theta[b]).

    ``ev`` may be an evidence matrix or any array-like; ``theta`` a weight
    vector or PronModel of matching dimension.
    """
    tau = as_likelihood_matrix(ev)
    if isinstance(theta, PronModel):
        theta = theta.theta
    th = check_theta(theta, tau.shape[1])
    return float(np.log(tau @ th).sum())


def _em_core(tau: np.ndarray, theta: np.ndarray, max_iters: int, tol: float):
    ll = float(np.log(tau @ theta).sum())
    history = [ll]
    iterations = 0
    converged = False
    for _ in range(max_iters):
        lam = tau * theta
        lam /= lam.sum(axis=1, keepdims=True)
        theta = lam.sum(axis=0) / lam.sum()
        new_ll = float(np.log(tau @ theta).sum())
        iterations += 1
        history.append(new_ll)
        if abs(new_ll - ll) < tol:
            converged = True
            ll = new_ll
            break
        ll = new_ll
    return theta, ll, iterations, converged, tuple(history)


def run_em(ev, theta0=None, max_iters: int = 200, tol: float = 1e-10) -> EMResult:
    """Fit mixture weights by EM, starting from ``theta0`` (uniform if None).

    Stops once the objective improves by less than ``tol`` between
    consecutive iterations, or after ``max_iters`` updates.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    tau = as_likelihood_matrix(ev)
    n = tau.shape[1]
    if theta0 is None:
        th0 = np.full(n, 1.0 / n)
    else:
        if isinstance(theta0, PronModel):
            theta0 = theta0.theta
        th0 = check_theta(theta0, n, require_positive=True)
    theta, ll, iterations, converged, history = _em_core(tau, th0, max_iters, tol)
    word = getattr(ev, "word", "")
    return EMResult(PronModel(word, theta), ll, iterations, converged, history)


class PronunciationModelEM(BaseEstimator):
    """Estimator interface to the EM fit, one word's evidence per call.

    Parameters
    ----------
    max_iter : int, default=200
        Maximum number of EM updates.
    tol : float, default=1e-10
        Absolute objective-change threshold for convergence.

    Attributes
    ----------
    weights_ : ndarray of shape (n_candidates,)
        Fitted mixture weights.
    lower_bound_ : float
        Final value of the objective.
    n_iter_ : int
        Number of EM updates performed.
    converged_ : bool
        Whether the tolerance was reached before ``max_iter``.
    history_ : tuple of float
        Objective after initialization and after each update.
    """

    def __init__(self, max_iter: int = 200, tol: float = 1e-10):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        """Fit mixture weights to an utterance-by-candidate likelihood matrix."""
        result = run_em(X, max_iters=self.max_iter, tol=self.tol)
        self.n_features_in_ = len(result.theta_star)
        self.weights_ = result.theta_star.theta
        self.lower_bound_ = result.log_likelihood
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.history_ = result.history
        return self

    def score_samples(self, X) -> np.ndarray:
        """Per-utterance log density under the fitted weights."""
        check_is_fitted(self, "weights_")
        tau = as_likelihood_matrix(X)
        if tau.shape[1] != self.n_features_in_:
            raise ValueError(
                f"matrix has {tau.shape[1]} candidates, model was fit with {self.n_features_in_}"
            )
        return np.log(tau @ self.weights_)

    def score(self, X, y=None) -> float:
        """Mean per-utterance log density."""
        return float(self.score_samples(X).mean())

    def predict_proba(self, X) -> np.ndarray:
        """Per-utterance posterior over candidates under the fitted weights."""
        check_is_fitted(self, "weights_")
        tau = as_likelihood_matrix(X)
        if tau.shape[1] != self.n_features_in_:
            raise ValueError(
                f"matrix has {tau.shape[1]} candidates, model was fit with {self.n_features_in_}"
            )
        lam = tau * self.weights_
        return lam / lam.sum(axis=1, keepdims=True)
