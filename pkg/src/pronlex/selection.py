"""Greedy pronunciation selection by likelihood reduction.

A candidate earns its place by how much the fitted mixture objective drops
when it is removed; the drop is smoothed by beta, normalized per
utterance, and traded against a per-source prior cost alpha * log(delta).
Candidates are removed worst-first until every survivor scores
non-negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .em import PronModel, _em_core
from .evidence import EvidenceMatrix
from .lexicon import CandidateSet, Pronunciation, SelectionConfig, Source
from .validation import as_likelihood_matrix

__all__ = [
    "CandidateScore",
    "SelectionStep",
    "SelectionTrace",
    "likelihood_reduction",
    "score",
    "score_candidates",
    "greedy_select",
    "trace_lines",
    "GreedyPronunciationSelector",
]


@dataclass(frozen=True)
class CandidateScore:
    """Scoring diagnostics for one candidate against the full current set."""

    candidate: Pronunciation
    reduction: float
    per_utterance: float
    score: float


@dataclass(frozen=True)
class SelectionStep:
    """One removal: the candidate, its (negative) score, survivors left."""

    candidate: Pronunciation
    score: float
    remaining: int


@dataclass(frozen=True)
class SelectionTrace:
    """Full record of one word's greedy selection.

    ``final_scores`` parallels ``final_set.candidates``.  When the
    last-candidate guard fires, the survivor's score is the value from the
    last completed evaluation, or +inf if no evaluation ever ran
    (single-candidate input).
    """

    word: str
    steps: tuple[SelectionStep, ...]
    final_set: CandidateSet
    final_theta: PronModel
    final_scores: tuple[float, ...]
    guard_triggered: bool


def likelihood_reduction(ev, index: int, max_iters: int = 200, tol: float = 1e-10) -> float:
    """Drop in the EM optimum when candidate ``index`` is removed.

    Both fits start from uniform weights.  The raw difference is returned;
    scoring clamps it at zero.
    """
    tau = as_likelihood_matrix(ev)
    n = tau.shape[1]
    if n < 2:
        raise ValueError("likelihood reduction needs at least 2 candidates")
    if not (0 <= index < n):
        raise ValueError(f"candidate index {index} out of range for {n} candidates")
    full = _em_core(tau, np.full(n, 1.0 / n), max_iters, tol)[1]
    rest = np.delete(tau, index, axis=1)
    reduced = _em_core(rest, np.full(n - 1, 1.0 / (n - 1)), max_iters, tol)[1]
    return full - reduced


def score(reduction: float, m_w: int, source: Source, config: SelectionConfig) -> float:
    """Smoothed per-utterance reduction plus the per-source prior cost.

    The reduction is clamped below at zero so the score never falls under
    alpha * log(delta).
    """
    if m_w < 1:
        raise ValueError(f"m_w must be at least 1, got {m_w}")
    clamped = max(reduction, 0.0)
    return clamped / (m_w + config.beta[source]) + config.alpha[source] * math.log(config.delta)


def _check_sources(sources, candidates) -> list[Source]:
    if sources is None:
        return [c.source for c in candidates]
    sources = list(sources)
    if len(sources) != len(candidates):
        raise ValueError(f"{len(sources)} sources for {len(candidates)} candidates")
    for s in sources:
        if not isinstance(s, Source):
            raise ValueError(f"not a valid source: {s!r}")
    return sources


def _score_pass(tau, active, sources, keys, config, log_delta):
    """EM on the active set, then one score per active candidate."""
    m = tau.shape[0]
    n = len(active)
    theta, full_ll, _, _, _ = _em_core(
        tau[:, active], np.full(n, 1.0 / n), config.em_max_iters, config.em_tol
    )
    scores = []
    reductions = []
    for pos in range(n):
        rest = active[:pos] + active[pos + 1 :]
        reduced_ll = _em_core(
            tau[:, rest], np.full(n - 1, 1.0 / (n - 1)), config.em_max_iters, config.em_tol
        )[1]
        dl = max(full_ll - reduced_ll, 0.0)
        b = active[pos]
        q = dl / (m + config.beta[sources[b]]) + config.alpha[sources[b]] * log_delta
        reductions.append(dl)
        scores.append(q)
    return theta, scores, reductions


def _greedy(tau, sources, keys, config):
    """Greedy removal loop over column indices of ``tau``.

    Returns (steps, final_indices, final_theta, final_scores, guard) where
    steps are (column, score) pairs in removal order and ties at the
    minimum break toward the smallest key.
    """
    m, n = tau.shape
    log_delta = math.log(config.delta)
    active = list(range(n))
    steps: list[tuple[int, float]] = []
    last_scores: dict[int, float] = {}
    certified = False
    final_theta = None
    final_scores: list[float] = []

    while len(active) > 1:
        theta, scores, _ = _score_pass(tau, active, sources, keys, config, log_delta)
        last_scores = dict(zip(active, scores))
        worst = min(range(len(active)), key=lambda p: (scores[p], keys[active[p]]))
        if scores[worst] >= 0.0:
            certified = True
            final_theta = theta
            final_scores = scores
            break
        steps.append((active[worst], scores[worst]))
        del active[worst]

    guard = not certified
    if guard:
        final_theta = _em_core(
            tau[:, active], np.full(len(active), 1.0 / len(active)),
            config.em_max_iters, config.em_tol,
        )[0]
        final_scores = [last_scores.get(b, math.inf) for b in active]
    return steps, active, final_theta, final_scores, guard


def score_candidates(
    ev: EvidenceMatrix, sources: Sequence[Source] | None = None,
    config: SelectionConfig | None = None,
) -> list[CandidateScore]:
    """Score every candidate against the full set, without removing any."""
    if config is None:
        config = SelectionConfig()
    if ev.n_candidates < 2:
        raise ValueError("scoring needs at least 2 candidates")
    srcs = _check_sources(sources, ev.candidates)
    keys = [c.phones for c in ev.candidates]
    _, scores, reductions = _score_pass(
        ev.tau, list(range(ev.n_candidates)), srcs, keys, config, math.log(config.delta)
    )
    return [
        CandidateScore(cand, dl, dl / ev.m_w, q)
        for cand, dl, q in zip(ev.candidates, reductions, scores)
    ]


def greedy_select(
    ev: EvidenceMatrix, sources: Sequence[Source] | None = None,
    config: SelectionConfig | None = None,
) -> SelectionTrace:
    """Remove negative-scoring candidates worst-first until all survivors score >= 0.

    At least one candidate always survives: if removals reach a single
    candidate (or only one was given), selection stops there and the trace
    is flagged.  Score ties break toward the lexicographically smaller
    phone sequence.
    """
    if config is None:
        config = SelectionConfig()
    srcs = _check_sources(sources, ev.candidates)
    keys = [c.phones for c in ev.candidates]
    steps, final_idx, theta, final_scores, guard = _greedy(ev.tau, srcs, keys, config)

    trace_steps = []
    remaining = ev.n_candidates
    for col, q in steps:
        remaining -= 1
        trace_steps.append(SelectionStep(ev.candidates[col], q, remaining))
    final_set = CandidateSet(ev.word, tuple(ev.candidates[j] for j in final_idx))
    return SelectionTrace(
        ev.word,
        tuple(trace_steps),
        final_set,
        PronModel(ev.word, theta),
        tuple(final_scores),
        guard,
    )


def trace_lines(trace: SelectionTrace) -> list[str]:
    """Report lines: removals in order, then kept candidates with final scores."""
    lines = [
        f"{trace.word}\tREMOVED\t{s.score:.6f}\t{' '.join(s.candidate.phones)}"
        for s in trace.steps
    ]
    lines += [
        f"{trace.word}\tKEPT\t{q:.6f}\t{' '.join(c.phones)}"
        for c, q in zip(trace.final_set.candidates, trace.final_scores)
    ]
    return lines


class GreedyPronunciationSelector(BaseEstimator):
    """Column selector over an utterance-by-candidate likelihood matrix.

    Runs the greedy likelihood-reduction loop and exposes the survivors as
    a feature mask, so a fitted instance can ``transform`` matrices down to
    the selected candidates.

    Parameters
    ----------
    delta : float, default=1e-5
        Likelihood floor; also sets the prior cost scale log(delta).
    alpha_g2p, alpha_pd, alpha_ref : float
        Per-source pruning aggressiveness in [0, 1].
    beta_g2p, beta_pd, beta_ref : float
        Per-source smoothing added to the utterance count.
    max_iter : int, default=200
        EM update cap per fit.
    tol : float, default=1e-10
        EM convergence threshold.

    Attributes
    ----------
    support_ : bool ndarray of shape (n_candidates,)
        True for surviving columns.
    removal_order_ : tuple of int
        Column indices in removal order.
    removal_scores_ : tuple of float
        Scores the removed columns carried at removal time.
    weights_ : ndarray
        Mixture weights over the surviving columns.
    scores_ : tuple of float
        Final scores of the surviving columns.
    guard_ : bool
        True when selection stopped at the last remaining column.
    """

    def __init__(
        self,
        delta: float = 1e-5,
        alpha_g2p: float = 0.02,
        alpha_pd: float = 0.01,
        alpha_ref: float = 0.0,
        beta_g2p: float = 10.0,
        beta_pd: float = 10.0,
        beta_ref: float = 0.0,
        max_iter: int = 200,
        tol: float = 1e-10,
    ):
        self.delta = delta
        self.alpha_g2p = alpha_g2p
        self.alpha_pd = alpha_pd
        self.alpha_ref = alpha_ref
        self.beta_g2p = beta_g2p
        self.beta_pd = beta_pd
        self.beta_ref = beta_ref
        self.max_iter = max_iter
        self.tol = tol

    def _config(self) -> SelectionConfig:
        return SelectionConfig(
            delta=self.delta,
            alpha={
                Source.G2P: self.alpha_g2p,
                Source.PHONETIC_DECODING: self.alpha_pd,
                Source.REFERENCE: self.alpha_ref,
            },
            beta={
                Source.G2P: self.beta_g2p,
                Source.PHONETIC_DECODING: self.beta_pd,
                Source.REFERENCE: self.beta_ref,
            },
            em_max_iters=self.max_iter,
            em_tol=self.tol,
        )

    def fit(self, X, y=None, *, sources: Sequence[Source] | None = None):
        """Select columns of X; ``sources`` defaults to G2P for every column.

        Ties at the minimum score break toward the lower column index.
        """
        tau = as_likelihood_matrix(X)
        n = tau.shape[1]
        if sources is None:
            srcs = [Source.G2P] * n
        else:
            srcs = list(sources)
            if len(srcs) != n:
                raise ValueError(f"{len(srcs)} sources for {n} columns")
        steps, final_idx, theta, final_scores, guard = _greedy(
            tau, srcs, list(range(n)), self._config()
        )
        self.n_features_in_ = n
        support = np.zeros(n, dtype=bool)
        support[final_idx] = True
        self.support_ = support
        self.removal_order_ = tuple(col for col, _ in steps)
        self.removal_scores_ = tuple(q for _, q in steps)
        self.weights_ = theta
        self.scores_ = tuple(final_scores)
        self.guard_ = guard
        return self

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "support_")
        return np.flatnonzero(self.support_) if indices else self.support_

    def transform(self, X) -> np.ndarray:
        """Drop the removed columns from a matrix with matching width."""
        check_is_fitted(self, "support_")
        tau = as_likelihood_matrix(X)
        if tau.shape[1] != self.n_features_in_:
            raise ValueError(
                f"matrix has {tau.shape[1]} candidates, selector was fit with {self.n_features_in_}"
            )
        return tau[:, self.support_]

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, y, **fit_params).transform(X)
