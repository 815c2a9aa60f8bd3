"""Reference selection methods: probability pruning, G2P one-best, brute force.

``brute_force_select`` re-runs the greedy loop with a deliberately
separate pure-Python EM (cross-checked against a grid search on
two-candidate sets) so the production path has an independent witness.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .em import run_em, PronModel
from .evidence import EvidenceMatrix
from .lexicon import CandidateSet, Lexicon, SelectionConfig, Source
from .selection import SelectionStep, SelectionTrace, _check_sources

__all__ = ["pp_select", "g2p_one_best", "brute_force_select", "BRUTE_FORCE_MAX_CANDIDATES"]

BRUTE_FORCE_MAX_CANDIDATES = 12


def pp_select(
    ev: EvidenceMatrix,
    threshold: float = 0.4,
    max_iters: int = 200,
    tol: float = 1e-10,
) -> CandidateSet:
    """Keep candidates whose max-normalized mixture weight reaches ``threshold``.

    One EM fit on the full set; the arg-max candidate always survives.
    Survivors keep their original order.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    theta = run_em(ev, max_iters=max_iters, tol=tol).theta_star.theta
    normalized = theta / theta.max()
    kept = [c for c, v in zip(ev.candidates, normalized) if v >= threshold]
    return CandidateSet(ev.word, tuple(kept))


def g2p_one_best(lexicon: Lexicon) -> Lexicon:
    """Keep each word's first G2P candidate; reference entries pass through.

    Phonetic-decoding candidates are dropped.  A word with neither a
    reference nor a G2P candidate is an error.  Probabilities do not carry
    over since the candidate sets change.
    """
    entries = {}
    for word, cs in lexicon.entries.items():
        kept = []
        took_g2p = False
        for cand in cs.candidates:
            if cand.source is Source.REFERENCE:
                kept.append(cand)
            elif cand.source is Source.G2P and not took_g2p:
                kept.append(cand)
                took_g2p = True
        if not kept:
            raise ValueError(f"word {word!r} has no G2P or reference candidate")
        entries[word] = CandidateSet(word, tuple(kept))
    return Lexicon(entries)


def _reference_em(rows: list[list[float]], cols: list[int], max_iters: int, tol: float):
    """Plain-Python EM over the given columns; returns (theta, objective, converged)."""
    n = len(cols)
    theta = [1.0 / n] * n

    def objective(th):
        total = 0.0
        for row in rows:
            total += math.log(sum(row[c] * t for c, t in zip(cols, th)))
        return total

    ll = objective(theta)
    converged = False
    for _ in range(max_iters):
        sums = [0.0] * n
        for row in rows:
            denom = sum(row[c] * t for c, t in zip(cols, theta))
            for j, c in enumerate(cols):
                sums[j] += row[c] * theta[j] / denom
        total = sum(sums)
        theta = [s / total for s in sums]
        new_ll = objective(theta)
        if abs(new_ll - ll) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll
    return theta, ll, converged


def _grid_max_two(rows: list[list[float]], cols: list[int], points: int = 1001) -> float:
    """Exhaustive objective maximum over a weight grid for two columns."""
    a = np.array([row[cols[0]] for row in rows])
    b = np.array([row[cols[1]] for row in rows])
    grid = np.linspace(0.0, 1.0, points)
    mix = np.log(np.outer(a, grid) + np.outer(b, 1.0 - grid)).sum(axis=0)
    return float(mix.max())


def _checked_em(rows, cols, max_iters, tol):
    """Reference EM objective, grid-verified on two-column sets.

    A converged fit must match the grid maximum; a fit stopped by the
    iteration cap may fall below it but can never beat it by more than the
    grid resolution error.
    """
    theta, ll, converged = _reference_em(rows, cols, max_iters, tol)
    if len(cols) == 2:
        grid = _grid_max_two(rows, cols)
        if ll > grid + 1e-4 or (converged and abs(ll - grid) > 1e-4):
            raise AssertionError(
                f"reference EM ({ll!r}) disagrees with grid search ({grid!r})"
            )
    return theta, ll


def brute_force_select(
    ev: EvidenceMatrix,
    sources: Sequence[Source] | None = None,
    config: SelectionConfig | None = None,
) -> SelectionTrace:
    """Greedy selection recomputed through the reference EM path.

    Independent witness for the production selector: must reproduce its
    removal order and final set exactly.  Capped at
    ``BRUTE_FORCE_MAX_CANDIDATES`` candidates.
    """
    if config is None:
        config = SelectionConfig()
    if ev.n_candidates > BRUTE_FORCE_MAX_CANDIDATES:
        raise ValueError(
            f"brute force supports at most {BRUTE_FORCE_MAX_CANDIDATES} candidates, "
            f"got {ev.n_candidates}"
        )
    srcs = _check_sources(sources, ev.candidates)
    rows = ev.tau.tolist()
    m = ev.m_w
    log_delta = math.log(config.delta)
    keys = [c.phones for c in ev.candidates]

    active = list(range(ev.n_candidates))
    steps: list[SelectionStep] = []
    last_scores: dict[int, float] = {}
    certified = False
    theta: list[float] = []
    final_scores: list[float] = []

    while len(active) > 1:
        theta, full_ll = _checked_em(rows, active, config.em_max_iters, config.em_tol)
        scores = []
        for pos in range(len(active)):
            rest = active[:pos] + active[pos + 1 :]
            reduced_ll = _checked_em(rows, rest, config.em_max_iters, config.em_tol)[1]
            dl = max(full_ll - reduced_ll, 0.0)
            b = active[pos]
            scores.append(
                dl / (m + config.beta[srcs[b]]) + config.alpha[srcs[b]] * log_delta
            )
        last_scores = dict(zip(active, scores))
        worst = min(range(len(active)), key=lambda p: (scores[p], keys[active[p]]))
        if scores[worst] >= 0.0:
            certified = True
            final_scores = scores
            break
        steps.append(
            SelectionStep(ev.candidates[active[worst]], scores[worst], len(active) - 1)
        )
        del active[worst]

    if not certified:
        theta = _checked_em(rows, active, config.em_max_iters, config.em_tol)[0]
        final_scores = [last_scores.get(b, math.inf) for b in active]

    final_set = CandidateSet(ev.word, tuple(ev.candidates[j] for j in active))
    return SelectionTrace(
        ev.word,
        tuple(steps),
        final_set,
        PronModel(ev.word, np.array(theta)),
        tuple(final_scores),
        not certified,
    )
