"""Synthetic acoustic evidence and lexicon quality evaluation.

The generator draws, per utterance, a true pronunciation from the
ground-truth distribution, then scores every candidate with
exp(-confusability * edit_distance) under multiplicative log-normal
jitter, max-normalizes the row and floors it.  Large confusability gives
sharply separated rows; small values leave near neighbours blurred.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .evidence import EvidenceMatrix
from .lexicon import Lexicon, ParseError

__all__ = [
    "SimConfig",
    "WordEval",
    "EvalReport",
    "levenshtein",
    "simulate_evidence",
    "evaluate",
    "parse_sim_config",
    "report_lines",
    "format_report",
]


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance between two token sequences."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (tok_a != tok_b),
                )
            )
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class SimConfig:
    """Generator settings; ``utterances_per_word`` is global or per word."""

    confusability: float
    utterances_per_word: int | Mapping[str, int]
    noise: float
    seed: int
    delta: float = 1e-5

    def __post_init__(self):
        if not (math.isfinite(self.confusability) and self.confusability >= 0.0):
            raise ValueError(f"confusability must be finite and non-negative, got {self.confusability}")
        if not (math.isfinite(self.noise) and self.noise >= 0.0):
            raise ValueError(f"noise must be finite and non-negative, got {self.noise}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative int, got {self.seed!r}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if isinstance(self.utterances_per_word, int):
            if self.utterances_per_word < 1:
                raise ValueError("utterances_per_word must be at least 1")
        else:
            for word, n in self.utterances_per_word.items():
                if not isinstance(n, int) or n < 1:
                    raise ValueError(f"word {word!r}: utterance count must be a positive int")


def _word_rng(seed: int, word: str) -> np.random.Generator:
    # PCG64 keyed on (seed, first 8 bytes of sha256(word)) so each word has
    # its own reproducible stream regardless of processing order.
    digest = hashlib.sha256(word.encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "big")])


def _utterance_count(config: SimConfig, word: str) -> int:
    if isinstance(config.utterances_per_word, int):
        return config.utterances_per_word
    try:
        return config.utterances_per_word[word]
    except KeyError:
        raise ValueError(f"no utterance count configured for word {word!r}") from None


def simulate_evidence(
    truth: Lexicon, candidates: Lexicon, config: SimConfig
) -> dict[str, EvidenceMatrix]:
    """Generate floored evidence matrices for every ground-truth word.

    Every truth word needs probabilities, must appear in ``candidates``,
    and its pronunciations must be among that word's candidates.  Each row
    has maximum exactly 1 before flooring.
    """
    out = {}
    for word in sorted(truth.entries):
        truth_cs = truth.entries[word]
        if word not in truth.probabilities:
            raise ValueError(f"ground-truth word {word!r} has no probabilities")
        if word not in candidates:
            raise ValueError(f"ground-truth word {word!r} missing from the candidate lexicon")
        cands = candidates.entries[word].candidates
        known = {c.phones for c in cands}
        for cand in truth_cs.candidates:
            if cand.phones not in known:
                raise ValueError(
                    f"word {word!r}: ground-truth pronunciation "
                    f"{' '.join(cand.phones)!r} is not a candidate"
                )

        n_utts = _utterance_count(config, word)
        probs = np.asarray(truth.probabilities[word])
        cum = np.cumsum(probs)
        dist = np.array(
            [[levenshtein(c.phones, t.phones) for t in truth_cs.candidates] for c in cands],
            dtype=np.float64,
        )

        rng = _word_rng(config.seed, word)
        tau = np.empty((n_utts, len(cands)))
        for i in range(n_utts):
            u = rng.random()
            t_idx = min(int(np.searchsorted(cum, u, side="right")), len(probs) - 1)
            z = rng.standard_normal(len(cands))
            row = np.exp(-config.confusability * dist[:, t_idx] + config.noise * z)
            tau[i] = row / row.max()
        ids = tuple(f"{word}_{i:05d}" for i in range(n_utts))
        out[word] = EvidenceMatrix(word, ids, cands, tau, config.delta)
    return out


_SIM_KEYS = {"confusability", "utterances_per_word", "noise", "seed", "delta"}


def parse_sim_config(text: str) -> SimConfig:
    """Parse ``key=value`` lines with ``#`` comments into a SimConfig."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SIM_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = value

    missing = sorted(_SIM_KEYS - {"delta"} - set(values))
    if missing:
        raise ParseError(f"missing keys: {', '.join(missing)}")
    try:
        return SimConfig(
            confusability=float(values["confusability"]),
            utterances_per_word=int(values["utterances_per_word"]),
            noise=float(values["noise"]),
            seed=int(values["seed"]),
            delta=float(values.get("delta", "1e-5")),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


@dataclass(frozen=True)
class WordEval:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Per-word and micro-averaged set agreement against the ground truth."""

    per_word: dict[str, WordEval]
    precision: float
    recall: float
    f1: float
    avg_pronunciations: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(learned: Lexicon, truth: Lexicon) -> EvalReport:
    """Phone-sequence set precision/recall/F1 per word, micro-averaged overall."""
    diff = sorted(set(learned.entries) ^ set(truth.entries))
    if diff:
        shown = ", ".join(diff[:10])
        more = f" (+{len(diff) - 10} more)" if len(diff) > 10 else ""
        raise ValueError(f"vocabularies differ: {shown}{more}")

    per_word = {}
    hit_total = learned_total = truth_total = 0
    for word in sorted(truth.entries):
        learned_seqs = learned.entries[word].phone_sequences()
        truth_seqs = truth.entries[word].phone_sequences()
        hits = len(learned_seqs & truth_seqs)
        p = hits / len(learned_seqs)
        r = hits / len(truth_seqs)
        per_word[word] = WordEval(p, r, _f1(p, r))
        hit_total += hits
        learned_total += len(learned_seqs)
        truth_total += len(truth_seqs)

    if not per_word:
        raise ValueError("nothing to evaluate: both lexicons are empty")
    precision = hit_total / learned_total
    recall = hit_total / truth_total
    return EvalReport(
        per_word,
        precision,
        recall,
        _f1(precision, recall),
        learned_total / len(per_word),
    )


def report_lines(report: EvalReport) -> list[str]:
    """Machine-readable lines: ``word TAB precision TAB recall TAB f1``."""
    return [
        f"{word}\t{we.precision:.6f}\t{we.recall:.6f}\t{we.f1:.6f}"
        for word, we in sorted(report.per_word.items())
    ]


def format_report(report: EvalReport) -> str:
    """Human-readable table with a micro-average summary row."""
    width = max([len(w) for w in report.per_word] + [len("OVERALL")])
    header = f"{'word'.ljust(width)}  precision  recall     f1"
    rows = [
        f"{word.ljust(width)}  {we.precision:9.4f}  {we.recall:9.4f}  {we.f1:9.4f}"
        for word, we in sorted(report.per_word.items())
    ]
    summary = (
        f"{'OVERALL'.ljust(width)}  {report.precision:9.4f}  {report.recall:9.4f}  "
        f"{report.f1:9.4f}"
    )
    footer = f"average pronunciations per word: {report.avg_pronunciations:.4f}"
    return "\n".join([header, *rows, summary, footer])
