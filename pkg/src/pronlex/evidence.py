"""Per-utterance acoustic evidence and candidate aggregation.

Evidence arrives as lattice posteriors, one line per (utterance, word,
candidate); missing and zero cells are floored at delta so the mixture
objective stays finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .lexicon import CandidateSet, Lexicon, ParseError, Pronunciation, Source, _check_token

__all__ = [
    "EvidenceMatrix",
    "AlignmentCounts",
    "load_evidence",
    "serialize_evidence",
    "parse_alignment_counts",
    "average_posteriors",
    "prune_top_k",
    "filter_by_relative_frequency",
    "merge_candidates",
    "align_evidence",
]


@dataclass(frozen=True, eq=False)
class EvidenceMatrix:
    """Floored acoustic likelihoods for one word.

    Rows are utterances (sub-utterance occurrences count separately),
    columns are candidate pronunciations; entries live in [delta, 1].
    """

    word: str
    utterance_ids: tuple[str, ...]
    candidates: tuple[Pronunciation, ...]
    tau: np.ndarray
    delta: float = 1e-5

    def __post_init__(self):
        _check_token(self.word, "word")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        object.__setattr__(self, "utterance_ids", tuple(self.utterance_ids))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if len(set(self.utterance_ids)) != len(self.utterance_ids):
            raise ValueError(f"word {self.word!r}: utterance ids must be distinct")
        seqs = [c.phones for c in self.candidates]
        if len(set(seqs)) != len(seqs):
            raise ValueError(f"word {self.word!r}: duplicate candidate phone sequences")
        tau = np.asarray(self.tau, dtype=np.float64)
        expected = (len(self.utterance_ids), len(self.candidates))
        if tau.shape != expected:
            raise ValueError(f"word {self.word!r}: tau shape {tau.shape}, expected {expected}")
        if tau.shape[0] == 0 or tau.shape[1] == 0:
            raise ValueError(f"word {self.word!r}: evidence must have rows and columns")
        if not np.all(np.isfinite(tau)):
            raise ValueError(f"word {self.word!r}: tau entries must be finite")
        if np.any(tau > 1.0) or np.any(tau < 0.0):
            raise ValueError(f"word {self.word!r}: tau entries must lie in [0, 1]")
        tau = np.maximum(tau, self.delta)
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)

    @property
    def m_w(self) -> int:
        return len(self.utterance_ids)

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    def with_columns(self, indices: Sequence[int]) -> EvidenceMatrix:
        """New matrix keeping the given columns, in the given order."""
        idx = list(indices)
        return EvidenceMatrix(
            self.word,
            self.utterance_ids,
            tuple(self.candidates[j] for j in idx),
            self.tau[:, idx],
            self.delta,
        )


@dataclass(frozen=True)
class AlignmentCounts:
    """How often each decoded phone sequence aligned to a word."""

    word: str
    counts: Mapping[tuple[str, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        _check_token(self.word, "word")
        for seq, count in self.counts.items():
            for p in seq:
                _check_token(p, "phone")
            if not isinstance(count, int) or count < 0:
                raise ValueError(
                    f"word {self.word!r}: count for {' '.join(seq)!r} must be a non-negative int"
                )


def load_evidence(text: str, delta: float = 1e-5) -> dict[str, EvidenceMatrix]:
    """Parse evidence lines ``utterance_id TAB word TAB posterior TAB phone [phone ...]``.

    Rows follow first appearance of (word, utterance); columns follow first
    appearance of each candidate anywhere in the file.  Candidates are
    tagged as phonetic decoding; authoritative sources come from the
    lexicon via ``align_evidence``.
    """
    utts: dict[str, dict[str, int]] = {}
    cands: dict[str, dict[tuple[str, ...], int]] = {}
    cells: dict[str, dict[tuple[int, int], float]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", lineno)
        utt_id, word, post_field, phone_field = fields
        if not utt_id or not word:
            raise ParseError("empty utterance id or word", lineno)
        try:
            post = float(post_field)
        except ValueError:
            raise ParseError(f"bad posterior {post_field!r}", lineno) from None
        if not (0.0 <= post <= 1.0):
            raise ParseError(f"posterior {post} outside [0, 1]", lineno)
        phones = tuple(phone_field.split())
        if not phones:
            raise ParseError("empty phone sequence", lineno)

        u = utts.setdefault(word, {})
        c = cands.setdefault(word, {})
        ui = u.setdefault(utt_id, len(u))
        ci = c.setdefault(phones, len(c))
        word_cells = cells.setdefault(word, {})
        if (ui, ci) in word_cells:
            raise ParseError(
                f"duplicate evidence for utterance {utt_id!r}, word {word!r}, "
                f"pronunciation {' '.join(phones)!r}",
                lineno,
            )
        word_cells[(ui, ci)] = post

    out = {}
    for word in utts:
        m, b = len(utts[word]), len(cands[word])
        tau = np.full((m, b), delta)
        for (ui, ci), post in cells[word].items():
            tau[ui, ci] = post
        candidates = tuple(
            Pronunciation(seq, Source.PHONETIC_DECODING) for seq in cands[word]
        )
        out[word] = EvidenceMatrix(word, tuple(utts[word]), candidates, tau, delta)
    return out


def serialize_evidence(matrices: Mapping[str, EvidenceMatrix]) -> str:
    """Write evidence matrices in the line format ``load_evidence`` reads.

    Dense: every floored cell becomes a line.  Words sorted, rows and
    columns in stored order.
    """
    lines = []
    for word in sorted(matrices):
        ev = matrices[word]
        for i, utt_id in enumerate(ev.utterance_ids):
            for j, cand in enumerate(ev.candidates):
                lines.append(
                    f"{utt_id}\t{word}\t{ev.tau[i, j]:.12g}\t{' '.join(cand.phones)}"
                )
    return "\n".join(lines) + "\n" if lines else ""


def parse_alignment_counts(text: str) -> dict[str, AlignmentCounts]:
    """Parse ``word TAB count TAB phone [phone ...]`` lines.

    Repeated (word, phone sequence) lines are summed.
    """
    counts: dict[str, dict[tuple[str, ...], int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", lineno)
        word, count_field, phone_field = fields
        try:
            count = int(count_field)
        except ValueError:
            raise ParseError(f"bad count {count_field!r}", lineno) from None
        if count < 0:
            raise ParseError(f"negative count {count}", lineno)
        phones = tuple(phone_field.split())
        if not phones:
            raise ParseError("empty phone sequence", lineno)
        word_counts = counts.setdefault(word, {})
        word_counts[phones] = word_counts.get(phones, 0) + count
    return {word: AlignmentCounts(word, c) for word, c in counts.items()}


def average_posteriors(ev: EvidenceMatrix) -> np.ndarray:
    """Column means of the floored evidence matrix."""
    return ev.tau.mean(axis=0)


def prune_top_k(ev: EvidenceMatrix, k: int) -> EvidenceMatrix:
    """Keep the k candidates with the highest average posterior.

    Ties break toward the lexicographically smaller phone sequence; the
    survivors keep their original column order.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if ev.n_candidates <= k:
        return ev
    avg = average_posteriors(ev)
    ranked = sorted(range(ev.n_candidates), key=lambda j: (-avg[j], ev.candidates[j].phones))
    return ev.with_columns(sorted(ranked[:k]))


def filter_by_relative_frequency(
    counts: AlignmentCounts, threshold: float = 0.1
) -> list[Pronunciation]:
    """Keep sequences whose count is at least ``threshold`` times the maximum.

    The boundary is inclusive.  Returns phonetic-decoding candidates, most
    frequent first, ties in lexicographic phone order.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if not counts.counts:
        raise ValueError(f"word {counts.word!r}: no aligned sequences")
    top = max(counts.counts.values())
    if top == 0:
        raise ValueError(f"word {counts.word!r}: all alignment counts are zero")
    kept = [(seq, c) for seq, c in counts.counts.items() if c / top >= threshold]
    kept.sort(key=lambda item: (-item[1], item[0]))
    return [Pronunciation(seq, Source.PHONETIC_DECODING) for seq, _ in kept]


def merge_candidates(
    g2p: Lexicon | None = None,
    pd: Sequence[tuple[str, Pronunciation]] | None = None,
    ref: Lexicon | None = None,
) -> Lexicon:
    """Union the candidate pools; each argument defines its entries' source.

    Duplicate phone sequences collapse to the highest-priority source
    (reference, then G2P, then phonetic decoding) and keep that source's
    position.  Within a word, reference candidates come first, then G2P in
    input order (preserving G2P rank), then phonetic decoding.
    """
    by_word: dict[str, list[Pronunciation]] = {}
    seen: dict[str, set[tuple[str, ...]]] = {}

    def add(word: str, phones: tuple[str, ...], source: Source) -> None:
        if phones in seen.setdefault(word, set()):
            return
        seen[word].add(phones)
        by_word.setdefault(word, []).append(Pronunciation(phones, source))

    if ref is not None:
        for word, cs in ref.entries.items():
            for cand in cs.candidates:
                add(word, cand.phones, Source.REFERENCE)
    if g2p is not None:
        for word, cs in g2p.entries.items():
            for cand in cs.candidates:
                add(word, cand.phones, Source.G2P)
    if pd is not None:
        for word, cand in pd:
            add(word, cand.phones, Source.PHONETIC_DECODING)

    entries = {w: CandidateSet(w, tuple(c)) for w, c in sorted(by_word.items())}
    return Lexicon(entries)


def align_evidence(
    ev: EvidenceMatrix, candidates: CandidateSet, delta: float | None = None
) -> EvidenceMatrix:
    """Reorder evidence columns to the lexicon's candidate list.

    Lexicon candidates without evidence become all-delta columns; evidence
    for a sequence outside the lexicon is an error.  The result carries the
    lexicon's source tags.
    """
    if ev.word != candidates.word:
        raise ValueError(f"evidence word {ev.word!r} does not match lexicon word {candidates.word!r}")
    if delta is None:
        delta = ev.delta
    known = candidates.phone_sequences()
    extra = sorted(c.phones for c in ev.candidates if c.phones not in known)
    if extra:
        listed = ", ".join(" ".join(seq) for seq in extra)
        raise ValueError(
            f"word {ev.word!r}: evidence for baseforms missing from the lexicon: {listed}"
        )
    col = {c.phones: j for j, c in enumerate(ev.candidates)}
    tau = np.full((ev.m_w, len(candidates.candidates)), delta)
    for j, cand in enumerate(candidates.candidates):
        if cand.phones in col:
            tau[:, j] = ev.tau[:, col[cand.phones]]
    return EvidenceMatrix(ev.word, ev.utterance_ids, candidates.candidates, tau, delta)
