"""Pronunciation lexicon types and the tab-separated lexicon file format."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

__all__ = [
    "Source",
    "SOURCE_PRIORITY",
    "Pronunciation",
    "CandidateSet",
    "Lexicon",
    "SelectionConfig",
    "ParseError",
    "parse_lexicon",
    "serialize_lexicon",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
]


class Source(enum.Enum):
    """Origin of a pronunciation candidate."""

    G2P = "g2p"
    PHONETIC_DECODING = "pd"
    REFERENCE = "ref"


# Reference entries are trusted seed/expert pronunciations and win on duplicates.
SOURCE_PRIORITY: Mapping[Source, int] = {
    Source.REFERENCE: 0,
    Source.G2P: 1,
    Source.PHONETIC_DECODING: 2,
}


class ParseError(ValueError):
    """Malformed input file; message carries the file line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _check_token(token: str, what: str) -> None:
    if not token or any(ch.isspace() for ch in token):
        raise ValueError(f"{what} must be a non-empty token without whitespace: {token!r}")


@dataclass(frozen=True, eq=False)
class Pronunciation:
    """A candidate phone sequence for one word.

    Equality and hashing use the phone sequence only; two candidates with
    the same phones but different sources compare equal.
    """

    phones: tuple[str, ...]
    source: Source

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(self.phones))
        if not self.phones:
            raise ValueError("pronunciation must contain at least one phone")
        for p in self.phones:
            _check_token(p, "phone")
        if not isinstance(self.source, Source):
            raise ValueError(f"not a valid source: {self.source!r}")

    def __eq__(self, other):
        if not isinstance(other, Pronunciation):
            return NotImplemented
        return self.phones == other.phones

    def __hash__(self):
        return hash(self.phones)

    def __repr__(self):
        return f"Pronunciation({' '.join(self.phones)!r}, {self.source.value})"


@dataclass(frozen=True)
class CandidateSet:
    """The ordered pronunciation candidates of one word."""

    word: str
    candidates: tuple[Pronunciation, ...]

    def __post_init__(self):
        _check_token(self.word, "word")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError(f"word {self.word!r}: candidate set must not be empty")
        seen = set()
        for c in self.candidates:
            if c.phones in seen:
                raise ValueError(
                    f"word {self.word!r}: duplicate phone sequence {' '.join(c.phones)!r}"
                )
            seen.add(c.phones)

    def __len__(self):
        return len(self.candidates)

    def phone_sequences(self) -> set[tuple[str, ...]]:
        return {c.phones for c in self.candidates}


@dataclass(frozen=True)
class Lexicon:
    """Words mapped to candidate sets, with optional per-word probabilities.

    ``probabilities[word]``, when present, parallels
    ``entries[word].candidates`` and must sum to one.
    """

    entries: dict[str, CandidateSet] = field(default_factory=dict)
    probabilities: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for word, cs in self.entries.items():
            if word != cs.word:
                raise ValueError(f"entry key {word!r} does not match candidate set word {cs.word!r}")
        for word, probs in self.probabilities.items():
            if word not in self.entries:
                raise ValueError(f"probabilities given for unknown word {word!r}")
            cands = self.entries[word].candidates
            if len(probs) != len(cands):
                raise ValueError(
                    f"word {word!r}: {len(probs)} probabilities for {len(cands)} candidates"
                )
            for p in probs:
                if not (0.0 < p <= 1.0):
                    raise ValueError(f"word {word!r}: probability {p} outside (0, 1]")
            total = sum(probs)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"word {word!r}: probabilities sum to {total!r}, not 1")

    def words(self) -> list[str]:
        return sorted(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries


def parse_lexicon(text: str) -> Lexicon:
    """Parse lexicon text: ``word TAB source TAB phone [phone ...] [TAB prob]``.

    Blank lines are skipped.  Duplicate (word, phone sequence) pairs collapse
    to the first occurrence.  For any one word, either every line carries a
    probability or none does.
    """
    entries: dict[str, list[Pronunciation]] = {}
    probs: dict[str, list[float]] = {}
    has_prob: dict[str, bool] = {}
    seen: dict[str, set[tuple[str, ...]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = raw.rstrip("\n").split("\t")
        if len(fields) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", lineno)
        word, source_tag, phone_field = fields[0], fields[1], fields[2]
        try:
            source = Source(source_tag)
        except ValueError:
            raise ParseError(f"unknown source tag {source_tag!r}", lineno) from None
        phones = tuple(phone_field.split())
        if not phones:
            raise ParseError("empty phone sequence", lineno)

        prob: float | None = None
        if len(fields) == 4:
            try:
                prob = float(fields[3])
            except ValueError:
                raise ParseError(f"bad probability {fields[3]!r}", lineno) from None
            if not (0.0 < prob <= 1.0):
                raise ParseError(f"probability {prob} outside (0, 1]", lineno)

        if word in has_prob and has_prob[word] != (prob is not None):
            raise ParseError(
                f"word {word!r} mixes lines with and without probabilities", lineno
            )
        has_prob.setdefault(word, prob is not None)

        try:
            cand = Pronunciation(phones, source)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None

        if cand.phones in seen.setdefault(word, set()):
            continue
        seen[word].add(cand.phones)
        entries.setdefault(word, []).append(cand)
        if prob is not None:
            probs.setdefault(word, []).append(prob)

    lexicon_entries = {}
    for word, cands in entries.items():
        try:
            lexicon_entries[word] = CandidateSet(word, tuple(cands))
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    return Lexicon(lexicon_entries, {w: tuple(p) for w, p in probs.items()})


def _quantized_prob_strings(probs: Iterable[float]) -> list[str]:
    """Render probabilities as 6-decimal strings that sum to exactly 1.000000.

    Largest-remainder rounding on a 1e-6 grid, with every entry floored at
    one grid unit so re-parsing never sees a zero probability.
    """
    raw = [p * 10**6 for p in probs]
    units = [int(r) for r in raw]
    deficit = 10**6 - sum(units)
    order = sorted(range(len(raw)), key=lambda j: (units[j] - raw[j], j))
    for j in order[:deficit]:
        units[j] += 1
    for j in range(len(units)):
        if units[j] == 0:
            k = max(range(len(units)), key=lambda i: units[i])
            units[k] -= 1
            units[j] = 1
    return [f"{u // 10**6}.{u % 10**6:06d}" for u in units]


def serialize_lexicon(lexicon: Lexicon, with_probs: bool = False) -> str:
    """Serialize a lexicon; words sorted, candidates in stored order.

    With ``with_probs`` every word must carry probabilities; they are
    printed with six decimals and corrected to sum to exactly one.
    """
    lines = []
    for word in sorted(lexicon.entries):
        cs = lexicon.entries[word]
        if with_probs:
            if word not in lexicon.probabilities:
                raise ValueError(f"word {word!r} has no probabilities to serialize")
            prob_strs = _quantized_prob_strings(lexicon.probabilities[word])
        for i, cand in enumerate(cs.candidates):
            line = f"{word}\t{cand.source.value}\t{' '.join(cand.phones)}"
            if with_probs:
                line += f"\t{prob_strs[i]}"
            lines.append(line)
    return "\n".join(lines) + "\n" if lines else ""


DEFAULT_ALPHA: Mapping[Source, float] = {
    Source.G2P: 0.02,
    Source.PHONETIC_DECODING: 0.01,
    Source.REFERENCE: 0.0,
}

DEFAULT_BETA: Mapping[Source, float] = {
    Source.G2P: 10.0,
    Source.PHONETIC_DECODING: 10.0,
    Source.REFERENCE: 0.0,
}


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for evidence flooring, candidate pruning and greedy selection.

    ``alpha`` prices keeping a candidate of a given source (larger prunes
    more aggressively); ``beta`` damps the per-utterance reduction of
    words with little evidence.
    """

    delta: float = 1e-5
    alpha: Mapping[Source, float] = field(default_factory=lambda: dict(DEFAULT_ALPHA))
    beta: Mapping[Source, float] = field(default_factory=lambda: dict(DEFAULT_BETA))
    top_k: int = 10
    rel_freq_threshold: float = 0.1
    em_max_iters: int = 200
    em_tol: float = 1e-10

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not (1e-7 <= self.delta <= 1e-5):
            warnings.warn(
                f"delta={self.delta} is outside the usual floor range [1e-7, 1e-5]",
                stacklevel=2,
            )
        for src in Source:
            if src not in self.alpha:
                raise ValueError(f"alpha missing source {src.value}")
            if src not in self.beta:
                raise ValueError(f"beta missing source {src.value}")
        for src, a in self.alpha.items():
            if not (0.0 <= a <= 1.0):
                raise ValueError(f"alpha[{src.value}]={a} outside [0, 1]")
        for src, b in self.beta.items():
            if b < 0.0:
                raise ValueError(f"beta[{src.value}]={b} must be non-negative")
        if self.top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {self.top_k}")
        if not (0.0 < self.rel_freq_threshold < 1.0):
            raise ValueError(
                f"rel_freq_threshold must be in (0, 1), got {self.rel_freq_threshold}"
            )
        if self.em_max_iters < 1:
            raise ValueError(f"em_max_iters must be at least 1, got {self.em_max_iters}")
        if self.em_tol <= 0.0:
            raise ValueError(f"em_tol must be positive, got {self.em_tol}")

    def as_dict(self) -> dict:
        """Plain-value view for manifests and logs."""
        return {
            "delta": self.delta,
            "alpha": {s.value: v for s, v in self.alpha.items()},
            "beta": {s.value: v for s, v in self.beta.items()},
            "top_k": self.top_k,
            "rel_freq_threshold": self.rel_freq_threshold,
            "em_max_iters": self.em_max_iters,
            "em_tol": self.em_tol,
        }
