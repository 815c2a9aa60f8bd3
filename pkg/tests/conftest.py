"""Shared builders for randomized test instances."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from pronlex import EvidenceMatrix, Pronunciation, Source

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

PHONE_INVENTORY = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER",
    "EY", "F", "G", "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW",
    "OY", "P", "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y", "Z",
    "ZH",
)


def random_phone_seq(rng: np.random.Generator, lo: int = 2, hi: int = 6) -> tuple[str, ...]:
    n = int(rng.integers(lo, hi + 1))
    picks = rng.integers(0, len(PHONE_INVENTORY), size=n)
    return tuple(PHONE_INVENTORY[int(i)] for i in picks)


def distinct_phone_seqs(rng: np.random.Generator, count: int, lo: int = 2, hi: int = 6) -> list[tuple[str, ...]]:
    seen: set[tuple[str, ...]] = set()
    out: list[tuple[str, ...]] = []
    while len(out) < count:
        seq = random_phone_seq(rng, lo, hi)
        if seq not in seen:
            seen.add(seq)
            out.append(seq)
    return out


def random_sources(rng: np.random.Generator, count: int) -> tuple[Source, ...]:
    labels = rng.choice(["g2p", "pd", "ref"], size=count)
    return tuple(Source(str(s)) for s in labels)


def random_evidence(
    rng: np.random.Generator,
    m: int | None = None,
    b: int | None = None,
    word: str = "w",
    delta: float = 1e-5,
    sources: tuple[Source, ...] | None = None,
) -> EvidenceMatrix:
    """Uniform-random evidence with entries in [delta, 1]."""
    if m is None:
        m = int(rng.integers(1, 13))
    if b is None:
        b = int(rng.integers(2, 6))
    if sources is None:
        sources = random_sources(rng, b)
    tau = rng.uniform(delta, 1.0, size=(m, b))
    candidates = tuple(
        Pronunciation(seq, src)
        for seq, src in zip(distinct_phone_seqs(rng, b), sources)
    )
    utterance_ids = tuple(f"u{i:04d}" for i in range(m))
    return EvidenceMatrix(word, utterance_ids, candidates, tau, delta)
