"""Command line front end: merge, select, baseline, simulate, evaluate."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .baselines import g2p_one_best, pp_select
from .evidence import (
    EvidenceMatrix,
    align_evidence,
    filter_by_relative_frequency,
    load_evidence,
    merge_candidates,
    parse_alignment_counts,
    prune_top_k,
    serialize_evidence,
)
from .lexicon import (
    CandidateSet,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    Lexicon,
    SelectionConfig,
    Source,
    parse_lexicon,
    serialize_lexicon,
)
from .selection import greedy_select, trace_lines
from .simulate import evaluate, format_report, parse_sim_config, report_lines, simulate_evidence

__all__ = ["main"]


class _CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliError(str(exc)) from exc


def _load(path: str, parse_fn):
    try:
        return parse_fn(_read(path))
    except ValueError as exc:
        raise _CliError(f"{path}: {exc}") from exc


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _CliError(str(exc)) from exc


def _write_manifest(out_path: str, command: str, config: dict, inputs: dict,
                    outputs: dict, started: float, **counts) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {k: v for k, v in inputs.items() if v is not None},
        "outputs": {k: v for k, v in outputs.items() if v is not None},
        "duration_seconds": time.perf_counter() - started,
        **counts,
    }
    _write(out_path + ".manifest", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _selection_config(args) -> SelectionConfig:
    return SelectionConfig(
        delta=args.delta,
        alpha={
            Source.G2P: args.alpha_g2p,
            Source.PHONETIC_DECODING: args.alpha_pd,
            Source.REFERENCE: args.alpha_ref,
        },
        beta={
            Source.G2P: args.beta_g2p,
            Source.PHONETIC_DECODING: args.beta_pd,
            Source.REFERENCE: args.beta_ref,
        },
        top_k=args.top_k,
        em_max_iters=args.em_max_iters,
        em_tol=args.em_tol,
    )


def _fallback_candidates(cs: CandidateSet) -> tuple:
    """Words without evidence keep the safest candidates available."""
    refs = tuple(c for c in cs.candidates if c.source is Source.REFERENCE)
    if refs:
        return refs
    g2ps = tuple(c for c in cs.candidates if c.source is Source.G2P)
    if g2ps:
        return (g2ps[0],)
    return (cs.candidates[0],)


def cmd_merge(args) -> int:
    started = time.perf_counter()
    if args.g2p is None and args.ref is None and args.pd_counts is None:
        args.parser.error("at least one of --g2p, --ref, --pd-counts is required")
    g2p = _load(args.g2p, parse_lexicon) if args.g2p else None
    ref = _load(args.ref, parse_lexicon) if args.ref else None
    pd_pairs = None
    candidates_in = 0
    if g2p is not None:
        candidates_in += sum(len(cs) for cs in g2p.entries.values())
    if ref is not None:
        candidates_in += sum(len(cs) for cs in ref.entries.values())
    if args.pd_counts:
        counts = _load(args.pd_counts, parse_alignment_counts)
        candidates_in += sum(len(c.counts) for c in counts.values())
        pd_pairs = []
        for word in sorted(counts):
            try:
                kept = filter_by_relative_frequency(counts[word], args.rel_freq_threshold)
            except ValueError as exc:
                raise _CliError(f"{args.pd_counts}: {exc}") from exc
            pd_pairs.extend((word, cand) for cand in kept)

    merged = merge_candidates(g2p, pd_pairs, ref)
    _write(args.out, serialize_lexicon(merged))
    _write_manifest(
        args.out, "merge",
        {"rel_freq_threshold": args.rel_freq_threshold},
        {"g2p": args.g2p, "ref": args.ref, "pd_counts": args.pd_counts},
        {"lexicon": args.out},
        started,
        words=len(merged),
        candidates_in=candidates_in,
        candidates_out=sum(len(cs) for cs in merged.entries.values()),
    )
    return 0


def _select_word_task(task):
    """One word's selection; module-level so worker processes can unpickle it."""
    word, cs, ev, config = task
    if ev is None:
        kept = _fallback_candidates(cs)
        probs = tuple(1.0 / len(kept) for _ in kept)
        return word, kept, probs, None
    aligned = align_evidence(ev, cs, config.delta)
    pruned = prune_top_k(aligned, config.top_k)
    trace = greedy_select(pruned, config=config)
    kept = trace.final_set.candidates
    theta = trace.final_theta.theta
    return word, kept, tuple(float(t) for t in theta), trace_lines(trace)


def cmd_select(args) -> int:
    started = time.perf_counter()
    try:
        config = _selection_config(args)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    if args.jobs < 1:
        raise _CliError(f"--jobs must be at least 1, got {args.jobs}")
    lexicon = _load(args.lexicon, parse_lexicon)
    evidence = _load(args.evidence, lambda text: load_evidence(text, config.delta))

    unknown = sorted(set(evidence) - set(lexicon.entries))
    if unknown:
        shown = ", ".join(unknown[:10])
        raise _CliError(f"{args.evidence}: evidence for words missing from the lexicon: {shown}")

    words = sorted(lexicon.entries)
    tasks = [(w, lexicon.entries[w], evidence.get(w), config) for w in words]
    try:
        if args.jobs == 1:
            results = [_select_word_task(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                chunk = max(1, len(tasks) // (args.jobs * 4))
                results = list(pool.map(_select_word_task, tasks, chunksize=chunk))
    except ValueError as exc:
        raise _CliError(str(exc)) from exc

    entries = {}
    probabilities = {}
    all_trace_lines = []
    candidates_out = 0
    for word, kept, probs, word_trace in results:
        entries[word] = CandidateSet(word, kept)
        probabilities[word] = probs
        candidates_out += len(kept)
        if word_trace is not None:
            all_trace_lines.extend(word_trace)

    _write(args.out, serialize_lexicon(Lexicon(entries, probabilities), with_probs=True))
    if args.trace:
        _write(args.trace, "\n".join(all_trace_lines) + "\n" if all_trace_lines else "")
    _write_manifest(
        args.out, "select",
        {**config.as_dict(), "jobs": args.jobs},
        {"lexicon": args.lexicon, "evidence": args.evidence},
        {"lexicon": args.out, "trace": args.trace},
        started,
        words=len(words),
        candidates_in=sum(len(cs) for cs in lexicon.entries.values()),
        candidates_out=candidates_out,
    )
    return 0


def cmd_baseline(args) -> int:
    started = time.perf_counter()
    if args.method == "pp" and not args.evidence:
        args.parser.error("--method pp requires --evidence")

    lexicon = _load(args.lexicon, parse_lexicon)
    if args.method == "g2p1best":
        try:
            result = g2p_one_best(lexicon)
        except ValueError as exc:
            raise _CliError(f"{args.lexicon}: {exc}") from exc
    else:
        if not (0.0 < args.pp_threshold <= 1.0):
            raise _CliError(f"--pp-threshold must be in (0, 1], got {args.pp_threshold}")
        evidence = _load(args.evidence, lambda text: load_evidence(text, args.delta))
        unknown = sorted(set(evidence) - set(lexicon.entries))
        if unknown:
            shown = ", ".join(unknown[:10])
            raise _CliError(
                f"{args.evidence}: evidence for words missing from the lexicon: {shown}"
            )
        entries = {}
        for word in sorted(lexicon.entries):
            cs = lexicon.entries[word]
            ev = evidence.get(word)
            if ev is None:
                entries[word] = CandidateSet(word, _fallback_candidates(cs))
                continue
            try:
                aligned = align_evidence(ev, cs, args.delta)
                entries[word] = pp_select(aligned, args.pp_threshold)
            except ValueError as exc:
                raise _CliError(str(exc)) from exc
        result = Lexicon(entries)

    _write(args.out, serialize_lexicon(result))
    _write_manifest(
        args.out, "baseline",
        {"method": args.method, "pp_threshold": args.pp_threshold, "delta": args.delta},
        {"lexicon": args.lexicon, "evidence": args.evidence},
        {"lexicon": args.out},
        started,
        words=len(result),
        candidates_in=sum(len(cs) for cs in lexicon.entries.values()),
        candidates_out=sum(len(cs) for cs in result.entries.values()),
    )
    return 0


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    truth = _load(args.truth, parse_lexicon)
    candidates = _load(args.candidates, parse_lexicon)
    config = _load(args.config, parse_sim_config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    try:
        matrices = simulate_evidence(truth, candidates, config)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc

    _write(args.out, serialize_evidence(matrices))
    _write_manifest(
        args.out, "simulate",
        {
            "confusability": config.confusability,
            "utterances_per_word": config.utterances_per_word,
            "noise": config.noise,
            "seed": config.seed,
            "delta": config.delta,
        },
        {"truth": args.truth, "candidates": args.candidates, "config": args.config},
        {"evidence": args.out},
        started,
        words=len(matrices),
        candidates_in=sum(ev.n_candidates for ev in matrices.values()),
        candidates_out=sum(ev.n_candidates for ev in matrices.values()),
        utterances=sum(ev.m_w for ev in matrices.values()),
    )
    return 0


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    learned = _load(args.learned, parse_lexicon)
    truth = _load(args.truth, parse_lexicon)
    try:
        report = evaluate(learned, truth)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc

    _write(args.out, "\n".join(report_lines(report)) + "\n")
    print(format_report(report))
    _write_manifest(
        args.out, "evaluate",
        {},
        {"learned": args.learned, "truth": args.truth},
        {"report": args.out},
        started,
        words=len(report.per_word),
        candidates_in=sum(len(cs) for cs in learned.entries.values()),
        candidates_out=sum(len(cs) for cs in learned.entries.values()),
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        avg_pronunciations=report.avg_pronunciations,
    )
    return 0


def _add_selection_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--delta", type=float, default=1e-5,
                     help="likelihood floor (default 1e-5)")
    sub.add_argument("--alpha-g2p", type=float, default=DEFAULT_ALPHA[Source.G2P])
    sub.add_argument("--alpha-pd", type=float,
                     default=DEFAULT_ALPHA[Source.PHONETIC_DECODING])
    sub.add_argument("--alpha-ref", type=float, default=DEFAULT_ALPHA[Source.REFERENCE])
    sub.add_argument("--beta-g2p", type=float, default=DEFAULT_BETA[Source.G2P])
    sub.add_argument("--beta-pd", type=float, default=DEFAULT_BETA[Source.PHONETIC_DECODING])
    sub.add_argument("--beta-ref", type=float, default=DEFAULT_BETA[Source.REFERENCE])
    sub.add_argument("--top-k", type=int, default=10,
                     help="candidates kept per word before selection (default 10)")
    sub.add_argument("--em-tol", type=float, default=1e-10)
    sub.add_argument("--em-max-iters", type=int, default=200)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pronlex",
        description="Learn compact pronunciation lexicons from acoustic evidence.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    merge = commands.add_parser("merge", help="merge candidate pronunciations by source")
    merge.add_argument("--g2p", help="G2P lexicon file")
    merge.add_argument("--ref", help="reference lexicon file")
    merge.add_argument("--pd-counts", help="phonetic-decoding alignment counts file")
    merge.add_argument("--rel-freq-threshold", type=float, default=0.1,
                       help="relative-frequency cutoff for decoded sequences (default 0.1)")
    merge.add_argument("--out", required=True)
    merge.set_defaults(func=cmd_merge, parser=merge)

    select = commands.add_parser("select", help="greedy likelihood-reduction selection")
    select.add_argument("--lexicon", required=True)
    select.add_argument("--evidence", required=True)
    _add_selection_flags(select)
    select.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    select.add_argument("--out", required=True)
    select.add_argument("--trace", help="write a removal/keep report here")
    select.set_defaults(func=cmd_select, parser=select)

    baseline = commands.add_parser("baseline", help="reference pruning methods")
    baseline.add_argument("--method", choices=["pp", "g2p1best"], required=True)
    baseline.add_argument("--lexicon", required=True)
    baseline.add_argument("--evidence")
    baseline.add_argument("--pp-threshold", type=float, default=0.4,
                          help="max-normalized weight cutoff (default 0.4)")
    baseline.add_argument("--delta", type=float, default=1e-5)
    baseline.add_argument("--out", required=True)
    baseline.set_defaults(func=cmd_baseline, parser=baseline)

    simulate = commands.add_parser("simulate", help="generate synthetic evidence")
    simulate.add_argument("--truth", required=True,
                          help="ground-truth lexicon with probabilities")
    simulate.add_argument("--candidates", required=True, help="candidate pool lexicon")
    simulate.add_argument("--config", required=True, help="key=value generator settings")
    simulate.add_argument("--seed", type=int, help="override the config seed")
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=cmd_simulate, parser=simulate)

    ev = commands.add_parser("evaluate", help="score a learned lexicon against truth")
    ev.add_argument("--learned", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate, parser=ev)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
