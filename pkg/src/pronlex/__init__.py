"""Learn compact pronunciation lexicons from per-utterance acoustic evidence."""
from .lexicon import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    CandidateSet,
    Lexicon,
    ParseError,
    Pronunciation,
    SelectionConfig,
    Source,
    parse_lexicon,
    serialize_lexicon,
)
from .evidence import (
    AlignmentCounts,
    EvidenceMatrix,
    align_evidence,
    average_posteriors,
    filter_by_relative_frequency,
    load_evidence,
    merge_candidates,
    parse_alignment_counts,
    prune_top_k,
    serialize_evidence,
)
from .em import EMResult, PronModel, PronunciationModelEM, log_likelihood, run_em
from .selection import (
    CandidateScore,
    GreedyPronunciationSelector,
    SelectionStep,
    SelectionTrace,
    greedy_select,
    likelihood_reduction,
    score,
    score_candidates,
    trace_lines,
)
from .baselines import (
    BRUTE_FORCE_MAX_CANDIDATES,
    brute_force_select,
    g2p_one_best,
    pp_select,
)
from .simulate import (
    EvalReport,
    SimConfig,
    WordEval,
    evaluate,
    format_report,
    levenshtein,
    parse_sim_config,
    report_lines,
    simulate_evidence,
)

__version__ = "0.1.0"

__all__ = [
    "BRUTE_FORCE_MAX_CANDIDATES",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "AlignmentCounts",
    "CandidateScore",
    "CandidateSet",
    "EMResult",
    "EvalReport",
    "EvidenceMatrix",
    "GreedyPronunciationSelector",
    "Lexicon",
    "ParseError",
    "PronModel",
    "Pronunciation",
    "PronunciationModelEM",
    "SelectionConfig",
    "SelectionStep",
    "SelectionTrace",
    "SimConfig",
    "Source",
    "WordEval",
    "align_evidence",
    "average_posteriors",
    "brute_force_select",
    "evaluate",
    "filter_by_relative_frequency",
    "format_report",
    "g2p_one_best",
    "greedy_select",
    "levenshtein",
    "likelihood_reduction",
    "load_evidence",
    "log_likelihood",
    "merge_candidates",
    "parse_alignment_counts",
    "parse_lexicon",
    "parse_sim_config",
    "pp_select",
    "prune_top_k",
    "report_lines",
    "run_em",
    "score",
    "score_candidates",
    "serialize_evidence",
    "serialize_lexicon",
    "simulate_evidence",
    "trace_lines",
]
