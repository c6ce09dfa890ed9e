"""Entropy-gated lazy retrieval for retrieval-augmented generation.

Queries are answered from a compact document summary first; chunk
retrieval runs only when the model's mean next-token entropy over the
first few generated tokens exceeds a threshold.
"""

from ._backend import BACKEND
from .corpus import Chunk, Document, SummaryContext, chunk, load_corpus, summarize
from .embed import HashingEmbedder, HttpEmbedder, RetrievalResult, VectorIndex, build_index, search
from .evaluation import (
    EntropyStats,
    EvalRecord,
    EvalReport,
    Evaluator,
    entropy_stats,
    exact_match,
    load_dataset,
    normalize_answer,
    run_eval,
    sweep,
    welch_stats,
)
from .gate import EntropyTrace, GateDecision, decide, mean_entropy, step_entropy
from .latency import LatencyScenario, break_even, overhead, savings, table
from .lm import GenerationRequest, HttpModel, MockModel, TokenStep, mock_from_file
from .pipeline import Mode, Pipeline, PipelineAnswer, PreparedDocument, prepare

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Chunk", "Document", "SummaryContext", "chunk", "load_corpus", "summarize",
    "HashingEmbedder", "HttpEmbedder", "RetrievalResult", "VectorIndex", "build_index", "search",
    "EntropyStats", "EvalRecord", "EvalReport", "Evaluator", "entropy_stats", "exact_match",
    "load_dataset", "normalize_answer", "run_eval", "sweep", "welch_stats",
    "EntropyTrace", "GateDecision", "decide", "mean_entropy", "step_entropy",
    "LatencyScenario", "break_even", "overhead", "savings", "table",
    "GenerationRequest", "HttpModel", "MockModel", "TokenStep", "mock_from_file",
    "Mode", "Pipeline", "PipelineAnswer", "PreparedDocument", "prepare",
]
