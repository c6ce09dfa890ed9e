"""Query answering in five modes, including the entropy-gated two-pass flow."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import (
    DEFAULT_CHUNK_TOKENS,
    DEFAULT_OVERLAP_TOKENS,
    DEFAULT_SUMMARY_SENTENCES,
    DEFAULT_TOKENIZER,
    Chunk,
    Document,
    SummaryContext,
    Tokenizer,
    chunk,
    summarize,
)
from .embed import DEFAULT_K, Embedder, VectorIndex, build_index, search
from .errors import ValidationError
from .gate import (
    AGGREGATIONS,
    DEFAULT_N_TOKENS,
    MEAN,
    EntropyTrace,
    GateDecision,
    decide,
    mean_entropy,
    step_entropy,
)
from .lm import DEFAULT_MAX_TOKENS, GenerationRequest, LanguageModel, TokenStep, text_of

LAZY = "lazy"
BASELINE = "baseline"
STANDARD = "standard"
STRONG = "strong"
ORACLE = "oracle"
MODE_KINDS = (LAZY, BASELINE, STANDARD, STRONG, ORACLE)
_ALIASES = {"gated": LAZY, "no-retrieval": BASELINE, "standard-rag": STANDARD, "strong-rag": STRONG}

INSTRUCTION = "Based on the context above, answer the following question."


@dataclass(frozen=True)
class Mode:
    """Answering strategy. ``tau``/``n``/``aggregation`` apply to ``lazy`` only; ``k`` to retrieving modes."""

    kind: str
    tau: float | None = None
    n: int | None = None
    k: int | None = None
    aggregation: str = MEAN

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValidationError(f"unknown mode {self.kind!r}")
        if self.kind == LAZY:
            if self.tau is None or not self.tau >= 0.0:
                raise ValidationError("lazy mode needs tau >= 0")
            if self.n is None or self.n < 1:
                raise ValidationError("lazy mode needs n >= 1")
            if self.aggregation not in AGGREGATIONS:
                raise ValidationError(f"unknown aggregation {self.aggregation!r}")
        if self.kind in (LAZY, STANDARD, STRONG) and (self.k is None or self.k < 1):
            raise ValidationError(f"{self.kind} mode needs k >= 1")

    @classmethod
    def lazy(cls, tau: float = 1.0, n: int = DEFAULT_N_TOKENS, k: int = DEFAULT_K, aggregation: str = MEAN) -> Mode:
        return cls(LAZY, tau=tau, n=n, k=k, aggregation=aggregation)

    @classmethod
    def baseline(cls) -> Mode:
        return cls(BASELINE)

    @classmethod
    def standard(cls, k: int = DEFAULT_K) -> Mode:
        return cls(STANDARD, k=k)

    @classmethod
    def strong(cls, k: int = DEFAULT_K) -> Mode:
        return cls(STRONG, k=k)

    @classmethod
    def oracle(cls) -> Mode:
        return cls(ORACLE)

    @classmethod
    def parse(
        cls,
        name: str,
        *,
        tau: float = 1.0,
        n: int = DEFAULT_N_TOKENS,
        k: int = DEFAULT_K,
        aggregation: str = MEAN,
    ) -> Mode:
        kind = _ALIASES.get(name.strip().lower(), name.strip().lower())
        if kind == LAZY:
            return cls.lazy(tau=tau, n=n, k=k, aggregation=aggregation)
        if kind in (STANDARD, STRONG):
            return cls(kind, k=k)
        return cls(kind)

    def with_tau(self, tau: float) -> Mode:
        return Mode(self.kind, tau=tau, n=self.n, k=self.k, aggregation=self.aggregation)

    @property
    def label(self) -> str:
        if self.kind == LAZY:
            return f"lazy(tau={self.tau:g})"
        return self.kind

    @property
    def retrieves(self) -> bool:
        return self.kind in (STANDARD, STRONG)


def build_prompt_first_pass(summary: SummaryContext | str, query: str) -> str:
    text = summary.text if isinstance(summary, SummaryContext) else summary
    if not query:
        raise ValidationError("query must be nonempty")
    if not text:
        warnings.warn("building a prompt with an empty summary", stacklevel=2)
    return f"Context: {text}\n{INSTRUCTION}\nQuestion: {query}\nAnswer:"


def _details(chunks: Sequence[Chunk]) -> str:
    if not chunks:
        raise ValidationError("need at least one chunk")
    seen: set[str] = set()
    texts = []
    for c in chunks:
        if c.id not in seen:
            seen.add(c.id)
            texts.append(c.text)
    return "\n\n".join(texts)


def build_prompt_expanded(summary: SummaryContext | str, chunks: Sequence[Chunk], query: str) -> str:
    """Second-pass prompt: summary, then retrieved chunks in rank order (deduplicated by id)."""
    text = summary.text if isinstance(summary, SummaryContext) else summary
    if not query:
        raise ValidationError("query must be nonempty")
    return (
        f"Context: {text}\nAdditional Details: {_details(chunks)}\n"
        f"{INSTRUCTION}\nQuestion: {query}\nAnswer:"
    )


def build_prompt_chunks_only(chunks: Sequence[Chunk], query: str) -> str:
    if not query:
        raise ValidationError("query must be nonempty")
    return f"Context: {_details(chunks)}\n{INSTRUCTION}\nQuestion: {query}\nAnswer:"


def build_prompt_no_context(query: str) -> str:
    if not query:
        raise ValidationError("query must be nonempty")
    return f"Question: {query}\nAnswer:"


@dataclass(frozen=True)
class PreparedDocument:
    """A document with its summary, chunk list, and chunk index, ready for querying."""

    doc: Document
    summary: SummaryContext
    chunks: tuple[Chunk, ...]
    index: VectorIndex


def prepare(
    doc: Document,
    embedder: Embedder,
    *,
    chunk_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap_tokens: int = DEFAULT_OVERLAP_TOKENS,
    summary_sentences: int = DEFAULT_SUMMARY_SENTENCES,
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
) -> PreparedDocument:
    chunks = chunk(doc, chunk_tokens, overlap_tokens, tokenizer)
    return PreparedDocument(
        doc=doc,
        summary=summarize(doc, summary_sentences),
        chunks=tuple(chunks),
        index=build_index(chunks, embedder),
    )


@dataclass(frozen=True)
class PipelineAnswer:
    answer_text: str
    mode: Mode
    retrieval_performed: bool
    passes: int
    retrieved_chunks: tuple[str, ...]
    input_tokens: int
    entropy_trace: EntropyTrace | None = None
    gate_decision: GateDecision | None = None
    prompt: str = field(default="", repr=False, compare=False)


def extract_answer(steps: Sequence[TokenStep], stop_sequences: Sequence[str] = ()) -> str:
    """Generated text up to the first newline or stop sequence, trimmed."""
    text = text_of(steps)
    cut = len(text)
    for stop in ("\n", *stop_sequences):
        if stop:
            pos = text.find(stop)
            if pos != -1:
                cut = min(cut, pos)
    return text[:cut].strip()


class Pipeline:
    """Answers queries against prepared documents with a model and embedder.

    Holds no mutable state, so one instance may serve concurrent queries as
    long as the model and embedder are thread-safe.
    """

    def __init__(
        self,
        model: LanguageModel,
        embedder: Embedder,
        *,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        stop_sequences: Sequence[str] = ("\n",),
        tokenizer: Tokenizer = DEFAULT_TOKENIZER,
    ):
        if max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")
        self.model = model
        self.embedder = embedder
        self.max_tokens = max_tokens
        self.stop_sequences = tuple(stop_sequences)
        self.tokenizer = tokenizer

    def _request(self, prompt: str, max_tokens: int | None = None) -> GenerationRequest:
        return GenerationRequest(prompt, max_tokens or self.max_tokens, self.stop_sequences)

    def _generate(self, prompt: str) -> list[TokenStep]:
        return list(self.model.generate(self._request(prompt)))

    def _retrieve(self, query: str, index: VectorIndex, k: int) -> list[Chunk]:
        qv = self.embedder.embed(query)
        return [r.chunk for r in search(index, qv, k)]

    def _result(
        self,
        mode: Mode,
        prompt: str,
        steps: list[TokenStep],
        chunks: Sequence[Chunk] = (),
        *,
        passes: int = 1,
        entropy_trace: EntropyTrace | None = None,
        gate_decision: GateDecision | None = None,
    ) -> PipelineAnswer:
        return PipelineAnswer(
            answer_text=extract_answer(steps, self.stop_sequences),
            mode=mode,
            retrieval_performed=bool(chunks),
            passes=passes,
            retrieved_chunks=tuple(dict.fromkeys(c.id for c in chunks)),
            input_tokens=len(self.tokenizer.tokenize(prompt)),
            entropy_trace=entropy_trace,
            gate_decision=gate_decision,
            prompt=prompt,
        )

    def answer(
        self,
        query: str,
        prepared: PreparedDocument,
        mode: Mode,
        *,
        gold_context: str | None = None,
        index: VectorIndex | None = None,
    ) -> PipelineAnswer:
        """Answer ``query``. ``index`` overrides the document's own index (corpus-wide search)."""
        if not query:
            raise ValidationError("query must be nonempty")
        index = index or prepared.index
        if mode.kind == BASELINE:
            prompt = build_prompt_no_context(query)
            return self._result(mode, prompt, self._generate(prompt))
        if mode.kind == ORACLE:
            if not gold_context:
                raise ValidationError("oracle mode requires a gold context")
            prompt = build_prompt_first_pass(gold_context, query)
            return self._result(mode, prompt, self._generate(prompt))
        if mode.kind == STANDARD:
            chunks = self._retrieve(query, index, mode.k)
            prompt = build_prompt_chunks_only(chunks, query)
            return self._result(mode, prompt, self._generate(prompt), chunks)
        if mode.kind == STRONG:
            chunks = self._retrieve(query, index, mode.k)
            prompt = build_prompt_expanded(prepared.summary, chunks, query)
            return self._result(mode, prompt, self._generate(prompt), chunks)
        return self._answer_lazy(query, prepared, mode, index)

    def _answer_lazy(self, query: str, prepared: PreparedDocument, mode: Mode, index: VectorIndex) -> PipelineAnswer:
        prompt = build_prompt_first_pass(prepared.summary, query)
        gen = self.model.generate(self._request(prompt, max(mode.n, self.max_tokens)))
        try:
            if mode.aggregation == MEAN:
                steps = list(itertools.islice(gen, mode.n))
                decision = decide(mean_entropy(steps, mode.n), mode.tau, MEAN)
                if not decision.triggered:
                    steps.extend(gen)
            else:
                steps = []
                for step in gen:
                    steps.append(step)
                    if step_entropy(step) > mode.tau:
                        break
        finally:
            close = getattr(gen, "close", None)
            if close is not None:
                close()
        trace = mean_entropy(steps, mode.n)
        decision = decide(trace, mode.tau, mode.aggregation)
        if not decision.triggered:
            return self._result(mode, prompt, steps, entropy_trace=trace, gate_decision=decision)
        chunks = self._retrieve(query, index, mode.k)
        prompt2 = build_prompt_expanded(prepared.summary, chunks, query)
        return self._result(
            mode, prompt2, self._generate(prompt2), chunks,
            passes=2, entropy_trace=trace, gate_decision=decision,
        )

