"""QA evaluation: normalized exact match, aggregate metrics, threshold sweeps,
and the correct-vs-incorrect entropy comparison."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
import threading
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from scipy import stats as sps

from .corpus import Document
from .embed import VectorIndex, build_index
from .errors import EvaluationError, InputError, ParseError, ValidationError
from .lm import GenerationRequest, LanguageModel, TokenStep
from .pipeline import LAZY, ORACLE, Mode, Pipeline, PipelineAnswer, PreparedDocument, prepare

ARTICLES = frozenset({"a", "an", "the"})


def normalize_answer(text: str) -> str:
    """Lowercase, drop Unicode punctuation and the articles a/an/the, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))
    return " ".join(tok for tok in text.split() if tok not in ARTICLES)


def exact_match(prediction: str, references: Sequence[str]) -> bool:
    if not references:
        raise ValueError("references must be nonempty")
    pred = normalize_answer(prediction)
    return any(pred == normalize_answer(ref) for ref in references)


@dataclass(frozen=True)
class EvalRecord:
    id: str
    question: str
    context: str
    answers: tuple[str, ...]
    doc_id: str

    def document(self) -> Document:
        return Document(id=self.doc_id, text=self.context)


def context_doc_id(context: str) -> str:
    return "ctx-" + hashlib.sha1(context.encode("utf-8")).hexdigest()[:12]


def parse_dataset(data: object, source: str = "<dataset>") -> list[EvalRecord]:
    if not isinstance(data, list):
        raise ParseError("dataset must be a JSON array", source=source)
    records = []
    seen: set[str] = set()
    for i, raw in enumerate(data):
        where = f"record {i}"
        if not isinstance(raw, dict):
            raise ParseError(f"{where}: not an object", source=source)
        for key in ("id", "question", "context"):
            if not isinstance(raw.get(key), str) or not raw[key].strip():
                raise ParseError(f"{where}: field {key!r} must be a nonempty string", source=source)
        answers = raw.get("answers")
        if not isinstance(answers, list) or not answers or not all(isinstance(a, str) for a in answers):
            raise ParseError(f"{where}: 'answers' must be a nonempty list of strings", source=source)
        if raw["id"] in seen:
            raise ValidationError(f"{source}: duplicate record id {raw['id']!r}")
        seen.add(raw["id"])
        doc_id = raw.get("doc_id")
        if doc_id is not None and (not isinstance(doc_id, str) or not doc_id):
            raise ParseError(f"{where}: 'doc_id' must be a nonempty string", source=source)
        records.append(
            EvalRecord(
                id=raw["id"],
                question=raw["question"],
                context=raw["context"],
                answers=tuple(answers),
                doc_id=doc_id or context_doc_id(raw["context"]),
            )
        )
    return records


def load_dataset(path: str | Path) -> list[EvalRecord]:
    """Read a JSON array of ``{id, question, context, answers}`` objects."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", source=str(path), line=exc.lineno) from None
    return parse_dataset(data, source=str(path))


def sample_records(records: Sequence[EvalRecord], n: int | None, seed: int = 0) -> list[EvalRecord]:
    """Seeded random subset of size ``n`` (all records when ``n`` is None or too large)."""
    if n is None or n >= len(records):
        return list(records)
    if n < 1:
        raise InputError("sample size must be >= 1")
    return random.Random(seed).sample(list(records), n)


@dataclass(frozen=True)
class QueryResult:
    record_id: str
    answer: PipelineAnswer | None
    correct: bool
    error: str | None = None


@dataclass(frozen=True)
class EntropyStats:
    mean_correct: float
    mean_incorrect: float
    t_statistic: float
    p_value: float
    cohens_d: float
    ci95: tuple[float, float]
    df: float
    n_correct: int
    n_incorrect: int

    @property
    def gap(self) -> float:
        return self.mean_incorrect - self.mean_correct


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    m = math.fsum(xs) / len(xs)
    return m, math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def welch_stats(correct: Sequence[float], incorrect: Sequence[float], confidence: float = 0.95) -> EntropyStats:
    """Welch's t-test on ``incorrect - correct``, pooled-SD Cohen's d, and a Welch CI for the gap.

    Cohen's d deliberately uses the classic pooled standard deviation even
    though the test itself does not assume equal variances.
    """
    n1, n2 = len(correct), len(incorrect)
    if n1 < 2 or n2 < 2:
        raise InputError(f"need >= 2 values per group, got {n1} correct and {n2} incorrect")
    m1, v1 = _mean_var(correct)
    m2, v2 = _mean_var(incorrect)
    gap = m2 - m1
    a, b = v1 / n1, v2 / n2
    se = math.sqrt(a + b)
    pooled_sd = math.sqrt(((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2))
    if se == 0.0:
        # both groups constant
        t = 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
        p = 1.0 if gap == 0.0 else 0.0
        df = float(n1 + n2 - 2)
        half = 0.0
    else:
        t = gap / se
        df = (a + b) ** 2 / (a**2 / (n1 - 1) + b**2 / (n2 - 1))
        p = float(min(1.0, 2.0 * sps.t.sf(abs(t), df)))
        half = float(sps.t.ppf(0.5 + confidence / 2.0, df)) * se
    d = 0.0 if gap == 0.0 else (gap / pooled_sd if pooled_sd > 0 else math.copysign(math.inf, gap))
    return EntropyStats(
        mean_correct=m1,
        mean_incorrect=m2,
        t_statistic=t,
        p_value=p,
        cohens_d=d,
        ci95=(gap - half, gap + half),
        df=df,
        n_correct=n1,
        n_incorrect=n2,
    )


def entropy_stats(results: Iterable[QueryResult]) -> EntropyStats:
    """Compare first-pass mean entropy between correct and incorrect answers."""
    correct, incorrect = [], []
    for r in results:
        if r.answer is None or r.answer.entropy_trace is None:
            continue
        h = r.answer.entropy_trace.mean_first_n
        if math.isfinite(h):
            (correct if r.correct else incorrect).append(h)
    return welch_stats(correct, incorrect)


@dataclass(frozen=True)
class EvalReport:
    mode: Mode
    per_query: tuple[QueryResult, ...]
    accuracy: float
    avg_tokens: float
    retrieval_rate: float
    n_processed: int
    n_errors: int
    entropy_stats: EntropyStats | None = None


def aggregate(mode: Mode, results: Iterable[QueryResult]) -> EvalReport:
    results = tuple(sorted(results, key=lambda r: r.record_id))
    ok = [r for r in results if r.answer is not None]
    n = len(ok)
    stats = None
    if mode.kind == LAZY:
        try:
            stats = entropy_stats(ok)
        except InputError:
            stats = None
    return EvalReport(
        mode=mode,
        per_query=results,
        accuracy=sum(r.correct for r in ok) / n if n else 0.0,
        avg_tokens=sum(r.answer.input_tokens for r in ok) / n if n else 0.0,
        retrieval_rate=sum(r.answer.retrieval_performed for r in ok) / n if n else 0.0,
        n_processed=n,
        n_errors=len(results) - n,
        entropy_stats=stats,
    )


class MemoModel:
    """Caches full generations by exact request; valid only for deterministic models."""

    deterministic = True

    def __init__(self, model: LanguageModel):
        self.model = model
        self._cache: dict[GenerationRequest, list[TokenStep]] = {}
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> Iterator[TokenStep]:
        with self._lock:
            steps = self._cache.get(request)
        if steps is None:
            steps = list(self.model.generate(request))
            with self._lock:
                self._cache.setdefault(request, steps)
        return iter(steps)


class Evaluator:
    """Runs labeled records through a :class:`Pipeline`.

    Documents are prepared once per distinct ``doc_id``. With
    ``scope="corpus"`` retrieval searches one index spanning all documents.
    """

    def __init__(
        self,
        pipeline: Pipeline,
        dataset: Sequence[EvalRecord],
        *,
        scope: str = "document",
        strict: bool = True,
        jobs: int = 1,
        **prepare_kwargs,
    ):
        if not dataset:
            raise InputError("dataset is empty")
        if scope not in ("document", "corpus"):
            raise InputError(f"unknown scope {scope!r}")
        self.pipeline = pipeline
        self.dataset = list(dataset)
        self.strict = strict
        self.jobs = max(1, jobs)
        self.prepared: dict[str, PreparedDocument] = {}
        for rec in self.dataset:
            if rec.doc_id not in self.prepared:
                self.prepared[rec.doc_id] = prepare(rec.document(), pipeline.embedder, **prepare_kwargs)
        self.global_index: VectorIndex | None = None
        if scope == "corpus":
            all_chunks = [c for p in self.prepared.values() for c in p.chunks]
            self.global_index = build_index(all_chunks, pipeline.embedder)

    def _one(self, pipeline: Pipeline, rec: EvalRecord, mode: Mode) -> QueryResult:
        try:
            ans = pipeline.answer(
                rec.question,
                self.prepared[rec.doc_id],
                mode,
                gold_context=rec.context if mode.kind == ORACLE else None,
                index=self.global_index,
            )
        except Exception as exc:
            if self.strict:
                raise EvaluationError(rec.id, exc) from exc
            return QueryResult(record_id=rec.id, answer=None, correct=False, error=f"{type(exc).__name__}: {exc}")
        return QueryResult(record_id=rec.id, answer=ans, correct=exact_match(ans.answer_text, rec.answers))

    def run(self, mode: Mode, pipeline: Pipeline | None = None) -> EvalReport:
        pipeline = pipeline or self.pipeline
        if self.jobs == 1:
            results = [self._one(pipeline, r, mode) for r in self.dataset]
        else:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(lambda r: self._one(pipeline, r, mode), self.dataset))
        return aggregate(mode, results)

    def sweep(self, taus: Sequence[float], base: Mode, *, reuse_generations: bool = True) -> list[tuple[float, EvalReport]]:
        """One lazy-mode report per threshold.

        Generations depend only on the prompt, never on the threshold, so with
        a deterministic model they are cached across thresholds.
        """
        if not taus:
            raise InputError("need at least one threshold")
        if base.kind != LAZY:
            raise InputError("sweeps apply to lazy mode only")
        pipeline = self.pipeline
        if reuse_generations and getattr(pipeline.model, "deterministic", False):
            pipeline = Pipeline(
                MemoModel(pipeline.model),
                pipeline.embedder,
                max_tokens=pipeline.max_tokens,
                stop_sequences=pipeline.stop_sequences,
                tokenizer=pipeline.tokenizer,
            )
        return [(tau, self.run(base.with_tau(tau), pipeline)) for tau in taus]


def run_eval(dataset: Sequence[EvalRecord], mode: Mode, pipeline: Pipeline, **kwargs) -> EvalReport:
    return Evaluator(pipeline, dataset, **kwargs).run(mode)


def sweep(
    dataset: Sequence[EvalRecord], taus: Sequence[float], pipeline: Pipeline, base: Mode | None = None, **kwargs
) -> list[tuple[float, EvalReport]]:
    reuse = kwargs.pop("reuse_generations", True)
    return Evaluator(pipeline, dataset, **kwargs).sweep(taus, base or Mode.lazy(), reuse_generations=reuse)


# -- serialization ---------------------------------------------------------


def _num(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return x


def mode_to_dict(mode: Mode) -> dict:
    out: dict = {"kind": mode.kind, "label": mode.label}
    if mode.kind == LAZY:
        out.update(tau=_num(mode.tau), n=mode.n, aggregation=mode.aggregation)
    if mode.k is not None:
        out["k"] = mode.k
    return out


def stats_to_dict(s: EntropyStats | None) -> dict | None:
    if s is None:
        return None
    return {
        "mean_correct": s.mean_correct,
        "mean_incorrect": s.mean_incorrect,
        "gap": s.gap,
        "t_statistic": _num(s.t_statistic),
        "df": s.df,
        "p_value": s.p_value,
        "cohens_d": _num(s.cohens_d),
        "ci95": [s.ci95[0], s.ci95[1]],
        "n_correct": s.n_correct,
        "n_incorrect": s.n_incorrect,
    }


def answer_to_dict(a: PipelineAnswer) -> dict:
    out = {
        "answer": a.answer_text,
        "retrieval_performed": a.retrieval_performed,
        "passes": a.passes,
        "retrieved_chunks": list(a.retrieved_chunks),
        "input_tokens": a.input_tokens,
    }
    if a.entropy_trace is not None:
        out["mean_entropy"] = _num(a.entropy_trace.mean_first_n)
        out["n_used"] = a.entropy_trace.n_used
        out["per_step_entropy"] = list(a.entropy_trace.per_step)
    if a.gate_decision is not None:
        out["triggered"] = a.gate_decision.triggered
    return out


def report_to_dict(report: EvalReport) -> dict:
    per_query = []
    for r in report.per_query:
        row: dict = {"id": r.record_id, "correct": r.correct}
        if r.answer is not None:
            row.update(answer_to_dict(r.answer))
        if r.error is not None:
            row["error"] = r.error
        per_query.append(row)
    return {
        "mode": mode_to_dict(report.mode),
        "n_processed": report.n_processed,
        "n_errors": report.n_errors,
        "accuracy": report.accuracy,
        "avg_tokens": report.avg_tokens,
        "retrieval_rate": report.retrieval_rate,
        "entropy_stats": stats_to_dict(report.entropy_stats),
        "per_query": per_query,
    }


def dumps_json(obj: object) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def fmt_float(x: float | None) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.4f}"


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


EVAL_COLUMNS = ("mode", "tau", "accuracy", "avg_tokens", "retrieval_rate")
SWEEP_COLUMNS = ("tau", "accuracy", "retrieval_rate", "avg_tokens")


def reports_csv(reports: Sequence[EvalReport]) -> str:
    return _csv(
        EVAL_COLUMNS,
        (
            (
                r.mode.kind,
                fmt_float(r.mode.tau) if r.mode.kind == LAZY else "",
                fmt_float(r.accuracy),
                fmt_float(r.avg_tokens),
                fmt_float(r.retrieval_rate),
            )
            for r in reports
        ),
    )


def sweep_csv(rows: Sequence[tuple[float, EvalReport]]) -> str:
    return _csv(
        SWEEP_COLUMNS,
        ((fmt_float(t), fmt_float(r.accuracy), fmt_float(r.retrieval_rate), fmt_float(r.avg_tokens)) for t, r in rows),
    )
