"""Documents and their two-tier representation: summary plus overlapping chunks."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_TOKENS = 100
DEFAULT_OVERLAP_TOKENS = 20
DEFAULT_SUMMARY_SENTENCES = 2

# Lowercased words whose trailing period does not end a sentence.
ABBREVIATIONS = frozenset(
    {
        "e.g.", "i.e.", "cf.", "vs.", "viz.", "approx.", "ca.", "no.",
        "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "mt.",
        "ft.", "gen.", "gov.", "sen.", "rep.", "lt.", "col.", "capt.",
        "inc.", "ltd.", "co.", "corp.", "u.s.", "u.k.", "jan.", "feb.",
        "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.",
        "nov.", "dec.",
    }
)

_SENTENCE_END = re.compile(r"[.!?]+[\"')\]]*(?=\s)")
_PARAGRAPH_BREAK = re.compile(r"\n[ \t\r\f\v]*\n")


class Tokenizer(Protocol):
    def tokenize(self, text: str) -> list[str]: ...

    def detokenize(self, tokens: list[str]) -> str: ...


class WhitespaceTokenizer:
    """Whitespace-delimited word tokens."""

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def detokenize(self, tokens: list[str]) -> str:
        return " ".join(tokens)


DEFAULT_TOKENIZER = WhitespaceTokenizer()


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    title: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("document id must be a nonempty string")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValidationError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class SummaryContext:
    doc_id: str
    text: str


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    index: int
    text: str
    token_span: tuple[int, int]

    @property
    def id(self) -> str:
        return f"{self.doc_id}#{self.index}"


def split_paragraphs(text: str) -> list[str]:
    """Blank-line delimited paragraphs, whitespace-only ones dropped."""
    return [p for p in _PARAGRAPH_BREAK.split(text) if p.strip()]


def split_sentences(paragraph: str) -> list[str]:
    """Rule-based sentence split on ``. ! ?`` followed by whitespace.

    A period closing a word from :data:`ABBREVIATIONS` (or a single-letter
    initial such as ``J.``) is not treated as a boundary. Each returned
    sentence has its internal whitespace collapsed to single spaces.
    """
    sentences = []
    start = 0
    for m in _SENTENCE_END.finditer(paragraph):
        word = paragraph[start : m.end()].split()[-1].lower().lstrip("\"'([")
        if m.group() == "." and (word in ABBREVIATIONS or re.fullmatch(r"[a-z]\.", word)):
            continue
        sentence = " ".join(paragraph[start : m.end()].split())
        if sentence:
            sentences.append(sentence)
        start = m.end()
    tail = " ".join(paragraph[start:].split())
    if tail:
        sentences.append(tail)
    return sentences


def summarize(doc: Document, sentences_per_paragraph: int = DEFAULT_SUMMARY_SENTENCES) -> SummaryContext:
    """Extractive summary: the leading sentences of every paragraph, space-joined."""
    if sentences_per_paragraph < 1:
        raise ValueError("sentences_per_paragraph must be >= 1")
    picked: list[str] = []
    for para in split_paragraphs(doc.text):
        picked.extend(split_sentences(para)[:sentences_per_paragraph])
    return SummaryContext(doc_id=doc.id, text=" ".join(picked))


def window_spans(n_tokens: int, chunk_tokens: int, overlap_tokens: int) -> list[tuple[int, int]]:
    if not 0 <= overlap_tokens < chunk_tokens:
        raise ValueError("require 0 <= overlap_tokens < chunk_tokens")
    stride = chunk_tokens - overlap_tokens
    spans = []
    for start in range(0, n_tokens, stride):
        end = min(start + chunk_tokens, n_tokens)
        spans.append((start, end))
        if end == n_tokens:
            break
    return spans


def chunk(
    doc: Document,
    chunk_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap_tokens: int = DEFAULT_OVERLAP_TOKENS,
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
) -> list[Chunk]:
    """Slide a ``chunk_tokens`` window with stride ``chunk_tokens - overlap_tokens``.

    The last window may be shorter. A document that fits in one window
    yields exactly one chunk; a document with no tokens yields none.
    """
    tokens = tokenizer.tokenize(doc.text)
    return [
        Chunk(doc_id=doc.id, index=i, text=tokenizer.detokenize(tokens[s:e]), token_span=(s, e))
        for i, (s, e) in enumerate(window_spans(len(tokens), chunk_tokens, overlap_tokens))
    ]


def parse_corpus(lines: Iterable[str], source: str = "<corpus>") -> list[Document]:
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", source=source, line=lineno) from None
        if not isinstance(rec, dict):
            raise ParseError("record must be a JSON object", source=source, line=lineno)
        for key in ("id", "text"):
            if not isinstance(rec.get(key), str):
                raise ParseError(f"field {key!r} must be a string", source=source, line=lineno)
        title = rec.get("title")
        if title is not None and not isinstance(title, str):
            raise ParseError("field 'title' must be a string", source=source, line=lineno)
        try:
            doc = Document(id=rec["id"], text=rec["text"], title=title)
        except ValidationError as exc:
            raise ParseError(str(exc), source=source, line=lineno) from None
        if doc.id in seen:
            raise ValidationError(f"{source}:{lineno}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    if not docs:
        logger.warning("corpus %s is empty", source)
    return docs


def load_corpus(path: str | Path) -> list[Document]:
    """Read a newline-delimited JSON corpus (``id``, ``text``, optional ``title``)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_corpus(fh, source=str(path))
