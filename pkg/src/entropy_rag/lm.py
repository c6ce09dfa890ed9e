"""Language-model abstraction: token steps with their next-token distributions.

Two implementations are provided. :class:`MockModel` replays a JSON script
and always reports full distributions. :class:`HttpModel` talks to an
inference server that exposes only top-K log-probabilities, so its steps
carry a residual bucket for the unlisted mass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Protocol, Sequence

import httpx

from ._http import post_json
from .errors import BackendError, ParseError, ValidationError

DEFAULT_MAX_TOKENS = 32
PROB_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TokenStep:
    """One generated token and the distribution it was chosen from.

    ``probs`` maps token strings to probabilities. When ``residual`` is
    positive the distribution is truncated: the unlisted tokens share that
    mass and are treated as a single outcome.
    """

    token: str
    probs: dict[str, float]
    residual: float = 0.0

    def validate(self) -> None:
        values = list(self.probs.values())
        if not values:
            raise ValidationError(f"token {self.token!r}: empty distribution")
        if any(not math.isfinite(p) or p < 0.0 for p in values) or not math.isfinite(self.residual) or self.residual < 0.0:
            raise ValidationError(f"token {self.token!r}: probabilities must be finite and nonnegative")
        total = math.fsum(values) + self.residual
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ValidationError(f"token {self.token!r}: distribution sums to {total:.6g}, expected 1")

    @property
    def truncated(self) -> bool:
        return self.residual > 0.0


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")


class LanguageModel(Protocol):
    def generate(self, request: GenerationRequest) -> Iterator[TokenStep]: ...


def _until_stop(steps: Iterator[TokenStep], request: GenerationRequest) -> Iterator[TokenStep]:
    """Yield at most ``max_tokens`` steps, ending with the one that completes a stop sequence."""
    text = ""
    for i, step in enumerate(steps):
        if i >= request.max_tokens:
            return
        yield step
        text += step.token
        if any(s and s in text for s in request.stop_sequences):
            return


@dataclass(frozen=True)
class MockRule:
    patterns: tuple[str, ...]
    steps: tuple[TokenStep, ...]

    def matches(self, prompt: str) -> bool:
        return all(p in prompt for p in self.patterns)


@dataclass(frozen=True)
class MockScript:
    rules: tuple[MockRule, ...]
    default: MockRule = field(default_factory=lambda: MockRule((), ()))


class MockModel:
    """Deterministic scripted model; the first rule whose patterns all occur in the prompt wins."""

    deterministic = True

    def __init__(self, script: MockScript):
        self.script = script

    def select(self, prompt: str) -> MockRule:
        for rule in self.script.rules:
            if rule.matches(prompt):
                return rule
        return self.script.default

    def generate(self, request: GenerationRequest) -> Iterator[TokenStep]:
        if not request.prompt:
            raise ValidationError("prompt must be nonempty")
        return _until_stop(iter(self.select(request.prompt).steps), request)


def _parse_step(raw: object, where: str) -> TokenStep:
    if not isinstance(raw, dict) or not isinstance(raw.get("token"), str) or not isinstance(raw.get("probs"), dict):
        raise ParseError(f"{where}: step needs string 'token' and object 'probs'")
    try:
        probs = {str(k): float(v) for k, v in raw["probs"].items()}
        residual = float(raw.get("residual", 0.0))
    except (TypeError, ValueError):
        raise ParseError(f"{where}: probabilities must be numbers") from None
    step = TokenStep(token=raw["token"], probs=probs, residual=residual)
    try:
        step.validate()
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    top = max(probs.values())
    if probs.get(step.token, -1.0) != top or residual > top:
        raise ValidationError(f"{where}: token {step.token!r} is not the argmax of its distribution")
    return step


def _parse_rule(raw: object, where: str, *, needs_pattern: bool) -> MockRule:
    if not isinstance(raw, dict) or not isinstance(raw.get("steps"), list):
        raise ParseError(f"{where}: rule must be an object with a 'steps' list")
    pattern = raw.get("pattern")
    if pattern is None and not needs_pattern:
        patterns: tuple[str, ...] = ()
    elif isinstance(pattern, str) and pattern:
        patterns = (pattern,)
    elif isinstance(pattern, list) and pattern and all(isinstance(p, str) and p for p in pattern):
        patterns = tuple(pattern)
    else:
        raise ParseError(f"{where}: 'pattern' must be a nonempty string or list of strings")
    steps = tuple(_parse_step(s, f"{where} step {j}") for j, s in enumerate(raw["steps"]))
    return MockRule(patterns=patterns, steps=steps)


def parse_mock_script(data: object) -> MockScript:
    if not isinstance(data, dict):
        raise ParseError("mock script must be a JSON object")
    rules_raw = data.get("rules", [])
    if not isinstance(rules_raw, list):
        raise ParseError("'rules' must be a list")
    if "default" not in data:
        raise ParseError("mock script requires a 'default' rule")
    rules = tuple(_parse_rule(r, f"rule {i}", needs_pattern=True) for i, r in enumerate(rules_raw))
    default = _parse_rule(data["default"], "default rule", needs_pattern=False)
    return MockScript(rules=rules, default=default)


def mock_from_file(path: str | Path) -> MockModel:
    """Load a mock script::

        {"rules": [{"pattern": "...", "steps": [{"token": "Paris", "probs": {"Paris": 1.0}}]}],
         "default": {"steps": [...]}}

    ``pattern`` may also be a list of substrings that must all occur.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", source=str(path), line=exc.lineno) from None
    return MockModel(parse_mock_script(data))


class HttpModel:
    """Adapter for an inference server returning top-K log-probabilities.

    Request: ``{"prompt", "max_tokens", "logprobs": K}``. Response:
    ``{"tokens": [...], "top_logprobs": [[{"token", "logprob"}, ...], ...]}``.
    Each step becomes a truncated :class:`TokenStep`, so entropy computed
    from it is a lower bound on the full-vocabulary entropy.
    """

    deterministic = True

    def __init__(self, url: str, top_k: int = 20, timeout: float = 60.0, client: httpx.Client | None = None):
        self.url = url
        self.top_k = top_k
        self._client = client or httpx.Client(timeout=timeout)

    def generate(self, request: GenerationRequest) -> Iterator[TokenStep]:
        if not request.prompt:
            raise ValidationError("prompt must be nonempty")
        body = {"prompt": request.prompt, "max_tokens": request.max_tokens, "logprobs": self.top_k}
        payload = post_json(self._client, self.url, body)
        steps = steps_from_logprobs(payload)
        return _until_stop(iter(steps), request)


def steps_from_logprobs(payload: object) -> list[TokenStep]:
    """Convert an inference-server response into truncated token steps."""
    if not isinstance(payload, dict):
        raise BackendError("inference response is not an object", retryable=False)
    tokens, tops = payload.get("tokens"), payload.get("top_logprobs")
    if not isinstance(tokens, list) or not isinstance(tops, list) or len(tokens) != len(tops):
        raise BackendError("inference response needs equal-length 'tokens' and 'top_logprobs'", retryable=False)
    steps = []
    for i, (tok, entries) in enumerate(zip(tokens, tops)):
        probs: dict[str, float] = {}
        try:
            for e in entries:
                probs[str(e["token"])] = probs.get(str(e["token"]), 0.0) + math.exp(float(e["logprob"]))
        except (TypeError, KeyError, ValueError, OverflowError):
            raise BackendError(f"malformed top_logprobs at step {i}", retryable=False) from None
        if not isinstance(tok, str) or not probs:
            raise BackendError(f"malformed token at step {i}", retryable=False)
        listed = math.fsum(probs.values())
        if listed > 1.0 + PROB_TOLERANCE:
            raise BackendError(f"step {i}: listed probabilities sum to {listed:.6g} > 1", retryable=False)
        steps.append(TokenStep(token=tok, probs=probs, residual=max(0.0, 1.0 - listed)))
    return steps


def collect(model: LanguageModel, request: GenerationRequest) -> list[TokenStep]:
    return list(model.generate(request))


def text_of(steps: Sequence[TokenStep]) -> str:
    return "".join(s.token for s in steps)
