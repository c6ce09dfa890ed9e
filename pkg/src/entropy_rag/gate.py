"""Entropy of next-token distributions and the retrieval trigger."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import _backend
from .lm import TokenStep

DEFAULT_N_TOKENS = 10
MEAN = "mean"
STREAMING = "streaming"
AGGREGATIONS = (MEAN, STREAMING)


def step_entropy(step: TokenStep) -> float:
    """Shannon entropy (nats) of the step's distribution.

    A truncated step's residual mass counts as one extra outcome.
    """
    step.validate()
    values = list(step.probs.values())
    if step.residual > 0.0:
        values.append(step.residual)
    return _backend.entropy(values)


@dataclass(frozen=True)
class EntropyTrace:
    """Per-step entropies plus their mean over the first ``n_used`` steps.

    An empty generation has ``n_used == 0`` and ``mean_first_n == inf`` so
    that it triggers retrieval at every finite threshold.
    """

    per_step: tuple[float, ...]
    mean_first_n: float
    n_used: int

    @property
    def peak(self) -> float:
        return max(self.per_step) if self.per_step else math.inf


def mean_entropy(steps: Sequence[TokenStep], n: int = DEFAULT_N_TOKENS) -> EntropyTrace:
    if n < 1:
        raise ValueError("n must be >= 1")
    per_step = tuple(step_entropy(s) for s in steps)
    used = per_step[:n]
    mean = math.fsum(used) / len(used) if used else math.inf
    return EntropyTrace(per_step=per_step, mean_first_n=mean, n_used=len(used))


@dataclass(frozen=True)
class GateDecision:
    triggered: bool
    threshold: float
    mean_entropy: float
    aggregation: str = MEAN


def decide(trace: EntropyTrace, tau: float, aggregation: str = MEAN) -> GateDecision:
    """Trigger iff the statistic strictly exceeds ``tau``.

    ``mean`` compares the mean over the first n steps; ``streaming`` compares
    the largest single-step entropy seen.
    """
    if not tau >= 0.0:
        raise ValueError("tau must be >= 0")
    if aggregation == MEAN:
        statistic = trace.mean_first_n
    elif aggregation == STREAMING:
        statistic = trace.peak
    else:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    return GateDecision(
        triggered=statistic > tau,
        threshold=tau,
        mean_entropy=trace.mean_first_n,
        aggregation=aggregation,
    )
