"""Closed-form per-query latency model for entropy-gated retrieval.

Only retrieval-side latency is modeled; the extra generation pass on
triggered queries is not counted.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .errors import InputError, ValidationError

DEFAULT_T_ENTROPY_MS = 50.0

# (label, retrieval rate) measured at tau = 0.5 / 1.0 / 1.5.
REFERENCE_CONFIGS: tuple[tuple[str, float], ...] = (("tau=0.5", 0.92), ("tau=1.0", 0.74), ("tau=1.5", 0.54))
REFERENCE_T_RETRIEVAL_MS: tuple[float, ...] = (200.0, 500.0, 1000.0)


@dataclass(frozen=True)
class LatencyScenario:
    retrieval_rate: float
    t_retrieval: float
    t_entropy: float = DEFAULT_T_ENTROPY_MS

    def __post_init__(self):
        if not 0.0 <= self.retrieval_rate <= 1.0:
            raise ValidationError("retrieval_rate must be in [0, 1]")
        if not (self.t_retrieval >= 0.0 and self.t_entropy >= 0.0):
            raise ValidationError("latencies must be >= 0")


def overhead(s: LatencyScenario) -> float:
    """Expected added latency: the entropy check plus retrieval on the triggered fraction."""
    return s.t_entropy + s.retrieval_rate * s.t_retrieval


def savings(s: LatencyScenario) -> float:
    """Per-query latency saved versus always retrieving; negative means net overhead."""
    return (1.0 - s.retrieval_rate) * s.t_retrieval - s.t_entropy


def break_even(retrieval_rate: float, t_entropy: float = DEFAULT_T_ENTROPY_MS) -> float | None:
    """Retrieval latency above which gating saves time, or ``None`` when R == 1."""
    if not 0.0 <= retrieval_rate <= 1.0:
        raise ValidationError("retrieval_rate must be in [0, 1]")
    if retrieval_rate == 1.0:
        return None
    return t_entropy / (1.0 - retrieval_rate)


def round_half_away(x: float) -> int:
    d = Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return int(d)


@dataclass(frozen=True)
class LatencyRow:
    label: str
    retrieval_rate: float
    break_even_ms: float | None
    savings_ms: tuple[float, ...]


@dataclass(frozen=True)
class LatencyTable:
    t_entropy: float
    t_retrieval: tuple[float, ...]
    rows: tuple[LatencyRow, ...]

    @property
    def columns(self) -> list[str]:
        return ["config", "retrieval_rate", "break_even_ms"] + [f"savings@{_ms(t)}ms" for t in self.t_retrieval]

    def display_rows(self) -> list[list[str]]:
        """Rows with integer-rounded, signed values as printed in reports."""
        out = []
        for r in self.rows:
            be = "n/a" if r.break_even_ms is None else str(round_half_away(r.break_even_ms))
            cells = [_signed(round_half_away(v)) for v in r.savings_ms]
            out.append([r.label, f"{r.retrieval_rate:.4f}", be, *cells])
        return out

    def to_dict(self) -> dict:
        return {
            "t_entropy_ms": self.t_entropy,
            "t_retrieval_ms": list(self.t_retrieval),
            "columns": self.columns,
            "rows": [
                {
                    "config": r.label,
                    "retrieval_rate": r.retrieval_rate,
                    "break_even_ms": r.break_even_ms,
                    "savings_ms": {f"{_ms(t)}": v for t, v in zip(self.t_retrieval, r.savings_ms)},
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            be = "n/a" if r.break_even_ms is None else f"{r.break_even_ms:.4f}"
            writer.writerow([r.label, f"{r.retrieval_rate:.4f}", be, *(f"{v:.4f}" for v in r.savings_ms)])
        return buf.getvalue()

    def to_text(self) -> str:
        rows = [self.columns] + self.display_rows()
        widths = [max(len(row[i]) for row in rows) for i in range(len(self.columns))]
        lines = []
        for j, row in enumerate(rows):
            lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
            if j == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _ms(t: float) -> str:
    return f"{t:g}"


def _signed(v: int) -> str:
    return f"+{v}" if v > 0 else str(v)


def table(
    configs: Sequence[tuple[str, float]],
    t_entropy: float = DEFAULT_T_ENTROPY_MS,
    t_retrieval: Sequence[float] = REFERENCE_T_RETRIEVAL_MS,
) -> LatencyTable:
    if not configs:
        raise InputError("no configurations")
    if not t_retrieval:
        raise InputError("no scenarios")
    rows = []
    for label, rate in configs:
        cells = tuple(savings(LatencyScenario(rate, t, t_entropy)) for t in t_retrieval)
        rows.append(LatencyRow(label, rate, break_even(rate, t_entropy), cells))
    return LatencyTable(t_entropy=t_entropy, t_retrieval=tuple(float(t) for t in t_retrieval), rows=tuple(rows))


def reference_table() -> LatencyTable:
    return table(REFERENCE_CONFIGS, DEFAULT_T_ENTROPY_MS, REFERENCE_T_RETRIEVAL_MS)
