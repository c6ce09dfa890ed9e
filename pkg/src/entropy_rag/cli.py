"""Command-line entry point.

Settings resolve in order: command-line flags, ``ENTROPY_RAG_<KEY>``
environment variables, a flat ``key = value`` config file (``--config``),
then built-in defaults. Keys are the long flag names with dashes or
underscores, e.g. ``n-tokens = 10`` or ``ENTROPY_RAG_N_TOKENS=10``.

Exit codes: 0 success, 2 input error, 3 backend error, 4 evaluation failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__, fixtures
from .corpus import DEFAULT_TOKENIZER, load_corpus
from .embed import HashingEmbedder, HttpEmbedder, build_index
from .errors import BackendError, EntropyRagError, EvaluationError, InputError, ValidationError
from .evaluation import (
    Evaluator,
    answer_to_dict,
    dumps_json,
    load_dataset,
    mode_to_dict,
    report_to_dict,
    reports_csv,
    sample_records,
    sweep_csv,
)
from .latency import DEFAULT_T_ENTROPY_MS, REFERENCE_T_RETRIEVAL_MS, reference_table, table
from .lm import HttpModel, mock_from_file
from .pipeline import LAZY, Mode, Pipeline, prepare

ENV_PREFIX = "ENTROPY_RAG_"
EXIT_OK, EXIT_INPUT, EXIT_BACKEND, EXIT_EVAL = 0, 2, 3, 4

log = logging.getLogger("entropy_rag")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {text!r}")


# key -> (type converter, default)
SETTINGS: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "mode": (str, "lazy"),
    "tau": (float, 1.0),
    "n_tokens": (int, 10),
    "k": (int, 3),
    "aggregation": (str, "mean"),
    "chunk_tokens": (int, 100),
    "overlap": (int, 20),
    "summary_sentences": (int, 2),
    "max_tokens": (int, 32),
    "model": (str, None),
    "embedder": (str, "builtin"),
    "timeout": (float, 60.0),
    "dataset": (str, None),
    "corpus": (str, None),
    "doc": (str, None),
    "scope": (str, "document"),
    "out": (str, None),
    "seed": (int, 0),
    "sample": (int, None),
    "jobs": (int, 1),
    "strict": (_bool, True),
    "taus": (_floats, [0.5, 1.0, 1.5]),
    "t_retrieval": (_floats, list(REFERENCE_T_RETRIEVAL_MS)),
    "t_entropy": (float, DEFAULT_T_ENTROPY_MS),
}


def read_config_file(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string("[config]\n" + p.read_text(encoding="utf-8"), source=str(p))
    except configparser.Error as exc:
        raise InputError(f"cannot parse config file {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in parser["config"].items()}


def resolve(args: argparse.Namespace, environ: dict[str, str] | None = None) -> dict[str, Any]:
    environ = os.environ if environ is None else environ
    file_values = read_config_file(args.config) if args.config else {}
    unknown = set(file_values) - set(SETTINGS)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out: dict[str, Any] = {}
    for key, (conv, default) in SETTINGS.items():
        value = getattr(args, key, None)
        if value is None:
            value = environ.get(ENV_PREFIX + key.upper())
        if value is None:
            value = file_values.get(key)
        if value is None:
            out[key] = default
            continue
        try:
            out[key] = value if not isinstance(value, str) else conv(value)
        except (TypeError, ValueError):
            raise InputError(f"invalid value for {key}: {value!r}") from None
    return out


def _existing(path: str | None, what: str, builtin: Path | None = None) -> Path:
    if path is None:
        raise InputError(f"--{what} is required")
    if path == "builtin" and builtin is not None:
        return builtin
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} file not found: {path}")
    return p


def make_model(cfg: dict[str, Any]):
    spec = cfg["model"]
    if not spec:
        raise InputError("--model is required (mock:PATH, mock:builtin, or http:URL)")
    if spec.startswith("mock:"):
        return mock_from_file(_existing(spec[5:], "model", fixtures.MOCK_SCRIPT))
    if spec.startswith(("http://", "https://")):
        return HttpModel(spec, timeout=cfg["timeout"])
    if spec.startswith("http:"):
        return HttpModel(spec[5:], timeout=cfg["timeout"])
    raise InputError(f"unrecognized model backend {spec!r}")


def make_embedder(cfg: dict[str, Any]):
    spec = cfg["embedder"]
    if spec == "builtin":
        return HashingEmbedder()
    if spec.startswith(("http://", "https://")):
        return HttpEmbedder(spec, timeout=cfg["timeout"])
    if spec.startswith("http:"):
        return HttpEmbedder(spec[5:], timeout=cfg["timeout"])
    raise InputError(f"unrecognized embedder backend {spec!r}")


def make_mode(name: str, cfg: dict[str, Any], tau: float | None = None) -> Mode:
    try:
        return Mode.parse(
            name,
            tau=cfg["tau"] if tau is None else tau,
            n=cfg["n_tokens"],
            k=cfg["k"],
            aggregation=cfg["aggregation"],
        )
    except ValidationError as exc:
        raise InputError(str(exc)) from None


def make_pipeline(cfg: dict[str, Any]) -> Pipeline:
    return Pipeline(make_model(cfg), make_embedder(cfg), max_tokens=cfg["max_tokens"])


def _prepare_kwargs(cfg: dict[str, Any]) -> dict[str, Any]:
    if not 0 <= cfg["overlap"] < cfg["chunk_tokens"]:
        raise InputError("require 0 <= --overlap < --chunk-tokens")
    return dict(
        chunk_tokens=cfg["chunk_tokens"],
        overlap_tokens=cfg["overlap"],
        summary_sentences=cfg["summary_sentences"],
    )


def _write_outputs(prefix: str | None, json_text: str, csv_text: str) -> None:
    if not prefix:
        return
    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{base}.json").write_text(json_text, encoding="utf-8")
    Path(f"{base}.csv").write_text(csv_text, encoding="utf-8")


def _run_config(cfg: dict[str, Any]) -> dict[str, Any]:
    keys = ("tau", "n_tokens", "k", "aggregation", "chunk_tokens", "overlap", "summary_sentences",
            "max_tokens", "scope", "seed", "sample")
    out = {k: cfg[k] for k in keys}
    if isinstance(out["tau"], float) and not math.isfinite(out["tau"]):
        out["tau"] = None
    return out


# -- commands --------------------------------------------------------------


def cmd_index(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    docs = load_corpus(_existing(cfg["corpus"], "corpus", fixtures.CORPUS))
    kwargs = _prepare_kwargs(cfg)
    if not docs:
        print("warning: corpus is empty", file=sys.stderr)
    embedder = make_embedder(cfg)
    per_doc = []
    dimension = None
    for doc in docs:
        prepared = prepare(doc, embedder, **kwargs)
        dimension = prepared.index.dimension
        per_doc.append(
            {
                "id": doc.id,
                "chunks": len(prepared.chunks),
                "tokens": len(DEFAULT_TOKENIZER.tokenize(doc.text)),
                "summary_tokens": len(DEFAULT_TOKENIZER.tokenize(prepared.summary.text)),
                "summary_chars": len(prepared.summary.text),
            }
        )
    manifest = {
        "documents": len(docs),
        "chunks": sum(d["chunks"] for d in per_doc),
        "chunk_tokens": cfg["chunk_tokens"],
        "overlap_tokens": cfg["overlap"],
        "dimension": dimension,
        "per_document": per_doc,
    }
    text = dumps_json(manifest)
    sys.stdout.write(text)
    if cfg["out"]:
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_ask(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    docs = load_corpus(_existing(cfg["corpus"], "corpus", fixtures.CORPUS))
    if not docs:
        raise InputError("corpus is empty")
    by_id = {d.id: d for d in docs}
    if cfg["doc"] is None:
        if len(docs) != 1:
            raise InputError("corpus has several documents; choose one with --doc")
        doc = docs[0]
    elif cfg["doc"] in by_id:
        doc = by_id[cfg["doc"]]
    else:
        raise InputError(f"no document with id {cfg['doc']!r}")
    mode = make_mode(cfg["mode"], cfg)
    pipeline = make_pipeline(cfg)
    kwargs = _prepare_kwargs(cfg)
    prepared = prepare(doc, pipeline.embedder, **kwargs)
    index = None
    if cfg["scope"] == "corpus":
        chunks = [c for d in docs for c in prepare(d, pipeline.embedder, **kwargs).chunks]
        index = build_index(chunks, pipeline.embedder)
    ans = pipeline.answer(args.query, prepared, mode, gold_context=doc.text, index=index)
    if args.json:
        sys.stdout.write(dumps_json({"mode": mode_to_dict(mode), "doc": doc.id, **answer_to_dict(ans)}))
        return EXIT_OK
    print(f"answer: {ans.answer_text}")
    print(f"mode: {mode.label}")
    if mode.kind == LAZY:
        print(f"retrieval: {'triggered' if ans.retrieval_performed else 'skipped'}")
        h = ans.entropy_trace.mean_first_n
        print(f"mean entropy: {h:.4f} nats over {ans.entropy_trace.n_used} tokens (tau {mode.tau:g})")
    elif mode.retrieves:
        print("retrieval: performed")
    if ans.retrieval_performed:
        print(f"retrieved chunks: {', '.join(ans.retrieved_chunks)}")
    print(f"input tokens: {ans.input_tokens}")
    return EXIT_OK


def _evaluator(cfg: dict[str, Any]) -> Evaluator:
    records = load_dataset(_existing(cfg["dataset"], "dataset", fixtures.DATASET))
    if not records:
        raise InputError("dataset has no records")
    records = sample_records(records, cfg["sample"], cfg["seed"])
    return Evaluator(
        make_pipeline(cfg),
        records,
        scope=cfg["scope"],
        strict=cfg["strict"],
        jobs=cfg["jobs"],
        **_prepare_kwargs(cfg),
    )


def cmd_eval(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    modes = [make_mode(m, cfg) for m in cfg["mode"].split(",") if m.strip()]
    if not modes:
        raise InputError("no modes given")
    evaluator = _evaluator(cfg)
    reports = [evaluator.run(m) for m in modes]
    json_text = dumps_json({"config": _run_config(cfg), "reports": [report_to_dict(r) for r in reports]})
    csv_text = reports_csv(reports)
    _write_outputs(cfg["out"], json_text, csv_text)
    sys.stdout.write(json_text if args.json else csv_text)
    return EXIT_OK


def cmd_sweep(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    taus = cfg["taus"]
    if not taus or any(not t >= 0 for t in taus):
        raise InputError("--taus needs nonnegative thresholds")
    base = make_mode("lazy", cfg)
    rows = _evaluator(cfg).sweep(taus, base)
    payload = {
        "config": _run_config(cfg),
        "sweep": [{"tau": t if math.isfinite(t) else None, "report": report_to_dict(r)} for t, r in rows],
    }
    json_text = dumps_json(payload)
    csv_text = sweep_csv(rows)
    _write_outputs(cfg["out"], json_text, csv_text)
    sys.stdout.write(json_text if args.json else csv_text)
    return EXIT_OK


def _configs_from_report(path: str) -> list[tuple[str, float]]:
    p = _existing(path, "report")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse report {path}: {exc.msg}") from None
    if isinstance(data, dict) and "reports" in data:
        reports = data["reports"]
    elif isinstance(data, dict) and "sweep" in data:
        reports = [row["report"] for row in data["sweep"]]
    elif isinstance(data, dict) and "retrieval_rate" in data:
        reports = [data]
    else:
        raise InputError(f"{path} is not an eval or sweep report")
    try:
        return [(r["mode"]["label"], float(r["retrieval_rate"])) for r in reports]
    except (KeyError, TypeError, ValueError):
        raise InputError(f"{path} has malformed report entries") from None


def _parse_rate(text: str) -> tuple[str, float]:
    label, sep, value = text.rpartition("=")
    if not sep:
        label = f"R={value}"
    try:
        return label, float(value)
    except ValueError:
        raise InputError(f"invalid --rate {text!r}; expected LABEL=R or R") from None


def cmd_latency(cfg: dict[str, Any], args: argparse.Namespace) -> int:
    if args.paper_defaults:
        tbl = reference_table()
    else:
        configs: list[tuple[str, float]] = []
        if args.from_report:
            configs += _configs_from_report(args.from_report)
        configs += [_parse_rate(r) for r in args.rate or []]
        if not configs:
            raise InputError("give --paper-defaults, --from-report, or --rate")
        try:
            tbl = table(configs, cfg["t_entropy"], cfg["t_retrieval"])
        except ValidationError as exc:
            raise InputError(str(exc)) from None
    json_text = dumps_json(tbl.to_dict())
    _write_outputs(cfg["out"], json_text, tbl.to_csv())
    sys.stdout.write(json_text if args.json else tbl.to_text())
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--corpus", help="NDJSON corpus file, or 'builtin'")
    corpus.add_argument("--chunk-tokens", type=int, dest="chunk_tokens")
    corpus.add_argument("--overlap", type=int)
    corpus.add_argument("--summary-sentences", type=int, dest="summary_sentences")
    corpus.add_argument("--embedder", help="'builtin' or http:URL")
    corpus.add_argument("--timeout", type=float, help="backend timeout in seconds")
    corpus.add_argument("--out", help="output path (prefix for .json/.csv pairs)")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--mode", help="lazy, baseline, standard, strong, oracle (comma list for eval)")
    run.add_argument("--tau", type=float, help="entropy threshold in nats")
    run.add_argument("--n-tokens", type=int, dest="n_tokens", help="tokens averaged by the gate")
    run.add_argument("--k", type=int, help="chunks retrieved")
    run.add_argument("--aggregation", choices=["mean", "streaming"])
    run.add_argument("--max-tokens", type=int, dest="max_tokens")
    run.add_argument("--model", help="mock:PATH, mock:builtin, or http:URL")
    run.add_argument("--scope", choices=["document", "corpus"], help="retrieval scope")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset", help="eval dataset JSON, or 'builtin'")
    data.add_argument("--seed", type=int)
    data.add_argument("--sample", type=int, help="evaluate a seeded random subset of this size")
    data.add_argument("--jobs", type=int, help="parallel queries")
    data.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None,
                      help="abort on the first failing record (default) or record it and continue")

    parser = argparse.ArgumentParser(prog="entropy-rag", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("index", parents=[common, corpus], help="chunk and index a corpus, print a manifest")
    p = sub.add_parser("ask", parents=[common, corpus, run], help="answer one query")
    p.add_argument("query")
    p.add_argument("--doc", help="document id to answer against")
    sub.add_parser("eval", parents=[common, corpus, run, data], help="evaluate modes on a dataset")
    p = sub.add_parser("sweep", parents=[common, corpus, run, data], help="sweep lazy-mode thresholds")
    p.add_argument("--taus", type=_floats, help="comma-separated thresholds (inf allowed)")
    p = sub.add_parser("latency", parents=[common], help="latency savings and break-even table")
    p.add_argument("--paper-defaults", action="store_true", dest="paper_defaults",
                   help="the published 3x3 configuration: R in {0.92, 0.74, 0.54}, 200/500/1000 ms")
    p.add_argument("--from-report", dest="from_report", help="take retrieval rates from an eval/sweep JSON")
    p.add_argument("--rate", action="append", help="LABEL=R retrieval rate (repeatable)")
    p.add_argument("--t-retrieval", type=_floats, dest="t_retrieval", help="comma-separated ms")
    p.add_argument("--t-entropy", type=float, dest="t_entropy", help="entropy check cost in ms")
    p.add_argument("--out", help="write PREFIX.json and PREFIX.csv")
    return parser


COMMANDS = {"index": cmd_index, "ask": cmd_ask, "eval": cmd_eval, "sweep": cmd_sweep, "latency": cmd_latency}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except BackendError as exc:
        kind = "retryable" if exc.retryable else "fatal"
        print(f"error ({kind} backend failure): {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EntropyRagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
