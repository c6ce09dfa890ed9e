"""Bundled demo data: a 20-document corpus, a matching QA set, and a mock model script.

Regenerate with ``scripts/build_fixtures.py``.
"""

from pathlib import Path

FIXTURES_DIR = Path(__file__).resolve().parent
CORPUS = FIXTURES_DIR / "corpus.jsonl"
DATASET = FIXTURES_DIR / "dataset.json"
MOCK_SCRIPT = FIXTURES_DIR / "mock_script.json"
