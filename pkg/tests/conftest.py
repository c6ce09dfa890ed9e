import importlib

import pytest

from entropy_rag import _pykernels, fixtures
from entropy_rag.embed import HashingEmbedder
from entropy_rag.evaluation import load_dataset
from entropy_rag.lm import mock_from_file
from entropy_rag.pipeline import Pipeline

try:
    _compiled = importlib.import_module("entropy_rag._kernels")
except ImportError:  # extension not built
    _compiled = None

KERNEL_BACKENDS = [pytest.param(_pykernels, id="python")]
KERNEL_BACKENDS.append(
    pytest.param(_compiled, id="compiled", marks=pytest.mark.skipif(_compiled is None, reason="extension not built"))
)


@pytest.fixture(params=KERNEL_BACKENDS)
def kernels(request):
    return request.param


@pytest.fixture(scope="session")
def compiled_kernels():
    if _compiled is None:
        pytest.skip("extension not built")
    return _compiled


@pytest.fixture(scope="session")
def mock_model():
    return mock_from_file(fixtures.MOCK_SCRIPT)


@pytest.fixture(scope="session")
def embedder():
    return HashingEmbedder()


@pytest.fixture(scope="session")
def fixture_dataset():
    return load_dataset(fixtures.DATASET)


@pytest.fixture
def pipeline(mock_model, embedder):
    return Pipeline(mock_model, embedder)


# Acceptance criteria record a verdict line here; printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
