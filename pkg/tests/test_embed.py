import json
import math
from pathlib import Path

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_rag.corpus import Chunk
from entropy_rag.embed import HashingEmbedder, HttpEmbedder, build_index, normalize, search
from entropy_rag.errors import BackendError, IndexBuildError, ValidationError

GOLDEN = Path(__file__).parent / "data" / "hashing_embedder_golden.json"


class FixedEmbedder:
    """Returns preset vectors keyed by chunk text."""

    def __init__(self, table):
        self.table = table
        self.dimension = len(next(iter(table.values())))

    def embed(self, text):
        return normalize(self.table[text])

    def embed_many(self, texts):
        return np.stack([self.embed(t) for t in texts])


def make_chunks(n):
    return [Chunk("d", i, f"chunk {i}", (i, i + 1)) for i in range(n)]


def oracle_ranking(matrix, query, k):
    """Exhaustive pairwise cosine scores, then a full sort (desc score, asc position)."""
    scored = []
    for i, row in enumerate(matrix):
        cos = math.fsum(a * b for a, b in zip(row, query)) / (
            math.sqrt(math.fsum(a * a for a in row)) * math.sqrt(math.fsum(b * b for b in query))
        )
        scored.append((-cos, i))
    scored.sort()
    return [i for _, i in scored[:k]]


def random_index(rng, n, d, dup_fraction=0.3):
    vecs = rng.normal(size=(n, d))
    for i in range(n):
        if i > 0 and rng.random() < dup_fraction:
            vecs[i] = vecs[rng.integers(0, i)]
    chunks = make_chunks(n)
    emb = FixedEmbedder({c.text: v for c, v in zip(chunks, vecs)})
    return build_index(chunks, emb)


class TestHashingEmbedder:
    def test_deterministic(self):
        e = HashingEmbedder()
        assert e.embed("hello world").tobytes() == e.embed("hello world").tobytes()

    @given(st.text(min_size=1).filter(lambda s: s.strip()))
    def test_unit_norm(self, text):
        v = HashingEmbedder().embed(text)
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-6
        assert v.shape == (64,)

    def test_golden(self):
        golden = json.loads(GOLDEN.read_text())
        e = HashingEmbedder(golden["dimension"])
        for item in golden["vectors"]:
            assert e.embed(item["text"]).tolist() == item["vector"], item["text"]

    def test_lexical_overlap_scores_higher(self):
        e = HashingEmbedder()
        q = e.embed("brass gears in the clock")
        near = e.embed("The clock movement has 417 brass gears.")
        far = e.embed("Sheep graze on the highland plateau.")
        assert q @ near > q @ far

    def test_case_and_punctuation_insensitive(self):
        e = HashingEmbedder()
        assert np.array_equal(e.embed("Paris, France!"), e.embed("paris france"))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            HashingEmbedder().embed("   ")


class TestNormalize:
    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=16).filter(lambda v: any(abs(x) > 1e-3 for x in v)),
        st.floats(1e-3, 1e3),
    )
    def test_scale_invariance(self, values, scale):
        v = np.asarray(values)
        assert np.allclose(normalize(v), normalize(v * scale), atol=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            normalize(np.zeros(3))


class TestBuildIndex:
    def test_ten_chunks(self):
        idx = build_index(make_chunks(10), HashingEmbedder())
        assert len(idx) == 10 and idx.dimension == 64

    def test_empty(self):
        with pytest.raises(IndexBuildError, match="empty index"):
            build_index([], HashingEmbedder())

    def test_rebuild_identical(self):
        a = build_index(make_chunks(5), HashingEmbedder())
        b = build_index(make_chunks(5), HashingEmbedder())
        assert a.chunks == b.chunks and np.array_equal(a.matrix, b.matrix)

    def test_dimension_mismatch(self):
        class Ragged:
            dimension = None

            def embed_many(self, texts):
                return [np.ones(2) / math.sqrt(2), np.ones(3) / math.sqrt(3)]

        with pytest.raises(IndexBuildError, match="dimension"):
            build_index(make_chunks(2), Ragged())

    def test_duplicate_chunk(self):
        c = make_chunks(1)
        with pytest.raises(IndexBuildError):
            build_index(c + c, HashingEmbedder())

    def test_immutable(self):
        idx = build_index(make_chunks(2), HashingEmbedder())
        with pytest.raises(ValueError):
            idx.matrix[0, 0] = 1.0


class TestSearch:
    def test_self_similarity(self):
        idx = build_index(make_chunks(6), HashingEmbedder())
        res = search(idx, idx.matrix[4], k=3)
        assert res[0].chunk.index == 4 and res[0].rank == 1
        assert res[0].score == pytest.approx(1.0, abs=1e-6)

    def test_k_exceeds_entries(self):
        idx = build_index(make_chunks(4), HashingEmbedder())
        res = search(idx, idx.matrix[0], k=10)
        assert len(res) == 4
        assert [r.rank for r in res] == [1, 2, 3, 4]
        assert all(a.score >= b.score for a, b in zip(res, res[1:]))

    def test_default_k_is_three(self):
        idx = build_index(make_chunks(8), HashingEmbedder())
        assert len(search(idx, idx.matrix[0])) == 3

    def test_dimension_mismatch(self):
        idx = build_index(make_chunks(2), HashingEmbedder())
        with pytest.raises(ValidationError):
            search(idx, np.ones(3) / math.sqrt(3))

    def test_bad_k(self):
        idx = build_index(make_chunks(2), HashingEmbedder())
        with pytest.raises(ValidationError):
            search(idx, idx.matrix[0], k=0)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(1, 101)), int(rng.integers(1, 17))
        idx = random_index(rng, n, d)
        q = normalize(rng.normal(size=d))
        k = int(rng.integers(1, n + 3))
        assert [r.chunk.index for r in search(idx, q, k)] == oracle_ranking(idx.matrix, q, k)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_score_bounds_and_monotone(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 17))
        idx = random_index(rng, int(rng.integers(1, 50)), d)
        res = search(idx, normalize(rng.normal(size=d)), 100)
        assert all(-1 - 1e-6 <= r.score <= 1 + 1e-6 for r in res)
        assert all(a.score >= b.score for a, b in zip(res, res[1:]))


def _handler(vectors=None, status=200, exc=None):
    def handle(request):
        if exc is not None:
            raise exc
        body = json.loads(request.content)
        assert set(body) == {"texts"}
        vecs = vectors if vectors is not None else [[float(len(t)), 1.0, 0.0] for t in body["texts"]]
        return httpx.Response(status, json={"vectors": vecs})

    return handle


class TestHttpEmbedder:
    def client(self, **kw):
        return httpx.Client(transport=httpx.MockTransport(_handler(**kw)))

    def test_normalizes_and_pins_dimension(self):
        e = HttpEmbedder("http://emb/embed", client=self.client())
        v = e.embed_many(["ab", "abcd"])
        assert v.shape == (2, 3)
        assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
        assert e.dimension == 3

    def test_dimension_change_rejected(self):
        e = HttpEmbedder("http://emb/embed", client=self.client(vectors=[[1.0, 0.0]]))
        e.embed("x")
        e._client = self.client(vectors=[[1.0, 0.0, 0.0]])
        with pytest.raises(BackendError, match="dimension"):
            e.embed("y")

    def test_server_error_retryable(self):
        e = HttpEmbedder("http://emb/embed", client=self.client(status=503))
        with pytest.raises(BackendError) as exc:
            e.embed("x")
        assert exc.value.retryable and exc.value.status == 503

    def test_client_error_fatal(self):
        e = HttpEmbedder("http://emb/embed", client=self.client(status=400))
        with pytest.raises(BackendError) as exc:
            e.embed("x")
        assert not exc.value.retryable

    def test_timeout_retryable(self):
        e = HttpEmbedder("http://emb/embed", client=self.client(exc=httpx.ReadTimeout("slow")))
        with pytest.raises(BackendError) as exc:
            e.embed("x")
        assert exc.value.retryable

    def test_wrong_count_fatal(self):
        e = HttpEmbedder("http://emb/embed", client=self.client(vectors=[]))
        with pytest.raises(BackendError) as exc:
            e.embed("x")
        assert not exc.value.retryable
