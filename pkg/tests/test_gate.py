import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_rag.gate import EntropyTrace, decide, mean_entropy, step_entropy
from entropy_rag.lm import TokenStep
from entropy_rag.errors import ValidationError


def step_from(probs):
    probs = {f"t{i}": p for i, p in enumerate(probs)}
    return TokenStep(max(probs, key=probs.get), probs)


def steps_with_entropies(values):
    """Two-outcome steps whose entropy equals each target value (in [0, ln 2])."""
    out = []
    for h in values:
        lo, hi = 0.0, 0.5
        for _ in range(200):
            mid = (lo + hi) / 2
            cur = -(mid * math.log(mid) + (1 - mid) * math.log(1 - mid)) if mid > 0 else 0.0
            lo, hi = (mid, hi) if cur < h else (lo, mid)
        out.append(step_from([1 - lo, lo]))
    return out


class TestStepEntropy:
    def test_uniform_four(self):
        assert step_entropy(step_from([0.25] * 4)) == pytest.approx(1.386294, abs=1e-6)

    def test_one_hot(self):
        assert step_entropy(step_from([1.0, 0.0, 0.0])) == 0.0

    def test_two_way(self):
        assert step_entropy(step_from([0.5, 0.5])) == pytest.approx(0.693147, abs=1e-6)

    def test_residual_is_one_outcome(self):
        s = TokenStep("a", {"a": 0.5}, residual=0.5)
        assert step_entropy(s) == pytest.approx(math.log(2), abs=1e-12)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            step_entropy(step_from([0.5, 0.2]))

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30).filter(lambda xs: sum(xs) > 1e-3), st.randoms())
    def test_permutation_invariant(self, raw, rnd):
        p = [x / sum(raw) for x in raw]
        q = p[:]
        rnd.shuffle(q)
        assert step_entropy(step_from(p)) == pytest.approx(step_entropy(step_from(q)), abs=1e-12)

    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30).filter(lambda xs: sum(xs) > 1e-3), st.floats(0, 1))
    def test_mixing_with_uniform_increases(self, raw, lam):
        p = np.asarray(raw) / sum(raw)
        mixed = (1 - lam) * p + lam / len(p)
        assert step_entropy(step_from(mixed.tolist())) >= step_entropy(step_from(p.tolist())) - 1e-12


class TestMeanEntropy:
    def test_mean_of_three(self):
        # target entropies within the two-outcome range, scaled from [1, 2, 3]
        vals = [0.1, 0.2, 0.3]
        t = mean_entropy(steps_with_entropies(vals), n=3)
        assert t.mean_first_n == pytest.approx(0.2, abs=1e-9) and t.n_used == 3

    def test_fourth_ignored(self):
        t = mean_entropy(steps_with_entropies([0.1, 0.2, 0.3, 0.69]), n=3)
        assert t.mean_first_n == pytest.approx(0.2, abs=1e-9)
        assert len(t.per_step) == 4

    def test_fewer_than_n(self):
        t = mean_entropy(steps_with_entropies([0.1, 0.3]), n=10)
        assert t.n_used == 2 and t.mean_first_n == pytest.approx(0.2, abs=1e-9)

    def test_empty_is_infinite(self):
        t = mean_entropy([], n=10)
        assert t.n_used == 0 and math.isinf(t.mean_first_n)
        assert decide(t, 5.0).triggered

    def test_n_positive(self):
        with pytest.raises(ValueError):
            mean_entropy([], n=0)


class TestDecide:
    def trace(self, h):
        return EntropyTrace(per_step=(h,), mean_first_n=h, n_used=1)

    @pytest.mark.parametrize("h, tau, expected", [(2.20, 1.0, True), (0.5, 1.0, False), (1.0, 1.0, False)])
    def test_examples(self, h, tau, expected):
        d = decide(self.trace(h), tau)
        assert d.triggered is expected and d.threshold == tau and d.mean_entropy == h

    def test_negative_tau(self):
        with pytest.raises(ValueError):
            decide(self.trace(1.0), -0.1)

    def test_streaming_uses_peak(self):
        t = EntropyTrace(per_step=(0.1, 2.0, 0.1), mean_first_n=0.7333, n_used=3)
        assert decide(t, 1.0, "streaming").triggered
        assert not decide(t, 1.0, "mean").triggered

    @settings(max_examples=50)
    @given(st.lists(st.floats(0, 5), min_size=1, max_size=40), st.lists(st.floats(0, 6), min_size=2, max_size=10))
    def test_fraction_monotone_in_tau(self, means, taus):
        traces = [self.trace(h) for h in means]
        fracs = [sum(decide(t, tau).triggered for t in traces) for tau in sorted(taus)]
        assert all(a >= b for a, b in zip(fracs, fracs[1:]))
