import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropy_rag.errors import InputError, ValidationError
from entropy_rag.latency import (
    LatencyScenario,
    break_even,
    overhead,
    reference_table,
    round_half_away,
    savings,
    table,
)

rates = st.floats(0.0, 1.0)
ms = st.floats(0.0, 1e5)


@pytest.mark.parametrize("r, tr, expected", [(0.74, 500, 420.0), (0.0, 1000, 50.0), (1.0, 500, 550.0)])
def test_overhead(r, tr, expected):
    assert overhead(LatencyScenario(r, tr)) == pytest.approx(expected)


@pytest.mark.parametrize("r, tr, expected", [(0.74, 500, 80), (0.92, 200, -34), (0.54, 1000, 410)])
def test_savings(r, tr, expected):
    assert round_half_away(savings(LatencyScenario(r, tr))) == expected


def test_break_even():
    assert break_even(0.74) == pytest.approx(192.3, abs=0.05)
    assert round_half_away(break_even(0.74)) == 192
    assert break_even(0.92) == pytest.approx(625.0)
    assert break_even(1.0) is None


def test_rounding_half_away():
    assert [round_half_away(x) for x in (2.5, -2.5, 0.49999, -0.5)] == [3, -3, 0, -1]


def test_reference_table_cells():
    t = reference_table()
    cells = [row[2:] for row in t.display_rows()]
    assert cells == [
        ["625", "-34", "-10", "+30"],
        ["192", "+2", "+80", "+210"],
        ["109", "+42", "+180", "+410"],
    ]
    assert t.columns == ["config", "retrieval_rate", "break_even_ms", "savings@200ms", "savings@500ms", "savings@1000ms"]


def test_zero_rate_and_full_rate_rows():
    t = table([("never", 0.0), ("always", 1.0)], t_retrieval=[200])
    assert t.rows[0].savings_ms == (150.0,) and t.rows[0].break_even_ms == 50.0
    assert t.display_rows()[1][2] == "n/a"
    assert "n/a" in t.to_csv()
    assert t.to_dict()["rows"][1]["break_even_ms"] is None


def test_text_and_csv_render():
    t = reference_table()
    text = t.to_text().splitlines()
    assert text[0].startswith("config") and set(text[1]) <= {"-", " "} and len(text) == 5
    assert t.to_csv().splitlines()[1] == "tau=0.5,0.9200,625.0000,-34.0000,-10.0000,30.0000"


def test_errors():
    with pytest.raises(InputError, match="no scenarios"):
        table([("x", 0.5)], t_retrieval=[])
    with pytest.raises(InputError, match="no configurations"):
        table([])
    with pytest.raises(ValidationError):
        LatencyScenario(1.2, 100)
    with pytest.raises(ValidationError):
        LatencyScenario(0.5, -1)


@given(rates, ms, ms)
def test_overhead_plus_savings_is_always_retrieve(r, tr, te):
    s = LatencyScenario(r, tr, te)
    assert overhead(s) + savings(s) == pytest.approx(tr, rel=1e-9, abs=1e-6)


@given(rates, ms, ms, st.floats(0.0, 10.0))
def test_savings_linear_in_retrieval_time(r, tr, te, c):
    a = savings(LatencyScenario(r, tr, te)) + te
    b = savings(LatencyScenario(r, c * tr, te)) + te
    assert b == pytest.approx(c * a, rel=1e-9, abs=1e-6)


@given(st.floats(0.0, 0.999), st.floats(1.0, 1e4))
def test_break_even_zero_savings(r, te):
    be = break_even(r, te)
    assert abs(savings(LatencyScenario(r, be, te))) <= 1e-9 * max(1.0, be)


@given(st.floats(0.0, 0.999), st.floats(1.0, 1e3), st.floats(0.0, 1e5))
def test_sign_matches_break_even(r, te, tr):
    s = savings(LatencyScenario(r, tr, te))
    be = break_even(r, te)
    if tr > be * (1 + 1e-9):
        assert s > 0
    elif tr < be * (1 - 1e-9):
        assert s < 0
