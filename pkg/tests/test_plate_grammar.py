import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lprkit.errors import EmptyRegistry, MalformedPlate, UnknownStateCode
from lprkit.plate_grammar import (
    BreakPosition,
    PlateFields,
    StateRegistry,
    break_probability,
    canonical_text,
    default_registry,
    layout_from_breaks,
    layout_plate,
    normalize,
    parse_plate,
    parse_registry,
    sample_plate,
)


def brute_force_splits(text):
    """All (state, district, series, number) splits that satisfy the grammar."""
    out = []
    n = len(text)
    for i, j, k in itertools.combinations_with_replacement(range(n + 1), 3):
        parts = text[:i], text[i:j], text[j:k], text[k:]
        s, d, r, num = parts
        if (
            len(s) == 2 and s.isalpha() and s.isupper()
            and 1 <= len(d) <= 2 and d.isdigit()
            and len(r) <= 3 and (r == "" or (r.isalpha() and r.isupper()))
            and len(num) == 4 and num.isdigit()
        ):
            out.append(parts)
    return out


class ScriptedRng:
    """Feeds predetermined values to layout_plate."""

    def __init__(self, randoms, integers=()):
        self._r = list(randoms)
        self._i = list(integers)

    def random(self):
        return self._r.pop(0)

    def integers(self, n):
        return self._i.pop(0)


def test_parse_simple():
    assert parse_plate("GJ01AB1234") == PlateFields("GJ", "01", "AB", "1234")


def test_parse_empty_series_matches_brute_force():
    assert brute_force_splits("HR551234") == [("HR", "55", "", "1234")]
    assert parse_plate("HR551234") == PlateFields("HR", "55", "", "1234")


def test_parse_normalizes_case_and_whitespace():
    assert parse_plate(" gj 01\nab 1234 ").text == "GJ01AB1234"


@pytest.mark.parametrize("bad", ["ZZ", "", "GJ1234", "G101AB1234", "GJ01ABCD1234", "GJ01AB123"])
def test_parse_malformed(bad):
    with pytest.raises(MalformedPlate):
        parse_plate(bad)


def test_parse_unknown_state():
    with pytest.raises(UnknownStateCode):
        parse_plate("ZZ01AB1234", registry=default_registry())
    assert parse_plate("ZZ01AB1234").state_code == "ZZ"


plate_strings = st.builds(
    lambda s, d, r, n: s + d + r + n,
    st.text("ABCDEFGHIJKLMNOPQRSTUVWXYZ", min_size=2, max_size=2),
    st.text("0123456789", min_size=1, max_size=2),
    st.text("ABCDEFGHIJKLMNOPQRSTUVWXYZ", min_size=0, max_size=3),
    st.text("0123456789", min_size=4, max_size=4),
)


@given(plate_strings)
def test_parse_agrees_with_brute_force(text):
    splits = brute_force_splits(text)
    assert len(splits) == 1
    assert tuple(vars(parse_plate(text)).values()) == splits[0]


@given(st.text("AB01 9", max_size=10))
def test_parse_rejects_exactly_when_no_split(text):
    norm = normalize(text)
    splits = brute_force_splits(norm)
    if splits:
        assert parse_plate(text).text == norm
    else:
        with pytest.raises(MalformedPlate):
            parse_plate(text)


@settings(max_examples=200)
@given(plate_strings, st.integers(0, 2**32 - 1))
def test_round_trip(text, seed):
    rng = np.random.default_rng(seed)
    layout = layout_plate(parse_plate(text), rng)
    assert canonical_text(layout) == normalize(text)
    assert 1 <= len(layout.lines) <= 3
    assert all(layout.lines)


def test_registry_file_format():
    reg = parse_registry("# comment\nGJ\t2.0\nMH\t1\n\n")
    assert dict(reg) == {"GJ": 2.0, "MH": 1.0}
    assert {"GJ", "HR", "MH"} <= set(default_registry())


def test_sample_single_state():
    rng = np.random.default_rng(11)
    f = sample_plate(rng, {"GJ": 1.0})
    assert f.state_code == "GJ"
    assert parse_plate(f.text, {"GJ": 1.0}) == f


def test_sample_deterministic():
    reg = default_registry()
    a = [sample_plate(np.random.default_rng(5), reg) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_sample_empty_registry():
    with pytest.raises(EmptyRegistry):
        sample_plate(np.random.default_rng(0), {})


def test_sample_state_frequency():
    rng = np.random.default_rng(2024)
    n = 10_000
    gj = sum(sample_plate(rng, StateRegistry({"GJ": 0.5, "MH": 0.5})).state_code == "GJ" for _ in range(n))
    assert 0.47 <= gj / n <= 0.53


def test_layout_no_breaks():
    f = parse_plate("GJ01AB1234")
    layout = layout_plate(f, ScriptedRng([0.9, 0.9, 0.9, 0.9]))
    assert layout.lines == ("GJ01AB1234",)


def test_layout_primary_after_district():
    f = parse_plate("GJ01AB1234")
    layout = layout_plate(f, ScriptedRng([0.1, 0.9, 0.9, 0.9], [1]))
    assert layout.break_positions == {BreakPosition.AFTER_DISTRICT}
    assert layout.lines == ("GJ01", "AB1234")


def test_layout_caps_at_three_lines():
    f = parse_plate("GJ01AB1234")
    layout = layout_plate(f, ScriptedRng([0.1, 0.0, 0.0, 0.0], [2]))
    assert layout.lines == ("GJ", "01AB", "1234")
    layout = layout_plate(f, ScriptedRng([0.1, 0.0, 0.0, 0.0], [1]))
    assert layout.lines == ("GJ01", "AB", "1234")


def test_layout_empty_series_only_state_break():
    f = parse_plate("HR551234")
    layout = layout_plate(f, ScriptedRng([0.1, 0.0], [0]))
    assert layout.lines == ("HR", "551234")
    with pytest.raises(ValueError):
        layout_from_breaks(f, {BreakPosition.AFTER_DISTRICT})


def test_layout_break_fraction():
    # closed form 1 - 0.5 * 0.95**3 = 0.57131..., 3 sigma band at n=10^4
    f = parse_plate("GJ01AB1234")
    p = break_probability(f)
    assert p == pytest.approx(1 - 0.5 * 0.95**3)
    n = 10_000
    rng = np.random.default_rng(99)
    hits = sum(len(layout_plate(f, rng).lines) > 1 for _ in range(n))
    sigma = (p * (1 - p) / n) ** 0.5
    assert abs(hits / n - p) <= 3 * sigma


def test_layout_consistency_checked():
    f = parse_plate("GJ01AB1234")
    from lprkit.plate_grammar import PlateLayout

    with pytest.raises(ValueError):
        PlateLayout(f, frozenset({BreakPosition.AFTER_STATE}), ("GJ01", "AB1234"))


def test_canonical_text():
    assert canonical_text(["GJ01", "AB1234"]) == "GJ01AB1234"
    assert canonical_text(["GJ01AB1234"]) == "GJ01AB1234"
    layout = layout_from_breaks(parse_plate("GJ01AB1234"), {BreakPosition.AFTER_STATE})
    assert canonical_text(layout) == canonical_text([canonical_text(layout)])
