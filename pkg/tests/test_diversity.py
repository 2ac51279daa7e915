import math

import pytest
from hypothesis import given, settings, strategies as st

from divctx.catalog import Catalog, Consultation, Item
from divctx.diversity import (
    Detector,
    DiversityPoint,
    HistoryWindow,
    calibrate_tau,
    detection_conditions,
    detector_step,
    is_context_change,
    relative_diversity,
    run_user_stream,
)
from divctx.exceptions import CalibrationError, OrderingError, ValidationError
from divctx.schema import AttributeKind, AttributeSpec, Schema

from . import oracles
from .conftest import bits_item, stream_of


def test_window_evicts_oldest():
    w = HistoryWindow(2)
    for n in range(3):
        w.push(Item(str(n)))
    assert [i.id for i in w] == ["1", "2"]
    with pytest.raises(ValueError):
        HistoryWindow(0)


def test_rd_empty_window(binary_schema):
    p = relative_diversity(bits_item("t", 3), HistoryWindow(5), binary_schema)
    assert math.isnan(p.rd) and p.s == 0


def test_rd_window_of_copies(binary_schema):
    target = bits_item("t", 3)
    p = relative_diversity(target, HistoryWindow(4, [target] * 4), binary_schema)
    assert p.rd == 0 and p.s == 4


def test_rd_skips_not_computable_entries(binary_schema):
    window = [bits_item("same", 0), bits_item("far", 6), Item("empty", {})]
    p = relative_diversity(bits_item("t", 0), window, binary_schema)
    assert p.s == 2
    assert p.rd == pytest.approx(0.3, abs=1e-15)
    assert p.per_attribute_rd["b0"] == 0.5  # 1 of the 2 comparable entries differs on b0
    assert p.per_attribute_rd["b9"] == 0.0


def test_rd_per_attribute_nan_when_never_comparable():
    schema = Schema((AttributeSpec("a", "binary"), AttributeSpec("b", "binary")))
    p = relative_diversity(Item("t", {"a": 1}), [Item("h", {"a": 0})], schema)
    assert p.per_attribute_rd["a"] == 1 and math.isnan(p.per_attribute_rd["b"])


def test_first_consultation_no_change(binary_schema):
    d = Detector(binary_schema, k=3, tau=0.0)
    point, change = d.step(None, bits_item("a", 5))
    assert math.isnan(point.rd) and change is None


def _detector_with_state(binary_schema, previous_rd, tau):
    """Window holds one all-zero item so a target with m ones gets rd = m / 10."""
    d = Detector(binary_schema, k=1, tau=tau)
    d.window.push(bits_item("zero", 0))
    d.previous_rd = previous_rd
    return d


def test_change_emitted(binary_schema):
    d = _detector_with_state(binary_schema, 0.2, 0.23)
    point, change = d.step(None, bits_item("t", 4))
    assert point.rd == 0.4
    assert change is not None and change.rd_value == 0.4 and change.index == 0


def test_no_change_when_decreasing(binary_schema):
    d = _detector_with_state(binary_schema, 0.4, 0.23)
    assert d.step(None, bits_item("t", 3)).change is None


def test_tie_does_not_fire(binary_schema):
    d = _detector_with_state(binary_schema, 0.4, 0.23)
    assert d.step(None, bits_item("t", 4)).change is None


def test_nan_gap_delays_but_does_not_poison(binary_schema):
    d = Detector(binary_schema, k=1, tau=0.1)
    d.step(None, bits_item("a", 0))
    assert math.isnan(d.step(None, Item("blank", {})).point.rd)  # no common attribute
    assert math.isnan(d.step(None, bits_item("b", 0)).point.rd)  # window now holds the blank item
    assert d.step(None, bits_item("c", 0)).point.rd == 0.0
    assert d.step(None, bits_item("d", 5)).change is not None


def test_invalid_item_leaves_state_untouched(binary_schema):
    d = Detector(binary_schema, k=2, tau=0.2)
    d.step(None, bits_item("a", 1))
    with pytest.raises(ValidationError):
        d.step(None, Item("bad", {"b0": 7}))
    with pytest.raises(ValidationError):
        d.step(None, Item("bad", {"nope": 1}))
    assert len(d.window) == 1 and d.index == 1 and math.isnan(d.previous_rd)


def test_detector_step_rejects_out_of_order(binary_schema):
    d = Detector(binary_schema, k=2, tau=0.2)
    detector_step(d, Consultation("u", 10, "a"), bits_item("a", 1), binary_schema)
    with pytest.raises(OrderingError):
        detector_step(d, Consultation("u", 5, "b"), bits_item("b", 1), binary_schema)


def test_tau_range(binary_schema):
    with pytest.raises(ValueError):
        Detector(binary_schema, tau=1.5)


@pytest.mark.parametrize("prev, cur, tau, expected", [
    (math.nan, 0.5, 0.1, (False, True, False, True)),
    (None, 0.5, 0.1, (False, True, False, True)),
    (0.1, math.nan, 0.1, (True, False, False, False)),
    (0.1, 0.2, 0.3, (True, True, True, False)),
    (0.3, 0.2, 0.1, (True, True, False, True)),
    (0.1, 0.2, 0.1, (True, True, True, True)),
])
def test_detection_conditions(prev, cur, tau, expected):
    assert detection_conditions(prev, cur, tau) == expected
    assert is_context_change(prev, cur, tau) == all(expected)


def test_calibrate_examples():
    pts = [DiversityPoint(n, v, 1) for n, v in enumerate([0.1, 0.3, math.nan, 0.2])]
    cal = calibrate_tau(pts)
    assert cal.tau == pytest.approx(0.2, abs=1e-15) and cal.mean == cal.tau and cal.n == 3
    single = calibrate_tau([0.5])
    assert (single.tau, single.sd) == (0.5, 0.0)
    with pytest.raises(CalibrationError):
        calibrate_tau([math.nan, DiversityPoint(0, math.nan, 0)])


def _catalog(schema, items):
    return Catalog(schema, {i.id: i for i in items})


def test_run_empty_stream(binary_schema):
    res = run_user_stream([], _catalog(binary_schema, []), binary_schema, 3, 0.2)
    assert res.points == [] and res.changes == []


def test_run_identical_items(binary_schema):
    a = bits_item("a", 4)
    res = run_user_stream(stream_of("u", ["a"] * 30), _catalog(binary_schema, [a]), binary_schema, 5, 0.0)
    assert res.changes == []
    assert all(math.isnan(p.rd) or p.rd == 0 for p in res.points)


def test_run_planted_shift():
    schema = Schema((AttributeSpec("tags", "set"), AttributeSpec("mood", "set")))
    block_a = [Item(f"a{n}", {"tags": frozenset({"rock", "indie"}), "mood": frozenset({"calm"})}) for n in range(20)]
    block_b = [Item(f"b{n}", {"tags": frozenset({"jazz"}), "mood": frozenset({"lively", "warm"})}) for n in range(20)]
    items = block_a + block_b
    catalog = _catalog(schema, items)
    res = run_user_stream(stream_of("u", [i.id for i in items]), catalog, schema, k=5, tau=0.23)
    assert [c.index for c in res.changes] == [20]
    assert [p.rd for p in res.points] == pytest.approx(oracles.batch_rd(items, schema, 5), nan_ok=True)


def test_run_requires_sorted(binary_schema):
    a = bits_item("a", 1)
    stream = [Consultation("u", 5, "a"), Consultation("u", 4, "a")]
    with pytest.raises(OrderingError):
        run_user_stream(stream, _catalog(binary_schema, [a]), binary_schema, 2, 0.1)


# --- streaming properties ----------------------------------------------------

@st.composite
def binary_streams(draw):
    n_attrs = 4
    items = []
    for n in range(draw(st.integers(0, 40))):
        values = draw(st.dictionaries(st.sampled_from([f"b{j}" for j in range(n_attrs)]), st.integers(0, 1)))
        items.append(Item(f"i{n}", values))
    return items


SMALL_SCHEMA = Schema(tuple(AttributeSpec(f"b{j}", "binary", weight=w) for j, w in enumerate([1, 2, 0.5, 1])))


def _run_items(items, k, tau):
    catalog = _catalog(SMALL_SCHEMA, items)
    return run_user_stream(stream_of("u", [i.id for i in items]), catalog, SMALL_SCHEMA, k, tau)


@settings(max_examples=150, deadline=None)
@given(binary_streams(), st.integers(1, 6), st.floats(0, 1))
def test_streaming_equals_batch(items, k, tau):
    res = _run_items(items, k, tau)
    batch = oracles.batch_rd(items, SMALL_SCHEMA, k)
    for p, want in zip(res.points, batch):
        assert (math.isnan(p.rd) and math.isnan(want)) or p.rd == want
    for p in res.points:
        assert math.isnan(p.rd) == (p.s == 0)
        assert p.s <= min(k, p.index)
        assert math.isnan(p.rd) or 0 <= p.rd <= 1
    for c in res.changes:
        assert c.rd_value > tau


@settings(max_examples=100, deadline=None)
@given(binary_streams(), st.integers(1, 6), st.floats(0, 1), st.data())
def test_no_lookahead(items, k, tau, data):
    cut = data.draw(st.integers(0, len(items)))
    full = _run_items(items, k, tau)
    head = _run_items(items[:cut], k, tau)
    assert [p.rd for p in head.points] == pytest.approx([p.rd for p in full.points[:cut]], nan_ok=True)
    assert head.changes == [c for c in full.changes if c.index < cut]


@settings(max_examples=100, deadline=None)
@given(binary_streams(), st.integers(1, 6))
def test_no_change_at_first_computable_step(items, k):
    res = _run_items(items, k, 0.0)
    first = next((p.index for p in res.points if not math.isnan(p.rd)), None)
    assert all(c.index != first for c in res.changes)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), max_size=30), st.integers(1, 6))
def test_complete_data_aggregation_orders_coincide(rows, k):
    schema = default = Schema(tuple(AttributeSpec(f"b{j}", "binary") for j in range(4)))
    items = [Item(f"i{n}", {f"b{j}": v for j, v in enumerate(r)}) for n, r in enumerate(rows)]
    res = run_user_stream(stream_of("u", [i.id for i in items]), _catalog(default, items), schema, k, None)
    for p in res.points:
        if not math.isnan(p.rd):
            assert p.rd == pytest.approx(p.attribute_mean_rd, abs=1e-12)


def test_truth_table_realizable_rows(binary_schema):
    """Every combination of the four conditions reachable with real inputs, end to end."""
    cases = {
        # prev, ones in target (rd = ones / 10), tau
        (True, True, True, True): (0.2, 4, 0.3),
        (True, True, True, False): (0.2, 4, 0.5),
        (True, True, False, True): (0.5, 4, 0.3),
        (True, True, False, False): (0.5, 4, 0.45),
    }
    for expected, (prev, ones, tau) in cases.items():
        d = _detector_with_state(binary_schema, prev, tau)
        point, change = d.step(None, bits_item("t", ones))
        assert detection_conditions(prev, point.rd, tau) == expected
        assert (change is not None) == all(expected)

