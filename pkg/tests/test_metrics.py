import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lprkit.errors import DegenerateBox, EmptyInput
from lprkit.metrics import (
    Detection,
    GroundTruth,
    average_precision,
    edit_distance,
    evaluate_detections,
    f1_sweep,
    format_table,
    iou,
    map_range,
    ned_score,
    sequence_accuracy,
)

from oracles import ap_bruteforce, edit_distance_recursive, f1_bruteforce

short = st.text("ABC01", max_size=7)


def test_edit_distance_examples():
    assert edit_distance("", "") == 0
    assert edit_distance("ABC", "") == 3
    assert edit_distance_recursive("kitten", "sitting") == 3
    assert edit_distance("kitten", "sitting") == 3


@given(short, short)
def test_edit_distance_matches_recursive(a, b):
    assert edit_distance(a, b) == edit_distance_recursive(a, b)


@given(short, short, short)
def test_edit_distance_metric_laws(a, b, c):
    assert edit_distance(a, b) == edit_distance(b, a)
    assert (edit_distance(a, b) == 0) == (a == b)
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


def test_ned_examples():
    assert ned_score("GJ01AB1234", "GJ01AB1234") == 1.0
    assert ned_score("GJ01AB1234", "GJ01AB1284") == pytest.approx(0.9)
    assert ned_score("", "A") == 0.0
    assert ned_score("", "") == 1.0


@given(short, short)
def test_ned_range(a, b):
    s = ned_score(a, b)
    assert 0.0 <= s <= 1.0
    assert (s == 1.0) == (a == b)


def test_sequence_accuracy():
    r = sequence_accuracy([("GJ01AB1234", "GJ01AB1234"), ("MH12", "MH12")])
    assert (r.accuracy, r.ned, r.n_samples) == (1.0, 1.0, 2)
    assert sequence_accuracy([("A", "A"), ("B", "C")]).accuracy == 0.5
    assert sequence_accuracy([("gj01ab1234", "GJ01AB1234")]).accuracy == 1.0
    assert sequence_accuracy([("GJ01AB1234", "GJ01\nAB1234")]).accuracy == 1.0
    with pytest.raises(EmptyInput):
        sequence_accuracy([])


@given(st.lists(st.tuples(short, short), min_size=1, max_size=10))
def test_accuracy_at_most_ned(pairs):
    r = sequence_accuracy(pairs)
    assert r.accuracy <= r.ned + 1e-12


def test_iou_examples():
    assert iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
    assert iou((0, 0, 10, 10), (20, 20, 5, 5)) == 0.0
    assert iou((0, 0, 10, 10), (5, 0, 10, 10)) == pytest.approx(1 / 3)
    with pytest.raises(DegenerateBox):
        iou((0, 0, 0, 10), (0, 0, 1, 1))


def test_ap_examples():
    gt = [(0, 0, 10, 10)]
    assert average_precision([((0, 0, 10, 10), 0.9)], gt) == 1.0
    assert average_precision([], gt) == 0.0
    dets = [((50, 50, 10, 10), 0.9), ((0, 0, 10, 10), 0.8)]
    # frozen from the brute-force PR enumeration: envelope precision 1/2 at every recall level
    assert ap_bruteforce(dets, gt, 0.5) == 0.5
    assert average_precision(dets, gt) == 0.5


def test_map_range_examples():
    gt = [(0, 0, 10, 10)]
    assert map_range([((0, 0, 10, 10), 0.7)], gt) == 1.0
    # IoU exactly 0.6: thresholds 0.50, 0.55, 0.60 match, the other seven do not
    det = [((0, 0, 10, 6), 0.7)]
    assert iou(det[0][0], gt[0]) == 0.6
    assert map_range(det, gt) == pytest.approx(3 / 10)
    assert map_range([], gt) == 0.0


def test_f1_examples():
    gt = [(0, 0, 10, 10)]
    s = f1_sweep([((0, 0, 10, 10), 0.9)], gt)
    assert (s.best_threshold, s.f1_max) == (0.9, 1.0)
    assert f1_sweep([], gt).f1_max == 0.0


def random_instance(rng, max_dets=6, max_gts=4):
    grid = [(x, y) for x in (0, 5, 10) for y in (0, 5)]
    gts = [(*rng.choice(grid), 10, 10) for _ in range(rng.randint(0, max_gts))]
    dets = [((*rng.choice(grid), rng.choice((8, 10, 12)), 10), rng.randint(0, 10) / 10)
            for _ in range(rng.randint(0, max_dets))]
    return dets, gts


def test_ap_and_f1_match_bruteforce_random():
    rng = random.Random(0)
    for _ in range(400):
        dets, gts = random_instance(rng)
        for thr in (0.5, 0.75):
            assert average_precision(dets, gts, thr) == ap_bruteforce(dets, gts, thr)
            s = f1_sweep(dets, gts, thr)
            assert (s.best_threshold, s.f1_max) == f1_bruteforce(dets, gts, thr)


def test_ap_order_invariant_and_monotone():
    rng = random.Random(1)
    for _ in range(200):
        dets, gts = random_instance(rng)
        shuffled = dets[:]
        rng.shuffle(shuffled)
        assert average_precision(dets, gts) == average_precision(shuffled, gts)
        aps = [average_precision(dets, gts, t) for t in (0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(aps, aps[1:]))


def test_matching_is_per_image():
    dets = [Detection((0, 0, 10, 10), 0.9, "a"), Detection((0, 0, 10, 10), 0.8, "b")]
    gts = [GroundTruth((0, 0, 10, 10), "a")]
    r = evaluate_detections(dets, gts)
    assert r.ap50 == 1.0
    assert r.precision == 1.0 and r.best_threshold == 0.9
    assert r.ap50 >= r.ap50_95
    assert "ap50" in format_table(r)
