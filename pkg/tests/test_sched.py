import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lprkit.config import config_hash, dumps_config, parse_config
from lprkit.errors import ConfigError, EmptyInput, ParseError, ShapeMismatch, StepOutOfRange
from lprkit.sched import (
    OneCycleConfig,
    SwaConfig,
    load_preset,
    lr_curve,
    one_cycle_lr,
    schedule_from_config,
    swa_average,
)

from oracles import kahan_mean

CFG = OneCycleConfig(total_steps=101, peak_lr=1e-3, start_lr=4e-5, end_lr=4e-9, peak_fraction=0.3)


def test_boundaries():
    assert one_cycle_lr(0, CFG) == CFG.start_lr
    assert CFG.peak_step == 30
    assert abs(one_cycle_lr(30, CFG) - CFG.peak_lr) <= 1e-12
    assert abs(one_cycle_lr(100, CFG) - CFG.end_lr) <= 1e-15


def test_anneal_midpoint():
    # anneal runs from step 30 to step 100; cos(pi/2) = 0 at step 65
    assert abs(one_cycle_lr(65, CFG) - (CFG.peak_lr + CFG.end_lr) / 2) <= 1e-9


def test_ramp_midpoint():
    assert one_cycle_lr(15, CFG) == pytest.approx((CFG.start_lr + CFG.peak_lr) / 2, abs=1e-15)


def test_step_range():
    with pytest.raises(StepOutOfRange):
        one_cycle_lr(-1, CFG)
    with pytest.raises(StepOutOfRange):
        one_cycle_lr(101, CFG)


@pytest.mark.parametrize("kwargs,key", [
    ({"total_steps": 1}, "total_steps"),
    ({"peak_lr": 1e-6}, "peak_lr"),
    ({"peak_fraction": 1.0}, "peak_fraction"),
    ({"start_lr": 0.0}, "start_lr"),
])
def test_config_validation(kwargs, key):
    base = dict(total_steps=10, peak_lr=1e-3, start_lr=1e-4, end_lr=1e-5)
    base.update(kwargs)
    with pytest.raises(ConfigError) as e:
        OneCycleConfig(**base)
    assert e.value.key == key


configs = st.builds(
    lambda n, peak, a, b, f: OneCycleConfig(n, peak, peak * a, peak * b, f),
    st.integers(2, 400), st.floats(1e-5, 1.0), st.floats(0.001, 1.0), st.floats(1e-6, 1.0),
    st.floats(0.05, 0.95))


@settings(max_examples=80, deadline=None)
@given(configs)
def test_curve_properties(cfg):
    curve = [one_cycle_lr(s, cfg) for s in range(cfg.total_steps)]
    assert max(curve) == cfg.peak_lr
    assert curve.index(max(curve)) == cfg.peak_step
    bound = cfg.max_step_change() * (1 + 1e-9)
    assert all(abs(b - a) <= bound for a, b in zip(curve, curve[1:]))
    lo = min(cfg.start_lr, cfg.end_lr)
    assert all(lo - 1e-15 <= v <= cfg.peak_lr for v in curve)


def test_swa_examples():
    assert np.array_equal(swa_average([[0, 0], [2, 4]]), [1, 2])
    v = [0.1, -3.0, 7.25]
    assert np.array_equal(swa_average([v, v, v]), v)
    with pytest.raises(EmptyInput):
        swa_average([])
    with pytest.raises(ShapeMismatch):
        swa_average([[1, 2], [1, 2, 3]])


def test_swa_matches_compensated_sum():
    rng = np.random.default_rng(0)
    scale = 10.0 ** rng.integers(-3, 4, size=50)
    snaps = [rng.normal(size=50) * scale for _ in range(7)]
    got = swa_average(snaps)
    ref = np.array(kahan_mean([s.tolist() for s in snaps]))
    assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_swa_order_invariant_and_linear():
    rng = np.random.default_rng(1)
    snaps = [rng.normal(size=20) for _ in range(5)]
    a = swa_average(snaps)
    b = swa_average(snaps[::-1])
    assert np.allclose(a, b, rtol=1e-14, atol=1e-15)
    scaled = snaps[:]
    scaled[2] = 3 * snaps[2]
    assert np.allclose(swa_average(scaled) - a, 2 * snaps[2] / 5, atol=1e-14)


def test_swa_tail_in_curve():
    swa = SwaConfig(1e-4)
    curve = lr_curve(CFG, swa)
    start = swa.start_step(CFG.total_steps)
    assert start == 76
    assert all(v == 1e-4 for v in curve[start:])
    assert curve[:start] == [one_cycle_lr(s, CFG) for s in range(start)]


def test_presets():
    det = load_preset("detect")
    assert det.one_cycle.peak_lr == 0.01 and det.swa is None
    assert det.recorded["lr0"] == "0.01" and det.recorded["lrf"] == "0.2"
    assert det.one_cycle.end_lr == pytest.approx(0.01 * 0.2)
    rec = load_preset("recognize")
    assert rec.one_cycle.peak_lr == 1e-3
    assert rec.swa == SwaConfig(1e-4, 0.75)
    assert max(rec.curve()) == 1e-3
    with pytest.raises(ConfigError):
        load_preset("train")


def test_unknown_schedule_key():
    with pytest.raises(ConfigError) as e:
        schedule_from_config({"total_steps": "10", "peak_lr": "1", "start_lr": "1", "end_lr": "1", "warmup": "3"})
    assert e.value.key == "warmup"


def test_config_format():
    text = "# comment\n a = 1 \n\nb=x y  # trailing\n"
    assert parse_config(text) == {"a": "1", "b": "x y"}
    assert parse_config(dumps_config(parse_config(text))) == parse_config(text)
    assert config_hash({"a": 1, "b": "x"}) == config_hash({"b": "x", "a": "1"})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    with pytest.raises(ParseError) as e:
        parse_config("a = 1\njunk\n")
    assert e.value.lineno == 2
    with pytest.raises(ParseError):
        parse_config("a = 1\na = 2\n")
