"""Learning-rate schedules: one-cycle with cosine phases, and stochastic
weight averaging (constant rate over the tail of training plus an
element-wise mean of weight snapshots)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .config import check_keys, get_bool, get_float, get_int, parse_config
from .errors import ConfigError, EmptyInput, ShapeMismatch, StepOutOfRange

PRESETS = ("detect", "recognize")


@dataclass(frozen=True)
class OneCycleConfig:
    total_steps: int
    peak_lr: float
    start_lr: float
    end_lr: float
    peak_fraction: float = 0.3

    def __post_init__(self):
        if self.total_steps < 2:
            raise ConfigError("total_steps", f"need at least 2 steps, got {self.total_steps}")
        for k in ("peak_lr", "start_lr", "end_lr"):
            if not getattr(self, k) > 0:
                raise ConfigError(k, "must be positive")
        if self.peak_lr < self.start_lr or self.peak_lr < self.end_lr:
            raise ConfigError("peak_lr", "must be >= start_lr and end_lr")
        if not 0 < self.peak_fraction < 1:
            raise ConfigError("peak_fraction", "must lie in (0, 1)")

    @property
    def peak_step(self) -> int:
        # step 0 is pinned to start_lr, so the peak is at least step 1
        return min(max(round(self.peak_fraction * self.total_steps), 1), self.total_steps - 1)

    def max_step_change(self) -> float:
        """Upper bound on |lr(s+1) - lr(s)|: the steepest cosine slope of
        either phase."""
        up = (self.peak_lr - self.start_lr) / self.peak_step
        tail = self.total_steps - 1 - self.peak_step
        down = (self.peak_lr - self.end_lr) / tail if tail else 0.0
        return math.pi / 2 * max(up, down)


@dataclass(frozen=True)
class SwaConfig:
    swa_lr: float
    start_fraction: float = 0.75

    def __post_init__(self):
        if not self.swa_lr > 0:
            raise ConfigError("swa_lr", "must be positive")
        if not 0 < self.start_fraction < 1:
            raise ConfigError("swa_start_fraction", "must lie in (0, 1)")

    def start_step(self, total_steps: int) -> int:
        return round(self.start_fraction * total_steps)


def one_cycle_lr(step: int, cfg: OneCycleConfig) -> float:
    """Cosine ramp start->peak up to ``peak_step``, then cosine anneal
    peak->end reaching ``end_lr`` at the last step."""
    if not 0 <= step < cfg.total_steps:
        raise StepOutOfRange(f"step {step} outside [0, {cfg.total_steps - 1}]")
    p = cfg.peak_step
    if step == p:
        return cfg.peak_lr
    if step < p:
        frac = (1 - math.cos(math.pi * step / p)) / 2
        return cfg.start_lr + (cfg.peak_lr - cfg.start_lr) * frac
    frac = (1 + math.cos(math.pi * (step - p) / (cfg.total_steps - 1 - p))) / 2
    return cfg.end_lr + (cfg.peak_lr - cfg.end_lr) * frac


def lr_curve(cfg: OneCycleConfig, swa: SwaConfig | None = None) -> list[float]:
    """Rate at every step; with SWA the tail is held at ``swa_lr``."""
    out = [one_cycle_lr(s, cfg) for s in range(cfg.total_steps)]
    if swa is not None:
        for s in range(swa.start_step(cfg.total_steps), cfg.total_steps):
            out[s] = swa.swa_lr
    return out


def swa_average(snapshots: Sequence[Sequence[float]]) -> np.ndarray:
    """Element-wise mean of equal-length weight vectors."""
    if len(snapshots) == 0:
        raise EmptyInput("no snapshots to average")
    arrs = [np.asarray(s, dtype=np.float64) for s in snapshots]
    shape = arrs[0].shape
    for i, a in enumerate(arrs):
        if a.shape != shape:
            raise ShapeMismatch(f"snapshot {i} has shape {a.shape}, expected {shape}")
    # averaging offsets from the first snapshot makes identical snapshots
    # come back exactly and keeps the rounding error small
    base = arrs[0]
    return base + np.sum(np.stack(arrs) - base, axis=0) / len(arrs)


@dataclass(frozen=True)
class SchedulePreset:
    name: str
    one_cycle: OneCycleConfig
    swa: SwaConfig | None
    recorded: dict[str, str]

    def curve(self) -> list[float]:
        return lr_curve(self.one_cycle, self.swa)

    def to_json(self) -> dict:
        return {"name": self.name, "one_cycle": asdict(self.one_cycle),
                "swa": asdict(self.swa) if self.swa else None, "recorded": dict(self.recorded)}


SCHEDULE_KEYS = {"total_steps", "peak_lr", "start_lr", "end_lr", "peak_fraction",
                 "swa", "swa_lr", "swa_start_fraction", "name"}
RECORDED_PREFIX = "recorded."


def schedule_from_config(values: Mapping[str, str]) -> SchedulePreset:
    """Keys under ``recorded.`` are carried through untouched; they hold
    settings as a training framework states them, for reference only."""
    plain = {k: v for k, v in values.items() if not k.startswith(RECORDED_PREFIX)}
    check_keys(plain, SCHEDULE_KEYS, "schedule")
    oc = OneCycleConfig(
        total_steps=get_int(values, "total_steps"),
        peak_lr=get_float(values, "peak_lr"),
        start_lr=get_float(values, "start_lr"),
        end_lr=get_float(values, "end_lr"),
        peak_fraction=get_float(values, "peak_fraction", 0.3),
    )
    swa = None
    if get_bool(values, "swa", False):
        swa = SwaConfig(get_float(values, "swa_lr"), get_float(values, "swa_start_fraction", 0.75))
    recorded = {k[len(RECORDED_PREFIX):]: v for k, v in values.items() if k.startswith(RECORDED_PREFIX)}
    return SchedulePreset(values.get("name", "custom"), oc, swa, recorded)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("lprkit").joinpath("data", f"{name}.cfg").read_text(encoding="utf-8")


def load_preset(name: str, overrides: Mapping[str, str] | None = None) -> SchedulePreset:
    values = parse_config(preset_text(name))
    values.update(overrides or {})
    return schedule_from_config(values)
