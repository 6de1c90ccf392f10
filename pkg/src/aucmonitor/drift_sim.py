"""Synthetic score streams with scheduled sample size, class mix and AUC.

Latent scores are binormal with unit variances: negatives ~ N(0, 1),
positives ~ N(delta, 1), so the true AUC is ``Phi(delta / sqrt(2))``. The
emitted scores are the logistic transform of the latent ones, which keeps
them in (0, 1) without changing any rank statistic.

Scenario files are INI-style text::

    [scenario]
    seed = 0

    [phase 1]
    steps = 20
    total_samples = 5000 -> 50
    positive_ratio = 0.05
    true_auc = 0.95

A value written ``a -> b`` is a linear ramp over the phase, endpoints
inclusive; a single number is held constant.
"""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

from .roc_metrics import ScoredBatch

SIM_EPOCH = dt.date(2000, 1, 1)
_STD_NORMAL = NormalDist()


class ScenarioError(ValueError):
    pass


def delta_for_auc(target_auc: float) -> float:
    """Mean shift of the positive class giving the requested binormal AUC."""
    if not 0.0 < target_auc < 1.0:
        raise ScenarioError(f"target AUC must lie in (0, 1), got {target_auc}")
    return math.sqrt(2.0) * _STD_NORMAL.inv_cdf(target_auc)


def auc_of_delta(delta: float) -> float:
    return _STD_NORMAL.cdf(delta / math.sqrt(2.0))


def round_half_up(x: float) -> int:
    # the inner round() absorbs float noise such as 2.4999999999999996
    return math.floor(round(x, 9) + 0.5)


@dataclass(frozen=True)
class Schedule:
    """Constant value, or linear ramp from ``start`` to ``end``."""

    start: float
    end: float

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(float(value), float(value))

    @property
    def is_constant(self) -> bool:
        return self.start == self.end

    def at(self, k: int, steps: int) -> float:
        if steps <= 1 or self.is_constant:
            return self.start
        return self.start + (self.end - self.start) * k / (steps - 1)

    def render(self) -> str:
        if self.is_constant:
            return _fmt(self.start)
        return f"{_fmt(self.start)} -> {_fmt(self.end)}"

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        parts = [p.strip() for p in text.split("->")]
        try:
            if len(parts) == 1:
                return cls.constant(float(parts[0]))
            if len(parts) == 2:
                return cls(float(parts[0]), float(parts[1]))
        except ValueError:
            pass
        raise ScenarioError(f"bad schedule {text!r}; expected 'x' or 'x -> y'")


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class PhaseSpec:
    steps: int
    total_samples: Schedule
    positive_ratio: Schedule
    true_auc: Schedule

    def __post_init__(self):
        if self.steps < 1:
            raise ScenarioError("phase needs at least one step")
        for v in (self.positive_ratio.start, self.positive_ratio.end):
            if not 0.0 < v < 1.0:
                raise ScenarioError(f"positive ratio {v} outside (0, 1)")
        for v in (self.true_auc.start, self.true_auc.end):
            if not 0.5 < v < 1.0:
                raise ScenarioError(f"true AUC {v} outside (0.5, 1)")
        for v in (self.total_samples.start, self.total_samples.end):
            if v < 2:
                raise ScenarioError(f"total samples {v} below 2")

    def counts(self, k: int) -> tuple[int, int]:
        """Positive and negative counts at step ``k`` of this phase."""
        total = round_half_up(self.total_samples.at(k, self.steps))
        m = max(1, round_half_up(total * self.positive_ratio.at(k, self.steps)))
        n = total - m
        if n < 1:
            raise ScenarioError("empty class in schedule")
        return m, n


class StepPlan(NamedTuple):
    step: int
    phase: int
    m: int
    n: int
    true_auc: float


@dataclass(frozen=True)
class ScenarioSpec:
    phases: tuple[PhaseSpec, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ScenarioError("scenario has no phases")
        if self.seed < 0:
            raise ScenarioError("seed must be non-negative")

    @property
    def total_steps(self) -> int:
        return sum(p.steps for p in self.phases)

    def plan(self) -> list[StepPlan]:
        out = []
        step = 0
        for idx, phase in enumerate(self.phases):
            for k in range(phase.steps):
                m, n = phase.counts(k)
                out.append(StepPlan(step, idx, m, n, phase.true_auc.at(k, phase.steps)))
                step += 1
        return out

    def phase_bounds(self) -> list[tuple[int, int]]:
        """Half-open ``[first, last + 1)`` step range of each phase."""
        bounds, start = [], 0
        for p in self.phases:
            bounds.append((start, start + p.steps))
            start += p.steps
        return bounds

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return ScenarioSpec(self.phases, seed)


def default_paper_scenario(
    seed: int = 0, auc_level: float = 0.95, declined_auc: float = 0.85
) -> ScenarioSpec:
    """Three 20-step phases: shrinking sample, shrinking positive ratio,
    then declining AUC on a growing sample."""
    level = Schedule.constant(auc_level)
    return ScenarioSpec(
        (
            PhaseSpec(20, Schedule(5000, 50), Schedule.constant(0.05), level),
            PhaseSpec(20, Schedule.constant(400), Schedule(0.05, 0.02), level),
            PhaseSpec(20, Schedule(400, 5000), Schedule.constant(0.02), Schedule(auc_level, declined_auc)),
        ),
        seed,
    )


class SimStep(NamedTuple):
    step: int
    batch: ScoredBatch
    true_auc: float


def _step_rng(seed: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, step])))


def _logistic(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def draw_step(plan: StepPlan, seed: int) -> SimStep:
    """Draw one step; each step has its own stream derived from ``(seed, step)``."""
    rng = _step_rng(seed, plan.step)
    delta = delta_for_auc(plan.true_auc)
    pos = _logistic(rng.normal(delta, 1.0, plan.m))
    neg = _logistic(rng.normal(0.0, 1.0, plan.n))
    return SimStep(plan.step, ScoredBatch(pos, neg), plan.true_auc)


def generate(scenario: ScenarioSpec) -> Iterator[SimStep]:
    for plan in scenario.plan():
        yield draw_step(plan, scenario.seed)


def render_scenario(scenario: ScenarioSpec) -> str:
    lines = ["[scenario]", f"seed = {scenario.seed}", ""]
    for i, p in enumerate(scenario.phases, 1):
        lines += [
            f"[phase {i}]",
            f"steps = {p.steps}",
            f"total_samples = {p.total_samples.render()}",
            f"positive_ratio = {p.positive_ratio.render()}",
            f"true_auc = {p.true_auc.render()}",
            "",
        ]
    return "\n".join(lines)


def parse_scenario(text: str) -> ScenarioSpec:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from exc
    seed = 0
    if cp.has_section("scenario"):
        try:
            seed = cp.getint("scenario", "seed", fallback=0)
        except ValueError as exc:
            raise ScenarioError(f"[scenario] seed: {exc}") from exc
    phase_sections = [s for s in cp.sections() if s.startswith("phase")]

    def phase_no(name: str) -> int:
        try:
            return int(name.split()[1])
        except (IndexError, ValueError):
            raise ScenarioError(f"section [{name}] should be named 'phase <number>'") from None

    phases = []
    for name in sorted(phase_sections, key=phase_no):
        sec = cp[name]
        missing = {"steps", "total_samples", "positive_ratio", "true_auc"} - set(sec)
        if missing:
            raise ScenarioError(f"[{name}] missing {', '.join(sorted(missing))}")
        try:
            steps = int(sec["steps"])
        except ValueError:
            raise ScenarioError(f"[{name}] steps must be an integer") from None
        phases.append(
            PhaseSpec(
                steps,
                Schedule.parse(sec["total_samples"]),
                Schedule.parse(sec["positive_ratio"]),
                Schedule.parse(sec["true_auc"]),
            )
        )
    return ScenarioSpec(tuple(phases), seed)


def write_prediction_log(steps: Iterable[SimStep], fp: IO[str]) -> None:
    """Write steps in the ingest CSV schema; step ``k`` is dated ``SIM_EPOCH + k`` days."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["timestamp", "score", "label"])
    for s in steps:
        day = (SIM_EPOCH + dt.timedelta(days=s.step)).isoformat()
        for x in s.batch.positives:
            w.writerow([day, repr(x), 1])
        for y in s.batch.negatives:
            w.writerow([day, repr(y), 0])


def write_truth(plan: Iterable[StepPlan], fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["step", "true_auc", "m", "n"])
    for p in plan:
        w.writerow([p.step, repr(p.true_auc), p.m, p.n])


def read_truth(fp: IO[str]) -> list[StepPlan]:
    """Read a truth file; the phase field is left as 0."""
    reader = csv.reader(fp)
    header = next(reader, None)
    if header != ["step", "true_auc", "m", "n"]:
        raise ScenarioError(f"unexpected truth header {header}")
    rows = []
    for line in reader:
        if not line:
            continue
        try:
            rows.append(StepPlan(int(line[0]), 0, int(line[2]), int(line[3]), float(line[1])))
        except (ValueError, IndexError):
            raise ScenarioError(f"line {reader.line_num}: malformed truth row") from None
    return rows
