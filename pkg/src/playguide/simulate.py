"""Scripted attention scenarios: deterministic desk-scale session drivers.

A scenario schedules which object the pair attends to over time. During an
attended interval both people emit gaze cues into the object's box at a
fixed per-person rate, and scripted utterances fire at given offsets. The
generated input stream runs through a logical-clock engine and the
resulting log is scored for responsiveness.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .analytics import compute_stats
from .cues import GazeEvent, RawInput, SceneLayout, Utterance
from .session import SessionConfig, SessionEngine, SessionResources, run_inputs
from .sessionlog import BoardChanged, SessionLog

PERSONS = ("parent", "child")


class ScenarioError(ValueError):
    """Invalid simulation schedule."""


@dataclass(frozen=True)
class AttendInterval:
    start_ms: int
    object_id: str
    gaze_rate_hz: float = 1.0  # per person
    utterances: tuple[tuple[int, str, str], ...] = ()  # (offset_ms, speaker, text)


@dataclass(frozen=True)
class SimulationScenario:
    duration_ms: int
    intervals: tuple[AttendInterval, ...]

    def __post_init__(self) -> None:
        previous = -1
        for interval in self.intervals:
            if interval.start_ms <= previous:
                raise ScenarioError("schedule entries must be strictly increasing and non-overlapping")
            if interval.start_ms >= self.duration_ms:
                raise ScenarioError("schedule entry starts beyond scenario duration")
            if interval.gaze_rate_hz < 0:
                raise ScenarioError("gaze rate must be nonnegative")
            previous = interval.start_ms

    def interval_end(self, index: int) -> int:
        if index + 1 < len(self.intervals):
            return self.intervals[index + 1].start_ms
        return self.duration_ms


def load_scenario(path: str | Path) -> SimulationScenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    try:
        intervals = tuple(
            AttendInterval(
                start_ms=int(entry["start_ms"]),
                object_id=str(entry["object"]),
                gaze_rate_hz=float(entry.get("gaze_rate_hz", 1.0)),
                utterances=tuple(
                    (int(u["offset_ms"]), str(u["speaker"]), str(u["text"]))
                    for u in entry.get("utterances", [])
                ),
            )
            for entry in data["intervals"]
        )
        return SimulationScenario(duration_ms=int(data["duration_ms"]), intervals=intervals)
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"{path}: missing field {exc}") from None


def _gaze_point(rng: random.Random, layout: SceneLayout, object_id: str) -> tuple[float, float]:
    box = layout.boxes[object_id]
    return rng.uniform(box.x0, box.x1), rng.uniform(box.y0, box.y1)


def scenario_inputs(
    scenario: SimulationScenario,
    resources: SessionResources,
    seed: int = 0,
) -> list[RawInput]:
    """Expand the schedule into a time-ordered gaze/utterance stream."""
    rng = random.Random(seed)
    items: list[RawInput] = []
    for index, interval in enumerate(scenario.intervals):
        if interval.object_id not in resources.catalog:
            raise ScenarioError(f"schedule references unknown object {interval.object_id!r}")
        end = scenario.interval_end(index)
        if interval.gaze_rate_hz > 0:
            step = int(round(1000.0 / interval.gaze_rate_hz))
            t = interval.start_ms
            while t < end:
                for person in PERSONS:
                    x, y = _gaze_point(rng, resources.layout, interval.object_id)
                    items.append(GazeEvent(timestamp_ms=t, person=person, x=x, y=y))
                t += step
        for offset, speaker, text in interval.utterances:
            t = interval.start_ms + offset
            if t < scenario.duration_ms:
                items.append(Utterance(timestamp_ms=t, speaker=speaker, text=text))
    items.sort(key=lambda item: item.timestamp_ms)
    return items


@dataclass(frozen=True)
class ShiftResponse:
    object_id: str
    shift_ms: int
    first_card_ms: int | None  # None when no card ever appeared

    @property
    def latency_ms(self) -> int | None:
        if self.first_card_ms is None:
            return None
        return self.first_card_ms - self.shift_ms


@dataclass(frozen=True)
class SimulationMetrics:
    shifts: tuple[ShiftResponse, ...]
    board_changes: int
    board_changes_per_minute: float
    final_board_objects: tuple[str, ...]
    stats: object = field(repr=False, default=None)


def _shift_responses(log: SessionLog, scenario: SimulationScenario) -> list[ShiftResponse]:
    # Board composition as (time, objects) change points.
    segments: list[tuple[int, frozenset[str]]] = [(log.started.t_ms, frozenset())]
    for event in log.events:
        if isinstance(event, BoardChanged):
            segments.append((event.t_ms, frozenset(slot.object_id for slot in event.board)))
    responses = []
    for interval in scenario.intervals:
        shift = interval.start_ms
        at_shift: frozenset[str] = frozenset()
        for seg_start, composition in segments:
            if seg_start > shift:
                break
            at_shift = composition
        if interval.object_id in at_shift:
            first: int | None = shift  # already on the board when attention shifted
        else:
            first = None
            for seg_start, composition in segments:
                if seg_start > shift and interval.object_id in composition:
                    first = seg_start
                    break
        responses.append(
            ShiftResponse(object_id=interval.object_id, shift_ms=shift, first_card_ms=first)
        )
    return responses


def run_simulation(
    scenario: SimulationScenario,
    resources: SessionResources,
    config: SessionConfig,
    seed: int = 0,
) -> tuple[SimulationMetrics, SessionEngine]:
    """Run the scenario deterministically and score responsiveness."""
    inputs = scenario_inputs(scenario, resources, seed=seed)
    engine = run_inputs(
        resources, config, inputs, session_id="simulation", end_ms=scenario.duration_ms
    )
    log = engine.log
    board_changes = sum(1 for event in log.events if isinstance(event, BoardChanged))
    minutes = scenario.duration_ms / 60_000.0
    final_objects = tuple(slot.object_id for slot in engine.board.slots)
    metrics = SimulationMetrics(
        shifts=tuple(_shift_responses(log, scenario)),
        board_changes=board_changes,
        board_changes_per_minute=board_changes / minutes if minutes > 0 else 0.0,
        final_board_objects=final_objects,
        stats=compute_stats(log),
    )
    return metrics, engine


def sustained_shift_scenario(
    settle_object: str = "bear",
    shift_object: str = "blocks",
    settle_ms: int = 900_000,
    shift_ms: int = 60_000,
) -> SimulationScenario:
    """Reference scenario: long dwell on one object, then a clean shift.

    The long dwell concentrates the distribution so the shifted-to object
    starts with no card on the board; the measured latency of its first
    card is the attention-sensitivity figure of merit.
    """
    return SimulationScenario(
        duration_ms=settle_ms + shift_ms,
        intervals=(
            AttendInterval(start_ms=0, object_id=settle_object),
            AttendInterval(start_ms=settle_ms, object_id=shift_object),
        ),
    )


def three_shift_scenario(
    objects: tuple[str, str, str] = ("bus", "dog", "ball"),
    settle_object: str = "bear",
    settle_ms: int = 900_000,
    span_ms: int = 120_000,
) -> SimulationScenario:
    """Three successive interest shifts inside a two-minute span."""
    step = span_ms // 3
    intervals = [AttendInterval(start_ms=0, object_id=settle_object)]
    for i, object_id in enumerate(objects):
        intervals.append(AttendInterval(start_ms=settle_ms + i * step, object_id=object_id))
    return SimulationScenario(duration_ms=settle_ms + span_ms, intervals=tuple(intervals))
