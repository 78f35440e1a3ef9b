"""Session statistics and the per-minute recommendation-accuracy metric."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .sessionlog import BoardChanged, CueApplied, HitRecorded, SessionLog


class AnalyticsError(ValueError):
    """Malformed log or truth input for an analytics computation."""


MINUTE_MS = 60_000


@dataclass(frozen=True)
class SessionStats:
    """Per-session attention and word-usage breakdown.

    attention_share integrates which object was top-ranked over time;
    weight_share integrates the raw weights themselves (a softer view of
    the same data). Both are empty for zero-duration sessions.
    """

    objects: tuple[str, ...]
    duration_ms: int
    attention_share: dict[str, float]
    weight_share: dict[str, float]
    word_usage: dict[str, int]


@dataclass(frozen=True)
class GroundTruthFocus:
    """Per-minute dominant object for an annotated segment."""

    start_ms: int
    minutes: tuple[str, ...]

    def end_ms(self) -> int:
        return self.start_ms + MINUTE_MS * len(self.minutes)


@dataclass(frozen=True)
class AccuracyResult:
    fraction: float
    total_minutes: int
    correct_minutes: int
    misses: dict[str, int]  # truth object -> missed minute count


def _distribution_segments(log: SessionLog) -> list[tuple[int, tuple[float, ...]]]:
    """(start_time, weights) change points, beginning with the uniform start."""
    started = log.started
    n = len(started.objects)
    segments: list[tuple[int, tuple[float, ...]]] = [(started.t_ms, tuple([1.0 / n] * n))]
    for event in log.events:
        if isinstance(event, CueApplied):
            segments.append((event.t_ms, event.weights))
    return segments


def _top_ranked(objects: tuple[str, ...], weights: tuple[float, ...]) -> str:
    best = 0
    for i in range(1, len(weights)):
        if weights[i] > weights[best]:
            best = i
    return objects[best]


def compute_stats(log: SessionLog) -> SessionStats:
    """Integrate top-ranked occupancy and weights over the session span."""
    started = log.started
    start, end = log.span()
    duration = end - start

    occupancy = {object_id: 0.0 for object_id in started.objects}
    weight_time = {object_id: 0.0 for object_id in started.objects}
    segments = _distribution_segments(log)
    for i, (seg_start, weights) in enumerate(segments):
        seg_end = segments[i + 1][0] if i + 1 < len(segments) else end
        span = max(0, min(seg_end, end) - max(seg_start, start))
        if span == 0:
            continue
        occupancy[_top_ranked(started.objects, weights)] += span
        for object_id, w in zip(started.objects, weights):
            weight_time[object_id] += w * span

    word_usage: dict[str, int] = {}
    for event in log.events:
        if isinstance(event, HitRecorded):
            word_usage[event.target_word_lemma] = word_usage.get(event.target_word_lemma, 0) + 1

    if duration <= 0:
        return SessionStats(started.objects, 0, {}, {}, word_usage)
    attention_share = {object_id: t / duration for object_id, t in occupancy.items()}
    weight_share = {object_id: t / duration for object_id, t in weight_time.items()}
    return SessionStats(started.objects, duration, attention_share, weight_share, word_usage)


def _board_segments(log: SessionLog) -> list[tuple[int, frozenset[str]]]:
    """(start_time, displayed object set) change points from board events."""
    segments: list[tuple[int, frozenset[str]]] = [(log.started.t_ms, frozenset())]
    for event in log.events:
        if isinstance(event, BoardChanged):
            segments.append((event.t_ms, frozenset(slot.object_id for slot in event.board)))
    return segments


def minute_accuracy(log: SessionLog, truth: GroundTruthFocus) -> AccuracyResult:
    """Fraction of minutes whose dominant object had a card on the board.

    A minute counts as correct if at any instant within it the board held
    at least one card for that minute's truth object. Misses are grouped
    by truth object.
    """
    start, end = log.span()
    if truth.start_ms < start or truth.end_ms() > end:
        raise AnalyticsError(
            f"truth segment [{truth.start_ms}, {truth.end_ms()}) outside log span [{start}, {end}]"
        )
    segments = _board_segments(log)
    correct = 0
    misses: dict[str, int] = {}
    for minute, object_id in enumerate(truth.minutes):
        window_start = truth.start_ms + minute * MINUTE_MS
        window_end = window_start + MINUTE_MS
        seen = False
        for i, (seg_start, composition) in enumerate(segments):
            seg_end = segments[i + 1][0] if i + 1 < len(segments) else end
            if seg_start < window_end and seg_end > window_start and object_id in composition:
                seen = True
                break
        if seen:
            correct += 1
        else:
            misses[object_id] = misses.get(object_id, 0) + 1
    total = len(truth.minutes)
    fraction = correct / total if total else 0.0
    return AccuracyResult(fraction=fraction, total_minutes=total, correct_minutes=correct, misses=misses)


def load_truth(path: str | Path) -> GroundTruthFocus:
    """Read a ground-truth focus file: `{"start_ms": ..., "minutes": [...]}`."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnalyticsError(f"{path}: invalid JSON ({exc})") from None
    try:
        start_ms = int(data["start_ms"])
        minutes = tuple(str(minute) for minute in data["minutes"])
    except (KeyError, TypeError) as exc:
        raise AnalyticsError(f"{path}: missing field {exc}") from None
    if not minutes:
        raise AnalyticsError(f"{path}: truth file lists no minutes")
    return GroundTruthFocus(start_ms=start_ms, minutes=minutes)


def render_stats_report(stats: SessionStats) -> str:
    lines = [
        "session statistics",
        "==================",
        f"duration_ms\t{stats.duration_ms}",
        "",
        "attention share (top-ranked occupancy / weight-integrated)",
        "object\ttop_share\tweight_share",
    ]
    for object_id in stats.objects:
        top = stats.attention_share.get(object_id, 0.0)
        weighted = stats.weight_share.get(object_id, 0.0)
        lines.append(f"{object_id}\t{top:.6f}\t{weighted:.6f}")
    lines += ["", "target word usage", "word\thits"]
    for word in sorted(stats.word_usage, key=lambda w: (-stats.word_usage[w], w)):
        lines.append(f"{word}\t{stats.word_usage[word]}")
    return "".join(line + "\n" for line in lines)


def render_accuracy_report(result: AccuracyResult) -> str:
    lines = [
        "recommendation accuracy",
        "=======================",
        f"minutes\t{result.total_minutes}",
        f"correct\t{result.correct_minutes}",
        f"accuracy\t{result.fraction:.6f}",
        "",
        "missed minutes by object",
        "object\tmisses",
    ]
    for object_id in sorted(result.misses, key=lambda o: (-result.misses[o], o)):
        lines.append(f"{object_id}\t{result.misses[object_id]}")
    return "".join(line + "\n" for line in lines)


def export_report(result: SessionStats | AccuracyResult, path: str | Path) -> None:
    """Write a deterministic structured-text report."""
    if isinstance(result, SessionStats):
        text = render_stats_report(result)
    elif isinstance(result, AccuracyResult):
        text = render_accuracy_report(result)
    else:
        raise AnalyticsError(f"cannot export {type(result)!r}")
    Path(path).write_text(text, encoding="utf-8")
