"""Append-only session log: one JSON event per line.

The log is the source of truth for a session. Every state mutation is
appended (and flushed to the sink, when one is attached) before any
snapshot is broadcast, so externally visible state is always
reconstructible from the persisted file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union

from .board import CardSlot


class SessionLogError(ValueError):
    """Malformed or out-of-order session log."""


@dataclass(frozen=True)
class SessionStarted:
    t_ms: int
    session_id: str
    objects: tuple[str, ...]
    config: dict


@dataclass(frozen=True)
class CueApplied:
    t_ms: int
    person: str
    modality: str
    object_id: str
    weights: tuple[float, ...]  # catalog order


@dataclass(frozen=True)
class BoardChanged:
    t_ms: int
    board: tuple[CardSlot, ...]


@dataclass(frozen=True)
class HitRecorded:
    t_ms: int
    object_id: str
    target_word_lemma: str
    candidate_index: int
    achieved: int


@dataclass(frozen=True)
class SessionEnded:
    t_ms: int


LogEvent = Union[SessionStarted, CueApplied, BoardChanged, HitRecorded, SessionEnded]


def event_to_dict(event: LogEvent) -> dict:
    if isinstance(event, SessionStarted):
        return {
            "event": "session_started",
            "t_ms": event.t_ms,
            "session_id": event.session_id,
            "objects": list(event.objects),
            "config": event.config,
        }
    if isinstance(event, CueApplied):
        return {
            "event": "cue_applied",
            "t_ms": event.t_ms,
            "person": event.person,
            "modality": event.modality,
            "object": event.object_id,
            "weights": list(event.weights),
        }
    if isinstance(event, BoardChanged):
        return {
            "event": "board_changed",
            "t_ms": event.t_ms,
            "board": [
                [slot.object_id, slot.candidate_index, slot.shown_since_ms, slot.uses]
                for slot in event.board
            ],
        }
    if isinstance(event, HitRecorded):
        return {
            "event": "hit_recorded",
            "t_ms": event.t_ms,
            "object": event.object_id,
            "target_word_lemma": event.target_word_lemma,
            "candidate_index": event.candidate_index,
            "achieved": event.achieved,
        }
    if isinstance(event, SessionEnded):
        return {"event": "session_ended", "t_ms": event.t_ms}
    raise SessionLogError(f"unknown event type {type(event)!r}")


def event_from_dict(data: dict) -> LogEvent:
    kind = data.get("event")
    if kind == "session_started":
        return SessionStarted(
            t_ms=data["t_ms"],
            session_id=data["session_id"],
            objects=tuple(data["objects"]),
            config=data["config"],
        )
    if kind == "cue_applied":
        return CueApplied(
            t_ms=data["t_ms"],
            person=data["person"],
            modality=data["modality"],
            object_id=data["object"],
            weights=tuple(data["weights"]),
        )
    if kind == "board_changed":
        return BoardChanged(
            t_ms=data["t_ms"],
            board=tuple(
                CardSlot(object_id=obj, candidate_index=idx, shown_since_ms=since, uses=uses)
                for obj, idx, since, uses in data["board"]
            ),
        )
    if kind == "hit_recorded":
        return HitRecorded(
            t_ms=data["t_ms"],
            object_id=data["object"],
            target_word_lemma=data["target_word_lemma"],
            candidate_index=data["candidate_index"],
            achieved=data["achieved"],
        )
    if kind == "session_ended":
        return SessionEnded(t_ms=data["t_ms"])
    raise SessionLogError(f"unknown event kind {kind!r}")


def encode_event(event: LogEvent) -> str:
    return json.dumps(event_to_dict(event), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class SessionLog:
    """In-memory event sequence with an optional write-through sink."""

    events: list[LogEvent] = field(default_factory=list)
    sink: IO[str] | None = None

    def append(self, event: LogEvent) -> None:
        if self.events:
            if isinstance(self.events[-1], SessionEnded):
                raise SessionLogError("cannot append after session_ended")
            if event.t_ms < self.events[-1].t_ms:
                raise SessionLogError(
                    f"event timestamp {event.t_ms} regresses below {self.events[-1].t_ms}"
                )
        elif not isinstance(event, SessionStarted):
            raise SessionLogError("first event must be session_started")
        self.events.append(event)
        if self.sink is not None:
            self.sink.write(encode_event(event) + "\n")
            self.sink.flush()

    def to_lines(self) -> list[str]:
        return [encode_event(event) for event in self.events]

    def write(self, path: str | Path) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.to_lines()), encoding="utf-8")

    @property
    def started(self) -> SessionStarted:
        if not self.events or not isinstance(self.events[0], SessionStarted):
            raise SessionLogError("log has no session_started event")
        return self.events[0]

    @property
    def ended_at(self) -> int | None:
        if self.events and isinstance(self.events[-1], SessionEnded):
            return self.events[-1].t_ms
        return None

    def span(self) -> tuple[int, int]:
        """(start, end) of the logged session; end falls back to last event."""
        start = self.started.t_ms
        end = self.ended_at
        if end is None:
            end = self.events[-1].t_ms
        return start, end


def read_session_log(path: str | Path) -> SessionLog:
    log = SessionLog()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SessionLogError(f"{path}:{lineno}: invalid JSON ({exc})") from None
        try:
            log.append(event_from_dict(data))
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionLogError(f"{path}:{lineno}: {exc}") from None
    if not log.events:
        raise SessionLogError(f"{path}: empty session log")
    return log


def events_of(log: SessionLog | Iterable[LogEvent]) -> list[LogEvent]:
    if isinstance(log, SessionLog):
        return list(log.events)
    return list(log)
