"""Cue extraction: gaze-target resolution, spoken mentions, debouncing, logs.

Raw inputs are pre-extracted perception outputs: gaze target points and
utterance transcripts. This module turns them into attention cues and
target-word hits, and reads/writes the replayable cue-log format.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

from .catalog import LemmaDictionary, ObjectCatalog, PhraseBank, lemmatize, tokenize
from .fusion import MODALITY_SPOKEN, MODALITY_VISUAL, AttentionCue


class CueLogError(ValueError):
    """Malformed cue-log or layout file."""


@dataclass(frozen=True)
class GazeEvent:
    timestamp_ms: int
    person: str
    x: float
    y: float


@dataclass(frozen=True)
class Utterance:
    timestamp_ms: int
    speaker: str
    text: str


RawInput = Union[GazeEvent, Utterance]


@dataclass(frozen=True)
class TargetWordHit:
    """Detected use of a phrase card's target word alongside its object.

    Hits feed progress tracking and card replacement, not attention fusion.
    """

    timestamp_ms: int
    object_id: str
    target_word_lemma: str
    candidate_index: int


@dataclass(frozen=True)
class Box:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise CueLogError(f"box {self} has no area")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class SceneLayout:
    """Axis-aligned object boxes in normalized scene coordinates."""

    boxes: dict[str, Box]


def gaze_to_cue(event: GazeEvent, layout: SceneLayout) -> AttentionCue | None:
    """Resolve a gaze point to a visual cue on the smallest containing box.

    Returns None when the point misses every box. Smallest-area wins when
    boxes overlap, so small occludable objects are not swallowed by large
    neighbors; exact area ties fall back to layout order.
    """
    best: tuple[float, int, str] | None = None
    for order, (object_id, box) in enumerate(layout.boxes.items()):
        if box.contains(event.x, event.y):
            key = (box.area, order, object_id)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return AttentionCue(
        timestamp_ms=event.timestamp_ms,
        person=event.person,
        modality=MODALITY_VISUAL,
        object_id=best[2],
    )


def extract_spoken_cues(
    utterance: Utterance,
    catalog: ObjectCatalog,
    bank: PhraseBank,
    dictionary: LemmaDictionary,
) -> tuple[list[AttentionCue], list[TargetWordHit]]:
    """Find object mentions and target-word usage in one utterance.

    Every mention of an object-name lemma yields a spoken cue. A target-word
    hit needs both the object name and the target word within the same
    utterance; child speech contributes cues but never hits, since progress
    measures the parent's usage.
    """
    lemmas = lemmatize(tokenize(utterance.text), dictionary)
    name_index = catalog.lemma_index()
    cues: list[AttentionCue] = []
    mentioned: list[str] = []
    for lemma in lemmas:
        object_id = name_index.get(lemma)
        if object_id is None:
            continue
        cues.append(
            AttentionCue(
                timestamp_ms=utterance.timestamp_ms,
                person=utterance.speaker,
                modality=MODALITY_SPOKEN,
                object_id=object_id,
            )
        )
        if object_id not in mentioned:
            mentioned.append(object_id)

    hits: list[TargetWordHit] = []
    if utterance.speaker == "child":
        return cues, hits
    lemma_set = set(lemmas)
    for object_id in mentioned:
        for candidate in bank.candidates(object_id):
            if candidate.target_word_lemma in lemma_set:
                hit = TargetWordHit(
                    timestamp_ms=utterance.timestamp_ms,
                    object_id=object_id,
                    target_word_lemma=candidate.target_word_lemma,
                    candidate_index=candidate.candidate_index,
                )
                # One hit per (object, target word) pair per utterance.
                if not any(
                    h.object_id == object_id
                    and h.target_word_lemma == candidate.target_word_lemma
                    for h in hits
                ):
                    hits.append(hit)
    return cues, hits


class CueDebouncer:
    """Collapse bursts of identical cues to one per window.

    Keyed by (person, modality, object); the first cue in each window
    passes, later ones are dropped until the window elapses. Never reorders
    and never invents cues.
    """

    def __init__(self, window_ms: int) -> None:
        if window_ms <= 0:
            raise ValueError("debounce window must be positive")
        self.window_ms = window_ms
        self._last_passed: dict[tuple[str, str, str], int] = {}

    def admit(self, cue: AttentionCue) -> bool:
        key = (cue.person, cue.modality, cue.object_id)
        last = self._last_passed.get(key)
        if last is not None and cue.timestamp_ms - last < self.window_ms:
            return False
        self._last_passed[key] = cue.timestamp_ms
        return True

    def filter(self, cues: list[AttentionCue]) -> list[AttentionCue]:
        return [cue for cue in cues if self.admit(cue)]


def load_layout(path: str | Path, catalog: ObjectCatalog) -> SceneLayout:
    """Load object boxes (`object_id<TAB>x0,y0,x1,y1`), validating ids."""
    boxes: dict[str, Box] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CueLogError(f"{path}:{lineno}: expected `object<TAB>x0,y0,x1,y1`")
        object_id, coords = fields[0].strip(), fields[1]
        if object_id not in catalog:
            raise CueLogError(f"{path}:{lineno}: unknown object {object_id!r}")
        try:
            x0, y0, x1, y1 = (float(part) for part in coords.split(","))
        except ValueError:
            raise CueLogError(f"{path}:{lineno}: bad coordinates {coords!r}") from None
        boxes[object_id] = Box(x0, y0, x1, y1)
    return SceneLayout(boxes=boxes)


def format_cue_log_line(item: RawInput) -> str:
    if isinstance(item, GazeEvent):
        return f"{item.timestamp_ms}\tgaze\t{item.person}\t{item.x!r},{item.y!r}"
    return f"{item.timestamp_ms}\tutt\t{item.speaker}\t{json.dumps(item.text, ensure_ascii=False)}"


def write_cue_log(path: str | Path, items: list[RawInput]) -> None:
    lines = [format_cue_log_line(item) for item in items]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def parse_cue_log_line(line: str, lineno: int = 0, source: str = "<cue log>") -> RawInput:
    fields = line.split("\t", 3)
    if len(fields) != 4:
        raise CueLogError(f"{source}:{lineno}: expected 4 tab-separated fields")
    t_text, kind, person, payload = fields
    try:
        timestamp = int(t_text)
    except ValueError:
        raise CueLogError(f"{source}:{lineno}: bad timestamp {t_text!r}") from None
    if kind == "gaze":
        try:
            x, y = (float(part) for part in payload.split(","))
        except ValueError:
            raise CueLogError(f"{source}:{lineno}: bad gaze payload {payload!r}") from None
        return GazeEvent(timestamp_ms=timestamp, person=person, x=x, y=y)
    if kind == "utt":
        try:
            text = json.loads(payload)
        except json.JSONDecodeError:
            raise CueLogError(f"{source}:{lineno}: bad utterance payload {payload!r}") from None
        if not isinstance(text, str) or not text:
            raise CueLogError(f"{source}:{lineno}: utterance text must be a nonempty string")
        return Utterance(timestamp_ms=timestamp, speaker=person, text=text)
    raise CueLogError(f"{source}:{lineno}: unknown record kind {kind!r}")


def read_cue_log(path: str | Path) -> Iterator[RawInput]:
    """Yield gaze/utterance records in file order, enforcing timestamp order."""
    previous: int | None = None
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        item = parse_cue_log_line(line, lineno, str(path))
        if previous is not None and item.timestamp_ms < previous:
            raise CueLogError(
                f"{path}:{lineno}: timestamp {item.timestamp_ms} regresses below {previous}"
            )
        previous = item.timestamp_ms
        yield item
