"""Session engine: one owner per session driving the full cue pipeline.

An engine consumes timestamped gaze events and utterances, applies
tick -> hit recording -> cue fusion -> board reconciliation, and appends
every state mutation to the session log before exposing it as a snapshot.
Snapshots are produced by replaying the log events through a
SnapshotBuilder, so live state and post-hoc reconstruction from a
persisted log are identical by construction.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from importlib import resources as importlib_resources

from .analytics import AnalyticsError
from .board import (
    CardBoard,
    CardSlot,
    ProgressState,
    ReplacementPolicy,
    allocate,
    reconcile,
    record_hit,
    tick,
)
from .catalog import (
    LemmaDictionary,
    ObjectCatalog,
    PhraseBank,
    load_catalog,
    load_lemma_dictionary,
    load_phrase_bank,
)
from .cues import (
    CueDebouncer,
    GazeEvent,
    RawInput,
    SceneLayout,
    Utterance,
    extract_spoken_cues,
    gaze_to_cue,
    load_layout,
)
from .fusion import (
    DEFAULT_DEBOUNCE_MS,
    AttentionDistribution,
    FusionParams,
    apply_cue,
    init_distribution,
)
from .sessionlog import (
    BoardChanged,
    CueApplied,
    HitRecorded,
    LogEvent,
    SessionEnded,
    SessionLog,
    SessionStarted,
)

CLOCK_LOGICAL = "logical"
CLOCK_WALL = "wall"

DEFAULT_GOAL = 10
DEFAULT_TOLERANCE_MS = 500


class SessionError(ValueError):
    """Invalid session configuration or input."""


class StaleInputError(SessionError):
    """Input timestamp is older than the reorder tolerance allows."""


def data_path(name: str) -> Path:
    """Path of a bundled reference data file."""
    return Path(str(importlib_resources.files("playguide").joinpath("data", name)))


@dataclass(frozen=True)
class SessionConfig:
    catalog_path: Path = field(default_factory=lambda: data_path("catalog.tsv"))
    bank_path: Path = field(default_factory=lambda: data_path("phrases.tsv"))
    lemmas_path: Path = field(default_factory=lambda: data_path("lemmas.tsv"))
    layout_path: Path = field(default_factory=lambda: data_path("layout.tsv"))
    params: FusionParams = field(default_factory=FusionParams)
    policy: ReplacementPolicy = field(default_factory=ReplacementPolicy)
    debounce_ms: int = DEFAULT_DEBOUNCE_MS
    clock_mode: str = CLOCK_LOGICAL
    goal: int = DEFAULT_GOAL
    tolerance_ms: int = DEFAULT_TOLERANCE_MS

    def __post_init__(self) -> None:
        if self.clock_mode not in (CLOCK_LOGICAL, CLOCK_WALL):
            raise SessionError(f"unknown clock mode {self.clock_mode!r}")
        if self.debounce_ms <= 0 or self.goal <= 0 or self.tolerance_ms < 0:
            raise SessionError("invalid session configuration values")

    def load(self) -> "SessionResources":
        catalog = load_catalog(self.catalog_path)
        bank = load_phrase_bank(self.bank_path, catalog)
        dictionary = load_lemma_dictionary(self.lemmas_path)
        layout = load_layout(self.layout_path, catalog)
        return SessionResources(catalog=catalog, bank=bank, dictionary=dictionary, layout=layout)

    def public_dict(self) -> dict:
        """Configuration values recorded in the session log for provenance."""
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "debounce_ms": self.debounce_ms,
            "n_uses": self.policy.n_uses,
            "t_display_ms": self.policy.t_display_ms,
            "board_size": self.policy.board_size,
            "goal": self.goal,
            "clock_mode": self.clock_mode,
        }


def config_from_dict(
    data: dict, base: SessionConfig | None = None, base_dir: Path | None = None
) -> SessionConfig:
    """Overlay config values from a plain dict onto a base configuration."""
    defaults = base if base is not None else SessionConfig()

    def resolve(key: str, default: Path) -> Path:
        value = data.get(key)
        if value is None:
            return default
        candidate = Path(value)
        if not candidate.is_absolute() and base_dir is not None:
            candidate = base_dir / candidate
        return candidate

    try:
        return SessionConfig(
            catalog_path=resolve("catalog", defaults.catalog_path),
            bank_path=resolve("bank", defaults.bank_path),
            lemmas_path=resolve("lemmas", defaults.lemmas_path),
            layout_path=resolve("layout", defaults.layout_path),
            params=FusionParams(
                alpha=float(data.get("alpha", defaults.params.alpha)),
                beta=float(data.get("beta", defaults.params.beta)),
            ),
            policy=ReplacementPolicy(
                n_uses=int(data.get("n_uses", defaults.policy.n_uses)),
                t_display_ms=int(data.get("t_display_ms", defaults.policy.t_display_ms)),
                board_size=int(data.get("board_size", defaults.policy.board_size)),
            ),
            debounce_ms=int(data.get("debounce_ms", defaults.debounce_ms)),
            clock_mode=str(data.get("clock_mode", defaults.clock_mode)),
            goal=int(data.get("goal", defaults.goal)),
            tolerance_ms=int(data.get("tolerance_ms", defaults.tolerance_ms)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SessionError):
            raise
        raise SessionError(f"invalid configuration value: {exc}") from None


def config_from_file(path: str | Path) -> SessionConfig:
    """Load a JSON config file; relative paths resolve beside the file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SessionError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SessionError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise SessionError(f"{path}: config must be a JSON object")
    return config_from_dict(data, base_dir=Path(path).parent)


@dataclass(frozen=True)
class SessionResources:
    catalog: ObjectCatalog
    bank: PhraseBank
    dictionary: LemmaDictionary
    layout: SceneLayout


@dataclass(frozen=True)
class Snapshot:
    """Immutable view of session state after one log event."""

    revision: int
    clock_ms: int
    distribution: tuple[tuple[str, float], ...]
    board: tuple[tuple[int, str, int, str, int, int], ...]  # slot, object, cand, phrase, since, uses
    achieved: int
    goal: int

    def to_message(self) -> dict:
        return {
            "type": "snapshot",
            "revision": self.revision,
            "clock_ms": self.clock_ms,
            "distribution": [
                {"object": object_id, "weight": weight} for object_id, weight in self.distribution
            ],
            "board": [
                {
                    "slot": slot,
                    "object": object_id,
                    "candidate_index": candidate,
                    "phrase": phrase,
                    "shown_since": since,
                    "uses": uses,
                }
                for slot, object_id, candidate, phrase, since, uses in self.board
            ],
            "progress": {"achieved": self.achieved, "goal": self.goal},
        }

    def board_signature(self) -> tuple:
        return self.board

    def encode(self) -> str:
        return json.dumps(self.to_message(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class SnapshotBuilder:
    """Folds log events into protocol snapshots.

    The live engine and offline log reconstruction both use this class,
    which is what makes replayed transcripts bit-identical to live ones.
    """

    def __init__(self, bank: PhraseBank) -> None:
        self.bank = bank
        self.objects: tuple[str, ...] = ()
        self.weights: tuple[float, ...] = ()
        self.board: tuple[CardSlot, ...] = ()
        self.achieved = 0
        self.goal = DEFAULT_GOAL
        self.clock_ms = 0
        self.revision = 0

    def apply(self, event: LogEvent) -> None:
        self.revision += 1
        self.clock_ms = event.t_ms
        if isinstance(event, SessionStarted):
            self.objects = event.objects
            share = 1.0 / len(event.objects)
            self.weights = tuple([share] * len(event.objects))
            self.goal = int(event.config.get("goal", DEFAULT_GOAL))
        elif isinstance(event, CueApplied):
            self.weights = event.weights
        elif isinstance(event, BoardChanged):
            self.board = event.board
        elif isinstance(event, HitRecorded):
            self.achieved = event.achieved

    def snapshot(self) -> Snapshot:
        board = tuple(
            (
                index,
                slot.object_id,
                slot.candidate_index,
                self.bank.candidate(slot.object_id, slot.candidate_index).phrase_text,
                slot.shown_since_ms,
                slot.uses,
            )
            for index, slot in enumerate(self.board)
        )
        return Snapshot(
            revision=self.revision,
            clock_ms=self.clock_ms,
            distribution=tuple(zip(self.objects, self.weights)),
            board=board,
            achieved=self.achieved,
            goal=self.goal,
        )


def replay_snapshots(log: SessionLog, bank: PhraseBank) -> list[Snapshot]:
    """Reconstruct the full snapshot transcript from a persisted log."""
    builder = SnapshotBuilder(bank)
    out: list[Snapshot] = []
    for event in log.events:
        builder.apply(event)
        out.append(builder.snapshot())
    return out


class SessionEngine:
    """Owns all mutable state of one session; inputs must arrive in order."""

    def __init__(
        self,
        resources: SessionResources,
        config: SessionConfig,
        session_id: str = "session",
        start_ms: int = 0,
        sink: IO[str] | None = None,
    ) -> None:
        self.resources = resources
        self.config = config
        self.session_id = session_id
        self.clock_ms = start_ms
        self.debouncer = CueDebouncer(config.debounce_ms)
        self.dist: AttentionDistribution = init_distribution(resources.catalog)
        self.board = CardBoard()
        self.progress = ProgressState(goal=config.goal)
        self.log = SessionLog(sink=sink)
        self.builder = SnapshotBuilder(resources.bank)
        self.transcript: list[Snapshot] = []
        self._unread = 0
        self.ended = False

        self._append(
            SessionStarted(
                t_ms=start_ms,
                session_id=session_id,
                objects=resources.catalog.ids(),
                config=config.public_dict(),
            )
        )
        allocation = allocate(self.dist, config.policy, resources.bank, resources.catalog)
        self.board, changes = reconcile(self.board, allocation, start_ms, resources.bank)
        if changes:
            self._append(BoardChanged(t_ms=start_ms, board=self.board.slots))

    def _append(self, event: LogEvent) -> Snapshot:
        # Log first: broadcast happens strictly after the event is durable.
        self.log.append(event)
        self.builder.apply(event)
        snapshot = self.builder.snapshot()
        self.transcript.append(snapshot)
        self._unread += 1
        return snapshot

    def take_new_snapshots(self) -> list[Snapshot]:
        """Snapshots appended since the last call (for broadcasting)."""
        if self._unread == 0:
            return []
        out = self.transcript[-self._unread:]
        self._unread = 0
        return out

    def snapshot(self) -> Snapshot:
        return self.builder.snapshot()

    def _weights_tuple(self) -> tuple[float, ...]:
        return tuple(self.dist.weights[object_id] for object_id in self.resources.catalog.ids())

    def advance_clock(self, t_ms: int) -> None:
        """Move the session clock forward, expiring stale cards."""
        if self.ended:
            raise SessionError("session already ended")
        if t_ms < self.clock_ms:
            raise SessionError(f"clock regression: {t_ms} < {self.clock_ms}")
        self.clock_ms = t_ms
        self.board, changes = tick(self.board, t_ms, self.config.policy, self.resources.bank)
        if changes:
            self._append(BoardChanged(t_ms=t_ms, board=self.board.slots))

    def ingest(self, item: RawInput) -> None:
        """Apply one gaze event or utterance at its timestamp."""
        t = item.timestamp_ms
        self.advance_clock(t)

        if isinstance(item, GazeEvent):
            cue = gaze_to_cue(item, self.resources.layout)
            cues = [cue] if cue is not None else []
            hits = []
        elif isinstance(item, Utterance):
            cues, hits = extract_spoken_cues(
                item, self.resources.catalog, self.resources.bank, self.resources.dictionary
            )
        else:
            raise SessionError(f"cannot ingest {type(item)!r}")

        # Hits are matched against the board the speaker was looking at,
        # before this input's own cues can reshuffle it.
        for hit in hits:
            slots_before = self.board.slots
            self.board, self.progress, _ = record_hit(
                self.board, hit, self.progress, self.resources.bank, self.config.policy
            )
            self._append(
                HitRecorded(
                    t_ms=t,
                    object_id=hit.object_id,
                    target_word_lemma=hit.target_word_lemma,
                    candidate_index=hit.candidate_index,
                    achieved=self.progress.achieved,
                )
            )
            # Use-count bumps and replacements both alter the board; the log
            # must carry them for faithful reconstruction.
            if self.board.slots != slots_before:
                self._append(BoardChanged(t_ms=t, board=self.board.slots))

        any_applied = False
        for cue in cues:
            if not self.debouncer.admit(cue):
                continue
            self.dist = apply_cue(self.dist, cue, self.config.params)
            any_applied = True
            self._append(
                CueApplied(
                    t_ms=t,
                    person=cue.person,
                    modality=cue.modality,
                    object_id=cue.object_id,
                    weights=self._weights_tuple(),
                )
            )
        if any_applied:
            allocation = allocate(
                self.dist, self.config.policy, self.resources.bank, self.resources.catalog
            )
            self.board, changes = reconcile(self.board, allocation, t, self.resources.bank)
            if changes:
                self._append(BoardChanged(t_ms=t, board=self.board.slots))

    def end(self, t_ms: int | None = None) -> SessionLog:
        if self.ended:
            raise SessionError("session already ended")
        end_t = self.clock_ms if t_ms is None else t_ms
        self.advance_clock(end_t)
        self._append(SessionEnded(t_ms=end_t))
        self.ended = True
        return self.log


class IngestSequencer:
    """Reorders slightly-late inputs; rejects ones beyond the tolerance.

    Inputs wait in a timestamp-ordered heap. An input is released once it
    can no longer be preempted: when the reference clock (newest enqueued
    timestamp in logical mode, wall time in wall mode) has moved at least
    ``tolerance_ms`` past it. Released inputs are always non-decreasing.
    """

    def __init__(self, tolerance_ms: int = DEFAULT_TOLERANCE_MS) -> None:
        self.tolerance_ms = tolerance_ms
        self._heap: list[tuple[int, int, RawInput]] = []
        self._seq = 0
        self.watermark: int | None = None

    def push(self, item: RawInput, now_ms: int | None = None) -> None:
        reference = self.watermark if now_ms is None else now_ms
        if reference is not None and item.timestamp_ms < reference - self.tolerance_ms:
            raise StaleInputError(
                f"input at {item.timestamp_ms} ms is older than tolerance "
                f"({self.tolerance_ms} ms before {reference} ms)"
            )
        heapq.heappush(self._heap, (item.timestamp_ms, self._seq, item))
        self._seq += 1
        if self.watermark is None or item.timestamp_ms > self.watermark:
            self.watermark = item.timestamp_ms

    def ready(self, now_ms: int | None = None) -> list[RawInput]:
        reference = self.watermark if now_ms is None else now_ms
        if reference is None:
            return []
        threshold = reference - self.tolerance_ms
        out: list[RawInput] = []
        while self._heap and self._heap[0][0] <= threshold:
            out.append(heapq.heappop(self._heap)[2])
        return out

    def flush(self) -> list[RawInput]:
        out = [heapq.heappop(self._heap)[2] for _ in range(len(self._heap))]
        return out


def run_inputs(
    resources: SessionResources,
    config: SessionConfig,
    inputs: Iterable[RawInput],
    session_id: str = "replay",
    start_ms: int = 0,
    end_ms: int | None = None,
    sink: IO[str] | None = None,
) -> SessionEngine:
    """Feed a time-ordered input stream through a fresh logical-clock engine."""
    engine = SessionEngine(resources, config, session_id=session_id, start_ms=start_ms, sink=sink)
    for item in inputs:
        engine.ingest(item)
    engine.end(t_ms=end_ms)
    return engine


def final_state_dump(log: SessionLog, bank: PhraseBank) -> str:
    """Deterministic JSON dump of the final snapshot of a session log."""
    snapshots = replay_snapshots(log, bank)
    if not snapshots:
        raise AnalyticsError("empty session log")
    return snapshots[-1].encode()
