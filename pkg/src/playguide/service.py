"""WebSocket session service: live ingest, snapshot fan-out, persisted logs.

One registry hosts many isolated sessions. Within a session, a single
asyncio lock serializes all state mutation; every mutation is appended to
the session's log file before the resulting snapshot is pushed to
subscribers. Subscribers get full snapshots with a monotone revision
number; distribution-only updates may coalesce for slow consumers but
board changes are never skipped.
"""
from __future__ import annotations

import asyncio
import json
import logging
import time
from collections import deque
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .catalog import CatalogError
from .cues import CueLogError, GazeEvent, RawInput, Utterance
from .fusion import PERSONS
from .session import (
    CLOCK_WALL,
    IngestSequencer,
    SessionConfig,
    SessionEngine,
    SessionError,
    Snapshot,
    StaleInputError,
    config_from_dict,
)

logger = logging.getLogger(__name__)

HEARTBEAT_MS = 1000
DRAIN_TICK_S = 0.25


class UnknownSessionError(SessionError):
    """No live session under that id."""


class SubscriberChannel:
    """Per-subscriber outbound queue with distribution-update coalescing.

    A pushed snapshot replaces the queue tail when nothing but the
    distribution (or the clock) moved, so a slow consumer always sees
    every board/progress change plus the latest distribution state.
    """

    def __init__(self) -> None:
        self._items: deque[tuple[object, str]] = deque()
        self._ready = asyncio.Event()
        self.closed = False

    def push(self, payload: str, signature: object = None) -> None:
        if signature is not None and self._items and self._items[-1][0] == signature:
            self._items[-1] = (signature, payload)
        else:
            self._items.append((signature, payload))
        self._ready.set()

    async def next_payload(self) -> str:
        while not self._items:
            self._ready.clear()
            await self._ready.wait()
        return self._items.popleft()[1]

    def pending(self) -> int:
        return len(self._items)


def snapshot_signature(snapshot: Snapshot) -> tuple:
    return (snapshot.board_signature(), snapshot.achieved, snapshot.goal)


class LiveSession:
    """One hosted session: engine + input sequencing + subscriber fan-out."""

    def __init__(
        self,
        session_id: str,
        config: SessionConfig,
        data_dir: Path,
    ) -> None:
        self.session_id = session_id
        self.config = config
        self.resources = config.load()
        self.log_path = data_dir / f"{session_id}.jsonl"
        self._sink = self.log_path.open("w", encoding="utf-8")
        self.engine = SessionEngine(
            self.resources, config, session_id=session_id, start_ms=0, sink=self._sink
        )
        self.lock = asyncio.Lock()
        self.subscribers: list[SubscriberChannel] = []
        self.wall = config.clock_mode == CLOCK_WALL
        self.sequencer = IngestSequencer(config.tolerance_ms)
        self._t0 = time.monotonic()
        self._last_beat_ms = 0
        self._pump_task: asyncio.Task | None = None
        self.ended = False
        # Startup snapshots predate any subscriber; late joiners get the
        # current state from subscribe(), so drop them from the queue.
        self.engine.take_new_snapshots()
        if self.wall:
            self._pump_task = asyncio.create_task(self._pump())

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    def _broadcast_new(self) -> None:
        for snapshot in self.engine.take_new_snapshots():
            payload = snapshot.encode()
            signature = snapshot_signature(snapshot)
            for channel in self.subscribers:
                channel.push(payload, signature)

    def _broadcast_current(self) -> None:
        # Heartbeat frames carry the session clock so consoles can advance
        # display timers between events; revision is unchanged.
        snapshot = replace(self.engine.snapshot(), clock_ms=self.engine.clock_ms)
        payload = snapshot.encode()
        signature = snapshot_signature(snapshot)
        for channel in self.subscribers:
            channel.push(payload, signature)

    async def ingest(self, item: RawInput) -> tuple[int, int]:
        """Queue and apply one input; returns (session clock, revision)."""
        async with self.lock:
            if self.ended:
                raise SessionError(f"session {self.session_id!r} already ended")
            if self.wall:
                now = self.now_ms()
                self.sequencer.push(item, now_ms=now)
                self._drain(now)
            else:
                # Logical clock: apply immediately. Slightly-late inputs are
                # folded onto the current clock; older ones are rejected.
                t = item.timestamp_ms
                clock = self.engine.clock_ms
                if t < clock:
                    if clock - t > self.config.tolerance_ms:
                        raise StaleInputError(
                            f"input at {t} ms is more than {self.config.tolerance_ms} ms "
                            f"behind the session clock ({clock} ms)"
                        )
                    item = replace(item, timestamp_ms=clock)
                self.engine.ingest(item)
            self._broadcast_new()
            return self.engine.clock_ms, self.engine.snapshot().revision

    def _drain(self, now_ms: int) -> None:
        for item in self.sequencer.ready(now_ms):
            self.engine.ingest(item)

    async def _pump(self) -> None:
        """Wall-clock driver: releases sequenced inputs, ticks, heartbeats."""
        try:
            while True:
                await asyncio.sleep(DRAIN_TICK_S)
                async with self.lock:
                    if self.ended:
                        return
                    now = self.now_ms()
                    self._drain(now)
                    # The engine clock trails wall time by the reorder
                    # tolerance so late-but-tolerable inputs never regress.
                    target = max(self.engine.clock_ms, now - self.config.tolerance_ms)
                    self.engine.advance_clock(target)
                    self._broadcast_new()
                    if now - self._last_beat_ms >= HEARTBEAT_MS:
                        self._last_beat_ms = now
                        self._broadcast_current()
        except asyncio.CancelledError:
            return
        except Exception:
            logger.exception("session %s pump failed", self.session_id)

    async def subscribe(self, channel: SubscriberChannel) -> None:
        """Register a subscriber: it gets meta + a full snapshot, then diffs."""
        async with self.lock:
            channel.push(json.dumps(self.meta_message(), sort_keys=True, separators=(",", ":")))
            snapshot = self.engine.snapshot()
            channel.push(snapshot.encode(), snapshot_signature(snapshot))
            self.subscribers.append(channel)

    async def unsubscribe(self, channel: SubscriberChannel) -> None:
        async with self.lock:
            if channel in self.subscribers:
                self.subscribers.remove(channel)

    def meta_message(self) -> dict:
        objects = []
        for entry in self.resources.catalog.objects:
            box = self.resources.layout.boxes.get(entry.id)
            objects.append(
                {
                    "id": entry.id,
                    "display_name": entry.display_name,
                    "box": [box.x0, box.y0, box.x1, box.y1] if box else None,
                }
            )
        return {
            "type": "meta",
            "session": self.session_id,
            "objects": objects,
            "policy": {
                "n_uses": self.config.policy.n_uses,
                "t_display_ms": self.config.policy.t_display_ms,
                "board_size": self.config.policy.board_size,
            },
            "goal": self.config.goal,
            "clock_mode": self.config.clock_mode,
            "heartbeat_ms": HEARTBEAT_MS,
        }

    async def end(self) -> Path:
        async with self.lock:
            if self.ended:
                raise SessionError(f"session {self.session_id!r} already ended")
            if self.wall:
                self._drain(self.now_ms())
            for item in self.sequencer.flush():
                self.engine.ingest(item)
            self.engine.end()
            self.ended = True
            self._broadcast_new()
            self._sink.close()
        if self._pump_task is not None:
            self._pump_task.cancel()
        return self.log_path


class SessionRegistry:
    """All live sessions; sessions never share mutable state."""

    def __init__(self, base_config: SessionConfig, data_dir: str | Path) -> None:
        self.base_config = base_config
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, LiveSession] = {}
        self._counter = 0

    def start(self, overrides: dict | None = None, session_id: str | None = None) -> LiveSession:
        if session_id is None:
            self._counter += 1
            session_id = f"s{self._counter}"
        if session_id in self.sessions:
            raise SessionError(f"session id {session_id!r} already in use")
        config = self.base_config
        if overrides:
            config = config_from_dict(overrides, base=config)
        session = LiveSession(session_id, config, self.data_dir)
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> LiveSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return session

    async def end(self, session_id: str) -> Path:
        session = self.get(session_id)
        path = await session.end()
        del self.sessions[session_id]
        return path

    async def shutdown(self) -> None:
        for session_id in list(self.sessions):
            try:
                await self.end(session_id)
            except SessionError:
                pass


def _parse_input(data: dict, default_t_ms: int | None = None) -> RawInput:
    kind = data.get("kind")
    try:
        t_raw = data.get("t_ms")
        if t_raw is None:
            if default_t_ms is None:
                raise SessionError("t_ms is required for logical-clock sessions")
            timestamp = default_t_ms  # wall sessions may be server-stamped
        else:
            timestamp = int(t_raw)
        if kind == "gaze":
            person = str(data["person"])
            if person not in PERSONS:
                raise SessionError(f"unknown person {person!r}")
            x, y = float(data["x"]), float(data["y"])
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise SessionError(f"gaze point ({x}, {y}) outside the unit square")
            return GazeEvent(timestamp_ms=timestamp, person=person, x=x, y=y)
        if kind == "utterance":
            speaker = str(data["speaker"])
            if speaker not in PERSONS:
                raise SessionError(f"unknown speaker {speaker!r}")
            text = str(data["text"])
            if not text:
                raise SessionError("utterance text is empty")
            return Utterance(timestamp_ms=timestamp, speaker=speaker, text=text)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SessionError):
            raise
        raise SessionError(f"bad input payload: {exc}") from None
    raise SessionError(f"unknown input kind {kind!r}")


def create_app(registry: SessionRegistry) -> FastAPI:
    app = FastAPI(title="playguide session service")
    app.state.registry = registry

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "sessions": len(registry.sessions)}

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        subscriptions: list[tuple[LiveSession, SubscriberChannel, asyncio.Task]] = []

        async def send_error(code: str, detail: str) -> None:
            await ws.send_text(
                json.dumps(
                    {"type": "error", "code": code, "detail": detail},
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )

        async def sender(channel: SubscriberChannel) -> None:
            try:
                while True:
                    payload = await channel.next_payload()
                    await ws.send_text(payload)
            except (WebSocketDisconnect, RuntimeError, asyncio.CancelledError):
                return

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await send_error("bad_message", "message is not valid JSON")
                    continue
                msg_type = message.get("type")
                try:
                    if msg_type == "start":
                        session = registry.start(
                            overrides=message.get("config"), session_id=message.get("session")
                        )
                        await ws.send_text(
                            json.dumps(
                                {"type": "started", "session": session.session_id},
                                sort_keys=True,
                                separators=(",", ":"),
                            )
                        )
                    elif msg_type == "ingest":
                        session = registry.get(str(message.get("session")))
                        item = _parse_input(
                            message.get("input") or {},
                            default_t_ms=session.now_ms() if session.wall else None,
                        )
                        clock, revision = await session.ingest(item)
                        await ws.send_text(
                            json.dumps(
                                {
                                    "type": "ack",
                                    "session": session.session_id,
                                    "t_ms": item.timestamp_ms,
                                    "clock_ms": clock,
                                    "revision": revision,
                                },
                                sort_keys=True,
                                separators=(",", ":"),
                            )
                        )
                    elif msg_type == "subscribe":
                        session = registry.get(str(message.get("session")))
                        channel = SubscriberChannel()
                        task = asyncio.create_task(sender(channel))
                        await session.subscribe(channel)
                        subscriptions.append((session, channel, task))
                    elif msg_type == "end":
                        session_id = str(message.get("session"))
                        path = await registry.end(session_id)
                        await ws.send_text(
                            json.dumps(
                                {"type": "ended", "session": session_id, "log_path": str(path)},
                                sort_keys=True,
                                separators=(",", ":"),
                            )
                        )
                    else:
                        await send_error("bad_message", f"unknown message type {msg_type!r}")
                except StaleInputError as exc:
                    await send_error("stale_input", str(exc))
                except UnknownSessionError as exc:
                    await send_error("unknown_session", str(exc))
                except SessionError as exc:
                    await send_error("bad_request", str(exc))
                except (CatalogError, CueLogError, OSError) as exc:
                    # Bad data files at session start; the message names them.
                    await send_error("bad_config", str(exc))
        except WebSocketDisconnect:
            pass
        finally:
            for session, channel, task in subscriptions:
                task.cancel()
                await session.unsubscribe(channel)

    return app


def serve(
    config: SessionConfig,
    host: str = "127.0.0.1",
    port: int = 8765,
    data_dir: str | Path = "session-logs",
) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    registry = SessionRegistry(base_config=config, data_dir=data_dir)
    app = create_app(registry)
    uvicorn.run(app, host=host, port=port, log_level="info")
