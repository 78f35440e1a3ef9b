from __future__ import annotations

import asyncio
import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from playguide.service import SessionRegistry, SubscriberChannel, create_app
from playguide.session import SessionConfig
from playguide.sessionlog import read_session_log


@pytest.fixture()
def client(tmp_path: Path):
    registry = SessionRegistry(base_config=SessionConfig(), data_dir=tmp_path / "logs")
    app = create_app(registry)
    with TestClient(app) as test_client:
        test_client.registry = registry
        yield test_client


def send(ws, **message) -> None:
    ws.send_text(json.dumps(message))


def recv(ws) -> dict:
    return json.loads(ws.receive_text())


def ingest_utterance(ws, session: str, t_ms: int, text: str, speaker: str = "parent") -> dict:
    send(
        ws,
        type="ingest",
        session=session,
        input={"kind": "utterance", "t_ms": t_ms, "speaker": speaker, "text": text},
    )
    return recv(ws)


def read_until_revision(ws, revision: int) -> list[dict]:
    """Drain subscriber messages until the given revision is rendered."""
    out = []
    while True:
        message = recv(ws)
        out.append(message)
        if message.get("type") == "snapshot" and message["revision"] >= revision:
            return out


def test_start_subscribe_initial_snapshot(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        started = recv(ws)
        assert started["type"] == "started"
        session = started["session"]

        send(ws, type="subscribe", session=session)
        meta = recv(ws)
        assert meta["type"] == "meta"
        assert len(meta["objects"]) == 11
        snapshot = recv(ws)
        assert snapshot["type"] == "snapshot"
        assert len(snapshot["board"]) == 6
        weights = [entry["weight"] for entry in snapshot["distribution"]]
        assert all(abs(w - 1 / 11) < 1e-12 for w in weights)
        assert snapshot["progress"] == {"achieved": 0, "goal": 10}


def test_ingest_utterance_updates_snapshot(client) -> None:
    with client.websocket_connect("/ws") as control, client.websocket_connect("/ws") as viewer:
        send(control, type="start")
        session = recv(control)["session"]
        send(viewer, type="subscribe", session=session)
        recv(viewer)  # meta
        first = recv(viewer)
        ball_before = next(e["weight"] for e in first["distribution"] if e["object"] == "ball")

        ack = ingest_utterance(control, session, 1000, "throw the ball")
        assert ack["type"] == "ack"
        snapshots = read_until_revision(viewer, ack["revision"])
        final = snapshots[-1]
        ball_after = next(e["weight"] for e in final["distribution"] if e["object"] == "ball")
        assert ball_after > ball_before
        assert final["progress"]["achieved"] == 1


def test_gaze_miss_acks_without_state_change(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        send(
            ws,
            type="ingest",
            session=session,
            input={"kind": "gaze", "t_ms": 500, "person": "child", "x": 0.99, "y": 0.995},
        )
        ack = recv(ws)
        assert ack["type"] == "ack"
        assert ack["revision"] == 2  # started + initial board only


def test_stale_input_rejected(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        ingest_utterance(ws, session, 5000, "ball")
        error = ingest_utterance(ws, session, 3000, "dog")  # 2 s behind the clock
        assert error["type"] == "error"
        assert error["code"] == "stale_input"


def test_slightly_late_input_is_folded_not_rejected(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        ingest_utterance(ws, session, 5000, "ball")
        ack = ingest_utterance(ws, session, 4800, "dog")  # within the 500 ms tolerance
        assert ack["type"] == "ack"
        assert ack["clock_ms"] == 5000


def test_unknown_session_error(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="subscribe", session="nope")
        error = recv(ws)
        assert error["type"] == "error"
        assert error["code"] == "unknown_session"


def test_bad_json_and_bad_type(client) -> None:
    with client.websocket_connect("/ws") as ws:
        ws.send_text("{not json")
        assert recv(ws)["code"] == "bad_message"
        send(ws, type="frobnicate")
        assert recv(ws)["code"] == "bad_message"


def test_invalid_gaze_coordinates_rejected(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        send(
            ws,
            type="ingest",
            session=session,
            input={"kind": "gaze", "t_ms": 100, "person": "child", "x": 1.5, "y": 0.5},
        )
        assert recv(ws)["code"] == "bad_request"


def test_two_subscribers_identical_sequences(client) -> None:
    with client.websocket_connect("/ws") as control, \
            client.websocket_connect("/ws") as viewer_a, \
            client.websocket_connect("/ws") as viewer_b:
        send(control, type="start")
        session = recv(control)["session"]
        for viewer in (viewer_a, viewer_b):
            send(viewer, type="subscribe", session=session)
            assert recv(viewer)["type"] == "meta"

        seen_a: list[str] = [viewer_a.receive_text()]
        seen_b: list[str] = [viewer_b.receive_text()]
        script = ["throw the ball", "the dog ran", "look a bus", "roll the ball"]
        for i, text in enumerate(script):
            ack = ingest_utterance(control, session, 1000 * (i + 1), text)
            # Drain both viewers up to the acked revision.
            for seen, viewer in ((seen_a, viewer_a), (seen_b, viewer_b)):
                while True:
                    raw = viewer.receive_text()
                    seen.append(raw)
                    if json.loads(raw)["revision"] >= ack["revision"]:
                        break
        assert seen_a == seen_b  # byte-identical fan-out


def test_late_joiner_gets_full_snapshot(client) -> None:
    with client.websocket_connect("/ws") as control:
        send(control, type="start")
        session = recv(control)["session"]
        ack = ingest_utterance(control, session, 1000, "throw the ball")
        with client.websocket_connect("/ws") as viewer:
            send(viewer, type="subscribe", session=session)
            assert recv(viewer)["type"] == "meta"
            snapshot = recv(viewer)
            assert snapshot["revision"] == ack["revision"]
            assert snapshot["progress"]["achieved"] == 1


def test_end_persists_replayable_log(client, tmp_path: Path) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        ingest_utterance(ws, session, 1000, "throw the ball")
        send(ws, type="end", session=session)
        ended = recv(ws)
        assert ended["type"] == "ended"
        log = read_session_log(ended["log_path"])
        assert log.started.session_id == session
        assert log.ended_at is not None
        # One line per event, flushed as they happened.
        assert len(log.events) >= 4


def test_log_written_before_broadcast(client) -> None:
    with client.websocket_connect("/ws") as control, client.websocket_connect("/ws") as viewer:
        send(control, type="start")
        session = recv(control)["session"]
        send(viewer, type="subscribe", session=session)
        recv(viewer), recv(viewer)
        ack = ingest_utterance(control, session, 1000, "throw the ball")
        read_until_revision(viewer, ack["revision"])
        # Everything the viewer has seen is already on disk.
        live = client.registry.get(session)
        persisted = read_session_log(live.log_path.with_suffix(".jsonl"))
        assert len(persisted.events) == ack["revision"]


def test_session_ids_are_deterministic_and_collision_checked(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        assert recv(ws)["session"] == "s1"
        send(ws, type="start")
        assert recv(ws)["session"] == "s2"
        send(ws, type="start", session="custom")
        assert recv(ws)["session"] == "custom"
        send(ws, type="start", session="custom")
        assert recv(ws)["code"] == "bad_request"


def test_start_accepts_config_overrides(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start", config={"goal": 3, "board_size": 4})
        session = recv(ws)["session"]
        send(ws, type="subscribe", session=session)
        meta = recv(ws)
        assert meta["policy"]["board_size"] == 4
        snapshot = recv(ws)
        assert snapshot["progress"]["goal"] == 3
        assert len(snapshot["board"]) == 4


def test_subscriber_channel_coalesces_distribution_updates() -> None:
    # Oracle simulation of the slow-subscriber contract: every distinct
    # board/progress state is delivered exactly once (as its latest
    # snapshot); runs of distribution-only updates collapse to the last.
    channel = SubscriberChannel()
    for i in range(100):
        channel.push(f"dist-{i}", signature=("board-A", 0, 10))
    assert channel.pending() == 1  # 100 updates in a burst -> the final one
    channel.push("board-B-first", signature=("board-B", 0, 10))
    for i in range(50):
        channel.push(f"dist-b-{i}", signature=("board-B", 0, 10))
    channel.push("progress", signature=("board-B", 1, 10))

    async def drain() -> list[str]:
        out = []
        while channel.pending():
            out.append(await channel.next_payload())
        return out

    received = asyncio.run(drain())
    # Board A's last state, board B's last pre-progress state, the progress
    # change: one message per distinct signature, newest payload wins.
    assert received == ["dist-99", "dist-b-49", "progress"]


def test_healthz(client) -> None:
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_wall_mode_heartbeat_reaches_subscribers(client) -> None:
    import time

    with client.websocket_connect("/ws") as ws:
        send(ws, type="start", session="live", config={"clock_mode": "wall"})
        assert recv(ws)["session"] == "live"
        send(ws, type="subscribe", session="live")
        assert recv(ws)["type"] == "meta"
        first = recv(ws)
        assert first["type"] == "snapshot"
        # With no inputs at all, the 1 Hz heartbeat still delivers snapshots.
        beat = recv(ws)
        assert beat["type"] == "snapshot"
        assert beat["revision"] >= first["revision"]
        send(ws, type="end", session="live")


def test_wall_mode_ingest_is_server_stamped_and_applied(client) -> None:
    import time

    with client.websocket_connect("/ws") as ws:
        send(ws, type="start", session="live2", config={"clock_mode": "wall"})
        assert recv(ws)["session"] == "live2"
        send(
            ws,
            type="ingest",
            session="live2",
            input={"kind": "utterance", "speaker": "parent", "text": "throw the ball"},
        )
        ack = recv(ws)
        assert ack["type"] == "ack"
        assert ack["t_ms"] >= 0
        # The input waits in the reorder buffer for the tolerance window,
        # then the pump applies it.
        deadline = time.monotonic() + 3.0
        live = client.registry.get("live2")
        while time.monotonic() < deadline and live.engine.progress.achieved == 0:
            time.sleep(0.05)
        assert live.engine.progress.achieved == 1
        send(ws, type="end", session="live2")
        ended = recv(ws)
        assert ended["type"] == "ended"


def test_start_with_missing_bank_file_names_the_path(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start", config={"bank": "/nonexistent/phrases.tsv"})
        error = recv(ws)
        assert error["type"] == "error"
        assert error["code"] == "bad_config"
        assert "/nonexistent/phrases.tsv" in error["detail"]


def test_logical_mode_requires_timestamps(client) -> None:
    with client.websocket_connect("/ws") as ws:
        send(ws, type="start")
        session = recv(ws)["session"]
        send(
            ws,
            type="ingest",
            session=session,
            input={"kind": "utterance", "speaker": "parent", "text": "hi"},
        )
        error = recv(ws)
        assert error["type"] == "error" and error["code"] == "bad_request"
