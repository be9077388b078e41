import json
import time
import warnings

import pytest

warnings.filterwarnings("ignore", category=DeprecationWarning)

from fastapi.testclient import TestClient

from binpick.agent import ScriptedAgent
from binpick.control import ControlInput
from binpick.recording import list_episodes
from binpick.scene import DifficultyConfig
from binpick.service import PROTOCOL_VERSION, ServiceSettings, create_app
from binpick.session import SessionConfig, SessionCore, input_to_dict


@pytest.fixture()
def lockstep_client(tmp_path):
    settings = ServiceSettings(data_dir=str(tmp_path), step_mode="lockstep",
                               base_seed=5, disconnect_grace_s=0.05)
    app = create_app(settings)
    with TestClient(app) as client:
        yield client, app, tmp_path


def hello(ws, difficulty="easy", player="tester", seed=None):
    msg = {"v": PROTOCOL_VERSION, "type": "hello", "player": player,
           "difficulty": difficulty}
    if seed is not None:
        msg["seed"] = seed
    ws.send_json(msg)
    return ws.receive_json()


class TestHttpEndpoints:
    def test_health(self, lockstep_client):
        client, _, _ = lockstep_client
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["protocol_version"] == PROTOCOL_VERSION

    def test_leaderboard_bad_difficulty(self, lockstep_client):
        client, _, _ = lockstep_client
        assert client.get("/leaderboard", params={"difficulty": "nope"}).status_code == 400

    def test_leaderboard_empty(self, lockstep_client):
        client, _, _ = lockstep_client
        body = client.get("/leaderboard", params={"difficulty": "hard"}).json()
        assert body == {"difficulty": "hard", "entries": []}


class TestSessionCreation:
    def test_hello_returns_scene_with_trash_in_range(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            msg = hello(ws, "easy")
            assert msg["type"] == "scene" and msg["v"] == PROTOCOL_VERSION
            trash = [o for o in msg["scene"]["objects"] if o["category"] == "trash"]
            assert 1 <= len(trash) <= 5
            assert msg["phase"] == "init"

    def test_bad_difficulty_rejected(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            msg = hello(ws, "bogus")
            assert msg["type"] == "error" and msg["code"] == "bad_difficulty"

    def test_two_hellos_distinct_seeds(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
            sa, sb = hello(a), hello(b)
            assert sa["session"] != sb["session"]
            assert sa["seed"] != sb["seed"]


class TestInputHandling:
    def test_lockstep_tick_per_input(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            hello(ws, seed=3)
            inp = input_to_dict(ControlInput(stick=(0.0, 1.0)))
            for k in range(1, 6):
                ws.send_json({"type": "input", "input": inp})
                msg = ws.receive_json()
                assert msg["type"] == "state"
                assert msg["tick"] == k
            assert msg["base"][1] > 0.05  # moved forward

    def test_out_of_range_input_clamped_and_flagged(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            hello(ws, seed=3)
            raw = input_to_dict(ControlInput())
            raw["stick"] = [4.0, 0.0]
            ws.send_json({"type": "input", "input": raw})
            first = ws.receive_json()
            second = ws.receive_json()
            types = {first["type"], second["type"]}
            assert types == {"error", "state"}
            err = first if first["type"] == "error" else second
            assert err["code"] == "input_clamped"

    def test_unknown_message_type(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            hello(ws, seed=3)
            ws.send_json({"type": "mystery"})
            assert ws.receive_json()["code"] == "bad_message"

    def test_abort_ends_episode_without_directory(self, lockstep_client):
        client, _, data_dir = lockstep_client
        with client.websocket_connect("/ws") as ws:
            hello(ws, seed=3)
            inp = input_to_dict(ControlInput(stick=(0.0, 1.0)))
            for _ in range(3):
                ws.send_json({"type": "input", "input": inp})
                ws.receive_json()
            ws.send_json({"type": "abort"})
            msg = ws.receive_json()
            assert msg["type"] == "episode_end" and msg["success"] is False
            ws.send_json({"type": "input", "input": inp})
            assert ws.receive_json()["code"] == "input_ignored"
        assert not list_episodes(data_dir)

    def test_reset_request_delivers_fresh_scene(self, lockstep_client):
        client, _, _ = lockstep_client
        with client.websocket_connect("/ws") as ws:
            first = hello(ws, seed=3)
            ws.send_json({"type": "reset_request"})
            scene2 = ws.receive_json()
            assert scene2["type"] == "scene"
            assert scene2["seed"] != first["seed"]


def drive_episode_through_ws(ws, scene_seed, difficulty="easy", max_ticks=8000):
    """Run the scripted agent against the live service in lockstep mode."""
    # mirror the server-side world locally to compute policy actions: the
    # agent only needs WorldState, which we reconstruct by running an
    # identical session (same seed) and applying the same inputs
    from binpick.robot import load_robot_model
    from binpick.scene import load_templates

    library = load_templates()
    model = load_robot_model()
    shadow = SessionCore(
        library, model,
        SessionConfig(difficulty=DifficultyConfig.named(difficulty), seed=scene_seed),
    )
    agent = ScriptedAgent(shadow.world)
    shadow.begin_episode()
    for k in range(max_ticks):
        inp = agent.step(shadow.world)
        ws.send_json({"type": "input", "input": input_to_dict(inp)})
        msg = ws.receive_json()
        shadow.apply_input(inp)
        shadow.tick()
        if msg["type"] == "episode_end":
            return msg, ws.receive_json()  # leaderboard follows
        if agent.plan.failed:
            pytest.fail("scripted agent failed against the service")
    pytest.fail("episode did not complete within the tick budget")


class TestEndToEndThroughService:
    def test_full_episode_with_rank_and_persistence(self, lockstep_client):
        client, app, data_dir = lockstep_client
        with client.websocket_connect("/ws") as ws:
            scene = hello(ws, seed=8, player="e2e")
            end, board_msg = drive_episode_through_ws(ws, scene_seed=8)
            assert end["success"] is True
            assert end["rank"] == 1
            assert end["time_s"] > 0
            assert board_msg["type"] == "leaderboard"
            assert board_msg["entries"][0]["player"] == "e2e"
        episodes = list_episodes(data_dir)
        assert len(episodes) == 1
        board = client.get("/leaderboard", params={"difficulty": "easy"}).json()
        assert board["entries"][0]["episode_id"] == end["episode_id"]

    def test_replay_endpoint_reproduces_live_log(self, lockstep_client):
        client, app, data_dir = lockstep_client
        with client.websocket_connect("/ws") as ws:
            hello(ws, seed=8, player="e2e")
            end, _ = drive_episode_through_ws(ws, scene_seed=8)
        timeline = client.get("/timeline", params={"episode_id": end["episode_id"]}).json()
        live_dir = list_episodes(data_dir)[0]
        reply = client.post("/replay", json={
            "seed": timeline["seed"],
            "difficulty": timeline["difficulty"],
            "episode_id": end["episode_id"],
            "player": "e2e",
            "timeline": timeline["timeline"],
        }).json()
        assert reply["success"] is True
        live_frames = json.loads((live_dir / "data.json").read_text())
        assert reply["frames"] == live_frames
        live_meta = json.loads((live_dir / "metadata.json").read_text())
        assert reply["metadata"] == live_meta


class TestPacedMode:
    def test_paced_broadcast_cadence(self, tmp_path):
        settings = ServiceSettings(data_dir=str(tmp_path), step_mode="paced",
                                   base_seed=5, broadcast_every=2,
                                   disconnect_grace_s=0.05)
        app = create_app(settings)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                hello(ws, seed=3)
                inp = input_to_dict(ControlInput(stick=(0.0, 0.5)))
                ws.send_json({"type": "input", "input": inp})
                msgs = [ws.receive_json() for _ in range(5)]
                states = [m for m in msgs if m["type"] == "state"]
                assert len(states) == 5
                ticks = [m["tick"] for m in states]
                diffs = {b - a for a, b in zip(ticks, ticks[1:])}
                assert diffs == {2}  # every 2nd tick at N=2


class TestPerformance:
    def test_eight_sessions_tick_faster_than_real_time(self, library, model):
        sessions = [
            SessionCore(library, model,
                        SessionConfig(difficulty=DifficultyConfig.easy(), seed=s))
            for s in range(8)
        ]
        agents = [ScriptedAgent(s.world) for s in sessions]
        for s in sessions:
            s.begin_episode()
        n = 100
        start = time.perf_counter()
        for _ in range(n):
            for agent, s in zip(agents, sessions):
                s.apply_input(agent.step(s.world))
                s.tick()
        elapsed = time.perf_counter() - start
        assert elapsed < n * 0.02  # 8 sessions keep up with one real-time budget
