"""Session server: one WebSocket client drives one simulation session.

The wire protocol is JSON text messages over a standard WebSocket upgrade;
every message carries the protocol version and, from the server, the session
id. Inputs are sticky (last writer wins between ticks) and never block the
fixed-dt tick loop. Two step modes exist: ``paced`` runs each session at real
time on an asyncio task; ``lockstep`` advances exactly one tick per input
message, which the tests and the replay harness use for determinism.

Plain HTTP endpoints: GET /health, GET /leaderboard?difficulty=, plus
POST /replay which re-runs a recorded input timeline bit-identically.
"""

from __future__ import annotations

import asyncio
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .mathutil import RngStream
from .recording import _frame_to_dict, _metadata_to_dict, EpisodeMetadata
from .robot import load_robot_model
from .scene import DifficultyConfig, load_templates, scene_to_dict
from .session import (
    SessionConfig,
    SessionCore,
    input_from_dict,
    input_to_dict,
    replay_timeline,
)
from .task import EpisodePhase, Leaderboard, leaderboard_path
from .world import SimConfig

PROTOCOL_VERSION = 1


@dataclass
class ServiceSettings:
    template_dir: str | None = None
    data_dir: str = "data"
    model_path: str | None = None
    sim: SimConfig = field(default_factory=SimConfig)
    broadcast_every: int = 2  # ticks between state messages (25 Hz at dt=0.02)
    step_mode: str = "paced"  # paced | lockstep
    disconnect_grace_s: float = 30.0
    base_seed: int | None = None
    static_dir: str | None = None  # optional browser client bundle


@dataclass
class SessionRuntime:
    sid: str
    core: SessionCore
    socket: WebSocket
    task: asyncio.Task | None = None
    tick_count: int = 0
    closed: bool = False


def _scene_message(sid: str, core: SessionCore) -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "session": sid,
        "type": "scene",
        "phase": core.phase.value,
        "seed": core.episode_seed,
        "scene": scene_to_dict(core.scene),
    }


def _state_message(sid: str, core: SessionCore) -> dict:
    w = core.world
    return {
        "v": PROTOCOL_VERSION,
        "session": sid,
        "type": "state",
        "tick": w.tick,
        "elapsed_s": w.time,
        "phase": core.phase.value,
        "base": [w.base_x, w.base_z, w.base_yaw],
        "joints": [float(a) for a in w.body_angles],
        "hands": [float(a) for a in w.hand_angles],
        "ee": {
            side: w.ee_pose(side)[0].to_list() for side in ("left", "right")
        },
        "objects": [
            {
                "id": o.object_id,
                "position": o.center.to_list(),
                "orientation": o.orientation.to_list(),
                "attached": o.attached_to is not None,
                "deposited": o.deposited,
            }
            for o in w.objects
        ],
        "remaining": sum(1 for o in w.objects if not o.deposited),
    }


def _error_message(sid: str | None, code: str, message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "session": sid, "type": "error",
            "code": code, "message": message}


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings()
    app = FastAPI(title="binpick teleop service")
    app.state.settings = settings
    app.state.library = load_templates(settings.template_dir)
    app.state.model = load_robot_model(settings.model_path)
    app.state.sessions: dict[str, SessionRuntime] = {}
    app.state.session_counter = 0
    app.state.leaderboards: dict[str, Leaderboard] = {}
    app.state.timelines: dict[str, dict] = {}
    app.state.seed_root = (
        settings.base_seed if settings.base_seed is not None
        else int.from_bytes(os.urandom(8), "little") % (2**62)
    )

    if settings.static_dir and Path(settings.static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=settings.static_dir, html=True), name="ui")

    def leaderboard_for(difficulty: str) -> Leaderboard:
        if difficulty not in app.state.leaderboards:
            path = leaderboard_path(settings.data_dir, difficulty)
            app.state.leaderboards[difficulty] = Leaderboard(path, difficulty)
        return app.state.leaderboards[difficulty]

    @app.get("/health")
    def health():
        return {"status": "ok", "protocol_version": PROTOCOL_VERSION,
                "sessions": len(app.state.sessions)}

    @app.get("/leaderboard")
    def leaderboard(difficulty: str = "easy"):
        if difficulty not in ("easy", "hard"):
            return JSONResponse(
                {"error": "bad_difficulty", "message": f"unknown difficulty '{difficulty}'"},
                status_code=400,
            )
        board = leaderboard_for(difficulty)
        return {"difficulty": difficulty, "entries": [e.to_dict() for e in board.entries]}

    @app.post("/replay")
    def replay(payload: dict):
        try:
            difficulty = DifficultyConfig.named(payload["difficulty"])
            seed = int(payload["seed"])
            timeline = [
                (int(e["tick"]), input_from_dict(e["input"]))
                for e in payload["timeline"]
            ]
        except (KeyError, ValueError, TypeError) as exc:
            return JSONResponse(
                {"error": "bad_request", "message": str(exc)}, status_code=400
            )
        config = SessionConfig(difficulty=difficulty, seed=seed, sim=settings.sim,
                               player=payload.get("player", "replay"))
        session, result = replay_timeline(
            app.state.library, app.state.model, config, timeline,
            episode_id=payload.get("episode_id"),
        )
        if result is None:
            return {"success": False}
        meta = EpisodeMetadata(
            episode_id=result.record.episode_id,
            difficulty=result.record.difficulty,
            scene_seed=result.record.seed,
            template_id=session.scene.template_id,
            total_frames=len(session.frames),
            success=True,
            completion_time_s=result.record.completion_time_s,
            player=config.player,
        )
        return {
            "success": True,
            "completion_time_s": result.record.completion_time_s,
            "metadata": _metadata_to_dict(meta),
            "frames": [_frame_to_dict(f) for f in session.frames],
        }

    @app.get("/timeline")
    def timeline(episode_id: str):
        entry = app.state.timelines.get(episode_id)
        if entry is None:
            return JSONResponse(
                {"error": "unknown_episode", "message": episode_id}, status_code=404
            )
        return entry

    async def send(rt: SessionRuntime, message: dict) -> None:
        if not rt.closed:
            await rt.socket.send_json(message)

    async def after_tick(rt: SessionRuntime, events, force_state: bool = False) -> None:
        core = rt.core
        rt.tick_count += 1
        if events.completed is not None:
            rec = events.completed.record
            app.state.timelines[rec.episode_id] = {
                "episode_id": rec.episode_id,
                "seed": rec.seed,
                "difficulty": rec.difficulty,
                "timeline": [
                    {"tick": t, "input": input_to_dict(i)}
                    for t, i in core.input_timeline
                ],
            }
            await send(rt, {
                "v": PROTOCOL_VERSION, "session": rt.sid, "type": "episode_end",
                "success": True, "time_s": rec.completion_time_s,
                "rank": events.completed.rank, "episode_id": rec.episode_id,
            })
            board = leaderboard_for(rec.difficulty)
            await send(rt, {
                "v": PROTOCOL_VERSION, "session": rt.sid, "type": "leaderboard",
                "difficulty": rec.difficulty,
                "entries": [e.to_dict() for e in board.entries],
            })
            return
        if events.reset:
            await send(rt, _scene_message(rt.sid, core))
        elif force_state or rt.tick_count % app.state.settings.broadcast_every == 0:
            await send(rt, _state_message(rt.sid, core))

    async def paced_loop(rt: SessionRuntime) -> None:
        dt = rt.core.config.sim.dt
        loop = asyncio.get_event_loop()
        next_t = loop.time() + dt
        while not rt.closed:
            delay = next_t - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            next_t += dt
            events = rt.core.tick()
            await after_tick(rt, events)

    async def handle_message(rt: SessionRuntime, data: dict) -> None:
        core = rt.core
        mtype = data.get("type")
        if mtype == "input":
            if core.phase is EpisodePhase.INIT:
                core.begin_episode()
            if core.phase is not EpisodePhase.IN_PROGRESS:
                await send(rt, _error_message(rt.sid, "input_ignored",
                                              "episode is not in progress"))
                return
            try:
                inp = input_from_dict(data.get("input", {}))
                flagged = False
            except ValueError:
                raw = data.get("input", {})
                stick = raw.get("stick", [0.0, 0.0])
                raw["stick"] = [max(-1.0, min(1.0, float(stick[0]))),
                                max(-1.0, min(1.0, float(stick[1])))]
                raw["trigger_l"] = max(0.0, min(1.0, float(raw.get("trigger_l", 0.0))))
                raw["trigger_r"] = max(0.0, min(1.0, float(raw.get("trigger_r", 0.0))))
                inp = input_from_dict(raw)
                flagged = True
            core.apply_input(inp)
            if flagged:
                await send(rt, _error_message(rt.sid, "input_clamped",
                                              "out-of-range input was clamped"))
            if app.state.settings.step_mode == "lockstep":
                events = core.tick()
                await after_tick(rt, events, force_state=True)
        elif mtype == "abort":
            core.abort()
            await send(rt, {"v": PROTOCOL_VERSION, "session": rt.sid,
                            "type": "episode_end", "success": False,
                            "time_s": None, "rank": None, "episode_id": None})
        elif mtype == "reset_request":
            if core.phase is EpisodePhase.IN_PROGRESS:
                core.abort()
            core.episode_index += 1
            core._setup_episode()
            await send(rt, _scene_message(rt.sid, core))
        else:
            await send(rt, _error_message(rt.sid, "bad_message",
                                          f"unknown message type {mtype!r}"))

    @app.websocket("/ws")
    async def ws_endpoint(socket: WebSocket):
        await socket.accept()
        try:
            hello = await socket.receive_json()
        except Exception:
            await socket.close()
            return
        if hello.get("type") != "hello":
            await socket.send_json(_error_message(None, "expected_hello",
                                                  "first message must be hello"))
            await socket.close()
            return
        level = hello.get("difficulty", "easy")
        try:
            difficulty = DifficultyConfig.named(level)
        except ValueError:
            await socket.send_json(_error_message(None, "bad_difficulty",
                                                  f"unknown difficulty {level!r}"))
            await socket.close()
            return

        app.state.session_counter += 1
        sid = f"s{app.state.session_counter}"
        if "seed" in hello:
            seed = int(hello["seed"])
        else:
            seed = RngStream(app.state.seed_root, f"hello/{sid}").uniform_int(0, 2**62)
        config = SessionConfig(
            difficulty=difficulty,
            seed=seed,
            sim=app.state.settings.sim,
            player=str(hello.get("player", "anonymous")),
            data_dir=app.state.settings.data_dir,
        )
        core = SessionCore(app.state.library, app.state.model, config,
                           leaderboard=leaderboard_for(level))
        rt = SessionRuntime(sid=sid, core=core, socket=socket)
        app.state.sessions[sid] = rt
        await socket.send_json(_scene_message(sid, core))

        if app.state.settings.step_mode == "paced":
            rt.task = asyncio.create_task(paced_loop(rt))
        try:
            while True:
                data = await socket.receive_json()
                await handle_message(rt, data)
        except WebSocketDisconnect:
            pass
        finally:
            rt.closed = True
            if rt.task is not None:
                rt.task.cancel()
            # disconnected client: pause, then discard the trajectory
            if core.phase is EpisodePhase.IN_PROGRESS:
                await asyncio.sleep(app.state.settings.disconnect_grace_s)
                core.abort()
            app.state.sessions.pop(sid, None)

    return app


def serve(settings: ServiceSettings, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(create_app(settings), host=host, port=port, log_level="info")
