import json
import math
from pathlib import Path

import numpy as np
import pytest

from binpick.control import ChassisCommand, IKTarget
from binpick.recording import (
    ACTION_DIM,
    STATE_DIM,
    EpisodeFormatError,
    EpisodeMetadata,
    FrameData,
    ObjectPose,
    capture_frame,
    generate_episode_id,
    list_episodes,
    read_episode,
    write_episode,
)
from binpick.scene import DifficultyConfig, generate_scene
from binpick.session import SessionConfig, SessionCore
from binpick.world import SimConfig, WorldState

GOLDEN_DIR = Path(__file__).parent / "golden" / "episode_20240101_120000"


def make_golden_frames() -> tuple[list[FrameData], EpisodeMetadata]:
    """Deterministic constructed fixture, independent of the simulator."""
    frames = []
    for k in range(3):
        t = k * 0.02
        frames.append(
            FrameData(
                timestamp=t,
                leg_positions=[0.01 * k * i for i in range(12)],
                leg_velocities=[0.001 * k] * 12,
                waist_positions=[0.0, 0.0, 0.0],
                waist_velocities=[0.0, 0.0, 0.0],
                arm_positions=[0.1 + 0.01 * k * i for i in range(14)],
                arm_velocities=[0.0] * 14,
                hand_positions=[0.2 * k] * 12,
                root_position=[0.5 * k, 0.0, 1.0 + 0.25 * k],
                root_orientation=[1.0, 0.0, 0.0, 0.0],
                ik_position_left=[0.0, 0.0, 0.0],
                ik_wrist_left=[1.0, 0.0, 0.0, 0.0],
                ik_position_right=[0.05 * k, 0.1, -0.02],
                ik_wrist_right=[math.cos(0.1 * k), math.sin(0.1 * k), 0.0, 0.0],
                chassis=[0.5, -0.25 * k],
                triggers=[0.0, 1.0 if k == 2 else 0.0],
                joint_targets_smoothed=[0.001 * i for i in range(29)],
                objects=[
                    ObjectPose("trash_0", [1.0, 0.75, 2.0], [1.0, 0.0, 0.0, 0.0], k == 2),
                    ObjectPose("trash_1", [1.1, 0.75, 2.1], [0.0, 1.0, 0.0, 0.0], False),
                ],
            )
        )
    meta = EpisodeMetadata(
        episode_id="episode_20240101_120000",
        difficulty="easy",
        scene_seed=7,
        template_id="studio",
        total_frames=3,
        success=True,
        completion_time_s=0.04,
        player="golden",
    )
    return frames, meta


@pytest.fixture()
def session_world(library, model):
    scene = generate_scene(library, DifficultyConfig.easy(), 3)
    return WorldState.from_scene(scene, model, SimConfig())


class TestCaptureFrame:
    def test_initial_frame_zero_time_zero_velocity(self, session_world):
        frame = capture_frame(
            session_world,
            {"left": IKTarget(), "right": IKTarget()},
            ChassisCommand(),
            (0.0, 0.0),
            np.zeros(29),
        )
        assert frame.timestamp == 0.0
        assert all(v == 0.0 for v in frame.leg_velocities + frame.arm_velocities)
        assert len(frame.state_vector()) == STATE_DIM
        assert len(frame.action_vector()) == ACTION_DIM

    def test_timestamp_after_n_steps(self, library, model):
        cfg = SessionConfig(difficulty=DifficultyConfig.easy(), seed=1)
        s = SessionCore(library, model, cfg)
        s.begin_episode()
        for _ in range(25):
            s.tick()
        assert s.frames[-1].timestamp == pytest.approx(25 * 0.02, abs=1e-15)
        assert len(s.frames) == 26  # initial frame plus one per step

    def test_attached_object_pose_matches_hand_composition(self, session_world):
        w = session_world
        w.hand_angles[6:12] = w.model.grasp_angles("right")
        obj = w.objects[0]
        ee, _ = w.ee_pose("right")
        w.base_x += obj.center.x - ee.x
        w.base_z += obj.center.z - ee.z
        from binpick.world import try_grasp

        try_grasp(w, "right")
        assert obj.attached_to == "right"
        frame = capture_frame(w, {"left": IKTarget(), "right": IKTarget()},
                              ChassisCommand(), (0, 1.0), np.zeros(29))
        pos, rot = w.ee_pose("right")
        expected = pos + rot.rotate(obj.grasp_offset_pos)
        logged = next(o for o in frame.objects if o.object_id == obj.object_id)
        assert logged.attached
        assert np.allclose(logged.position, expected.to_list(), atol=1e-12)


class TestWriteEpisode:
    def test_layout_and_counts(self, tmp_path):
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        assert path.name == "episode_20240101_120000"
        assert (path / "metadata.json").exists()
        assert (path / "data.json").exists()
        assert (path / "cameras").is_dir()
        assert not list((path / "cameras").iterdir())
        meta_read = json.loads((path / "metadata.json").read_text())
        assert meta_read["total_frames"] == 3
        assert len(json.loads((path / "data.json").read_text())) == 3

    def test_refuses_unsuccessful_episode(self, tmp_path):
        frames, meta = make_golden_frames()
        from dataclasses import replace

        bad = replace(meta, success=False, completion_time_s=None)
        with pytest.raises(ValueError):
            write_episode(frames, bad, tmp_path)
        assert not list_episodes(tmp_path)

    def test_frame_count_mismatch_refused(self, tmp_path):
        frames, meta = make_golden_frames()
        from dataclasses import replace

        with pytest.raises(ValueError):
            write_episode(frames, replace(meta, total_frames=5), tmp_path)

    def test_collision_gets_numeric_suffix(self, tmp_path):
        frames, meta = make_golden_frames()
        p1 = write_episode(frames, meta, tmp_path)
        p2 = write_episode(frames, meta, tmp_path)
        p3 = write_episode(frames, meta, tmp_path)
        assert p1.name == "episode_20240101_120000"
        assert p2.name == "episode_20240101_120000_2"
        assert p3.name == "episode_20240101_120000_3"

    def test_no_partial_directory_on_failure(self, tmp_path, monkeypatch):
        frames, meta = make_golden_frames()
        import binpick.recording as rec

        real_dumps = json.dumps

        def boom(obj, **kw):
            if isinstance(obj, list):
                raise OSError("disk full")
            return real_dumps(obj, **kw)

        monkeypatch.setattr(rec.json, "dumps", boom)
        with pytest.raises(OSError):
            write_episode(frames, meta, tmp_path)
        assert not list(tmp_path.iterdir())

    def test_episode_id_format(self):
        from datetime import datetime, timezone

        eid = generate_episode_id(datetime(2026, 8, 10, 9, 30, 5, tzinfo=timezone.utc))
        assert eid == "episode_20260810_093005"


class TestReadEpisode:
    def test_round_trip_identity(self, tmp_path):
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        meta2, frames2 = read_episode(path)
        assert meta2.episode_id == meta.episode_id
        assert meta2.total_frames == meta.total_frames
        assert meta2.state_manifest == meta.state_manifest
        for a, b in zip(frames, frames2):
            assert a == b  # dataclass equality: exact values

    def test_missing_data_json_names_file(self, tmp_path):
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        (path / "data.json").unlink()
        with pytest.raises(EpisodeFormatError) as exc:
            read_episode(path)
        assert exc.value.file == "data.json"

    def test_unknown_format_version(self, tmp_path):
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        raw = json.loads((path / "metadata.json").read_text())
        raw["format_version"] = 99
        (path / "metadata.json").write_text(json.dumps(raw))
        with pytest.raises(EpisodeFormatError) as exc:
            read_episode(path)
        assert "format_version" in str(exc.value)

    def test_missing_frame_field_names_field(self, tmp_path):
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        raw = json.loads((path / "data.json").read_text())
        del raw[1]["chassis"]
        (path / "data.json").write_text(json.dumps(raw))
        with pytest.raises(EpisodeFormatError) as exc:
            read_episode(path)
        assert "chassis" in str(exc.value) and exc.value.file == "data.json"


class TestGolden:
    def test_serializer_matches_committed_golden(self, tmp_path):
        assert GOLDEN_DIR.exists(), "golden fixture missing; run tests/make_golden.py"
        frames, meta = make_golden_frames()
        path = write_episode(frames, meta, tmp_path)
        for name in ("metadata.json", "data.json"):
            assert (path / name).read_bytes() == (GOLDEN_DIR / name).read_bytes(), name
        assert (GOLDEN_DIR / "cameras").is_dir()

    def test_golden_read_write_identity(self):
        meta, frames = read_episode(GOLDEN_DIR)
        expected_frames, expected_meta = make_golden_frames()
        assert frames == expected_frames
        assert meta.completion_time_s == expected_meta.completion_time_s
