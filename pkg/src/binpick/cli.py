"""Command-line entrypoint: gen, run, serve, analyze, compare.

Exit codes: 0 success, 1 domain failure (generation/analysis errors), 2 usage
errors (bad flags, missing paths). Flag values take precedence over the
optional JSON config file (--config), which takes precedence over built-in
defaults. BINPICK_DATA_DIR overrides the default data directory.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from pathlib import Path

from .agent import AgentConfig, run_scripted_episode
from .analysis import (
    EpisodeSet,
    analyze,
    compare_groups,
    comparison_table,
    write_heatmap_csv,
    write_report,
)
from .mathutil import RngStream
from .robot import load_robot_model
from .scene import (
    DifficultyConfig,
    SceneGenerationError,
    TemplateError,
    generate_scene,
    load_templates,
    save_scene,
)
from .session import SessionConfig, SessionCore
from .task import Leaderboard, leaderboard_path
from .world import SimConfig

USAGE_ERROR = 2
DOMAIN_ERROR = 1


def _default_data_dir() -> str:
    return os.environ.get("BINPICK_DATA_DIR", "data")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SystemExit(USAGE_ERROR)
    except json.JSONDecodeError as exc:
        print(f"error: config file is not valid JSON: {exc}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _resolve(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def cmd_gen(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _resolve(args.seed, config, "seed", 0)
    level = _resolve(args.difficulty, config, "difficulty", "easy")
    template_dir = _resolve(args.template_dir, config, "template_dir", None)
    try:
        library = load_templates(template_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except TemplateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    try:
        scene = generate_scene(library, DifficultyConfig.named(level), seed)
    except (SceneGenerationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    save_scene(scene, args.out)
    print(f"wrote {args.out} (template={scene.template_id}, "
          f"trash={len(scene.trash_objects())}, difficulty={level}, seed={seed})")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    episodes = _resolve(args.episodes, config, "episodes", 1)
    seed = _resolve(args.seed, config, "seed", 0)
    level = _resolve(args.difficulty, config, "difficulty", "easy")
    out_dir = _resolve(args.out, config, "out", _default_data_dir())
    template_dir = _resolve(args.template_dir, config, "template_dir", None)
    dt = _resolve(args.dt, config, "dt", 0.02)
    noise = _resolve(args.noise, config, "noise", 0.0)
    player = _resolve(args.player, config, "player", "scripted")
    max_seconds = _resolve(args.max_seconds, config, "max_seconds", 120.0)
    if episodes < 1:
        print("error: --episodes must be >= 1", file=sys.stderr)
        return USAGE_ERROR
    if args.agent != "scripted":
        print(f"error: unknown agent '{args.agent}'", file=sys.stderr)
        return USAGE_ERROR

    try:
        library = load_templates(template_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    model = load_robot_model()
    difficulty = DifficultyConfig.named(level)
    board = Leaderboard(leaderboard_path(out_dir, level), level)
    sim = SimConfig(dt=dt)

    times = []
    for i in range(episodes):
        ep_seed = seed if episodes == 1 else RngStream(seed, f"run/ep{i}").uniform_int(0, 2**62)
        session = SessionCore(
            library, model,
            SessionConfig(difficulty=difficulty, seed=ep_seed, sim=sim,
                          player=player, data_dir=out_dir),
            leaderboard=board,
        )
        result = run_scripted_episode(
            session, AgentConfig(noise_sigma=noise, seed=ep_seed),
            max_seconds=max_seconds,
        )
        if result is not None:
            times.append(result.record.completion_time_s)
            print(f"episode {i}: success T={result.record.completion_time_s:.2f}s "
                  f"rank={result.rank} -> {result.episode_path}")
        else:
            print(f"episode {i}: failed (seed {ep_seed})")
    print(f"summary: {len(times)}/{episodes} succeeded"
          + (f", mean T={statistics.mean(times):.2f}s" if times else ""))
    if not times:
        print("error: no episode succeeded", file=sys.stderr)
        return DOMAIN_ERROR
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceSettings, serve

    settings = ServiceSettings(
        template_dir=args.templates,
        data_dir=args.data_dir or _default_data_dir(),
        step_mode="lockstep" if args.lockstep else "paced",
        static_dir=args.static_dir,
    )
    serve(settings, host=args.host, port=args.port)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    data_dir = args.data or _default_data_dir()
    try:
        episode_set = EpisodeSet.load(data_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    report = analyze(
        episode_set,
        bins=args.bins,
        range_mode=args.range,
        active_only=args.active_only,
    )
    write_report(report, args.out)
    if args.heatmap_csv:
        write_heatmap_csv(report, args.heatmap_csv)
    d = report["duration_stats"]
    print(f"analyzed {report['episodes']} episodes / {report['frames']} frames")
    print(f"duration: {d['mean_s']:.1f} +/- {d['sample_std_s']:.1f} s "
          f"(min {d['min_s']:.1f} / max {d['max_s']:.1f})")
    for name, row in report["coverage"].items():
        print(f"coverage {name:18s} {row['coverage']:6.1%}  ({row['range_mode']})")
    print(f"wrote {args.out}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        set_a = EpisodeSet.load(args.a)
        set_b = EpisodeSet.load(args.b)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    kwargs = dict(bins=args.bins, range_mode=args.range, active_only=args.active_only)
    report_a = analyze(set_a, **kwargs)
    report_b = analyze(set_b, **kwargs)
    cmp = compare_groups(report_a, report_b, label_a="a", label_b="b")
    Path(args.out).write_text(json.dumps(cmp, indent=2) + "\n")
    print(comparison_table(cmp))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binpick",
        description="Deterministic pick-and-place teleoperation sim and dataset toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scene file from a seed")
    p.add_argument("--template-dir", help="room template directory (bundled set by default)")
    p.add_argument("--seed", type=int, help="generation seed (default 0)")
    p.add_argument("--difficulty", choices=["easy", "hard"], help="difficulty level")
    p.add_argument("--out", required=True, help="output scene JSON path")
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run scripted episodes and log successes")
    p.add_argument("--episodes", type=int, help="number of episodes (default 1)")
    p.add_argument("--agent", default="scripted", help="agent type (scripted)")
    p.add_argument("--difficulty", choices=["easy", "hard"], help="difficulty level")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--out", help="episode output directory")
    p.add_argument("--template-dir", help="room template directory")
    p.add_argument("--dt", type=float, help="simulation timestep (default 0.02)")
    p.add_argument("--noise", type=float, help="agent command noise sigma (default 0)")
    p.add_argument("--player", help="player label for the leaderboard")
    p.add_argument("--max-seconds", type=float, help="per-episode sim time budget")
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="run the teleop session server")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--templates", help="room template directory")
    p.add_argument("--data-dir", help="episode/leaderboard directory")
    p.add_argument("--static-dir", help="browser client bundle to serve at /ui")
    p.add_argument("--lockstep", action="store_true",
                   help="advance one tick per input message (testing/replay)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="compute dataset-quality metrics")
    p.add_argument("--data", help="episode directory")
    p.add_argument("--bins", type=int, default=20, help="coverage bins (default 20)")
    p.add_argument("--range", choices=["declared", "observed"], default="declared")
    p.add_argument("--active-only", action="store_true",
                   help="restrict arm/chassis coverage to active frames")
    p.add_argument("--out", required=True, help="output report JSON path")
    p.add_argument("--heatmap-csv", help="also write the IK heatmap grid as CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="compare two episode corpora")
    p.add_argument("--a", required=True, help="first episode directory")
    p.add_argument("--b", required=True, help="second episode directory")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--range", choices=["declared", "observed"], default="declared")
    p.add_argument("--active-only", action="store_true")
    p.add_argument("--out", required=True, help="output comparison JSON path")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
