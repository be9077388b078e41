import { describe, expect, it } from "vitest";

import {
  EpisodeEndMessage,
  SceneMessage,
  StateMessage,
} from "../src/protocol.js";
import { applyMessage, emptyView, interpolate, isStale } from "../src/view.js";
import { serverMessageSchema } from "./schema.js";

function sceneMsg(): SceneMessage {
  return {
    v: 1,
    session: "s1",
    type: "scene",
    phase: "init",
    seed: 7,
    scene: {
      format_version: 1,
      template_id: "studio",
      seed: 7,
      difficulty: { level: "easy", trash_pose: "upright", bin_scale: 1 },
      bounds: [-2.5, -2.5, 2.5, 2.5],
      robot_start: [0, 0, 0],
      objects: [
        {
          id: "trash_0", spec: "soda_can", category: "trash",
          position: [1, 0.75, 1], yaw: 0, orientation: [1, 0, 0, 0],
          aabb: [0.95, 0.75, 0.95, 1.05, 0.87, 1.05],
          pose_tag: "upright", interactable: true, scale: 1,
        },
      ],
      goal_triggers: [{ bin_id: "trash_bin_0", volume: [2, 0, 2, 2.3, 0.45, 2.3] }],
    },
  };
}

function stateMsg(tick: number, x: number): StateMessage {
  return {
    v: 1, session: "s1", type: "state", tick, elapsed_s: tick * 0.02,
    phase: "in_progress", base: [x, 0, 0],
    joints: new Array(29).fill(0), hands: new Array(12).fill(0),
    ee: { left: [0, 0.75, 0.3], right: [0.2, 0.75, 0.4] },
    objects: [{ id: "trash_0", position: [1, 0.8, 1], orientation: [1, 0, 0, 0],
                attached: false, deposited: false }],
    remaining: 1,
  };
}

describe("view reducer", () => {
  it("scene message resets snapshots and stores the scene", () => {
    const view = applyMessage(emptyView(), sceneMsg(), 0);
    expect(view.scene?.template_id).toBe("studio");
    expect(view.phase).toBe("init");
    expect(view.latest).toBeNull();
  });

  it("keeps a two-snapshot interpolation buffer", () => {
    let view = applyMessage(emptyView(), sceneMsg(), 0);
    view = applyMessage(view, stateMsg(2, 0.0), 100);
    view = applyMessage(view, stateMsg(4, 1.0), 140);
    expect(view.previous?.state.tick).toBe(2);
    expect(view.latest?.state.tick).toBe(4);
    const mid = interpolate(view, 160)!; // halfway through a 40 ms interval
    expect(mid.base[0]).toBeCloseTo(0.5, 9);
    const late = interpolate(view, 1000)!;
    expect(late.base[0]).toBeCloseTo(1.0, 9); // clamped at the newest snapshot
  });

  it("episode_end and leaderboard update the HUD model", () => {
    let view = applyMessage(emptyView(), sceneMsg(), 0);
    const end: EpisodeEndMessage = {
      v: 1, session: "s1", type: "episode_end", success: true,
      time_s: 40.2, rank: 2, episode_id: "episode_x",
    };
    view = applyMessage(view, end, 500);
    expect(view.lastEnd?.rank).toBe(2);
    expect(view.endBannerUntil).toBeGreaterThan(500);
    view = applyMessage(view, {
      v: 1, session: "s1", type: "leaderboard", difficulty: "easy",
      entries: [{ player: "ada", time_s: 40.2, episode_id: "episode_x", difficulty: "easy" }],
    }, 510);
    expect(view.leaderboard).toHaveLength(1);
  });

  it("staleness trips after the threshold", () => {
    let view = applyMessage(emptyView(), sceneMsg(), 0);
    view = applyMessage(view, stateMsg(2, 0), 100);
    expect(isStale(view, 600)).toBe(false);
    expect(isStale(view, 1200)).toBe(true);
  });

  it("fixture messages validate against the server schema", () => {
    expect(serverMessageSchema.safeParse(sceneMsg()).success).toBe(true);
    expect(serverMessageSchema.safeParse(stateMsg(2, 0)).success).toBe(true);
  });
});
