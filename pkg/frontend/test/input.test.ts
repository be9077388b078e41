// Headless harness for the input encoder: every emitted message must validate
// against the protocol schema, and the binding table must produce the mapped
// ControlInput values.

import { describe, expect, it } from "vitest";

import {
  DEFAULT_BINDINGS,
  InputTracker,
  PIXELS_TO_METERS,
  WHEEL_TO_METERS,
} from "../src/input.js";
import { PROTOCOL_VERSION } from "../src/protocol.js";
import { clientMessageSchema, inputMessageSchema } from "./schema.js";

describe("binding table", () => {
  it("W and S map to stick_y +1/-1", () => {
    const t = new InputTracker();
    t.keyDown("KeyW");
    expect(t.sample().stick).toEqual([0, 1]);
    t.keyUp("KeyW");
    t.keyDown("KeyS");
    expect(t.sample().stick).toEqual([0, -1]);
  });

  it("A and D map to stick_x -1/+1", () => {
    const t = new InputTracker();
    t.keyDown("KeyA");
    expect(t.sample().stick).toEqual([-1, 0]);
    t.keyUp("KeyA");
    t.keyDown("KeyD");
    expect(t.sample().stick).toEqual([1, 0]);
  });

  it("opposed keys cancel", () => {
    const t = new InputTracker();
    t.keyDown("KeyW");
    t.keyDown("KeyS");
    expect(t.sample().stick).toEqual([0, 0]);
  });

  it("space engages the right clutch", () => {
    const t = new InputTracker();
    expect(t.sample().clutch_r).toBe(false);
    t.keyDown("Space");
    expect(t.sample().clutch_r).toBe(true);
    t.keyUp("Space");
    expect(t.sample().clutch_r).toBe(false);
  });

  it("left mouse button drives the right trigger to 1.0", () => {
    const t = new InputTracker();
    t.mouseButton(true);
    expect(t.sample().trigger_r).toBe(1.0);
    t.mouseButton(false);
    expect(t.sample().trigger_r).toBe(0.0);
  });

  it("clutch-drag of 100 px right is +0.1 m controller x", () => {
    const t = new InputTracker();
    t.keyDown("Space");
    t.mouseDrag(100, 0);
    expect(t.sample().controller_pose_r.pos[0]).toBeCloseTo(100 * PIXELS_TO_METERS, 12);
    expect(100 * PIXELS_TO_METERS).toBeCloseTo(0.1, 12);
  });

  it("drag up the screen moves the controller forward (+z)", () => {
    const t = new InputTracker();
    t.keyDown("Space");
    t.mouseDrag(0, -50);
    expect(t.sample().controller_pose_r.pos[2]).toBeCloseTo(50 * PIXELS_TO_METERS, 12);
  });

  it("drag without clutch is ignored", () => {
    const t = new InputTracker();
    t.mouseDrag(200, 200);
    expect(t.sample().controller_pose_r.pos).toEqual([0, 0, 0]);
  });

  it("wheel adjusts controller height while clutched", () => {
    const t = new InputTracker();
    t.keyDown("Space");
    t.wheel(-120); // scroll up
    expect(t.sample().controller_pose_r.pos[1]).toBeCloseTo(120 * WHEEL_TO_METERS, 12);
  });

  it("Q/E roll the wrist in opposite directions while clutched", () => {
    const a = new InputTracker();
    a.keyDown("Space");
    a.keyDown("KeyQ");
    const qa = a.sample().controller_pose_r.rot;
    const b = new InputTracker();
    b.keyDown("Space");
    b.keyDown("KeyE");
    const qb = b.sample().controller_pose_r.rot;
    expect(qa[3]).toBeGreaterThan(0);
    expect(qb[3]).toBeLessThan(0);
    expect(qa[0]).toBeCloseTo(qb[0], 12);
  });

  it("X sets the abort flag, consumed once", () => {
    const t = new InputTracker();
    t.keyDown("KeyX");
    expect(t.consumeAbort()).toBe(true);
    expect(t.consumeAbort()).toBe(false);
  });

  it("no keys produces a sticky-release snapshot of zeros", () => {
    const t = new InputTracker();
    t.keyDown("KeyW");
    t.keyDown("Space");
    t.sample();
    t.keyUp("KeyW");
    t.keyUp("Space");
    const p = t.sample();
    expect(p.stick).toEqual([0, 0]);
    expect(p.clutch_l).toBe(false);
    expect(p.clutch_r).toBe(false);
    expect(p.trigger_l).toBe(0);
    expect(p.trigger_r).toBe(0);
  });

  it("bindings are remappable", () => {
    const t = new InputTracker({ ...DEFAULT_BINDINGS, forward: "ArrowUp" });
    t.keyDown("ArrowUp");
    expect(t.sample().stick).toEqual([0, 1]);
    t.keyDown("KeyW");
    expect(t.sample().stick).toEqual([0, 1]); // old key no longer bound
  });
});

describe("protocol conformance of emitted messages", () => {
  it("every message across a fuzzed session validates", () => {
    const t = new InputTracker();
    const keys = ["KeyW", "KeyS", "KeyA", "KeyD", "Space", "KeyQ", "KeyE"];
    let seed = 42;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let frame = 0; frame < 2000; frame++) {
      const key = keys[Math.floor(rand() * keys.length)];
      if (rand() < 0.5) t.keyDown(key);
      else t.keyUp(key);
      t.mouseButton(rand() < 0.3);
      t.mouseDrag((rand() - 0.5) * 400, (rand() - 0.5) * 400);
      t.wheel((rand() - 0.5) * 240);
      const msg = t.message();
      const parsed = inputMessageSchema.safeParse(msg);
      expect(parsed.success, JSON.stringify(parsed.success ? "" : parsed.error)).toBe(true);
      expect(msg.v).toBe(PROTOCOL_VERSION);
    }
  });

  it("hello and abort messages validate", () => {
    expect(
      clientMessageSchema.safeParse({
        v: 1, type: "hello", player: "ada", difficulty: "easy",
      }).success,
    ).toBe(true);
    expect(clientMessageSchema.safeParse({ v: 1, type: "abort" }).success).toBe(true);
    expect(
      clientMessageSchema.safeParse({ v: 1, type: "hello", player: "x", difficulty: "nope" })
        .success,
    ).toBe(false);
  });
});
