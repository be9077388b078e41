// Keyboard/mouse state tracking and encoding into ControlInput wire payloads.
// DOM-free by design: main.ts feeds browser events in, the vitest harness
// feeds synthetic ones. Inputs are sticky server-side, so the encoder emits a
// full snapshot (zeros and false flags included) every sample.

import { InputMessage, InputPayload, PROTOCOL_VERSION, identityPose } from "./protocol.js";

export const PIXELS_TO_METERS = 0.001; // clutch drag scale, meters per pixel
export const WHEEL_TO_METERS = 0.0005; // vertical target motion per wheel unit
export const WRIST_ROLL_STEP = 0.05; // radians per sampled frame while Q/E held

// default bindings; remap by editing this table (code -> action)
export interface BindingTable {
  forward: string;
  backward: string;
  left: string;
  right: string;
  clutch: string;
  wristRollLeft: string;
  wristRollRight: string;
  abort: string;
}

export const DEFAULT_BINDINGS: BindingTable = {
  forward: "KeyW",
  backward: "KeyS",
  left: "KeyA",
  right: "KeyD",
  clutch: "Space",
  wristRollLeft: "KeyQ",
  wristRollRight: "KeyE",
  abort: "KeyX",
};

function quatMultiply(
  a: [number, number, number, number],
  b: [number, number, number, number],
): [number, number, number, number] {
  const [w1, x1, y1, z1] = a;
  const [w2, x2, y2, z2] = b;
  return [
    w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
  ];
}

function rollQuat(angle: number): [number, number, number, number] {
  // rotation about the forward (z) axis
  return [Math.cos(angle / 2), 0, 0, Math.sin(angle / 2)];
}

export class InputTracker {
  private keys = new Set<string>();
  private mouseDown = false;
  private controllerPos: [number, number, number] = [0, 0, 0];
  private controllerRot: [number, number, number, number] = [1, 0, 0, 0];
  abortRequested = false;

  constructor(private bindings: BindingTable = DEFAULT_BINDINGS) {}

  keyDown(code: string): void {
    if (code === this.bindings.abort) {
      this.abortRequested = true;
      return;
    }
    this.keys.add(code);
  }

  keyUp(code: string): void {
    this.keys.delete(code);
  }

  mouseButton(down: boolean): void {
    this.mouseDown = down;
  }

  // drag in canvas pixels; +dx right, +dy down the screen (toward the viewer)
  mouseDrag(dx: number, dy: number): void {
    if (!this.clutchHeld()) return;
    this.controllerPos[0] += dx * PIXELS_TO_METERS;
    this.controllerPos[2] -= dy * PIXELS_TO_METERS;
  }

  wheel(deltaY: number): void {
    if (!this.clutchHeld()) return;
    this.controllerPos[1] -= deltaY * WHEEL_TO_METERS; // scroll up raises
  }

  clutchHeld(): boolean {
    return this.keys.has(this.bindings.clutch);
  }

  consumeAbort(): boolean {
    const requested = this.abortRequested;
    this.abortRequested = false;
    return requested;
  }

  // one sampled frame: advance held wrist-roll keys, then snapshot
  sample(): InputPayload {
    const b = this.bindings;
    if (this.clutchHeld()) {
      if (this.keys.has(b.wristRollLeft)) {
        this.controllerRot = quatMultiply(rollQuat(WRIST_ROLL_STEP), this.controllerRot);
      }
      if (this.keys.has(b.wristRollRight)) {
        this.controllerRot = quatMultiply(rollQuat(-WRIST_ROLL_STEP), this.controllerRot);
      }
    }
    const stickY = (this.keys.has(b.forward) ? 1 : 0) + (this.keys.has(b.backward) ? -1 : 0);
    const stickX = (this.keys.has(b.right) ? 1 : 0) + (this.keys.has(b.left) ? -1 : 0);
    return {
      stick: [stickX, stickY],
      clutch_l: false,
      clutch_r: this.clutchHeld(),
      controller_pose_l: identityPose(),
      controller_pose_r: {
        pos: [...this.controllerPos] as [number, number, number],
        rot: [...this.controllerRot] as [number, number, number, number],
      },
      trigger_l: 0,
      trigger_r: this.mouseDown ? 1.0 : 0.0,
      camera_pose: identityPose(),
    };
  }

  message(): InputMessage {
    return { v: PROTOCOL_VERSION, type: "input", input: this.sample() };
  }
}
