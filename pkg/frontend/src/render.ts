// Top-down orthographic canvas renderer. World XZ maps to the canvas with x
// to the right and z up the screen; a side gauge shows the end-effector
// height since the top-down view has no vertical axis.

import { SceneDocument } from "./protocol.js";
import { ClientView, InterpolatedState, interpolate, isStale } from "./view.js";

const COLORS: Record<string, string> = {
  table: "#8a6239",
  furniture: "#5a6470",
  decoration: "#4e7d57",
  trash_bin: "#2f3e4e",
};

export class Mapper {
  scale: number;
  ox: number;
  oy: number;

  constructor(bounds: [number, number, number, number], w: number, h: number, margin = 24) {
    const [x0, z0, x1, z1] = bounds;
    this.scale = Math.min((w - 2 * margin) / (x1 - x0), (h - 2 * margin) / (z1 - z0));
    this.ox = margin - x0 * this.scale;
    this.oy = h - margin + z0 * this.scale;
  }

  x(wx: number): number {
    return this.ox + wx * this.scale;
  }

  y(wz: number): number {
    return this.oy - wz * this.scale; // +z is up the screen
  }
}

function drawBox(ctx: CanvasRenderingContext2D, m: Mapper, aabb: number[],
                 fill: string, alpha = 1.0): void {
  const [x0, , z0, x1, , z1] = aabb;
  ctx.globalAlpha = alpha;
  ctx.fillStyle = fill;
  ctx.fillRect(m.x(x0), m.y(z1), (x1 - x0) * m.scale, (z1 - z0) * m.scale);
  ctx.globalAlpha = 1.0;
}

export function renderFrame(ctx: CanvasRenderingContext2D, view: ClientView,
                            now: number, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const scene = view.scene;
  if (!scene) {
    ctx.fillStyle = "#ccc";
    ctx.font = "16px sans-serif";
    ctx.fillText("waiting for scene...", 20, 40);
    return;
  }
  const m = new Mapper(scene.bounds, w, h);
  const [x0, z0, x1, z1] = scene.bounds;
  ctx.fillStyle = "#1d232b";
  ctx.fillRect(m.x(x0), m.y(z1), (x1 - x0) * m.scale, (z1 - z0) * m.scale);
  ctx.strokeStyle = "#9aa7b5";
  ctx.lineWidth = 2;
  ctx.strokeRect(m.x(x0), m.y(z1), (x1 - x0) * m.scale, (z1 - z0) * m.scale);

  for (const obj of scene.objects) {
    if (obj.category === "trash") continue; // dynamic: drawn from snapshots
    drawBox(ctx, m, obj.aabb, COLORS[obj.category] ?? "#777");
  }
  ctx.setLineDash([4, 3]);
  ctx.strokeStyle = "#7fd17f";
  for (const trig of scene.goal_triggers) {
    const v = trig.volume;
    ctx.strokeRect(m.x(v[0]), m.y(v[5]), (v[3] - v[0]) * m.scale, (v[5] - v[2]) * m.scale);
  }
  ctx.setLineDash([]);

  const interp: InterpolatedState | null = interpolate(view, now);
  const trashFallback = scene.objects.filter((o) => o.category === "trash");
  const trash = interp
    ? interp.objects
    : trashFallback.map((o) => ({
        id: o.id,
        position: o.position,
        orientation: o.orientation,
        attached: false,
        deposited: false,
      }));
  for (const t of trash) {
    ctx.beginPath();
    ctx.arc(m.x(t.position[0]), m.y(t.position[2]), Math.max(3, 0.05 * m.scale), 0, 2 * Math.PI);
    ctx.fillStyle = t.deposited ? "#59d98c" : t.attached ? "#ffd166" : "#ef6461";
    ctx.fill();
  }

  const base = interp ? interp.base : scene.robot_start;
  const bx = m.x(base[0]);
  const by = m.y(base[1]);
  const yaw = base[2];
  ctx.beginPath();
  ctx.arc(bx, by, 0.22 * m.scale, 0, 2 * Math.PI);
  ctx.fillStyle = "#4ea3ff";
  ctx.fill();
  // heading: forward is (-sin yaw, cos yaw) in world XZ
  ctx.beginPath();
  ctx.moveTo(bx, by);
  ctx.lineTo(bx - Math.sin(yaw) * 0.4 * m.scale, by - Math.cos(yaw) * 0.4 * m.scale);
  ctx.strokeStyle = "#dce9f7";
  ctx.lineWidth = 3;
  ctx.stroke();

  if (interp) {
    const ee = interp.eeRight;
    ctx.strokeStyle = "#ffd166";
    ctx.lineWidth = 2;
    const ex = m.x(ee[0]);
    const ey = m.y(ee[2]);
    ctx.beginPath();
    ctx.moveTo(ex - 6, ey);
    ctx.lineTo(ex + 6, ey);
    ctx.moveTo(ex, ey - 6);
    ctx.lineTo(ex, ey + 6);
    ctx.stroke();
    drawHeightGauge(ctx, ee[1], w, h);
  }

  if (isStale(view, now)) {
    ctx.fillStyle = "rgba(0,0,0,0.5)";
    ctx.fillRect(0, 0, w, h);
    ctx.fillStyle = "#ffb347";
    ctx.font = "20px sans-serif";
    ctx.fillText("connection stalled - last frame shown", 20, h / 2);
  }
}

function drawHeightGauge(ctx: CanvasRenderingContext2D, eeY: number, w: number, h: number): void {
  const gx = w - 26;
  const top = 40;
  const bottom = h - 40;
  ctx.strokeStyle = "#9aa7b5";
  ctx.lineWidth = 2;
  ctx.strokeRect(gx, top, 12, bottom - top);
  const range: [number, number] = [0.5, 1.3]; // plausible hand heights, meters
  const frac = Math.min(1, Math.max(0, (eeY - range[0]) / (range[1] - range[0])));
  const y = bottom - frac * (bottom - top);
  ctx.fillStyle = "#ffd166";
  ctx.fillRect(gx - 3, y - 2, 18, 4);
  ctx.fillStyle = "#9aa7b5";
  ctx.font = "10px sans-serif";
  ctx.fillText("hand", gx - 8, top - 6);
  ctx.fillText(eeY.toFixed(2), gx - 8, y - 6);
}
