// Client-side view model: a pure reduction of received server messages plus
// timestamps for staleness detection. Rendering reads this; nothing here
// mutates authoritative state.

import {
  EpisodeEndMessage,
  LeaderboardEntry,
  SceneDocument,
  ServerMessage,
  StateMessage,
} from "./protocol.js";

export interface Snapshot {
  state: StateMessage;
  receivedAt: number; // ms, performance.now() timebase
}

export interface ClientView {
  session: string | null;
  scene: SceneDocument | null;
  phase: string;
  // interpolation buffer: previous and latest snapshots
  previous: Snapshot | null;
  latest: Snapshot | null;
  leaderboard: LeaderboardEntry[];
  lastEnd: EpisodeEndMessage | null;
  lastError: string | null;
  endBannerUntil: number;
}

export function emptyView(): ClientView {
  return {
    session: null,
    scene: null,
    phase: "connecting",
    previous: null,
    latest: null,
    leaderboard: [],
    lastEnd: null,
    lastError: null,
    endBannerUntil: 0,
  };
}

export function applyMessage(view: ClientView, msg: ServerMessage, now: number): ClientView {
  switch (msg.type) {
    case "scene":
      return {
        ...view,
        session: msg.session,
        scene: msg.scene,
        phase: msg.phase,
        previous: null,
        latest: null,
        lastError: null,
      };
    case "state": {
      const latest: Snapshot = { state: msg, receivedAt: now };
      return { ...view, phase: msg.phase, previous: view.latest, latest };
    }
    case "episode_end":
      return { ...view, lastEnd: msg, endBannerUntil: now + 4000 };
    case "leaderboard":
      return { ...view, leaderboard: msg.entries };
    case "error":
      if (msg.code === "input_ignored") return view; // expected between episodes
      return { ...view, lastError: `${msg.code}: ${msg.message}` };
  }
}

export interface InterpolatedState {
  base: [number, number, number];
  eeRight: [number, number, number];
  objects: StateMessage["objects"];
  elapsed: number;
  remaining: number;
}

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

// render between the two buffered snapshots; t derives from wall-clock age so
// movement stays smooth at a state rate below the display rate
export function interpolate(view: ClientView, now: number): InterpolatedState | null {
  const latest = view.latest;
  if (!latest) return null;
  const prev = view.previous;
  if (!prev || prev.state.tick >= latest.state.tick) {
    const s = latest.state;
    return {
      base: s.base,
      eeRight: s.ee.right,
      objects: s.objects,
      elapsed: s.elapsed_s,
      remaining: s.remaining,
    };
  }
  const interval = latest.receivedAt - prev.receivedAt;
  const t = interval > 0 ? Math.min(1, (now - latest.receivedAt) / interval) : 1;
  const a = prev.state;
  const b = latest.state;
  return {
    base: [lerp(a.base[0], b.base[0], t), lerp(a.base[1], b.base[1], t),
           lerp(a.base[2], b.base[2], t)],
    eeRight: [
      lerp(a.ee.right[0], b.ee.right[0], t),
      lerp(a.ee.right[1], b.ee.right[1], t),
      lerp(a.ee.right[2], b.ee.right[2], t),
    ],
    objects: b.objects,
    elapsed: b.elapsed_s,
    remaining: b.remaining,
  };
}

export function isStale(view: ClientView, now: number, thresholdMs = 1000): boolean {
  if (!view.latest) return false;
  return now - view.latest.receivedAt > thresholdMs;
}
