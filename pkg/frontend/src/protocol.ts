// Wire protocol types, mirroring the server's docs/formats.md. The runtime
// client stays schema-library-free; the vitest harness validates these shapes
// with zod against messages the encoder actually emits.

export const PROTOCOL_VERSION = 1;

export type Difficulty = "easy" | "hard";

export interface Pose {
  pos: [number, number, number];
  rot: [number, number, number, number]; // w, x, y, z
}

export interface InputPayload {
  stick: [number, number];
  clutch_l: boolean;
  clutch_r: boolean;
  controller_pose_l: Pose;
  controller_pose_r: Pose;
  trigger_l: number;
  trigger_r: number;
  camera_pose: Pose;
}

export interface HelloMessage {
  v: number;
  type: "hello";
  player: string;
  difficulty: Difficulty;
  seed?: number;
}

export interface InputMessage {
  v: number;
  type: "input";
  input: InputPayload;
}

export interface AbortMessage {
  v: number;
  type: "abort";
}

export interface ResetRequestMessage {
  v: number;
  type: "reset_request";
}

export type ClientMessage = HelloMessage | InputMessage | AbortMessage | ResetRequestMessage;

export interface SceneObject {
  id: string;
  spec: string;
  category: string;
  position: [number, number, number];
  yaw: number;
  orientation: [number, number, number, number];
  aabb: [number, number, number, number, number, number];
  pose_tag: string;
  interactable: boolean;
  scale: number;
}

export interface SceneDocument {
  format_version: number;
  template_id: string;
  seed: number;
  difficulty: { level: Difficulty; trash_pose: string; bin_scale: number };
  bounds: [number, number, number, number];
  robot_start: [number, number, number];
  objects: SceneObject[];
  goal_triggers: { bin_id: string; volume: number[] }[];
}

export interface SceneMessage {
  v: number;
  session: string;
  type: "scene";
  phase: string;
  seed: number;
  scene: SceneDocument;
}

export interface ObjectState {
  id: string;
  position: [number, number, number];
  orientation: [number, number, number, number];
  attached: boolean;
  deposited: boolean;
}

export interface StateMessage {
  v: number;
  session: string;
  type: "state";
  tick: number;
  elapsed_s: number;
  phase: string;
  base: [number, number, number]; // x, z, yaw
  joints: number[];
  hands: number[];
  ee: { left: [number, number, number]; right: [number, number, number] };
  objects: ObjectState[];
  remaining: number;
}

export interface EpisodeEndMessage {
  v: number;
  session: string;
  type: "episode_end";
  success: boolean;
  time_s: number | null;
  rank: number | null;
  episode_id: string | null;
}

export interface LeaderboardEntry {
  player: string;
  time_s: number;
  episode_id: string;
  difficulty: Difficulty;
}

export interface LeaderboardMessage {
  v: number;
  session: string;
  type: "leaderboard";
  difficulty: Difficulty;
  entries: LeaderboardEntry[];
}

export interface ErrorMessage {
  v: number;
  session: string | null;
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage =
  | SceneMessage
  | StateMessage
  | EpisodeEndMessage
  | LeaderboardMessage
  | ErrorMessage;

export function identityPose(): Pose {
  return { pos: [0, 0, 0], rot: [1, 0, 0, 0] };
}
