// Wiring: lobby form, input capture at a capped rate, render on rAF. The
// input interval and the render loop are independent, so a slow frame never
// stalls the input stream; all game outcomes come from server messages.

import { DEFAULT_BINDINGS, InputTracker } from "./input.js";
import { Connection } from "./net.js";
import { Difficulty, PROTOCOL_VERSION } from "./protocol.js";
import { applyMessage, emptyView } from "./view.js";
import { renderFrame } from "./render.js";
import { drawHud } from "./hud.js";

const INPUT_INTERVAL_MS = 33; // <= 30 Hz input stream

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function start(player: string, difficulty: Difficulty): void {
  const lobby = document.getElementById("lobby")!;
  const hudBar = document.getElementById("status")!;
  lobby.style.display = "none";
  const canvas = document.getElementById("game") as HTMLCanvasElement;
  canvas.style.display = "block";
  const ctx = canvas.getContext("2d")!;

  let view = emptyView();
  const tracker = new InputTracker(DEFAULT_BINDINGS);
  const conn = new Connection(wsUrl());
  conn.connect(player, difficulty);

  let sceneSeen = false;
  document.addEventListener("keydown", (e) => {
    if (e.code === "Space") e.preventDefault();
    tracker.keyDown(e.code);
  });
  document.addEventListener("keyup", (e) => tracker.keyUp(e.code));
  canvas.addEventListener("mousedown", () => tracker.mouseButton(true));
  canvas.addEventListener("mouseup", () => tracker.mouseButton(false));
  canvas.addEventListener("mousemove", (e) => {
    if (e.buttons !== 0 || tracker.clutchHeld()) tracker.mouseDrag(e.movementX, e.movementY);
  });
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    tracker.wheel(e.deltaY);
  });

  // input loop: fixed cadence, independent of rendering
  const inputTimer = window.setInterval(() => {
    if (conn.status !== "open" || !sceneSeen) return;
    if (tracker.consumeAbort()) {
      conn.sendRaw({ v: PROTOCOL_VERSION, type: "abort" });
      return;
    }
    conn.sendRaw(tracker.message());
  }, INPUT_INTERVAL_MS);

  function renderLoop(): void {
    const now = performance.now();
    for (const msg of conn.drain()) {
      if (msg.type === "scene") sceneSeen = true;
      view = applyMessage(view, msg, now);
    }
    if (conn.status === "failed" || conn.status === "closed") {
      hudBar.textContent = "connection lost - inputs disabled; reload to retry";
      hudBar.className = "error";
      window.clearInterval(inputTimer);
    } else {
      hudBar.textContent =
        `player: ${player} | difficulty: ${difficulty} | ` +
        "W/S/A/D drive, Space+drag arm, wheel height, Q/E wrist, LMB grip, X abort";
      hudBar.className = "";
    }
    renderFrame(ctx, view, now, canvas.width, canvas.height);
    drawHud(ctx, view, now, canvas.width);
    requestAnimationFrame(renderLoop);
  }
  requestAnimationFrame(renderLoop);
}

function initLobby(): void {
  const join = document.getElementById("join") as HTMLButtonElement;
  join.addEventListener("click", () => {
    const player =
      (document.getElementById("player") as HTMLInputElement).value.trim() || "anonymous";
    const difficulty = (document.getElementById("difficulty") as HTMLSelectElement)
      .value as Difficulty;
    start(player, difficulty);
  });
}

initLobby();
