// HUD overlay: timer, phase, trash remaining, leaderboard, end-of-episode
// banner and abort/discard notices. Drawn on top of the scene each frame.

import { ClientView, interpolate } from "./view.js";

export function drawHud(ctx: CanvasRenderingContext2D, view: ClientView,
                        now: number, w: number): void {
  ctx.font = "14px monospace";
  ctx.fillStyle = "#e8eef5";
  const interp = interpolate(view, now);
  const elapsed = interp ? interp.elapsed : 0;
  const remaining = interp ? interp.remaining : view.scene
    ? view.scene.objects.filter((o) => o.category === "trash").length
    : 0;
  ctx.fillText(`t=${elapsed.toFixed(1)}s`, 12, 20);
  ctx.fillText(`phase: ${view.phase}`, 12, 38);
  ctx.fillText(`trash left: ${remaining}`, 12, 56);
  if (view.lastError) {
    ctx.fillStyle = "#ff7a7a";
    ctx.fillText(view.lastError, 12, 74);
  }

  // top-5 board, current player's new rank highlighted after an episode end
  ctx.font = "13px monospace";
  const bx = w - 250;
  ctx.fillStyle = "#aab7c4";
  ctx.fillText("leaderboard (top 5)", bx, 20);
  view.leaderboard.slice(0, 5).forEach((e, i) => {
    const isNew =
      view.lastEnd && view.lastEnd.rank === i + 1 && now < view.endBannerUntil;
    ctx.fillStyle = isNew ? "#ffd166" : "#e8eef5";
    ctx.fillText(`${i + 1}. ${e.player.slice(0, 12).padEnd(12)} ${e.time_s.toFixed(1)}s`,
                 bx, 38 + i * 16);
  });

  const end = view.lastEnd;
  if (end && now < view.endBannerUntil) {
    ctx.font = "22px sans-serif";
    if (end.success) {
      ctx.fillStyle = "#59d98c";
      const rank = end.rank ? ` - rank ${end.rank}!` : "";
      ctx.fillText(`task complete in ${end.time_s?.toFixed(1)}s${rank}`, 40, 100);
    } else {
      ctx.fillStyle = "#ffb347";
      ctx.fillText("episode aborted - trajectory discarded", 40, 100);
    }
  }
}
