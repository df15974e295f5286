/** Canvas rendering of the pendulum scene.
 *
 * The factual state is the red rod with a red torque arc; each counterfactual
 * is a black rod with a black arc.  Infeasible counterfactuals get a dashed
 * warning stroke and a marker at their (off-circle) tip.  Drawing goes
 * through a minimal context interface so tests can record the calls.
 */

import type { CounterfactualJson } from "./types.js";
import type { Mode } from "./state.js";

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number, ccw?: boolean): void;
  stroke(): void;
  setLineDash(segments: number[]): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
}

export interface SceneOptions {
  width: number;
  height: number;
  maxTorque: number; // arc sweep saturates at this magnitude
}

const ROD_FRACTION = 0.36;

/** Tip position in canvas space from the (cos, sin) pair; theta = 0 points up. */
function tip(cx: number, cy: number, radius: number, cosTheta: number, sinTheta: number) {
  return { x: cx + radius * sinTheta, y: cy - radius * cosTheta };
}

function drawRod(
  ctx: Ctx2D,
  cx: number,
  cy: number,
  radius: number,
  cosTheta: number,
  sinTheta: number,
  style: string,
  dashed: boolean,
): void {
  ctx.beginPath();
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.strokeStyle = style;
  ctx.lineWidth = 4;
  ctx.moveTo(cx, cy);
  const t = tip(cx, cy, radius, cosTheta, sinTheta);
  ctx.lineTo(t.x, t.y);
  ctx.stroke();
  ctx.setLineDash([]);
}

/** Circular torque arc around the pivot; no arc when the torque is zero. */
function drawTorqueArc(
  ctx: Ctx2D,
  cx: number,
  cy: number,
  radius: number,
  torque: number,
  maxTorque: number,
  style: string,
): void {
  if (torque === 0) return;
  const sweep = Math.min(Math.abs(torque) / maxTorque, 1.0) * 1.5 * Math.PI;
  ctx.beginPath();
  ctx.strokeStyle = style;
  ctx.lineWidth = 2.5;
  // positive torque sweeps counter-clockwise from the top
  ctx.arc(cx, cy, radius, -Math.PI / 2, -Math.PI / 2 + sweep, torque > 0);
  ctx.stroke();
}

function offCircleMarker(ctx: Ctx2D, x: number, y: number): void {
  ctx.beginPath();
  ctx.setLineDash([]);
  ctx.strokeStyle = "#cc7700";
  ctx.lineWidth = 2;
  ctx.arc(x, y, 7, 0, 2 * Math.PI);
  ctx.stroke();
}

/** Direction pair (cos theta, sin theta) of a counterfactual state.
 * Raw-tree states carry the pair directly (possibly off-circle); engineered
 * states carry the angle itself. */
export function counterfactualDirection(
  cf: CounterfactualJson,
  mode: Mode,
): { cos: number; sin: number } {
  if (mode === "raw") {
    return { cos: cf.x_prime[0], sin: cf.x_prime[1] };
  }
  return { cos: Math.cos(cf.x_prime[0]), sin: Math.sin(cf.x_prime[0]) };
}

export function renderScene(
  ctx: Ctx2D,
  options: SceneOptions,
  observation: number[] | null,
  factualTorque: number | null,
  counterfactuals: CounterfactualJson[],
  mode: Mode,
): void {
  const { width, height, maxTorque } = options;
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * ROD_FRACTION;

  // unit-circle guide
  ctx.beginPath();
  ctx.setLineDash([2, 4]);
  ctx.strokeStyle = "#cccccc";
  ctx.lineWidth = 1;
  ctx.arc(cx, cy, radius, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);

  if (observation === null) return;

  for (const cf of counterfactuals) {
    const direction = counterfactualDirection(cf, mode);
    ctx.globalAlpha = 0.9;
    drawRod(ctx, cx, cy, radius, direction.cos, direction.sin, "#111111", !cf.feasible);
    if (!cf.feasible) {
      const t = tip(cx, cy, radius, direction.cos, direction.sin);
      offCircleMarker(ctx, t.x, t.y);
    }
    if (cf.y_prime !== null) {
      drawTorqueArc(ctx, cx, cy, radius * 0.55, cf.y_prime[0], maxTorque, "#111111");
    }
    ctx.globalAlpha = 1.0;
  }

  // factual on top
  drawRod(ctx, cx, cy, radius, observation[0], observation[1], "#cc2222", false);
  if (factualTorque !== null) {
    drawTorqueArc(ctx, cx, cy, radius * 0.7, factualTorque, maxTorque, "#cc2222");
  }
}
