import type { StateMsg } from "./protocol.js";

// Live strip charts drawn straight onto a 2d canvas: one for the two
// velocities, one for raw vs discounted intention with the threshold
// guide lines.

export type SeriesSpec = { label: string; color: string; values: number[] };
export type GuideSpec = { y: number; label: string; color: string };

export function pluck(states: StateMsg[], pick: (s: StateMsg) => number): number[] {
  const out = new Array<number>(states.length);
  for (let k = 0; k < states.length; k++) out[k] = pick(states[k]);
  return out;
}

/** Index of the first sample strictly below the threshold, or -1. */
export function firstIndexBelow(values: number[], threshold: number): number {
  for (let k = 0; k < values.length; k++) {
    if (values[k] < threshold) return k;
  }
  return -1;
}

/** Index of the first state in the given mode, or -1. */
export function firstModeIndex(modes: (string | null)[], mode: string): number {
  for (let k = 0; k < modes.length; k++) {
    if (modes[k] === mode) return k;
  }
  return -1;
}

/**
 * The chart-consistency check surfaced in the UI: the tick where the
 * discounted intention first drops below the lower threshold should be the
 * tick where the controller flips to Crossing (when the release was
 * intention-driven).  Returns the sample distance between the two events.
 */
export function decayReleaseGap(iEff: number[], modes: (string | null)[],
                                iPedL: number): number | null {
  const drop = firstIndexBelow(iEff, iPedL);
  const flip = firstModeIndex(modes, "Crossing");
  if (drop < 0 || flip < 0) return null;
  return flip - drop;
}

export function drawChart(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  t: number[],
  series: SeriesSpec[],
  guides: GuideSpec[] = [],
  yMin = 0,
  yMax = 1,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);
  if (t.length < 2) return;

  const margin = { left: 34, right: 8, top: 6, bottom: 16 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const t0 = t[0];
  const t1 = t[t.length - 1];
  const span = Math.max(t1 - t0, 1e-9);
  const toX = (tv: number) => margin.left + ((tv - t0) / span) * plotW;
  const toY = (yv: number) =>
    margin.top + (1 - (yv - yMin) / (yMax - yMin)) * plotH;

  ctx.strokeStyle = "#2a3442";
  ctx.strokeRect(margin.left, margin.top, plotW, plotH);
  ctx.fillStyle = "#8899aa";
  ctx.font = "10px sans-serif";
  ctx.fillText(yMax.toFixed(1), 4, margin.top + 10);
  ctx.fillText(yMin.toFixed(1), 4, margin.top + plotH);
  ctx.fillText(`${t0.toFixed(1)}s`, margin.left, height - 4);
  ctx.fillText(`${t1.toFixed(1)}s`, width - 44, height - 4);

  for (const guide of guides) {
    ctx.strokeStyle = guide.color;
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(margin.left, toY(guide.y));
    ctx.lineTo(margin.left + plotW, toY(guide.y));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = guide.color;
    ctx.fillText(guide.label, margin.left + 4, toY(guide.y) - 2);
  }

  // at most ~2 samples per pixel: decimate long histories by striding
  const stride = Math.max(1, Math.floor(t.length / (2 * plotW)));
  let legendX = margin.left + 6;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let started = false;
    for (let k = 0; k < t.length; k += stride) {
      const x = toX(t[k]);
      const y = toY(Math.min(Math.max(s.values[k], yMin), yMax));
      if (started) ctx.lineTo(x, y);
      else {
        ctx.moveTo(x, y);
        started = true;
      }
    }
    ctx.stroke();
    ctx.lineWidth = 1;
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, legendX, margin.top + 10);
    legendX += ctx.measureText(s.label).width + 12;
  }
}
