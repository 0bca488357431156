// Minimal canvas charts: PDT bars and gap-aware time-series strips.

import type { Ctx2D } from "./overlay.js";
import type { SeriesPoint } from "./state.js";

const BAR_FILL = "#4d648d";
const AXIS_FILL = "#9fb3c8";
const LINE_STROKE = "#ffd166";

export function drawPdtBars(ctx: Ctx2D, width: number, height: number,
                            bars: Array<[string, number]>, maxBars = 10): void {
  ctx.clearRect(0, 0, width, height);
  ctx.font = "10px sans-serif";
  const shown = bars.slice(0, maxBars);
  if (!shown.length) return;
  const rowH = Math.min(22, (height - 4) / shown.length);
  const labelW = 64;
  shown.forEach(([aoi, pct], i) => {
    const y = 2 + i * rowH;
    ctx.fillStyle = AXIS_FILL;
    ctx.fillText(`${aoi} ${pct.toFixed(1)}%`, 2, y + rowH * 0.7);
    ctx.fillStyle = BAR_FILL;
    ctx.fillRect(labelW, y + 2, (width - labelW - 4) * pct / 100, rowH - 6);
  });
}

/** Line strip; null values break the line (gaps are never interpolated). */
export function drawSeries(ctx: Ctx2D, width: number, height: number,
                           series: SeriesPoint[], label: string): void {
  ctx.clearRect(0, 0, width, height);
  ctx.font = "10px sans-serif";
  ctx.fillStyle = AXIS_FILL;
  ctx.fillText(label, 4, 11);
  const present = series.filter((p) => p.value !== null) as
    Array<{ t_ms: number; value: number }>;
  if (present.length < 2 || series.length < 2) return;
  const t0 = series[0].t_ms;
  const t1 = series[series.length - 1].t_ms;
  const lo = Math.min(...present.map((p) => p.value));
  const hi = Math.max(...present.map((p) => p.value));
  const span = hi - lo || 1;
  const x = (t: number) => 4 + (width - 8) * (t - t0) / (t1 - t0 || 1);
  const y = (v: number) => height - 6 - (height - 22) * (v - lo) / span;

  ctx.strokeStyle = LINE_STROKE;
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  let pen = false;
  for (const p of series) {
    if (p.value === null) {
      pen = false;                 // gap: lift the pen
      continue;
    }
    if (pen) {
      ctx.lineTo(x(p.t_ms), y(p.value));
    } else {
      ctx.moveTo(x(p.t_ms), y(p.value));
      pen = true;
    }
  }
  ctx.stroke();
  ctx.fillText(hi.toPrecision(3), width - 44, 11);
  ctx.fillText(lo.toPrecision(3), width - 44, height - 4);
}
