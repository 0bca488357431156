// Canvas rendering of the schematic cockpit, live gaze dot, scan path,
// and scatterplot. Drawing goes through a narrow context interface so
// tests can substitute a recording stub.

import type { SurfaceLayout } from "./layout.js";
import type { ConsoleViewState } from "./state.js";

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

const SURFACE_STROKE = "#4d648d";
const CHILD_STROKE = "#35506e";
const LABEL_FILL = "#9fb3c8";
const GAZE_FILL = "#ffd166";
const SCATTER_FILL = "#49a078";
const PATH_STROKE = "#ef8354";

function centre(layout: SurfaceLayout): [number, number] {
  return [layout.rect.x + layout.rect.w / 2, layout.rect.y + layout.rect.h / 2];
}

function pointFor(
  layouts: SurfaceLayout[],
  surface: string | null,
  uv: [number, number] | null,
  aoi: string,
): [number, number] | null {
  if (surface && uv) {
    const layout = layouts.find((l) => l.id === surface);
    if (layout) return layout.uvToCanvas(uv[0], uv[1]);
  }
  // OTH or unknown surface: no reliable position
  return null;
}

export function drawSchematic(ctx: Ctx2D, layouts: SurfaceLayout[],
                              highlight: string[] = []): void {
  ctx.font = "11px sans-serif";
  for (const layout of layouts) {
    ctx.globalAlpha = 1;
    ctx.lineWidth = 1.5;
    ctx.strokeStyle = SURFACE_STROKE;
    ctx.strokeRect(layout.rect.x, layout.rect.y, layout.rect.w, layout.rect.h);
    ctx.fillStyle = LABEL_FILL;
    ctx.fillText(layout.id, layout.rect.x + 3, layout.rect.y + 12);
    for (const child of layout.children) {
      const hot = highlight.includes(`${layout.id}.${child.id}`) ||
        highlight.includes(child.id);
      ctx.lineWidth = hot ? 2.5 : 1;
      ctx.strokeStyle = hot ? "#e63946" : CHILD_STROKE;
      ctx.strokeRect(child.rect.x, child.rect.y, child.rect.w, child.rect.h);
      ctx.fillText(child.id, child.rect.x + 2, child.rect.y + 11);
    }
  }
}

export function drawScatter(ctx: Ctx2D, layouts: SurfaceLayout[],
                            state: ConsoleViewState): void {
  ctx.fillStyle = SCATTER_FILL;
  ctx.globalAlpha = 0.25;
  for (const p of state.scatter) {
    const xy = pointFor(layouts, p.surface, p.uv, p.aoi);
    if (!xy) continue;
    ctx.fillRect(xy[0] - 1, xy[1] - 1, 2, 2);
  }
  ctx.globalAlpha = 1;
}

export function drawScanPath(ctx: Ctx2D, layouts: SurfaceLayout[],
                             state: ConsoleViewState): void {
  const n = state.transitions.length;
  state.transitions.forEach((tr, i) => {
    const from = pointFor(layouts, tr.from.surface, tr.from.uv, tr.from.aoi) ??
      surfaceCentre(layouts, tr.from.aoi);
    const to = pointFor(layouts, tr.to.surface, tr.to.uv, tr.to.aoi) ??
      surfaceCentre(layouts, tr.to.aoi);
    if (!from || !to) return;
    ctx.globalAlpha = 0.15 + 0.85 * ((i + 1) / n);   // older hops fade out
    ctx.strokeStyle = PATH_STROKE;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(from[0], from[1]);
    ctx.lineTo(to[0], to[1]);
    ctx.stroke();
  });
  ctx.globalAlpha = 1;
}

function surfaceCentre(layouts: SurfaceLayout[], aoi: string):
    [number, number] | null {
  const sid = aoi.split(".")[0];
  const layout = layouts.find((l) => l.id === sid);
  return layout ? centre(layout) : null;
}

export function drawGazeDot(ctx: Ctx2D, layouts: SurfaceLayout[],
                            state: ConsoleViewState): void {
  if (!state.lastGaze) return;
  const xy = pointFor(layouts, state.lastGaze.surface, state.lastGaze.uv,
                      state.lastGaze.aoi);
  if (!xy) return;
  ctx.fillStyle = GAZE_FILL;
  ctx.globalAlpha = 0.9;
  ctx.beginPath();
  ctx.arc(xy[0], xy[1], 5, 0, 2 * Math.PI);
  ctx.fill();
  ctx.globalAlpha = 1;
}

export function renderOverlay(ctx: Ctx2D, width: number, height: number,
                              layouts: SurfaceLayout[],
                              state: ConsoleViewState,
                              highlight: string[] = []): void {
  ctx.clearRect(0, 0, width, height);
  drawSchematic(ctx, layouts, highlight);
  drawScatter(ctx, layouts, state);
  drawScanPath(ctx, layouts, state);
  drawGazeDot(ctx, layouts, state);
}
