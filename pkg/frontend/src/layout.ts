// Schematic 2D projection of the 3D AOI model.
//
// Each surface corner is mapped to (azimuth, elevation) as seen from the
// eye point, the bounding box of the four corners becomes the surface's
// schematic rectangle, and the whole angular extent is fitted into the
// canvas. This replaces the original scene-camera video with a layout
// that needs no hardware.

import type { AoiModelDoc, AoiSurfaceDoc } from "./types.js";

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface SurfaceLayout {
  id: string;
  rect: Rect;
  children: Array<{ id: string; rect: Rect }>;
  /** map surface-local uv to canvas coordinates */
  uvToCanvas(u: number, v: number): [number, number];
}

function corner(s: AoiSurfaceDoc, u: number, v: number): [number, number, number] {
  return [
    s.origin[0] + u * s.e1[0] + v * s.e2[0],
    s.origin[1] + u * s.e1[1] + v * s.e2[1],
    s.origin[2] + u * s.e1[2] + v * s.e2[2],
  ];
}

function azEl(p: [number, number, number], eye: [number, number, number]):
    [number, number] {
  const dx = p[0] - eye[0];
  const dy = p[1] - eye[1];
  const dz = p[2] - eye[2];
  const az = Math.atan2(dx, dz);
  const el = Math.atan2(dy, Math.hypot(dx, dz));
  return [az, el];
}

export function projectModel(
  model: AoiModelDoc,
  width: number,
  height: number,
  eye: [number, number, number] = [0, 0, 0],
  margin = 18,
): SurfaceLayout[] {
  const surfaceCorners = model.surfaces.map((s) => {
    const uv: Array<[number, number]> = [[0, 0], [1, 0], [0, 1], [1, 1]];
    return uv.map(([u, v]) => azEl(corner(s, u, v), eye));
  });
  const all = surfaceCorners.flat();
  const azMin = Math.min(...all.map((c) => c[0]));
  const azMax = Math.max(...all.map((c) => c[0]));
  const elMin = Math.min(...all.map((c) => c[1]));
  const elMax = Math.max(...all.map((c) => c[1]));
  const sx = (width - 2 * margin) / (azMax - azMin || 1);
  const sy = (height - 2 * margin) / (elMax - elMin || 1);

  const toCanvas = (az: number, el: number): [number, number] => [
    margin + (az - azMin) * sx,
    // canvas y grows downward; elevation grows upward
    height - margin - (el - elMin) * sy,
  ];

  return model.surfaces.map((s, i) => {
    const pts = surfaceCorners[i].map(([az, el]) => toCanvas(az, el));
    const xs = pts.map((p) => p[0]);
    const ys = pts.map((p) => p[1]);
    const rect: Rect = {
      x: Math.min(...xs),
      y: Math.min(...ys),
      w: Math.max(...xs) - Math.min(...xs),
      h: Math.max(...ys) - Math.min(...ys),
    };
    const uvToCanvas = (u: number, v: number): [number, number] => {
      const [az, el] = azEl(corner(s, u, v), eye);
      return toCanvas(az, el);
    };
    const children = s.children.map((c) => {
      const [u0, v0, u1, v1] = c.rect;
      const p1 = uvToCanvas(u0, v0);
      const p2 = uvToCanvas(u1, v1);
      return {
        id: c.id,
        rect: {
          x: Math.min(p1[0], p2[0]),
          y: Math.min(p1[1], p2[1]),
          w: Math.abs(p2[0] - p1[0]),
          h: Math.abs(p2[1] - p1[1]),
        },
      };
    });
    return { id: s.id, rect, children, uvToCanvas };
  });
}

export function rectContains(r: Rect, x: number, y: number): boolean {
  return x >= r.x && x <= r.x + r.w && y >= r.y && y <= r.y + r.h;
}
