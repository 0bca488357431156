// Child-rectangle editor for one surface: drag to move, corner-drag to
// resize, all in surface-local uv space. The backend validates on save;
// overlap rejections name both offending rects and we highlight them.

import type { AoiChildDoc, AoiModelDoc } from "./types.js";

export interface DragState {
  childIndex: number;
  mode: "move" | "resize";
  /** uv position of the pointer when the drag started */
  startU: number;
  startV: number;
  orig: [number, number, number, number];
}

const HANDLE_UV = 0.03; // corner hit zone in uv units

export function hitTest(
  children: AoiChildDoc[],
  u: number,
  v: number,
): DragState | null {
  for (let i = children.length - 1; i >= 0; i--) {
    const [u0, v0, u1, v1] = children[i].rect;
    if (Math.abs(u - u1) <= HANDLE_UV && Math.abs(v - v1) <= HANDLE_UV) {
      return { childIndex: i, mode: "resize", startU: u, startV: v,
               orig: [u0, v0, u1, v1] };
    }
    if (u >= u0 && u <= u1 && v >= v0 && v <= v1) {
      return { childIndex: i, mode: "move", startU: u, startV: v,
               orig: [u0, v0, u1, v1] };
    }
  }
  return null;
}

const clamp01 = (x: number) => Math.min(1, Math.max(0, x));

export function applyDrag(
  drag: DragState,
  u: number,
  v: number,
): [number, number, number, number] {
  const [u0, v0, u1, v1] = drag.orig;
  const du = u - drag.startU;
  const dv = v - drag.startV;
  if (drag.mode === "move") {
    const shiftU = Math.min(1 - u1, Math.max(-u0, du));
    const shiftV = Math.min(1 - v1, Math.max(-v0, dv));
    return [u0 + shiftU, v0 + shiftV, u1 + shiftU, v1 + shiftV];
  }
  // resize from the (u1, v1) corner, keeping a minimum extent
  const minSize = 0.02;
  return [u0, v0,
          clamp01(Math.max(u0 + minSize, u1 + du)),
          clamp01(Math.max(v0 + minSize, v1 + dv))];
}

export function withUpdatedChild(
  model: AoiModelDoc,
  surfaceId: string,
  childIndex: number,
  rect: [number, number, number, number],
): AoiModelDoc {
  return {
    surfaces: model.surfaces.map((s) =>
      s.id !== surfaceId
        ? s
        : {
            ...s,
            children: s.children.map((c, i) =>
              i === childIndex ? { ...c, rect } : c),
          }),
  };
}

/** Pull the offending child ids out of a backend overlap rejection. */
export function offendingIds(error: string, surfaceId: string): string[] {
  const matches = error.match(new RegExp(`${surfaceId}\\.([A-Za-z0-9_]+)`, "g"));
  if (!matches) return [];
  return [...new Set(matches.map((m) => m.split(".")[1]))];
}
