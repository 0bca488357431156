// Console entry point: wires the push channel, controls, charts, and the
// AOI editor to the DOM.

import { ControlApi, PushChannelClient } from "./client.js";
import { applyDrag, hitTest, offendingIds, withUpdatedChild,
         type DragState } from "./aoiEditor.js";
import { projectModel, rectContains, type SurfaceLayout } from "./layout.js";
import { drawPdtBars, drawSeries } from "./charts.js";
import { renderOverlay, type Ctx2D } from "./overlay.js";
import { applyEvent, initialState, pdtBars, type ConsoleViewState } from "./state.js";
import type { AoiModelDoc } from "./types.js";

const baseUrl = window.location.origin;
const api = new ControlApi(baseUrl);

let state: ConsoleViewState = initialState();
let model: AoiModelDoc | null = null;
let layouts: SurfaceLayout[] = [];
let editing = false;
let editSurface = "PFD";
let drag: DragState | null = null;
let editedModel: AoiModelDoc | null = null;
let highlight: string[] = [];

const el = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const overlay = el<HTMLCanvasElement>("overlay");
const pdtCanvas = el<HTMLCanvasElement>("pdt");
const pupilCanvas = el<HTMLCanvasElement>("pupil");
const lfhfCanvas = el<HTMLCanvasElement>("lfhf");
const banner = el<HTMLDivElement>("banner");
const noticeBox = el<HTMLDivElement>("notice");
const statusLine = el<HTMLDivElement>("statusline");
const annList = el<HTMLUListElement>("annotations");

function ctx(canvas: HTMLCanvasElement): Ctx2D {
  return canvas.getContext("2d") as unknown as Ctx2D;
}

function notice(text: string | null): void {
  noticeBox.textContent = text ?? "";
  noticeBox.style.display = text ? "block" : "none";
}

async function refreshModel(): Promise<void> {
  model = await api.getAoiModel();
  editedModel = null;
  layouts = projectModel(model, overlay.width, overlay.height);
}

function activeModel(): AoiModelDoc | null {
  return editedModel ?? model;
}

function redraw(): void {
  if (!activeModel()) return;
  const shown = editing && editedModel
    ? projectModel(editedModel, overlay.width, overlay.height)
    : layouts;
  renderOverlay(ctx(overlay), overlay.width, overlay.height, shown, state,
                highlight);
  drawPdtBars(ctx(pdtCanvas), pdtCanvas.width, pdtCanvas.height, pdtBars(state));
  drawSeries(ctx(pupilCanvas), pupilCanvas.width, pupilCanvas.height,
             state.medianPupil, "median pupil (mm)");
  drawSeries(ctx(lfhfCanvas), lfhfCanvas.width, lfhfCanvas.height,
             state.lfHf, "LF/HF ratio");
  const s = state.session;
  statusLine.textContent = s
    ? `${s.status}  session=${s.session_id ?? "-"}  received=${s.received}` +
      `  dropped=${s.dropped}  gaze=${state.lastGaze?.aoi ?? "-"}`
    : "no status yet";
  annList.innerHTML = "";
  for (const a of state.annotations.slice(-30)) {
    const li = document.createElement("li");
    li.textContent = `${(a.t_ms / 1000).toFixed(1)}s  ${a.text}`;
    annList.appendChild(li);
  }
}

const client = new PushChannelClient(baseUrl, {
  onEvent(event) {
    state = applyEvent(state, event);
    redraw();
  },
  onConnection(connection) {
    state = { ...state, connection };
    banner.style.display = connection === "open" ? "none" : "block";
    banner.textContent = connection === "reconnecting"
      ? "connection lost - reconnecting (history kept)"
      : "connecting...";
  },
});

async function controlCall(call: Promise<Response>, label: string):
    Promise<void> {
  const resp = await call;
  if (!resp.ok) {
    const body = (await resp.json().catch(() => ({}))) as { error?: string };
    notice(`${label} rejected: ${body.error ?? resp.status}`);
  } else {
    notice(null);
  }
}

el<HTMLButtonElement>("btn-start").onclick = () => {
  if (state.session?.status === "running") {
    notice("already running");
    return;
  }
  void controlCall(api.start(), "start");
};
el<HTMLButtonElement>("btn-stop").onclick = () =>
  void controlCall(api.stop(), "stop");
el<HTMLButtonElement>("btn-annotate").onclick = () => {
  const input = el<HTMLInputElement>("annotate-text");
  if (!input.value) return;
  if (state.session?.status !== "running") {
    notice("annotation rejected: no running session");
    return;
  }
  void controlCall(api.annotate(input.value), "annotate");
  input.value = "";
};

// --- AOI editor -----------------------------------------------------------

const editBtn = el<HTMLButtonElement>("btn-edit");
editBtn.onclick = () => {
  if (!editing && state.session?.status === "running") {
    notice("stop the session before editing AOIs");
    return;
  }
  editing = !editing;
  editBtn.textContent = editing ? "save AOIs" : "edit AOIs";
  if (!editing && editedModel) {
    void api.putAoiModel(editedModel).then(async (result) => {
      if (result.ok) {
        highlight = [];
        notice("AOI model saved");
        await refreshModel();
      } else {
        highlight = offendingIds(result.error ?? "", editSurface);
        notice(`AOI edit rejected: ${result.error}`);
        editing = true;
        editBtn.textContent = "save AOIs";
      }
      redraw();
    });
  }
  redraw();
};

function editorUv(x: number, y: number): [string, number, number] | null {
  const shown = editedModel
    ? projectModel(editedModel, overlay.width, overlay.height) : layouts;
  for (const layout of shown) {
    if (!rectContains(layout.rect, x, y) || !layout.children.length) continue;
    const u = (x - layout.rect.x) / layout.rect.w;
    const v = 1 - (y - layout.rect.y) / layout.rect.h;
    return [layout.id, u, v];
  }
  return null;
}

overlay.onmousedown = (ev) => {
  if (!editing || !activeModel()) return;
  const hitUv = editorUv(ev.offsetX, ev.offsetY);
  if (!hitUv) return;
  const [sid, u, v] = hitUv;
  editSurface = sid;
  const surface = activeModel()!.surfaces.find((s) => s.id === sid)!;
  drag = hitTest(surface.children, u, v);
};

overlay.onmousemove = (ev) => {
  if (!editing || !drag) return;
  const hitUv = editorUv(ev.offsetX, ev.offsetY);
  if (!hitUv || hitUv[0] !== editSurface) return;
  const rect = applyDrag(drag, hitUv[1], hitUv[2]);
  editedModel = withUpdatedChild(activeModel()!, editSurface,
                                 drag.childIndex, rect);
  redraw();
};

overlay.onmouseup = () => {
  drag = null;
};

void refreshModel().then(() => {
  client.start();
  redraw();
});
