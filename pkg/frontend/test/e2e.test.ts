// End-to-end console checks against a replayed synthetic session:
// gaze-event cadence, PDT bar consistency, annotation round-trip to the
// recorded file, and an AOI edit changing subsequent classifications.
//
// Spawns the real backend (gazeflight replay) and consumes its push
// channel the same way the browser console does (state reducer included).

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { applyEvent, initialState, pdtSum } from "../src/state.js";
import type { AoiModelDoc, PushEvent } from "../src/types.js";

const PY = process.env.GAZEFLIGHT_PYTHON ?? "python3";
const PORT = 19750 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let backend: ChildProcess | null = null;
let scenarioDir: string;
let sessionsDir: string;

async function waitForStatus(
  predicate: (s: Record<string, unknown>) => boolean,
  timeoutMs: number,
): Promise<Record<string, unknown>> {
  const deadline = Date.now() + timeoutMs;
  let last: Record<string, unknown> | null = null;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/status`);
      last = (await resp.json()) as Record<string, unknown>;
      if (predicate(last)) return last;
    } catch {
      // backend not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`status wait timed out; last=${JSON.stringify(last)}`);
}

interface RunCapture {
  events: PushEvent[];
  finalStatus: Record<string, unknown>;
}

async function captureRun(annotate?: string): Promise<RunCapture> {
  const events: PushEvent[] = [];
  const socket = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
  let annotated = false;
  socket.on("message", (data) => {
    const event = JSON.parse(data.toString()) as PushEvent;
    events.push(event);
    if (annotate && !annotated && event.type === "gaze" && event.t_ms > 5000) {
      annotated = true;
      void fetch(`${BASE}/control/annotate`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text: annotate }),
      });
    }
  });
  const finalStatus = await waitForStatus((s) => s.status === "stopped", 90_000);
  socket.close();
  return { events, finalStatus };
}

beforeAll(() => {
  const tmp = mkdtempSync(join(tmpdir(), "gazeflight-e2e-"));
  scenarioDir = join(tmp, "scenario");
  sessionsDir = join(tmp, "sessions");
  const synth = spawnSync(
    PY,
    ["-m", "gazeflight.cli", "synth", "--scenario", "nominal", "--seed", "4",
     "--out", scenarioDir],
    { encoding: "utf-8" },
  );
  if (synth.status !== 0) {
    throw new Error(`synth failed: ${synth.stderr}`);
  }
  backend = spawn(
    PY,
    ["-m", "gazeflight.cli", "replay", "--session", scenarioDir,
     "--speed", "40", "--push-port", String(PORT), "--out", sessionsDir],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
}, 60_000);

afterAll(() => {
  backend?.kill("SIGINT");
});

describe("console end-to-end against a replayed session", () => {
  let firstRun: RunCapture;

  it("streams gaze at the decimated 25 Hz cadence", async () => {
    await waitForStatus((s) => s.status === "running", 30_000);
    firstRun = await captureRun("e2e marker");
    const gaze = firstRun.events.filter((e) => e.type === "gaze") as
      Array<{ t_ms: number }>;
    expect(gaze.length).toBeGreaterThan(500);
    const spanS = (gaze[gaze.length - 1].t_ms - gaze[0].t_ms) / 1000;
    const cadenceHz = (gaze.length - 1) / spanS;
    expect(cadenceHz).toBeGreaterThanOrEqual(23);
    expect(cadenceHz).toBeLessThanOrEqual(27);
  }, 120_000);

  it("PDT bars always sum to 100 through the console state", () => {
    let state = initialState();
    let framesSeen = 0;
    for (const event of firstRun.events) {
      state = applyEvent(state, event);
      if (event.type === "metrics") {
        framesSeen += 1;
        expect(pdtSum(state)).toBeCloseTo(100, 4);
      }
    }
    expect(framesSeen).toBeGreaterThan(100);
  });

  it("annotations round-trip into the recorded annotations file", () => {
    const annEvents = firstRun.events.filter((e) => e.type === "annotation");
    expect(annEvents.length).toBe(1);
    const sessionDir = firstRun.finalStatus.session_dir as string;
    const recorded = readFileSync(join(sessionDir, "annotations.csv"), "utf-8");
    expect(recorded).toContain("e2e marker");
  });

  it("an AOI edit changes subsequent classifications", async () => {
    const labelCounts = (events: PushEvent[]) => {
      const counts: Record<string, number> = {};
      for (const e of events) {
        if (e.type === "gaze") counts[e.aoi] = (counts[e.aoi] ?? 0) + 1;
      }
      return counts;
    };
    const before = labelCounts(firstRun.events);
    expect(before["PFD.A2"] ?? 0).toBeGreaterThan(50);

    // shrink PFD child A2 to a corner sliver while the session is stopped
    const model = (await (await fetch(`${BASE}/aoi`)).json()) as AoiModelDoc;
    const pfd = model.surfaces.find((s) => s.id === "PFD")!;
    pfd.children = pfd.children.map((c) =>
      c.id === "A2" ? { ...c, rect: [0.0, 0.0, 0.02, 0.02] } : c);
    const put = await fetch(`${BASE}/aoi`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(model),
    });
    expect(put.status).toBe(200);

    const start = await fetch(`${BASE}/control/start`, { method: "POST" });
    expect(start.status).toBe(200);
    const secondRun = await captureRun();
    const after = labelCounts(secondRun.events);
    // dwells aimed at the old A2 centre now classify as bare PFD
    expect(after["PFD.A2"] ?? 0).toBe(0);
    expect(after["PFD"] ?? 0).toBeGreaterThan(before["PFD"] ?? 0);
  }, 120_000);
});
