// Console view state: a pure reducer over push-channel events.
//
// Every number shown in the UI is taken verbatim from a received event;
// the console never recomputes metrics client-side. Closing and reopening
// the console only loses these local buffers, never session data.

import type { PushEvent, StatusEvent } from "./types.js";

export interface TrailPoint {
  t_ms: number;
  surface: string | null;
  uv: [number, number] | null;
  aoi: string;
}

export interface SeriesPoint {
  t_ms: number;
  value: number | null; // null renders as a gap, never interpolated
}

export interface ConsoleViewState {
  connection: "connecting" | "open" | "reconnecting";
  session: Omit<StatusEvent, "type"> | null;
  lastGaze: TrailPoint | null;
  /** last N AOI-to-AOI transitions as (from, to) trail point pairs */
  transitions: Array<{ from: TrailPoint; to: TrailPoint }>;
  scatter: TrailPoint[];
  pdt: Record<string, number>;
  pdtT: number | null;
  medianPupil: SeriesPoint[];
  lfHf: SeriesPoint[];
  annotations: Array<{ t_ms: number; text: string }>;
  notice: string | null;
}

export interface StateLimits {
  maxTransitions: number;
  maxScatter: number;
  maxSeries: number;
}

export const DEFAULT_LIMITS: StateLimits = {
  maxTransitions: 20,
  maxScatter: 2000,
  maxSeries: 600,
};

export function initialState(): ConsoleViewState {
  return {
    connection: "connecting",
    session: null,
    lastGaze: null,
    transitions: [],
    scatter: [],
    pdt: {},
    pdtT: null,
    medianPupil: [],
    lfHf: [],
    annotations: [],
    notice: null,
  };
}

function pushBounded<T>(arr: T[], item: T, limit: number): void {
  arr.push(item);
  if (arr.length > limit) arr.splice(0, arr.length - limit);
}

export function applyEvent(
  state: ConsoleViewState,
  event: PushEvent,
  limits: StateLimits = DEFAULT_LIMITS,
): ConsoleViewState {
  switch (event.type) {
    case "ping":
      return state;
    case "status": {
      const { type: _ignored, ...session } = event;
      return { ...state, session };
    }
    case "gaze": {
      const point: TrailPoint = {
        t_ms: event.t_ms,
        surface: event.surface,
        uv: event.uv,
        aoi: event.aoi,
      };
      const transitions = state.transitions.slice();
      if (state.lastGaze && state.lastGaze.aoi !== point.aoi) {
        pushBounded(
          transitions,
          { from: state.lastGaze, to: point },
          limits.maxTransitions,
        );
      }
      const scatter = state.scatter.slice();
      if (point.uv) pushBounded(scatter, point, limits.maxScatter);
      return { ...state, lastGaze: point, transitions, scatter };
    }
    case "metrics": {
      const medianPupil = state.medianPupil.slice();
      pushBounded(
        medianPupil,
        { t_ms: event.t_ms, value: event.median_pupil_mm },
        limits.maxSeries,
      );
      const lfHf = state.lfHf.slice();
      pushBounded(lfHf, { t_ms: event.t_ms, value: event.lf_hf }, limits.maxSeries);
      return { ...state, pdt: event.pdt, pdtT: event.t_ms, medianPupil, lfHf };
    }
    case "annotation": {
      const annotations = state.annotations.slice();
      annotations.push({ t_ms: event.t_ms, text: event.text });
      return { ...state, annotations };
    }
  }
}

/** PDT entries sorted by share, for the bar chart. */
export function pdtBars(state: ConsoleViewState): Array<[string, number]> {
  return Object.entries(state.pdt).sort((a, b) => b[1] - a[1]);
}

export function pdtSum(state: ConsoleViewState): number {
  return Object.values(state.pdt).reduce((a, b) => a + b, 0);
}
