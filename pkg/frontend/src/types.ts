// Wire types for the backend push channel and control endpoints.

export interface GazeEvent {
  type: "gaze";
  t_ms: number;
  aoi: string;
  surface: string | null;
  uv: [number, number] | null;
}

export interface MetricsEvent {
  type: "metrics";
  t_ms: number;
  median_pupil_mm: number | null;
  aoi: string;
  pdt: Record<string, number>;
  lf_hf: number | null;
  counters?: { received: number; dropped: number; classified_oth: number };
}

export interface AnnotationEvent {
  type: "annotation";
  t_ms: number;
  text: string;
}

export interface StatusEvent {
  type: "status";
  status: "idle" | "running" | "stopped";
  session_id: string | null;
  session_dir: string | null;
  received: number;
  dropped: number;
  classified_oth: number;
  latency_p95_ms: number | null;
}

export interface PingEvent {
  type: "ping";
}

export type PushEvent =
  | GazeEvent
  | MetricsEvent
  | AnnotationEvent
  | StatusEvent
  | PingEvent;

// AOI config document as served by GET /aoi (and accepted by PUT /aoi).
export interface AoiChildDoc {
  id: string;
  rect: [number, number, number, number]; // u0, v0, u1, v1
}

export interface AoiSurfaceDoc {
  id: string;
  origin: [number, number, number];
  e1: [number, number, number];
  e2: [number, number, number];
  px: [number, number];
  children: AoiChildDoc[];
}

export interface AoiModelDoc {
  surfaces: AoiSurfaceDoc[];
}
