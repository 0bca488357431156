"""Live session backbone: TCP gaze ingest, recording, 1 Hz rolling
analytics, subscriber fan-out, and replay of recorded sessions.

One producer feeds newline-delimited JSON packets over TCP; accepted
samples are classified, recorded, decimated to the UI cadence, and folded
into per-second metrics frames. Metrics are driven by data timestamps,
never wall clock, so replay at any speed reproduces identical frames.

Subscribers get bounded drop-oldest queues so a stalled console can never
block ingest or recording.
"""

from __future__ import annotations

import json
import math
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import ingest, pupil, scan
from .geometry import ClassifiedSample, classify
from .model import OTH, AoiModel, GazeSample, Segment, dump_aoi_model

DEFAULT_ROLLING_WINDOW_MS = 120_000
DEFAULT_DECIMATE_HZ = 25.0
DEFAULT_QUEUE_LIMIT = 256
MIN_LFHF_WINDOW_MS = 60_000
MAX_INGEST_RATE_HZ = 120.0

GAZE_CSV_HEADER = "t_ms,ox,oy,oz,dx,dy,dz,pupil_mm,eyelid,quality"


class Subscriber:
    """Bounded drop-oldest event queue with blocking drain."""

    def __init__(self, limit: int = DEFAULT_QUEUE_LIMIT):
        self._events: deque = deque(maxlen=limit)
        self._cond = threading.Condition()

    def put(self, event: dict) -> None:
        with self._cond:
            self._events.append(event)
            self._cond.notify()

    def drain(self, timeout: float) -> list[dict]:
        with self._cond:
            if not self._events:
                self._cond.wait(timeout)
            items = list(self._events)
            self._events.clear()
            return items


class _Recorder:
    """Writes accepted samples and annotations; finalized with a footer."""

    def __init__(self, session_dir: Path, model: AoiModel):
        self.session_dir = session_dir
        session_dir.mkdir(parents=True, exist_ok=True)
        (session_dir / "aoi.json").write_text(dump_aoi_model(model))
        self._gaze = open(session_dir / "gaze.csv", "w")
        self._gaze.write(GAZE_CSV_HEADER + "\n")
        self._ann = open(session_dir / "annotations.csv", "w")
        self._ann.write("t_ms,text\n")
        self.rows = 0

    @staticmethod
    def _opt(x: Optional[float]) -> str:
        return "" if x is None else repr(x)

    def write_sample(self, s: GazeSample) -> None:
        # repr round-trips floats exactly, keeping replayed analytics
        # bit-identical to live ones
        self._gaze.write(
            f"{s.t_ms},{s.origin[0]!r},{s.origin[1]!r},{s.origin[2]!r},"
            f"{s.dir[0]!r},{s.dir[1]!r},{s.dir[2]!r},"
            f"{self._opt(s.pupil_mm)},{self._opt(s.eyelid_open)},{s.quality!r}\n")
        self.rows += 1

    def write_annotation(self, t_ms: int, text: str) -> None:
        safe = text.replace('"', "'")
        self._ann.write(f'{t_ms},"{safe}"\n')
        self._ann.flush()

    def finalize(self, received: int, dropped: int) -> None:
        self._gaze.write(f"# received={received} dropped={dropped} recorded={self.rows}\n")
        self._gaze.close()
        self._ann.close()


@dataclass
class HubConfig:
    rolling_window_ms: int = DEFAULT_ROLLING_WINDOW_MS
    decimate_hz: float = DEFAULT_DECIMATE_HZ
    quality_floor: float = 0.2
    queue_limit: int = DEFAULT_QUEUE_LIMIT
    resample_hz: float = pupil.DEFAULT_RESAMPLE_HZ
    welch_seg: int = pupil.DEFAULT_WELCH_SEG
    welch_overlap: float = pupil.DEFAULT_WELCH_OVERLAP


class SessionHub:
    """Session state machine plus the analytics/broadcast pipeline.

    Control commands are serialized per hub; analytics run on the ingest
    path against an immutable window snapshot. `on_start` lets a data
    source (e.g. a replayer) hook session start.
    """

    def __init__(self, model: AoiModel, sessions_dir: str | Path,
                 config: Optional[HubConfig] = None):
        self._lock = threading.RLock()
        self._model = model
        self._sessions_dir = Path(sessions_dir)
        self.config = config or HubConfig()
        self.status = "idle"
        self.session_id: Optional[str] = None
        self.session_dir: Optional[Path] = None
        self.received = 0
        self.dropped = 0
        self.classified_oth = 0
        self._window: deque[ClassifiedSample] = deque()
        self._subscribers: list[Subscriber] = []
        self._recorder: Optional[_Recorder] = None
        self._last_t: Optional[int] = None
        self._first_t: Optional[int] = None
        self._next_frame_t: Optional[int] = None
        self._next_gaze_emit: Optional[float] = None
        self._latencies: deque[float] = deque(maxlen=4096)
        self._session_seq = 0
        self.on_start: Optional[Callable[[], None]] = None
        self.on_stop: Optional[Callable[[], None]] = None

    # -- session control ---------------------------------------------------

    def start(self, session_id: Optional[str] = None) -> dict:
        with self._lock:
            if self.status == "running":
                raise RuntimeError("session already running")
            self._session_seq += 1
            self.session_id = session_id or time.strftime(
                f"s%Y%m%d-%H%M%S-{self._session_seq}")
            self.session_dir = self._sessions_dir / self.session_id
            self._recorder = _Recorder(self.session_dir, self._model)
            self.status = "running"
            self.received = self.dropped = self.classified_oth = 0
            self._window.clear()
            self._last_t = self._first_t = self._next_frame_t = None
            self._next_gaze_emit = None
            self._latencies.clear()
        self._broadcast(self.status_event())
        if self.on_start:
            self.on_start()
        return self.status_payload()

    def stop(self) -> dict:
        with self._lock:
            if self.status != "running":
                raise RuntimeError("no running session")
            self._recorder.finalize(self.received, self.dropped)
            self._recorder = None
            self.status = "stopped"
        self._broadcast(self.status_event())
        if self.on_stop:
            self.on_stop()
        return self.status_payload()

    def annotate(self, text: str) -> dict:
        with self._lock:
            if self.status != "running":
                raise RuntimeError("no running session")
            t_ms = self._last_t if self._last_t is not None else 0
            self._recorder.write_annotation(t_ms, text)
        event = {"type": "annotation", "t_ms": t_ms, "text": text}
        self._broadcast(event)
        return event

    def get_model(self) -> AoiModel:
        with self._lock:
            return self._model

    def set_model(self, model: AoiModel) -> None:
        with self._lock:
            if self.status == "running":
                raise RuntimeError("cannot replace the AOI model while running")
            self._model = model

    # -- ingest ------------------------------------------------------------

    def submit_line(self, line: str, recv_wall: Optional[float] = None) -> None:
        """One wire packet; malformed packets count as dropped."""
        line = line.strip()
        if not line:
            return
        sample = self._parse_packet(line)
        events: list[dict] = []
        with self._lock:
            if self.status != "running":
                return  # packets outside a session are discarded uncounted
            self.received += 1
            if sample is None:
                self.dropped += 1
                return
            events = self._accept_locked(sample)
        for e in events:
            self._broadcast(e)
        if recv_wall is not None:
            self._latencies.append(time.time() - recv_wall)

    def _parse_packet(self, line: str) -> Optional[GazeSample]:
        try:
            doc = json.loads(line)
            t_ms = int(doc["t_ms"])
            origin = (float(doc["ox"]), float(doc["oy"]), float(doc["oz"]))
            d = (float(doc["dx"]), float(doc["dy"]), float(doc["dz"]))
            norm = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            if norm == 0:
                return None
            d = (d[0] / norm, d[1] / norm, d[2] / norm)
            pupil_mm = doc.get("pupil_mm")
            if pupil_mm is not None:
                pupil_mm = float(pupil_mm)
                if not (1.0 <= pupil_mm <= 10.0):
                    pupil_mm = None
            eyelid = doc.get("eyelid")
            if eyelid is not None:
                eyelid = min(1.0, max(0.0, float(eyelid)))
            quality = min(1.0, max(0.0, float(doc["q"])))
            return GazeSample(t_ms=t_ms, origin=origin, dir=d,
                              pupil_mm=pupil_mm, eyelid_open=eyelid,
                              quality=quality)
        except (KeyError, TypeError, ValueError):
            return None

    def submit(self, sample: GazeSample, recv_wall: Optional[float] = None) -> None:
        events: list[dict] = []
        with self._lock:
            if self.status != "running":
                return
            self.received += 1
            events = self._accept_locked(sample)
        for e in events:
            self._broadcast(e)
        if recv_wall is not None:
            self._latencies.append(time.time() - recv_wall)

    def _accept_locked(self, sample: GazeSample) -> list[dict]:
        if self._last_t is not None and sample.t_ms <= self._last_t:
            self.dropped += 1
            return []
        events: list[dict] = []
        cs = classify(sample, self._model, self.config.quality_floor)
        if cs.aoi_id == OTH:
            self.classified_oth += 1
        self._last_t = sample.t_ms
        if self._first_t is None:
            self._first_t = sample.t_ms
            self._next_frame_t = (sample.t_ms // 1000 + 1) * 1000
        self._window.append(cs)
        horizon = sample.t_ms - self.config.rolling_window_ms - 1000
        while self._window and self._window[0].sample.t_ms < horizon:
            self._window.popleft()
        self._recorder.write_sample(sample)

        # decimation rides a fixed grid so 60 Hz input yields the full
        # 25 Hz cadence instead of quantizing up to the next sample
        step = 1000.0 / self.config.decimate_hz
        if self._next_gaze_emit is None or sample.t_ms >= self._next_gaze_emit:
            if self._next_gaze_emit is None or self._next_gaze_emit + step <= sample.t_ms:
                self._next_gaze_emit = sample.t_ms + step
            else:
                self._next_gaze_emit += step
            events.append({
                "type": "gaze", "t_ms": sample.t_ms, "aoi": cs.aoi_id,
                "surface": cs.hit.surface_id if cs.hit else None,
                "uv": [cs.hit.uv[0], cs.hit.uv[1]] if cs.hit else None})
        while self._next_frame_t is not None and sample.t_ms >= self._next_frame_t:
            events.append(self._metrics_frame(self._next_frame_t))
            self._next_frame_t += 1000
        return events

    # -- analytics ---------------------------------------------------------

    def _window_slice(self, t_lo: int, t_hi: int) -> list[ClassifiedSample]:
        return [c for c in self._window if t_lo <= c.sample.t_ms <= t_hi]

    def _metrics_frame(self, frame_t: int) -> dict:
        win_start = max(frame_t - self.config.rolling_window_ms, self._first_t)
        window = self._window_slice(win_start, frame_t)
        pupils = [c.sample.pupil_mm for c in window
                  if c.sample.pupil_mm is not None
                  and frame_t - 1000 < c.sample.t_ms <= frame_t]
        median = float(np.median(pupils)) if pupils else None
        aoi = window[-1].aoi_id if window else OTH
        table = rolling_pdt(window, win_start, frame_t)
        ratio = rolling_lf_hf(window, self.config)
        return {"type": "metrics", "t_ms": frame_t,
                "median_pupil_mm": median, "aoi": aoi, "pdt": table,
                "lf_hf": ratio,
                "counters": {"received": self.received, "dropped": self.dropped,
                             "classified_oth": self.classified_oth}}

    # -- fan-out -----------------------------------------------------------

    def subscribe(self) -> Subscriber:
        sub = Subscriber(self.config.queue_limit)
        sub.put(self.status_event())
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def _broadcast(self, event: dict) -> None:
        with self._lock:
            subs = list(self._subscribers)
        for sub in subs:
            sub.put(event)

    def status_event(self) -> dict:
        return {"type": "status", **self.status_payload()}

    def status_payload(self) -> dict:
        with self._lock:
            lat = sorted(self._latencies)
            p95 = lat[int(0.95 * (len(lat) - 1))] * 1000.0 if lat else None
            return {"status": self.status, "session_id": self.session_id,
                    "session_dir": str(self.session_dir) if self.session_dir else None,
                    "received": self.received, "dropped": self.dropped,
                    "classified_oth": self.classified_oth,
                    "latency_p95_ms": p95}


def rolling_pdt(window: list[ClassifiedSample], win_start: int,
                win_end: int) -> dict[str, float]:
    """PDT over a rolling window; identical to the offline scan pipeline."""
    if not window or win_end <= win_start:
        return {OTH: 100.0}
    visits = scan.segment_dwells(window)
    return scan.pdt(visits, Segment(name="rolling", t_start_ms=win_start,
                                    t_end_ms=win_end))


def rolling_lf_hf(window: list[ClassifiedSample],
                  config: HubConfig) -> Optional[float]:
    """LF/HF over the rolling window, absent below 60 s of pupil data."""
    series = ingest.pupil_series(c.sample for c in window)
    if len(series) < 4 or series[-1][0] - series[0][0] < MIN_LFHF_WINDOW_MS:
        return None
    try:
        fenced, _ = ingest.outer_fence_filter(series)
        t = [p[0] for p in fenced]
        v = pupil.normalize_pupil([p[1] for p in fenced])
        _, u = ingest.resample_uniform(list(zip(t, v)), config.resample_hz)
        spectrum = pupil.welch_psd(u, config.resample_hz,
                                   seg_len_n=min(config.welch_seg, u.size),
                                   overlap_frac=config.welch_overlap)
        return pupil.lf_hf_ratio(spectrum).ratio
    except ValueError:
        return None


class IngestServer:
    """TCP listener; accepts one producer at a time, refuses extras."""

    def __init__(self, hub: SessionHub, host: str, port: int):
        self.hub = hub
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(4)
        self.port = self._sock.getsockname()[1]
        self._producer_active = threading.Lock()
        self._closing = False
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            if not self._producer_active.acquire(blocking=False):
                try:
                    conn.sendall(b'{"error":"producer already connected"}\n')
                finally:
                    conn.close()
                continue
            threading.Thread(target=self._reader, args=(conn,), daemon=True).start()

    def _reader(self, conn: socket.socket) -> None:
        try:
            with conn, conn.makefile("r", encoding="utf-8", errors="replace") as stream:
                for line in stream:
                    self.hub.submit_line(line, recv_wall=time.time())
        except OSError:
            pass
        finally:
            self._producer_active.release()

    def close(self) -> None:
        self._closing = True
        try:
            self._sock.close()
        except OSError:
            pass


class Replayer:
    """Re-emits a recorded gaze log through a hub with scaled pacing."""

    def __init__(self, hub: SessionHub, session_dir: str | Path,
                 speed: float = 1.0):
        if speed <= 0:
            raise ValueError("speed must be positive")
        gaze_path = Path(session_dir) / "gaze.csv"
        with open(gaze_path) as fh:
            self.samples = ingest.parse_gaze_log(fh)
        if not self.samples:
            raise ValueError(f"{gaze_path} contains no samples")
        self.hub = hub
        self.speed = speed
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def abort(self) -> None:
        self._stop.set()

    def join(self, timeout: Optional[float] = None) -> None:
        self._thread.join(timeout)

    def _run(self) -> None:
        t0_wall = time.monotonic()
        t0 = self.samples[0].t_ms
        for s in self.samples:
            if self._stop.is_set():
                return
            target = t0_wall + (s.t_ms - t0) / (1000.0 * self.speed)
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            self.hub.submit(s, recv_wall=time.time())
        if self.hub.status == "running":
            self.hub.stop()
