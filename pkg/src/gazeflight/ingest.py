"""Recorded-log parsing, clock alignment, outlier fencing, and resampling.

CSV schemas (exact headers):
  gaze:   t_ms,ox,oy,oz,dx,dy,dz,pupil_mm,eyelid,quality   (empty = absent)
  flight: t_ms,altitude_ft,airspeed_kt,heading_deg,bank_deg,pitch_deg,
          pitch_in,roll_in,rudder_in,throttle_in

Lines starting with '#' are ignored (recorder footers). All functions here
are pure and reentrant.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .model import (PUPIL_MM_MAX, PUPIL_MM_MIN, FlightSample, GazeSample,
                    LogParseError, Segment)

GAZE_HEADER = ["t_ms", "ox", "oy", "oz", "dx", "dy", "dz",
               "pupil_mm", "eyelid", "quality"]
FLIGHT_HEADER = ["t_ms", "altitude_ft", "airspeed_kt", "heading_deg",
                 "bank_deg", "pitch_deg",
                 "pitch_in", "roll_in", "rudder_in", "throttle_in"]

#: Samples with eyelid_open below this (or absent pupil) count as blinks
#: and are excluded from pupil series before fencing.
BLINK_EYELID_FLOOR = 0.1
DEFAULT_QUALITY_FLOOR = 0.2


@dataclass(frozen=True)
class AlignedSession:
    """Gaze and flight streams on one clock (t_ms = 0 at session start)."""

    gaze: list[GazeSample]
    flight: list[FlightSample]
    t0_policy: dict[str, int]
    segments: list[Segment] = field(default_factory=list)


def _lines(stream: Union[str, TextIO]) -> Iterable[tuple[int, list[str]]]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    for line_no, row in enumerate(reader, start=1):
        if not row or (row[0].lstrip().startswith("#")):
            continue
        yield line_no, row


def _float(row: list[str], idx: int, line_no: int, col: str) -> float:
    try:
        return float(row[idx])
    except (ValueError, IndexError):
        raise LogParseError(f"bad value for {col}: {row[idx] if idx < len(row) else '<missing>'!r}",
                            line=line_no) from None


def _opt_float(row: list[str], idx: int, line_no: int, col: str) -> Optional[float]:
    if idx >= len(row) or row[idx].strip() == "":
        return None
    return _float(row, idx, line_no, col)


def _check_header(row: list[str], expected: list[str], what: str) -> None:
    got = [c.strip() for c in row]
    if got != expected:
        missing = [c for c in expected if c not in got]
        if missing:
            raise LogParseError(f"{what} header missing column(s) {missing}", line=1)
        raise LogParseError(f"{what} header {got} does not match schema {expected}", line=1)


def parse_gaze_log(stream: Union[str, TextIO]) -> list[GazeSample]:
    """Parse a gaze CSV; re-normalizes directions and enforces monotone t_ms.

    Low-quality rows are retained (classification treats them as OTH);
    pupil values outside the plausibility envelope are stored as absent.
    """
    samples: list[GazeSample] = []
    header_seen = False
    last_t: Optional[int] = None
    for line_no, row in _lines(stream):
        if not header_seen:
            _check_header(row, GAZE_HEADER, "gaze")
            header_seen = True
            continue
        if len(row) != len(GAZE_HEADER):
            raise LogParseError(f"expected {len(GAZE_HEADER)} fields, got {len(row)}",
                                line=line_no)
        t = int(_float(row, 0, line_no, "t_ms"))
        if t < 0:
            raise LogParseError(f"negative t_ms {t}", line=line_no)
        if last_t is not None and t <= last_t:
            raise LogParseError(
                f"t_ms {t} not strictly increasing (previous {last_t})", line=line_no)
        last_t = t
        origin = (_float(row, 1, line_no, "ox"),
                  _float(row, 2, line_no, "oy"),
                  _float(row, 3, line_no, "oz"))
        d = (_float(row, 4, line_no, "dx"),
             _float(row, 5, line_no, "dy"),
             _float(row, 6, line_no, "dz"))
        norm = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        if norm == 0:
            raise LogParseError("zero direction vector", line=line_no)
        d = (d[0] / norm, d[1] / norm, d[2] / norm)
        pupil = _opt_float(row, 7, line_no, "pupil_mm")
        if pupil is not None and not (PUPIL_MM_MIN <= pupil <= PUPIL_MM_MAX):
            pupil = None
        eyelid = _opt_float(row, 8, line_no, "eyelid")
        if eyelid is not None:
            eyelid = min(1.0, max(0.0, eyelid))
        quality = min(1.0, max(0.0, _float(row, 9, line_no, "quality")))
        samples.append(GazeSample(t_ms=t, origin=origin, dir=d,
                                  pupil_mm=pupil, eyelid_open=eyelid,
                                  quality=quality))
    if not header_seen:
        raise LogParseError("empty gaze log")
    return samples


def parse_flight_log(stream: Union[str, TextIO]) -> list[FlightSample]:
    """Parse a flight CSV; wraps heading into [0, 360)."""
    samples: list[FlightSample] = []
    header_seen = False
    last_t: Optional[int] = None
    for line_no, row in _lines(stream):
        if not header_seen:
            _check_header(row, FLIGHT_HEADER, "flight")
            header_seen = True
            continue
        if len(row) != len(FLIGHT_HEADER):
            raise LogParseError(f"expected {len(FLIGHT_HEADER)} fields, got {len(row)}",
                                line=line_no)
        t = int(_float(row, 0, line_no, "t_ms"))
        if last_t is not None and t <= last_t:
            raise LogParseError(
                f"t_ms {t} not strictly increasing (previous {last_t})", line=line_no)
        last_t = t
        samples.append(FlightSample(
            t_ms=t,
            altitude_ft=_float(row, 1, line_no, "altitude_ft"),
            airspeed_kt=_float(row, 2, line_no, "airspeed_kt"),
            heading_deg=_float(row, 3, line_no, "heading_deg") % 360.0,
            bank_deg=_float(row, 4, line_no, "bank_deg"),
            pitch_deg=_float(row, 5, line_no, "pitch_deg"),
            inceptors={
                "pitch": _float(row, 6, line_no, "pitch_in"),
                "roll": _float(row, 7, line_no, "roll_in"),
                "rudder": _float(row, 8, line_no, "rudder_in"),
                "throttle": _float(row, 9, line_no, "throttle_in"),
            }))
    if not header_seen:
        raise LogParseError("empty flight log")
    return samples


def align_streams(gaze: Sequence[GazeSample], flight: Sequence[FlightSample],
                  gaze_t0_offset_ms: int = 0,
                  segments: Optional[list[Segment]] = None) -> AlignedSession:
    """Put both streams on one clock and trim to their common window.

    The offset is added to gaze timestamps; samples outside the overlap of
    the two streams are dropped, and both are shifted so the common start
    is t_ms = 0. The applied offsets are recorded in t0_policy.
    """
    if not gaze or not flight:
        raise ValueError("align_streams: both streams must be non-empty")
    shifted = [GazeSample(t_ms=s.t_ms + gaze_t0_offset_ms, origin=s.origin,
                          dir=s.dir, pupil_mm=s.pupil_mm,
                          eyelid_open=s.eyelid_open, quality=s.quality)
               for s in gaze]
    start = max(shifted[0].t_ms, flight[0].t_ms)
    end = min(shifted[-1].t_ms, flight[-1].t_ms)
    if start > end:
        raise ValueError("align_streams: streams have zero temporal overlap")
    g = [GazeSample(t_ms=s.t_ms - start, origin=s.origin, dir=s.dir,
                    pupil_mm=s.pupil_mm, eyelid_open=s.eyelid_open,
                    quality=s.quality)
         for s in shifted if start <= s.t_ms <= end]
    f = [FlightSample(t_ms=s.t_ms - start, altitude_ft=s.altitude_ft,
                      airspeed_kt=s.airspeed_kt, heading_deg=s.heading_deg,
                      bank_deg=s.bank_deg, pitch_deg=s.pitch_deg,
                      inceptors=s.inceptors)
         for s in flight if start <= s.t_ms <= end]
    return AlignedSession(
        gaze=g, flight=f,
        t0_policy={"gaze_offset_ms": gaze_t0_offset_ms, "common_start_ms": start},
        segments=segments or [])


def outer_fence_filter(series: Sequence[tuple[float, float]]
                       ) -> tuple[list[tuple[float, float]], list[int]]:
    """Remove values beyond the outer fences [Q1 - 3*IQR, Q3 + 3*IQR].

    Quartiles use linear interpolation on the sorted sample at positions
    p*(n-1). Returns (kept series in original order, removed indices).
    """
    if len(series) < 4:
        raise ValueError("outer_fence_filter needs at least 4 values")
    values = np.array([v for _, v in series], dtype=float)
    q1, q3 = np.percentile(values, [25.0, 75.0])  # linear interpolation
    iqr = q3 - q1
    lo, hi = q1 - 3.0 * iqr, q3 + 3.0 * iqr
    kept, removed = [], []
    for i, (t, v) in enumerate(series):
        if lo <= v <= hi:
            kept.append((t, v))
        else:
            removed.append(i)
    return kept, removed


def resample_uniform(series: Sequence[tuple[float, float]], rate_hz: float,
                     max_gap_ms: float = float("inf")
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Linear interpolation onto a uniform grid starting at the first sample.

    Grid points strictly inside an input gap longer than max_gap_ms are NaN.
    Returns (grid times ms, values).
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    if not len(series):
        raise ValueError("resample_uniform: empty input")
    t = np.array([p[0] for p in series], dtype=float)
    v = np.array([p[1] for p in series], dtype=float)
    step = 1000.0 / rate_hz
    n_out = int(math.floor((t[-1] - t[0]) / step + 1e-9)) + 1
    grid = t[0] + step * np.arange(n_out)
    out = np.interp(grid, t, v)
    if math.isfinite(max_gap_ms):
        gap_starts = np.flatnonzero(np.diff(t) > max_gap_ms)
        for gi in gap_starts:
            inside = (grid > t[gi]) & (grid < t[gi + 1])
            out[inside] = np.nan
    return grid, out


def pupil_series(samples: Iterable[GazeSample]) -> list[tuple[float, float]]:
    """(t_ms, pupil_mm) pairs with blink samples excluded.

    A blink is eyelid_open < 0.1 or an absent pupil reading; this is the
    preprocessing default applied before outer fencing.
    """
    out = []
    for s in samples:
        if s.pupil_mm is None:
            continue
        if s.eyelid_open is not None and s.eyelid_open < BLINK_EYELID_FLOOR:
            continue
        out.append((float(s.t_ms), s.pupil_mm))
    return out
