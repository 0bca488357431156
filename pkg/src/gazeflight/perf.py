"""Flight-performance and control-strategy metrics.

RMSE scores deviation from segment targets (heading errors wrapped to
+-180 deg). The inceptor metrics are reconstructions of the cited
quantitative-assessment measures: inceptor workload as (RMS deflection
rate, motion duty cycle) and power frequency as the power-weighted mean
frequency of a sliding-window periodogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .model import FlightSample, Segment

DEFAULT_MOTION_THRESHOLD = 0.01   # deflection/s
DEFAULT_PF_WINDOW_S = 20.0
DEFAULT_PF_HOP_S = 5.0
HEADING_REFERENCE_WINDOW_MS = 5000

INCEPTOR_AXES = ("pitch", "roll", "rudder", "throttle")


class PiwResult(NamedTuple):
    aggressiveness: float       # RMS deflection rate, 1/s
    duty_cycle: float           # fraction of samples in motion


@dataclass
class SegmentPerf:
    segment: str
    rmse: dict[str, float] = field(default_factory=dict)
    piw: dict[str, PiwResult] = field(default_factory=dict)
    power_freq: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


@dataclass
class PerfReport:
    segments: list[SegmentPerf] = field(default_factory=list)


def wrap_angle_deg(x):
    """Wrap degrees into [-180, 180)."""
    return (np.asarray(x, dtype=float) + 180.0) % 360.0 - 180.0


def rmse(values: Sequence[float], target: float, kind: str = "linear") -> float:
    """Root-mean-square error against a constant target."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("rmse: empty segment slice")
    if not math.isfinite(target):
        raise ValueError("rmse: target must be finite")
    err = wrap_angle_deg(x - target) if kind == "angular" else x - target
    return float(np.sqrt(np.mean(err ** 2)))


def circular_mean_deg(values: Sequence[float]) -> float:
    rad = np.radians(np.asarray(values, dtype=float))
    mean = float(np.degrees(np.arctan2(np.sin(rad).mean(), np.cos(rad).mean())) % 360.0)
    return 0.0 if mean == 360.0 else mean


def rates(values: Sequence[float], fs_hz: float) -> np.ndarray:
    """Deflection rate by central differences; one-sided at the ends."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ValueError("rates: need at least 3 samples")
    r = np.empty_like(x)
    r[1:-1] = (x[2:] - x[:-2]) * (fs_hz / 2.0)
    r[0] = (x[1] - x[0]) * fs_hz
    r[-1] = (x[-1] - x[-2]) * fs_hz
    return r


def piw(values: Sequence[float], fs_hz: float,
        motion_threshold: float = DEFAULT_MOTION_THRESHOLD) -> PiwResult:
    """Inceptor workload: RMS rate plus the moving-time fraction.

    Aggressiveness uses central differences (no half-sample phase bias);
    the duty cycle uses per-interval differences, which still see motion
    that alternates at the Nyquist rate where central differences null out.
    """
    if fs_hz <= 0:
        raise ValueError("fs_hz must be positive")
    r = rates(values, fs_hz)
    x = np.asarray(values, dtype=float)
    interval_rate = np.abs(np.diff(x)) * fs_hz
    return PiwResult(
        aggressiveness=float(np.sqrt(np.mean(r ** 2))),
        duty_cycle=float(np.mean(interval_rate > motion_threshold)))


def power_frequency(values: Sequence[float], fs_hz: float,
                    window_s: float = DEFAULT_PF_WINDOW_S,
                    hop_s: float = DEFAULT_PF_HOP_S
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Power-weighted mean frequency per sliding window.

    Each window is mean-removed; windows with zero residual power emit
    nothing. Returns (window-centre times in s, centroid frequencies in Hz).
    """
    x = np.asarray(values, dtype=float)
    if window_s < 10.0 / fs_hz:
        raise ValueError("window_s must cover at least 10 samples")
    window_n = int(round(window_s * fs_hz))
    if x.size < window_n:
        raise ValueError("series shorter than one window")
    hop_n = max(1, int(round(hop_s * fs_hz)))
    freqs = np.fft.rfftfreq(window_n, d=1.0 / fs_hz)
    times, cents = [], []
    for start in range(0, x.size - window_n + 1, hop_n):
        seg = x[start:start + window_n]
        seg = seg - seg.mean()
        p = np.abs(np.fft.rfft(seg)) ** 2
        total = float(p[1:].sum())
        if total <= 0.0:
            continue
        times.append((start + (window_n - 1) / 2.0) / fs_hz)
        cents.append(float((freqs[1:] * p[1:]).sum() / total))
    return np.array(times), np.array(cents)


def _slice_segment(flight: Sequence[FlightSample], segment: Segment) -> list[FlightSample]:
    return [s for s in flight if segment.t_start_ms <= s.t_ms <= segment.t_end_ms]


def _estimate_fs(samples: Sequence[FlightSample]) -> float:
    dts = np.diff([s.t_ms for s in samples])
    return 1000.0 / float(np.median(dts))


def perf_report(flight: Sequence[FlightSample], segments: Sequence[Segment],
                motion_threshold: float = DEFAULT_MOTION_THRESHOLD,
                pf_window_s: float = DEFAULT_PF_WINDOW_S,
                pf_hop_s: float = DEFAULT_PF_HOP_S) -> PerfReport:
    """Per-segment RMSE (where targets exist) and inceptor metrics.

    A "constant heading" segment without an explicit heading target uses
    the circular mean of its first five seconds as reference.
    """
    report = PerfReport()
    for seg in segments:
        sp = SegmentPerf(segment=seg.name)
        rows = _slice_segment(flight, seg)
        if len(rows) >= 3:
            fs = _estimate_fs(rows)
            targets = seg.targets or {}
            if "altitude_ft" in targets:
                sp.rmse["altitude_ft"] = rmse([s.altitude_ft for s in rows],
                                              targets["altitude_ft"])
            if "airspeed_kt" in targets:
                sp.rmse["airspeed_kt"] = rmse([s.airspeed_kt for s in rows],
                                              targets["airspeed_kt"])
            if targets:
                headings = [s.heading_deg for s in rows]
                href = targets.get("heading_deg")
                if href is None:
                    first = [s.heading_deg for s in rows
                             if s.t_ms <= seg.t_start_ms + HEADING_REFERENCE_WINDOW_MS]
                    href = circular_mean_deg(first or headings)
                sp.rmse["heading_deg"] = rmse(headings, href, kind="angular")
            for axis in INCEPTOR_AXES:
                series = [s.inceptors.get(axis, 0.0) for s in rows]
                sp.piw[axis] = piw(series, fs, motion_threshold)
                try:
                    sp.power_freq[axis] = power_frequency(
                        series, fs, pf_window_s, pf_hop_s)
                except ValueError:
                    sp.power_freq[axis] = (np.array([]), np.array([]))
        report.segments.append(sp)
    return report
