"""Pupil preprocessing and spectral workload/fatigue metrics.

Two pipelines share these blocks:

* workload: blink-filter -> outer fence -> normalize -> resample ->
  Welch PSD -> LF/HF band means (LF 0.05-0.15 Hz, HF 0.15-0.45 Hz);
* fatigue: blink-filter -> outer fence -> normalize -> sliding average ->
  resample -> 0.03 Hz Butterworth high-pass -> Welch PSD -> mean density
  over 0.03-0.4 Hz (the fluctuation index), plus the eye-closure fraction.

The Welch estimator and the Butterworth design (bilinear transform with
frequency pre-warping, zero-phase application) are implemented here
directly so their numerics are fully pinned down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import ingest
from .model import GazeSample

LF_BAND = (0.05, 0.15)
HF_BAND = (0.15, 0.45)
FATIGUE_BAND = (0.03, 0.4)

#: Minimum spectral resolution for LF/HF ratios (>= 4 bins in the LF band).
MAX_LFHF_RESOLUTION_HZ = 0.025

DEFAULT_RESAMPLE_HZ = 2.0
DEFAULT_WELCH_SEG = 256
DEFAULT_WELCH_OVERLAP = 0.5
DEFAULT_HP_CUTOFF_HZ = 0.03
DEFAULT_HP_ORDER = 4
DEFAULT_SMOOTH_N = 5
DEFAULT_CLOSED_THRESHOLD = 0.7


@dataclass(frozen=True)
class Spectrum:
    freqs_hz: np.ndarray
    psd: np.ndarray             # amplitude^2 / Hz, one-sided
    resolution_hz: float
    seg_len_n: int
    overlap_frac: float
    taper: str


@dataclass(frozen=True)
class BandPowerResult:
    """Mean PSD over the LF and HF bands; ratio rises with mental workload."""

    lf_mean: float
    hf_mean: float

    def __post_init__(self):
        if self.lf_mean < 0 or self.hf_mean < 0:
            raise ValueError("band means must be non-negative")

    @property
    def ratio(self) -> float:
        if self.hf_mean <= 0:
            raise ValueError("LF/HF ratio undefined: hf_mean is zero")
        return self.lf_mean / self.hf_mean


@dataclass(frozen=True)
class FatigueResult:
    spectrum: Spectrum
    fluctuation_index: float    # mean density over FATIGUE_BAND


def normalize_pupil(values: Sequence[float]) -> np.ndarray:
    """Divide by the series maximum; the maximum maps to exactly 1.0."""
    x = np.asarray(values, dtype=float)
    if x.size == 0 or np.isnan(x).all():
        raise ValueError("normalize_pupil: empty series")
    peak = np.nanmax(x)
    if peak <= 0:
        raise ValueError("normalize_pupil: non-positive maximum")
    return x / peak


def sliding_average(values: Sequence[float], window_n: int) -> np.ndarray:
    """Centred moving mean; edges use the shrunken available window."""
    if window_n < 1 or window_n % 2 == 0:
        raise ValueError("window_n must be odd and >= 1")
    x = np.asarray(values, dtype=float)
    n = x.size
    half = window_n // 2
    css = np.concatenate(([0.0], np.cumsum(x)))
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half, n - 1)
    return (css[hi + 1] - css[lo]) / (hi - lo + 1)


def _taper_window(name: str, n: int) -> np.ndarray:
    if name == "hann":
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))
    if name in ("rect", "boxcar"):
        return np.ones(n)
    raise ValueError(f"unknown taper {name!r}")


def welch_psd(values: Sequence[float], fs_hz: float,
              seg_len_n: int = DEFAULT_WELCH_SEG,
              overlap_frac: float = DEFAULT_WELCH_OVERLAP,
              taper: str = "hann") -> Spectrum:
    """Averaged modified periodograms, density-scaled (amplitude^2/Hz).

    Per-segment means are removed before tapering, so a constant series
    has (near-)zero density everywhere. The one-sided density integrates
    to approximately the signal variance.
    """
    if fs_hz <= 0:
        raise ValueError("fs_hz must be positive")
    if not 0 <= overlap_frac < 1:
        raise ValueError("overlap_frac must be in [0, 1)")
    x = np.asarray(values, dtype=float)
    if x.size < seg_len_n:
        raise ValueError(f"series ({x.size}) shorter than one segment ({seg_len_n})")
    if np.isnan(x).any():
        raise ValueError("series contains gaps; interpolate or skip upstream")
    w = _taper_window(taper, seg_len_n)
    norm = fs_hz * float(np.sum(w * w))
    hop = max(1, int(round(seg_len_n * (1.0 - overlap_frac))))
    acc = None
    count = 0
    for start in range(0, x.size - seg_len_n + 1, hop):
        seg = x[start:start + seg_len_n]
        seg = (seg - seg.mean()) * w
        spec = np.fft.rfft(seg)
        p = (spec.real ** 2 + spec.imag ** 2) / norm
        # one-sided: double everything except DC (and Nyquist for even n)
        if seg_len_n % 2 == 0:
            p[1:-1] *= 2.0
        else:
            p[1:] *= 2.0
        acc = p if acc is None else acc + p
        count += 1
    freqs = np.fft.rfftfreq(seg_len_n, d=1.0 / fs_hz)
    return Spectrum(freqs_hz=freqs, psd=acc / count,
                    resolution_hz=fs_hz / seg_len_n,
                    seg_len_n=seg_len_n, overlap_frac=overlap_frac, taper=taper)


def band_mean(spectrum: Spectrum, lo_hz: float, hi_hz: float) -> float:
    """Arithmetic mean of the density over bins with lo <= f <= hi."""
    if lo_hz >= hi_hz:
        raise ValueError("band_mean: lo_hz must be < hi_hz")
    mask = (spectrum.freqs_hz >= lo_hz) & (spectrum.freqs_hz <= hi_hz)
    if not mask.any():
        raise ValueError(f"band [{lo_hz}, {hi_hz}] Hz contains no spectrum bins")
    return float(spectrum.psd[mask].mean())


def lf_hf_ratio(spectrum: Spectrum) -> BandPowerResult:
    """Band powers with the workload bands fixed at 0.05-0.15 / 0.15-0.45 Hz."""
    if spectrum.resolution_hz > MAX_LFHF_RESOLUTION_HZ + 1e-12:
        raise ValueError(
            f"resolution {spectrum.resolution_hz:.4f} Hz too coarse for the LF band "
            f"(need <= {MAX_LFHF_RESOLUTION_HZ})")
    result = BandPowerResult(lf_mean=band_mean(spectrum, *LF_BAND),
                             hf_mean=band_mean(spectrum, *HF_BAND))
    if result.hf_mean <= 0:
        raise ValueError("LF/HF ratio undefined: hf_mean is zero")
    return result


def butter_highpass_coeffs(fs_hz: float, cutoff_hz: float,
                           order: int = DEFAULT_HP_ORDER
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Digital Butterworth high-pass (b, a) via pre-warped bilinear transform."""
    if not 0 < cutoff_hz < fs_hz / 2:
        raise ValueError("cutoff must lie in (0, fs/2)")
    if order not in (2, 4, 6, 8):
        raise ValueError("order must be one of 2, 4, 6, 8")
    warped = 2.0 * fs_hz * math.tan(math.pi * cutoff_hz / fs_hz)
    # low-pass prototype poles on the unit circle, left half-plane
    k = np.arange(1, order + 1)
    proto = np.exp(1j * math.pi * (2 * k + order - 1) / (2 * order))
    hp_poles = warped / proto            # LP -> HP: s -> warped/s
    zd = (2.0 * fs_hz + hp_poles) / (2.0 * fs_hz - hp_poles)
    a = np.real(np.poly(zd))
    b = np.real(np.poly(np.ones(order)))  # `order` zeros at z = 1
    # unity gain at Nyquist (z = -1), where an analog HP is exactly 1
    zm1 = -1.0
    gain = np.polyval(a, zm1) / np.polyval(b, zm1)
    return b * gain, a


def filter_gain(b: np.ndarray, a: np.ndarray, f_hz: float, fs_hz: float) -> float:
    """|H(e^{j 2 pi f / fs})| of a digital filter."""
    z = np.exp(2j * math.pi * f_hz / fs_hz)
    return abs(np.polyval(b, z) / np.polyval(a, z))


def _lfilter(b: np.ndarray, a: np.ndarray, x: np.ndarray,
             zi: Optional[np.ndarray] = None) -> np.ndarray:
    """Direct-form II transposed IIR filter."""
    n = len(a) - 1
    z = np.zeros(n) if zi is None else zi.copy()
    y = np.empty_like(x)
    for i, xi in enumerate(x):
        yi = b[0] * xi + z[0]
        for k in range(n - 1):
            z[k] = b[k + 1] * xi + z[k + 1] - a[k + 1] * yi
        z[n - 1] = b[n] * xi - a[n] * yi
        y[i] = yi
    return y


def _lfilter_zi(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Steady-state DF2T filter state for a unit-step input."""
    n = len(a) - 1
    companion = np.zeros((n, n))
    companion[0, :] = -a[1:] / a[0]
    companion[1:, :-1] = np.eye(n - 1)
    rhs = b[1:] - a[1:] * b[0]
    return np.linalg.solve(np.eye(n) - companion.T, rhs)


def highpass_butterworth(values: Sequence[float], fs_hz: float,
                         cutoff_hz: float = DEFAULT_HP_CUTOFF_HZ,
                         order: int = DEFAULT_HP_ORDER) -> np.ndarray:
    """Zero-phase high-pass: forward pass, then the reversed pass.

    The series is extended by odd reflection of 3 * order samples at both
    ends and each pass starts from the step steady state, so a constant
    input maps to (numerically) zero output.
    """
    b, a = butter_highpass_coeffs(fs_hz, cutoff_hz, order)
    x = np.asarray(values, dtype=float)
    padlen = 3 * order
    if x.size <= padlen:
        raise ValueError(f"series ({x.size}) shorter than reflective padding ({padlen})")
    head = 2.0 * x[0] - x[padlen:0:-1]
    tail = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
    ext = np.concatenate([head, x, tail])
    zi = _lfilter_zi(b, a)
    y = _lfilter(b, a, ext, zi=zi * ext[0])
    y = y[::-1]
    y = _lfilter(b, a, y, zi=zi * y[0])
    y = y[::-1]
    return y[padlen:-padlen]


def eye_closure_fraction(t_ms: Sequence[float], eyelid_open: Sequence[float],
                         closed_threshold: float = DEFAULT_CLOSED_THRESHOLD) -> float:
    """Time-weighted fraction of the span with the eye at least this closed.

    A sample counts as closed when eyelid_open <= 1 - closed_threshold
    (boundary inclusive). Each sample covers the interval to its successor;
    the last sample inherits the preceding interval.
    """
    t = np.asarray(t_ms, dtype=float)
    lid = np.asarray(eyelid_open, dtype=float)
    if t.size == 0:
        raise ValueError("eye_closure_fraction: empty series")
    closed = lid <= (1.0 - closed_threshold)
    if t.size == 1:
        return float(closed[0])
    dt = np.diff(t)
    weights = np.concatenate([dt, dt[-1:]])
    return float(np.sum(weights[closed]) / np.sum(weights))


def workload_spectrum(samples: Iterable[GazeSample],
                      resample_hz: float = DEFAULT_RESAMPLE_HZ,
                      seg_len_n: int = DEFAULT_WELCH_SEG,
                      overlap_frac: float = DEFAULT_WELCH_OVERLAP) -> Spectrum:
    """Workload pipeline: blink-filter, fence, normalize, resample, Welch."""
    series = ingest.pupil_series(samples)
    if len(series) < 4:
        raise ValueError("not enough valid pupil samples")
    fenced, _ = ingest.outer_fence_filter(series)
    t = [p[0] for p in fenced]
    v = normalize_pupil([p[1] for p in fenced])
    _, u = ingest.resample_uniform(list(zip(t, v)), resample_hz)
    return welch_psd(u, resample_hz, seg_len_n=min(seg_len_n, u.size),
                     overlap_frac=overlap_frac)


def fatigue_spectrum(samples: Iterable[GazeSample],
                     resample_hz: float = DEFAULT_RESAMPLE_HZ,
                     smooth_n: int = DEFAULT_SMOOTH_N,
                     cutoff_hz: float = DEFAULT_HP_CUTOFF_HZ,
                     order: int = DEFAULT_HP_ORDER,
                     seg_len_n: int = DEFAULT_WELCH_SEG,
                     overlap_frac: float = DEFAULT_WELCH_OVERLAP) -> FatigueResult:
    """Fatigue pipeline; needs >= 300 s of pupil data for resolution."""
    series = ingest.pupil_series(samples)
    if len(series) < 4:
        raise ValueError("not enough valid pupil samples")
    if series[-1][0] - series[0][0] < 300_000:
        raise ValueError("fatigue_spectrum needs at least 300 s of pupil data")
    fenced, _ = ingest.outer_fence_filter(series)
    t = [p[0] for p in fenced]
    v = normalize_pupil([p[1] for p in fenced])
    v = sliding_average(v, smooth_n)
    _, u = ingest.resample_uniform(list(zip(t, v)), resample_hz)
    hp = highpass_butterworth(u, resample_hz, cutoff_hz, order)
    spectrum = welch_psd(hp, resample_hz, seg_len_n=min(seg_len_n, hp.size),
                         overlap_frac=overlap_frac)
    return FatigueResult(spectrum=spectrum,
                         fluctuation_index=band_mean(spectrum, *FATIGUE_BAND))


def spectrum_csv(spectrum: Spectrum) -> str:
    """Two-column export (freq_hz, psd)."""
    lines = ["freq_hz,psd"]
    lines += [f"{f:.9g},{p:.9g}" for f, p in zip(spectrum.freqs_hz, spectrum.psd)]
    return "\n".join(lines) + "\n"
