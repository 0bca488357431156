"""Scan-behaviour metrics: fixations, dwell visits, PDT, fixation maps.

Fixation detection is a dispersion-threshold (I-DT) pass over gaze
direction: a window is stable when every direction in it lies within
``dispersion_deg`` of the window's mean direction. Dwell visits partition
the session timeline, OTH included, so PDT tables always sum to 100.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import ClassifiedSample
from .model import OTH, AoiModel, DwellVisit, Fixation, Segment

DEFAULT_DISPERSION_DEG = 1.0
DEFAULT_MIN_FIXATION_MS = 100
DEFAULT_BIN_PX = 20


@dataclass
class FixationMapGrid:
    """Per-surface grid of accumulated fixation milliseconds."""

    surface_id: str
    bin_px: int
    grid: np.ndarray  # shape (ny, nx); row = v bin, col = u bin


def _max_angle_to_mean_deg(dirs: np.ndarray) -> float:
    """Largest angle (deg) between any row of dirs and their mean direction."""
    mean = dirs.sum(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        return 180.0
    mean /= norm
    dots = np.clip(dirs @ mean, -1.0, 1.0)
    return math.degrees(math.acos(float(dots.min())))


def detect_fixations(classified: Sequence[ClassifiedSample],
                     dispersion_deg: float = DEFAULT_DISPERSION_DEG,
                     min_dur_ms: float = DEFAULT_MIN_FIXATION_MS) -> list[Fixation]:
    """Greedy I-DT over gaze directions.

    Starting at each candidate index, the smallest window spanning
    min_dur_ms is tested; if stable it is extended sample by sample until
    the dispersion criterion breaks, then emitted. The fixation's AOI is
    the modal label of its samples (lexicographic tie-break) and its
    centroid is the mean hit uv on the modal surface.
    """
    if dispersion_deg <= 0 or min_dur_ms <= 0:
        raise ValueError("dispersion_deg and min_dur_ms must be positive")
    n = len(classified)
    if n == 0:
        return []
    t = np.array([c.sample.t_ms for c in classified], dtype=np.int64)
    dirs = np.array([c.sample.dir for c in classified], dtype=float)

    fixations: list[Fixation] = []
    i = 0
    while i < n:
        j = int(np.searchsorted(t, t[i] + min_dur_ms, side="left"))
        if j >= n:
            break
        if _max_angle_to_mean_deg(dirs[i:j + 1]) <= dispersion_deg:
            while j + 1 < n and _max_angle_to_mean_deg(dirs[i:j + 2]) <= dispersion_deg:
                j += 1
            fixations.append(_make_fixation(classified[i:j + 1]))
            i = j + 1
        else:
            i += 1
    return fixations


def _make_fixation(window: Sequence[ClassifiedSample]) -> Fixation:
    labels = Counter(c.aoi_id for c in window)
    top = max(labels.values())
    aoi_id = min(lbl for lbl, cnt in labels.items() if cnt == top)
    if aoi_id == OTH:
        return Fixation(t_start_ms=window[0].sample.t_ms,
                        t_end_ms=window[-1].sample.t_ms, aoi_id=OTH)
    surface_id = aoi_id.split(".", 1)[0]
    uvs = [c.hit.uv for c in window if c.hit is not None
           and c.hit.surface_id == surface_id]
    centroid = (float(np.mean([uv[0] for uv in uvs])),
                float(np.mean([uv[1] for uv in uvs]))) if uvs else None
    return Fixation(t_start_ms=window[0].sample.t_ms,
                    t_end_ms=window[-1].sample.t_ms, aoi_id=aoi_id,
                    centroid_surface=surface_id if centroid else None,
                    centroid_uv=centroid)


def segment_dwells(classified: Sequence[ClassifiedSample],
                   gap_tolerance_ms: float = 0) -> list[DwellVisit]:
    """Group consecutive same-label samples into visits covering the session.

    Interruptions strictly shorter than gap_tolerance_ms between two visits
    of the same AOI are absorbed into that AOI. Visits partition
    [first sample t, last sample t] with no gaps or overlaps.
    """
    if not classified:
        return []
    runs: list[list] = []  # [label, t_start, t_end)
    for c in classified:
        if runs and runs[-1][0] == c.aoi_id:
            continue
        if runs:
            runs[-1][2] = c.sample.t_ms
        runs.append([c.aoi_id, c.sample.t_ms, None])
    runs[-1][2] = classified[-1].sample.t_ms

    if gap_tolerance_ms > 0:
        merged = True
        while merged:
            merged = False
            for k in range(1, len(runs) - 1):
                label, start, end = runs[k]
                if (runs[k - 1][0] == runs[k + 1][0] != label
                        and end - start < gap_tolerance_ms):
                    runs[k - 1][2] = runs[k + 1][2]
                    del runs[k:k + 2]
                    merged = True
                    break
    return [DwellVisit(aoi_id=label, t_start_ms=start, t_end_ms=end)
            for label, start, end in runs]


def pdt(visits: Sequence[DwellVisit], segment: Segment) -> dict[str, float]:
    """Percentage dwell time per AOI over the segment window.

    Visit time is clipped to the segment; OTH absorbs any part of the
    segment not covered by a visit, so the table sums to exactly 100.
    """
    duration = segment.duration_ms
    if duration <= 0:
        raise ValueError("pdt: zero-length segment")
    acc: dict[str, float] = {}
    for v in visits:
        overlap = min(v.t_end_ms, segment.t_end_ms) - max(v.t_start_ms, segment.t_start_ms)
        if overlap > 0:
            acc[v.aoi_id] = acc.get(v.aoi_id, 0.0) + overlap
    table = {aoi: 100.0 * ms / duration for aoi, ms in acc.items() if aoi != OTH}
    table[OTH] = 100.0 - sum(table.values())
    return table


def fixation_map(fixations: Sequence[Fixation], model: AoiModel,
                 surface_id: str, bin_px: int = DEFAULT_BIN_PX) -> FixationMapGrid:
    """Accumulate fixation durations into square pixel bins on one surface.

    Bin indices are floor-based on centroid_uv * pixel_dims; the border
    uv = 1 maps into the last bin.
    """
    surface = model.surface(surface_id)  # raises KeyError for unknown ids
    w, h = surface.pixel_dims
    nx = math.ceil(w / bin_px)
    ny = math.ceil(h / bin_px)
    grid = np.zeros((ny, nx), dtype=float)
    for f in fixations:
        if f.centroid_surface != surface_id or f.centroid_uv is None:
            continue
        u, v = f.centroid_uv
        ix = min(int(u * w // bin_px), nx - 1)
        iy = min(int(v * h // bin_px), ny - 1)
        grid[iy, ix] += f.duration_ms
    return FixationMapGrid(surface_id=surface_id, bin_px=bin_px, grid=grid)


def sample_heat_map(classified: Sequence[ClassifiedSample], model: AoiModel,
                    surface_id: str, bin_px: int = DEFAULT_BIN_PX) -> FixationMapGrid:
    """Alternative heat mode: per-sample dwell time binned by hit uv.

    Each sample hitting the surface contributes the interval to its
    successor (the last sample contributes nothing), so the grid total
    equals the time spent looking at the surface.
    """
    surface = model.surface(surface_id)
    w, h = surface.pixel_dims
    nx = math.ceil(w / bin_px)
    ny = math.ceil(h / bin_px)
    grid = np.zeros((ny, nx), dtype=float)
    for c, nxt in zip(classified, classified[1:]):
        if c.hit is None or c.hit.surface_id != surface_id:
            continue
        u, v = c.hit.uv
        ix = min(int(u * w // bin_px), nx - 1)
        iy = min(int(v * h // bin_px), ny - 1)
        grid[iy, ix] += nxt.sample.t_ms - c.sample.t_ms
    return FixationMapGrid(surface_id=surface_id, bin_px=bin_px, grid=grid)


def transition_matrix(visits: Sequence[DwellVisit]
                      ) -> tuple[list[str], np.ndarray]:
    """Counts of immediate AOI-to-AOI transitions; diagonal is zero."""
    ids = sorted({v.aoi_id for v in visits})
    index = {aoi: k for k, aoi in enumerate(ids)}
    mat = np.zeros((len(ids), len(ids)), dtype=int)
    for a, b in zip(visits, visits[1:]):
        if a.aoi_id != b.aoi_id:
            mat[index[a.aoi_id], index[b.aoi_id]] += 1
    return ids, mat


def fixation_map_csv(fmap: FixationMapGrid) -> str:
    """Plain-text grid export: one CSV row per v bin (ascending)."""
    lines = [",".join(f"{cell:.9g}" for cell in row) for row in fmap.grid]
    return "\n".join(lines) + "\n"


def fixation_map_pgm(fmap: FixationMapGrid) -> str:
    """ASCII portable graymap, linearly scaled so the hottest cell is 255.

    Rows are written top-down (v descending) so the image orientation
    matches the surface's e2-up convention.
    """
    peak = float(fmap.grid.max())
    scaled = (np.zeros_like(fmap.grid, dtype=int) if peak == 0
              else np.rint(fmap.grid / peak * 255).astype(int))
    ny, nx = scaled.shape
    rows = [" ".join(str(int(c)) for c in scaled[iy])
            for iy in range(ny - 1, -1, -1)]
    return f"P2\n{nx} {ny}\n255\n" + "\n".join(rows) + "\n"
