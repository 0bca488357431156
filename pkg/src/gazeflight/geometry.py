"""Gaze-ray intersection with AOI surfaces and per-sample classification.

All functions are pure. Classification is total and deterministic: every
sample maps to exactly one label, with ``OTH`` for misses and low-quality
samples so dwell-time denominators always equal session duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import OTH, AoiModel, AoiSurface, GazeSample, Vec3

#: Ray/plane denominators below this are treated as parallel (miss).
PARALLEL_EPS = 1e-12
#: Equal-distance tie window for the nearest-hit rule.
TIE_EPS = 1e-9
#: Samples with quality below this classify as OTH.
DEFAULT_QUALITY_FLOOR = 0.2


@dataclass(frozen=True)
class SurfaceHit:
    surface_id: str
    uv: tuple[float, float]     # in [0,1]^2 along (e1, e2)
    distance_m: float           # ray parameter, > 0


@dataclass(frozen=True)
class ClassifiedSample:
    """A gaze sample together with its AOI label and hit detail (if any)."""

    sample: GazeSample
    aoi_id: str
    hit: Optional[SurfaceHit] = None


def _dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def ray_quad_intersect(origin: Vec3, direction: Vec3,
                       surface: AoiSurface) -> Optional[SurfaceHit]:
    """Intersect a unit-direction ray with one planar rectangle.

    Returns the hit iff the ray (t > 0) meets the surface plane inside the
    rectangle spanned by e1, e2; uv are the (possibly non-orthogonal)
    coordinates along those edges. None encodes a miss.
    """
    n = _cross(surface.e1, surface.e2)
    denom = _dot(direction, n)
    if abs(denom) < PARALLEL_EPS:
        return None
    diff = (surface.origin[0] - origin[0],
            surface.origin[1] - origin[1],
            surface.origin[2] - origin[2])
    t = _dot(diff, n) / denom
    if t <= 0:
        return None
    p = (origin[0] + t * direction[0] - surface.origin[0],
         origin[1] + t * direction[1] - surface.origin[1],
         origin[2] + t * direction[2] - surface.origin[2])
    # Solve the 2x2 Gram system for (u, v); handles skewed edge vectors.
    g11 = _dot(surface.e1, surface.e1)
    g12 = _dot(surface.e1, surface.e2)
    g22 = _dot(surface.e2, surface.e2)
    b1 = _dot(p, surface.e1)
    b2 = _dot(p, surface.e2)
    det = g11 * g22 - g12 * g12
    u = (g22 * b1 - g12 * b2) / det
    v = (g11 * b2 - g12 * b1) / det
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        return None
    return SurfaceHit(surface_id=surface.id, uv=(u, v), distance_m=t)


def _nearest_hit(sample: GazeSample, model: AoiModel) -> Optional[SurfaceHit]:
    best: Optional[SurfaceHit] = None
    for s in model.surfaces:
        hit = ray_quad_intersect(sample.origin, sample.dir, s)
        if hit is None:
            continue
        if best is None or hit.distance_m < best.distance_m - TIE_EPS:
            best = hit
        elif abs(hit.distance_m - best.distance_m) <= TIE_EPS \
                and hit.surface_id < best.surface_id:
            best = hit
    return best


def _label_for(hit: SurfaceHit, model: AoiModel) -> str:
    surface = model.surface(hit.surface_id)
    u, v = hit.uv
    for c in surface.children:
        u0, v0, u1, v1 = c.rect
        if u0 <= u <= u1 and v0 <= v <= v1:
            return f"{surface.id}.{c.id}"
    return surface.id


def classify(sample: GazeSample, model: AoiModel,
             quality_floor: float = DEFAULT_QUALITY_FLOOR) -> ClassifiedSample:
    """Classify one sample to its deepest AOI (nearest surface wins)."""
    if sample.quality < quality_floor:
        return ClassifiedSample(sample=sample, aoi_id=OTH)
    hit = _nearest_hit(sample, model)
    if hit is None:
        return ClassifiedSample(sample=sample, aoi_id=OTH)
    return ClassifiedSample(sample=sample, aoi_id=_label_for(hit, model), hit=hit)


def classify_sample(sample: GazeSample, model: AoiModel,
                    quality_floor: float = DEFAULT_QUALITY_FLOOR) -> str:
    """Label only; see classify() for the hit detail."""
    return classify(sample, model, quality_floor).aoi_id


def classify_stream(samples: Iterable[GazeSample], model: AoiModel,
                    quality_floor: float = DEFAULT_QUALITY_FLOOR) -> list[ClassifiedSample]:
    return [classify(s, model, quality_floor) for s in samples]


def quad_point(surface: AoiSurface, u: float, v: float) -> Vec3:
    """World-frame point at surface-local (u, v)."""
    return (surface.origin[0] + u * surface.e1[0] + v * surface.e2[0],
            surface.origin[1] + u * surface.e1[1] + v * surface.e2[1],
            surface.origin[2] + u * surface.e1[2] + v * surface.e2[2])


def aoi_centre(model: AoiModel, aoi_id: str) -> Vec3:
    """World-frame centre of a surface or child AOI."""
    surface, child = model.lookup(aoi_id)
    if child is None:
        return quad_point(surface, 0.5, 0.5)
    u0, v0, u1, v1 = child.rect
    return quad_point(surface, (u0 + u1) / 2, (v0 + v1) / 2)


def normalize(v: Vec3) -> Vec3:
    n = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    if n == 0:
        raise ValueError("cannot normalize a zero vector")
    return (v[0] / n, v[1] / n, v[2] / n)
