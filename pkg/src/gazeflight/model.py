"""Core domain types and the hierarchical cockpit AOI model.

The AOI model is a flat list of planar rectangular surfaces (quads) in a
fixed cockpit frame; each surface may carry named child rectangles in
surface-local normalized (u, v) coordinates.  Gaze labels are either a
surface id ("OTW"), a dotted surface.child id ("PFD.A3"), or the residual
label ``OTH``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Optional

#: Residual label for gaze that is not inside any defined AOI.
OTH = "OTH"

#: Plausibility envelope for pupil diameter after ingestion filtering, mm.
PUPIL_MM_MIN = 1.0
PUPIL_MM_MAX = 10.0

Vec3 = tuple[float, float, float]


class AoiConfigError(ValueError):
    """Malformed or invalid AOI configuration."""


class LogParseError(ValueError):
    """Malformed gaze/flight log; carries the 1-based offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class GazeSample:
    """One time-stamped gaze record in the cockpit frame (metres)."""

    t_ms: int
    origin: Vec3
    dir: Vec3                       # unit vector
    pupil_mm: Optional[float] = None
    eyelid_open: Optional[float] = None  # 1 = fully open
    quality: float = 1.0


@dataclass(frozen=True)
class FlightSample:
    """One time-stamped flight/control record."""

    t_ms: int
    altitude_ft: float
    airspeed_kt: float
    heading_deg: float              # [0, 360)
    bank_deg: float
    pitch_deg: float
    inceptors: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Segment:
    """A named analysis window, optionally with flight-target values."""

    name: str
    t_start_ms: int
    t_end_ms: int
    targets: Optional[dict[str, float]] = None

    def __post_init__(self):
        if self.t_start_ms >= self.t_end_ms:
            raise ValueError(f"segment {self.name!r}: t_start_ms must be < t_end_ms")

    @property
    def duration_ms(self) -> int:
        return self.t_end_ms - self.t_start_ms


@dataclass(frozen=True)
class Fixation:
    """A dispersion-stable gaze interval labelled with its modal AOI."""

    t_start_ms: int
    t_end_ms: int
    aoi_id: str
    centroid_surface: Optional[str] = None
    centroid_uv: Optional[tuple[float, float]] = None

    @property
    def duration_ms(self) -> int:
        return self.t_end_ms - self.t_start_ms


@dataclass(frozen=True)
class DwellVisit:
    """One maximal contiguous stay in a single AOI (OTH included)."""

    aoi_id: str
    t_start_ms: int
    t_end_ms: int

    @property
    def duration_ms(self) -> int:
        return self.t_end_ms - self.t_start_ms


@dataclass(frozen=True)
class ChildAoi:
    id: str
    rect: tuple[float, float, float, float]  # (u0, v0, u1, v1), normalized


@dataclass(frozen=True)
class AoiSurface:
    """A planar rectangle: origin corner plus two spanning edge vectors."""

    id: str
    origin: Vec3
    e1: Vec3
    e2: Vec3
    pixel_dims: tuple[int, int]     # (width, height) px, for fixation maps
    children: tuple[ChildAoi, ...] = ()

    def child(self, child_id: str) -> ChildAoi:
        for c in self.children:
            if c.id == child_id:
                return c
        raise KeyError(f"{self.id} has no child {child_id!r}")


@dataclass(frozen=True)
class AoiModel:
    """Validated, immutable set of AOI surfaces; safe to share across threads."""

    surfaces: tuple[AoiSurface, ...]

    def surface(self, surface_id: str) -> AoiSurface:
        for s in self.surfaces:
            if s.id == surface_id:
                return s
        raise KeyError(f"no surface {surface_id!r}")

    def lookup(self, aoi_id: str) -> tuple[AoiSurface, Optional[ChildAoi]]:
        """Resolve a surface or dotted surface.child id."""
        surface_id, _, child_id = aoi_id.partition(".")
        s = self.surface(surface_id)
        return (s, s.child(child_id)) if child_id else (s, None)

    def aoi_ids(self) -> list[str]:
        """All addressable labels: surfaces first, then surface.child ids."""
        ids: list[str] = []
        for s in self.surfaces:
            ids.append(s.id)
            ids.extend(f"{s.id}.{c.id}" for c in s.children)
        return ids


def _vec3(values, what: str) -> Vec3:
    if not isinstance(values, (list, tuple)) or len(values) != 3:
        raise AoiConfigError(f"{what}: expected 3 numbers, got {values!r}")
    try:
        return (float(values[0]), float(values[1]), float(values[2]))
    except (TypeError, ValueError):
        raise AoiConfigError(f"{what}: expected 3 numbers, got {values!r}") from None


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def _norm(a: Vec3) -> float:
    return math.sqrt(a[0] ** 2 + a[1] ** 2 + a[2] ** 2)


def _rects_overlap(a, b) -> bool:
    # Shared edges do not count as overlap; only positive-area intersection.
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w > 0 and h > 0


def validate_model(model: AoiModel) -> AoiModel:
    """Check all AOI-model invariants; raises AoiConfigError naming offenders."""
    seen: set[str] = set()
    for s in model.surfaces:
        if s.id in seen:
            raise AoiConfigError(f"duplicate surface id {s.id!r}")
        seen.add(s.id)
        if "." in s.id or not s.id:
            raise AoiConfigError(f"surface id {s.id!r} must be non-empty and dot-free")
        if _norm(_cross(s.e1, s.e2)) <= 1e-12:
            raise AoiConfigError(f"surface {s.id!r}: degenerate quad (e1 x e2 = 0)")
        w, h = s.pixel_dims
        if not (isinstance(w, int) and isinstance(h, int)) or w <= 0 or h <= 0:
            raise AoiConfigError(f"surface {s.id!r}: pixel_dims must be positive integers")
        child_ids: set[str] = set()
        for c in s.children:
            if c.id in child_ids:
                raise AoiConfigError(f"duplicate child id {s.id}.{c.id}")
            child_ids.add(c.id)
            if "." in c.id or not c.id:
                raise AoiConfigError(f"child id {s.id}.{c.id!r} must be non-empty and dot-free")
            u0, v0, u1, v1 = c.rect
            if not (0 <= u0 < u1 <= 1 and 0 <= v0 < v1 <= 1):
                raise AoiConfigError(
                    f"child {s.id}.{c.id}: rect {c.rect} not a proper sub-rect of [0,1]^2")
        for i, a in enumerate(s.children):
            for b in s.children[i + 1:]:
                if _rects_overlap(a.rect, b.rect):
                    raise AoiConfigError(
                        f"children {s.id}.{a.id} and {s.id}.{b.id} overlap")
    return model


def load_aoi_model(text: str) -> AoiModel:
    """Parse and validate an AOI config (JSON with top-level "surfaces")."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise AoiConfigError(f"config is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or "surfaces" not in doc:
        raise AoiConfigError('config must be an object with a "surfaces" list')
    surfaces = []
    for entry in doc["surfaces"]:
        try:
            sid = entry["id"]
            origin = _vec3(entry["origin"], f"surface {sid!r} origin")
            e1 = _vec3(entry["e1"], f"surface {sid!r} e1")
            e2 = _vec3(entry["e2"], f"surface {sid!r} e2")
            px = entry["px"]
        except (KeyError, TypeError) as e:
            raise AoiConfigError(f"surface entry {entry!r}: missing field {e}") from None
        children = []
        for c in entry.get("children", []):
            try:
                rect = tuple(float(x) for x in c["rect"])
            except (KeyError, TypeError, ValueError):
                raise AoiConfigError(
                    f"surface {sid!r}: bad child entry {c!r}") from None
            if len(rect) != 4:
                raise AoiConfigError(f"child {sid}.{c.get('id')}: rect must have 4 numbers")
            children.append(ChildAoi(id=str(c["id"]), rect=rect))
        if not isinstance(px, (list, tuple)) or len(px) != 2:
            raise AoiConfigError(f"surface {sid!r}: px must be [width, height]")
        surfaces.append(AoiSurface(
            id=str(sid), origin=origin, e1=e1, e2=e2,
            pixel_dims=(int(px[0]), int(px[1])), children=tuple(children)))
    return validate_model(AoiModel(surfaces=tuple(surfaces)))


def dump_aoi_model(model: AoiModel) -> str:
    """Serialize a model to the config format; load(dump(m)) == m."""
    doc = {"surfaces": [
        {
            "id": s.id,
            "origin": list(s.origin),
            "e1": list(s.e1),
            "e2": list(s.e2),
            "px": list(s.pixel_dims),
            "children": [{"id": c.id, "rect": list(c.rect)} for c in s.children],
        }
        for s in model.surfaces
    ]}
    return json.dumps(doc, indent=2)


def default_aoi_model() -> AoiModel:
    """The shipped cockpit layout (a plausible reconstruction, see data/)."""
    text = resources.files("gazeflight.data").joinpath("default_aoi.json").read_text()
    return load_aoi_model(text)


def load_segments(text: str) -> list[Segment]:
    """Parse a segments file: JSON list of {name, t_start_ms, t_end_ms, targets}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"segments file is not valid JSON: {e}") from None
    segments = []
    for entry in doc:
        targets = entry.get("targets")
        segments.append(Segment(
            name=str(entry["name"]),
            t_start_ms=int(entry["t_start_ms"]),
            t_end_ms=int(entry["t_end_ms"]),
            targets={k: float(v) for k, v in targets.items()} if targets else None))
    return segments


def dump_segments(segments: list[Segment]) -> str:
    doc = [
        {"name": s.name, "t_start_ms": s.t_start_ms, "t_end_ms": s.t_end_ms,
         **({"targets": s.targets} if s.targets else {})}
        for s in segments
    ]
    return json.dumps(doc, indent=2)
