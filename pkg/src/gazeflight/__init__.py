"""Cockpit eye-gaze and flight-telemetry analytics toolkit."""

__version__ = "0.1.0"

from .model import (AoiModel, AoiSurface, ChildAoi, DwellVisit, Fixation,
                    FlightSample, GazeSample, Segment, default_aoi_model,
                    dump_aoi_model, load_aoi_model)

__all__ = [
    "AoiModel", "AoiSurface", "ChildAoi", "DwellVisit", "Fixation",
    "FlightSample", "GazeSample", "Segment", "default_aoi_model",
    "dump_aoi_model", "load_aoi_model", "__version__",
]
