import math

import pytest

from gazeflight.model import (AoiModel, AoiSurface, ChildAoi, GazeSample,
                              default_aoi_model, validate_model)


def make_surface(sid="PANEL", origin=(-1.0, -1.0, 1.0), e1=(2.0, 0.0, 0.0),
                 e2=(0.0, 2.0, 0.0), px=(200, 200), children=()):
    return AoiSurface(id=sid, origin=origin, e1=e1, e2=e2, pixel_dims=px,
                      children=tuple(children))


def make_model(*surfaces):
    return validate_model(AoiModel(surfaces=tuple(surfaces)))


def gaze(t_ms, direction, origin=(0.0, 0.0, 0.0), pupil=None, eyelid=None,
         quality=1.0):
    n = math.sqrt(sum(c * c for c in direction))
    d = tuple(c / n for c in direction)
    return GazeSample(t_ms=t_ms, origin=origin, dir=d, pupil_mm=pupil,
                      eyelid_open=eyelid, quality=quality)


@pytest.fixture(scope="session")
def cockpit():
    return default_aoi_model()


@pytest.fixture
def single_panel():
    return make_model(make_surface())


@pytest.fixture
def panel_with_children():
    children = (ChildAoi(id="A1", rect=(0.0, 0.0, 0.5, 0.5)),
                ChildAoi(id="A2", rect=(0.5, 0.5, 1.0, 1.0)))
    return make_model(make_surface(sid="PFD", children=children))
