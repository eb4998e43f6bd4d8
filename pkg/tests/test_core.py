import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from trackimpute.core import (
    GeoPoint,
    InputError,
    LocalProjection,
    PlanarPoint,
    angle_to,
    distance,
    to_geo,
    to_planar,
)

EARTH_RADIUS_M = 6_371_008.8

coords = st.floats(-1e5, 1e5, allow_nan=False)


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dp = p2 - p1
    dl = math.radians(b.lon - a.lon)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


@given(
    lon=st.floats(-76.5, -75.9),
    lat=st.floats(36.9, 37.7),
)
def test_projection_round_trip(lon, lat):
    origin = GeoPoint(-76.2, 37.3)
    back = to_geo(to_planar(GeoPoint(lon, lat), origin), origin)
    assert back.lon == pytest.approx(lon, abs=1e-9)
    assert back.lat == pytest.approx(lat, abs=1e-9)


@pytest.mark.parametrize(
    "a, b",
    [
        ((-76.3, 37.0), (-76.0, 37.6)),
        ((-76.4, 37.5), (-76.35, 37.52)),
        ((-76.2, 37.3), (-75.95, 37.3)),
    ],
)
def test_planar_distance_matches_great_circle(a, b):
    proj = LocalProjection(GeoPoint(-76.2, 37.3))
    ga, gb = GeoPoint(*a), GeoPoint(*b)
    planar = distance(proj.to_planar(ga), proj.to_planar(gb))
    assert planar == pytest.approx(haversine(ga, gb), rel=5e-3)


def test_origin_maps_to_zero():
    origin = GeoPoint(-76.2, 37.3)
    assert to_planar(origin, origin) == PlanarPoint(0.0, 0.0)


def test_centered_projection_uses_mean():
    proj = LocalProjection.centered_on([GeoPoint(-76.0, 37.0), GeoPoint(-77.0, 38.0)])
    assert proj.origin == GeoPoint(-76.5, 37.5)


def test_centered_projection_rejects_empty():
    with pytest.raises(InputError):
        LocalProjection.centered_on([])


@pytest.mark.parametrize("lon, lat", [(181.0, 0.0), (0.0, -91.0)])
def test_geopoint_range(lon, lat):
    with pytest.raises(InputError):
        GeoPoint(lon, lat)


def test_planar_point_rejects_nan():
    with pytest.raises(ValueError):
        PlanarPoint(float("nan"), 0.0)


@given(coords, coords, coords, coords, coords, coords)
def test_triangle_inequality(ax, ay, bx, by, cx, cy):
    a, b, c = PlanarPoint(ax, ay), PlanarPoint(bx, by), PlanarPoint(cx, cy)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-6


@given(coords, coords, coords, coords)
def test_angle_points_at_target(ax, ay, bx, by):
    a, b = PlanarPoint(ax, ay), PlanarPoint(bx, by)
    d = distance(a, b)
    th = angle_to(a, b)
    assert -math.pi <= th <= math.pi
    if d > 1e-3:
        assert ax + d * math.cos(th) == pytest.approx(bx, abs=1e-6 * max(1.0, d))
        assert ay + d * math.sin(th) == pytest.approx(by, abs=1e-6 * max(1.0, d))


def test_angle_of_coincident_points_is_zero():
    p = PlanarPoint(3.0, 4.0)
    assert angle_to(p, p) == 0.0
