import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cabinvlc.optics import (
    AdrReceiver, Branch, Detector, ImrReceiver, Orientation, TransmitterUnit, lambertian_order, lens_transmission,
    los_gain, pixel_for_direction, place_receiver, place_units, radiant_intensity,
)
from cabinvlc.scene import CabinConfig, build_scene

# Reference values evaluated with mpmath at 40 digits.
ORDER_14 = 22.986615745177266
ORDER_10 = 45.277602154026477
LOS_COAXIAL_151 = 5.584139049757303e-7


def test_lambertian_order_values():
    assert lambertian_order(60.0) == pytest.approx(1.0, abs=1e-12)
    assert lambertian_order(14.0) == pytest.approx(ORDER_14, rel=1e-13)
    assert lambertian_order(10.0) == pytest.approx(ORDER_10, rel=1e-13)
    assert abs(lambertian_order(14.0) - 22.99) <= 0.01
    assert abs(lambertian_order(10.0) - 45.28) <= 0.01


@settings(max_examples=200)
@given(st.floats(0.5, 89.5))
def test_half_power_at_semi_angle(semi):
    n = lambertian_order(semi)
    assert abs(math.cos(math.radians(semi)) ** n - 0.5) <= 1e-12


@pytest.mark.parametrize("angle", [0.0, 90.0, -3.0, 120.0])
def test_lambertian_order_domain(angle):
    with pytest.raises(ValueError):
        lambertian_order(angle)


def _branch(semi, power=1.0):
    return Branch((0.0, 0.0, 0.0), Orientation(-90.0, 0.0), semi, power)


def test_radiant_intensity_points():
    b = _branch(60.0)
    assert radiant_intensity(b, 0.0) == pytest.approx(1 / math.pi, rel=1e-12)
    assert radiant_intensity(b, math.pi / 2) == 0.0


@pytest.mark.parametrize("semi", [60.0, 14.0, 10.0, 30.0])
def test_intensity_hemisphere_integral(semi):
    b = _branch(semi, power=1.0)
    val, _ = quad(lambda th: radiant_intensity(b, th) * 2 * math.pi * math.sin(th), 0, math.pi / 2,
                  epsabs=1e-14, epsrel=1e-13, limit=200)
    assert val == pytest.approx(1.0, rel=1e-6)


def test_intensity_order_23_integral():
    # n = 23 directly, via a semi-angle chosen to give it
    semi = math.degrees(math.acos(0.5 ** (1 / 23)))
    b = _branch(semi)
    assert b.emission_order == pytest.approx(23.0, rel=1e-12)
    val, _ = quad(lambda th: radiant_intensity(b, th) * 2 * math.pi * math.sin(th), 0, math.pi / 2,
                  epsabs=1e-14, epsrel=1e-13)
    assert abs(val - 1.0) <= 1e-6


def _up_detector(pos=(0.0, 0.0, 0.0), fov=90.0):
    return Detector(pos, Orientation(90.0, 0.0), 4e-6, fov)


def test_los_gain_coaxial():
    g = los_gain(((0.0, 0.0, 1.51), (0.0, 0.0, -1.0), 1.0), _up_detector())
    assert g == pytest.approx(LOS_COAXIAL_151, rel=1e-10)


def test_los_gain_outside_fov_is_zero():
    # 30 deg off the detector axis, FOV 20 deg
    src = (math.sin(math.radians(30)), 0.0, math.cos(math.radians(30)))
    assert los_gain((src, (-src[0], 0.0, -src[2]), 1.0), _up_detector(fov=20.0)) == 0.0


def test_los_gain_inverse_square():
    axis = (0.0, 0.3, -1.0)
    axis = tuple(np.array(axis) / np.linalg.norm(axis))
    g1 = los_gain(((0.2, -0.1, 1.0), axis, 5.0), _up_detector())
    g2 = los_gain(((0.4, -0.2, 2.0), axis, 5.0), _up_detector())
    assert g2 == pytest.approx(g1 / 4, rel=1e-12)


def test_los_gain_back_facing_zero():
    assert los_gain(((0.0, 0.0, 1.0), (0.0, 0.0, 1.0), 1.0), _up_detector()) == 0.0


def test_los_reciprocity_lambertian():
    a, b = (0.1, 0.2, 0.0), (0.7, -0.4, 1.3)
    na = np.array([0.2, 0.1, 1.0]); na /= np.linalg.norm(na)
    nb = np.array([-0.3, 0.3, -1.0]); nb /= np.linalg.norm(nb)

    def det(pos, n):
        el = math.degrees(math.asin(n[2]))
        az = math.degrees(math.atan2(n[1], n[0]))
        return Detector(pos, Orientation(el, az), 4e-6, 90.0)

    ab = los_gain((a, det(a, na).normal, 1.0), det(b, nb))
    ba = los_gain((b, det(b, nb).normal, 1.0), det(a, na))
    assert ab == pytest.approx(ba, rel=1e-12)


def test_lens_transmission():
    assert lens_transmission(0.0) == 0.8778
    assert lens_transmission(0.6) == pytest.approx(0.831948, abs=1e-12)
    assert lens_transmission(0.6985) == 0.0
    assert lens_transmission(math.radians(40.0)) > 0
    with pytest.raises(ValueError):
        lens_transmission(-0.1)


def test_lens_clamped_to_unit_interval():
    y = np.linspace(0, math.radians(89), 400)
    tc = lens_transmission(y, fov=89.0)
    assert np.all((tc >= 0) & (tc <= 1))


def _dir(y_deg, a_deg):
    y, a = math.radians(y_deg), math.radians(a_deg)
    return np.array([math.sin(y) * math.cos(a), math.sin(y) * math.sin(a), math.cos(y)])


def test_pixel_mapping_examples():
    imr = ImrReceiver((0.0, 0.0, 0.0))
    assert pixel_for_direction(_dir(0, 0), imr) == 2 * 5 + 2
    assert pixel_for_direction(_dir(20, 0), imr) == 2 * 5 + 3
    assert pixel_for_direction(_dir(45, 0), imr) is None
    with pytest.raises(ValueError):
        pixel_for_direction(np.array([0.0, 0.0, 2.0]), imr)


def test_pixel_partition(rng):
    imr = ImrReceiver((0.0, 0.0, 0.0))
    gen = np.random.default_rng(7)
    n = 100_000
    # uniform over the FOV cap of the unit sphere
    cos_y = gen.uniform(math.cos(math.radians(40)), 1.0, n)
    alpha = gen.uniform(0, 2 * math.pi, n)
    sin_y = np.sqrt(1 - cos_y ** 2)
    u, v = sin_y * np.cos(alpha), sin_y * np.sin(alpha)
    cells = [imr.pixel_cell(i) for i in range(25)]
    claims = np.zeros(n, dtype=int)
    for u0, u1, v0, v1 in cells:
        claims += (u >= u0) & (u < u1) & (v >= v0) & (v < v1)
    assert np.all(claims == 1)
    from cabinvlc.optics import _pixel_index
    idx = _pixel_index(u, v, cos_y, math.radians(40), 5)
    assert np.all(idx >= 0)
    for i, (u0, u1, v0, v1) in enumerate(cells[:25:6]):
        sel = idx == i * 6
        assert np.all((u[sel] >= u0) & (u[sel] < u1) & (v[sel] >= v0) & (v[sel] < v1))


def test_imr_gain_lands_on_one_pixel():
    imr = ImrReceiver((0.0, 0.0, 0.0))
    src = np.array([[0.3, -0.2, 1.5], [0.0, 0.0, 1.0], [3.0, 0.0, 0.5]])
    axis = -src / np.linalg.norm(src, axis=1)[:, None]
    g, d = imr.gain_matrix(src, axis, 1.0)
    assert np.count_nonzero(g[0]) == 1 and np.count_nonzero(g[1]) == 1
    assert np.count_nonzero(g[2]) == 0  # outside 40 deg
    expected = 2 * 4e-6 / (2 * math.pi) * 1.0 * 0.8778
    assert g[1, 12] == pytest.approx(expected, rel=1e-12)


def test_orientation_vectors():
    assert np.allclose(Orientation(-90, 0).direction(), (0, 0, -1), atol=1e-15)
    assert np.allclose(Orientation(-55, 180).direction(), (-0.5736, 0, -0.8192), atol=1e-4)
    assert np.linalg.norm(Orientation(33, 71).direction()) == pytest.approx(1.0, abs=1e-15)


def test_place_units_one_row():
    scene = build_scene(CabinConfig(), (5, 5))
    units = place_units(scene)
    assert [u.kind for u in units] == ["side3", "middle4", "side3"]
    assert sum(len(u.branches) for u in units) == 10
    for u, mount in zip(units, scene.mounts):
        for b in u.branches:
            assert b.position == mount.position
            assert b.position[2] == scene.config.height
    side, middle = units[0], units[1]
    assert [(b.orientation.elevation, b.orientation.azimuth) for b in side.branches] == \
        [(-55, 180), (-90, 0), (-55, 0)]
    assert [(b.orientation.elevation, b.orientation.azimuth) for b in middle.branches] == \
        [(-65, 180), (-80, 180), (-80, 0), (-65, 0)]
    assert all(b.semi_angle == 14 for b in side.branches)
    assert all(b.semi_angle == 10 for b in middle.branches)
    # cabin frame: beams fan out across the width, never along the length
    assert np.allclose(side.branches[1].direction, (0, 0, -1))
    assert np.allclose(side.branches[0].direction, (0, -0.5736, -0.8192), atol=1e-4)
    for u in units:
        for b in u.branches:
            assert b.direction[0] == 0.0


def test_place_units_requires_343():
    scene = build_scene(CabinConfig(layout=(3, 3), width=4.0), (1, 1))
    with pytest.raises(ValueError):
        place_units(scene)


def test_adr_geometry():
    adr = AdrReceiver.standard((1.0, 2.0, 0.75))
    assert len(adr.detectors) == 4
    dirs = adr.normals
    rot = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]])
    for d in dirs:
        r = rot @ d
        assert min(np.max(np.abs(r - o)) for o in dirs) <= 1e-12
    assert all(d.fov == 21.0 and d.area == 4e-6 and d.responsivity == 0.4 for d in adr.detectors)
    with pytest.raises(ValueError):
        AdrReceiver(adr.detectors[:3])


def test_place_receiver():
    scene = build_scene(CabinConfig(), (2, 2))
    seat = scene.seats[3]
    imr = place_receiver("imr", seat, scene)
    assert imr.position[2] == pytest.approx(0.75)
    assert imr.n_outputs == 25
    with pytest.raises(ValueError):
        place_receiver("pd", seat, scene)


def test_detector_validation():
    with pytest.raises(ValueError):
        Detector((0, 0, 0), Orientation(90, 0), area=0)
    with pytest.raises(ValueError):
        Detector((0, 0, 0), Orientation(90, 0), fov=95)
    with pytest.raises(ValueError):
        Branch((0, 0, 0), Orientation(-90, 0), 10.0, power=0.0)


def test_unit_factories():
    u = TransmitterUnit.middle4((0, 0, 2), power=2.0)
    assert all(b.power == 2.0 for b in u.branches)
