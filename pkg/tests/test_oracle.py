import math
import random

import pytest

from cabinvlc.oracle import (
    C, OracleScene, Patch, blocked, direction, oracle_delay_spread, oracle_los_gain, oracle_trace, patch_elements,
)

from conftest import closed_form_los


def _scene(**kw):
    base = dict(
        size=(2.0, 2.0, 2.0),
        patches=[Patch("ceiling", 0.5, 1.0, 0.5, 1.0, 0.6)],
        emitter_position=(1.0, 1.0, 1.5),
        emitter_elevation=90.0, emitter_azimuth=0.0,
        semi_angle=60.0, power=1.0,
        detector_position=(1.2, 0.9, 0.5),
        detector_elevation=90.0, detector_azimuth=0.0,
        detector_area=4e-6, detector_fov=90.0,
        fine=0.5, coarse=0.5,
    )
    base.update(kw)
    return OracleScene(**base)


def test_los_gain_closed_form():
    g = oracle_los_gain((0, 0, 1.51), (0, 0, -1), 1.0, (0, 0, 0), (0, 0, 1), 4e-6, 90.0)
    assert g == pytest.approx(5.584139049757303e-7, rel=1e-14)


def test_los_only_trace():
    os_ = _scene(emitter_elevation=-80.0, emitter_azimuth=200.0)
    bins = oracle_trace(os_, max_order=0)
    n = math.log(0.5) / math.log(math.cos(math.radians(60)))
    g, d = closed_form_los(os_.emitter_position, direction(-80, 200), n, os_.detector_position, (0, 0, 1), 4e-6, 90)
    assert bins == {int(d / C / 5e-11): g}


def test_single_element_first_order_by_hand():
    # emitter looks up at one 0.5 m ceiling element; detector looks up
    os_ = _scene()
    bins = oracle_trace(os_, max_order=1)
    center = (0.75, 0.75, 2.0)
    e = os_.emitter_position
    v1 = [center[i] - e[i] for i in range(3)]
    d1 = math.sqrt(sum(c * c for c in v1))
    cos_e1 = v1[2] / d1
    cos_i1 = v1[2] / d1
    p_inc = 2 / (2 * math.pi * d1 ** 2) * cos_e1 * cos_i1 * 0.25
    det = os_.detector_position
    v2 = [det[i] - center[i] for i in range(3)]
    d2 = math.sqrt(sum(c * c for c in v2))
    cos2 = -v2[2] / d2
    p_rx = p_inc * 0.6 * 2 / (2 * math.pi * d2 ** 2) * cos2 * cos2 * 4e-6
    # the detector faces up, away from the emitter, so no LOS
    assert bins == {int((d1 + d2) / C / 5e-11): pytest.approx(p_rx, rel=1e-14)}


def test_blocked():
    box = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    assert blocked((-1, 0.5, 0.5), (2, 0.5, 0.5), box)
    assert not blocked((-1, 1.0, 0.5), (2, 1.0, 0.5), box)  # on a face
    assert not blocked((-1, 2.0, 0.5), (2, 2.0, 0.5), box)
    assert not blocked((-1, 0.5, 0.5), (-0.5, 0.5, 0.5), box)  # stops short
    assert not blocked((0, 0, 0), (1, 1, 1), None)


def test_patch_tiling():
    os_ = _scene(size=(2.0, 1.5, 2.0))
    elems = patch_elements(os_, Patch("wall_y1", 0.0, 2.0, 0.0, 1.0, 0.4), 0.5)
    assert len(elems) == 8
    assert math.fsum(e[2] for e in elems) == pytest.approx(2.0)
    assert all(e[0][1] == 1.5 and e[1] == (0.0, -1.0, 0.0) for e in elems)


def test_scene_limits():
    with pytest.raises(ValueError):
        _scene(size=(2.5, 1.0, 1.0))
    with pytest.raises(ValueError):
        _scene(patches=[Patch("floor", 0, 1, 0, 1, 0.1)] * 3)
    with pytest.raises(ValueError):
        _scene(fine=0.1)


def test_delay_spread_reference():
    assert oracle_delay_spread([(5e-9, 1.0)]) == 0.0
    assert oracle_delay_spread([(0.0, 1.0), (2e-9, 1.0)]) == pytest.approx(1e-9, rel=1e-15)
    assert oracle_delay_spread([(0.0, 3.0), (4e-9, 1.0)]) == pytest.approx(1.2e-9, rel=1e-14)
    with pytest.raises(ValueError):
        oracle_delay_spread([(0.0, 0.0)])


def test_reciprocity_of_first_order_paths():
    # swapping an ideal-Lambertian emitter with an unrestricted detector of equal area
    r = random.Random(3)
    for _ in range(5):
        a = (r.uniform(0.2, 1.8), r.uniform(0.2, 1.8), r.uniform(0.2, 0.8))
        b = (r.uniform(0.2, 1.8), r.uniform(0.2, 1.8), r.uniform(0.2, 0.8))
        common = dict(patches=[Patch("ceiling", 0.0, 2.0, 0.0, 2.0, 0.7)], semi_angle=60.0, power=1.0,
                      detector_area=1.0, detector_fov=90.0, emitter_elevation=70.0, detector_elevation=70.0)
        ab = oracle_trace(_scene(emitter_position=a, detector_position=b, emitter_azimuth=10.0,
                                 detector_azimuth=200.0, **common), 1)
        ba = oracle_trace(_scene(emitter_position=b, detector_position=a, emitter_azimuth=200.0,
                                 detector_azimuth=10.0, **common), 1)
        assert math.fsum(ab.values()) == pytest.approx(math.fsum(ba.values()), rel=1e-12)
