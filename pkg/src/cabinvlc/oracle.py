"""Slow, literal reference computations used only by the test-suite.

Nothing here calls into the production tracer or metrics; the physics is
re-derived with plain loops over Python floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

C = 299792458.0


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _norm(a):
    return math.sqrt(_dot(a, a))


def direction(elevation_deg, azimuth_deg):
    el = elevation_deg * math.pi / 180.0
    az = azimuth_deg * math.pi / 180.0
    return (math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el))


_WALLS = {
    # name: (fixed axis, at max side?, inward normal)
    "floor": (2, False, (0.0, 0.0, 1.0)),
    "ceiling": (2, True, (0.0, 0.0, -1.0)),
    "wall_y0": (1, False, (0.0, 1.0, 0.0)),
    "wall_y1": (1, True, (0.0, -1.0, 0.0)),
    "end_x0": (0, False, (1.0, 0.0, 0.0)),
    "end_x1": (0, True, (-1.0, 0.0, 0.0)),
}


@dataclass
class Patch:
    """Reflective rectangle on a cuboid wall; ``(a0, a1, b0, b1)`` span the wall's two free axes."""

    wall: str
    a0: float
    a1: float
    b0: float
    b1: float
    reflectivity: float


@dataclass
class OracleScene:
    size: tuple
    patches: list
    emitter_position: tuple
    emitter_elevation: float
    emitter_azimuth: float
    semi_angle: float
    power: float
    detector_position: tuple
    detector_elevation: float
    detector_azimuth: float
    detector_area: float
    detector_fov: float
    fine: float = 0.25
    coarse: float = 0.5
    time_bin: float = 5e-11
    box: tuple | None = None

    def __post_init__(self):
        if max(self.size) > 2.0:
            raise ValueError("oracle scenes are at most 2 m on a side")
        if len(self.patches) > 2:
            raise ValueError("oracle scenes carry at most two patches")
        if min(self.fine, self.coarse) < 0.25:
            raise ValueError("oracle elements are at least 0.25 m")


def patch_elements(scene: OracleScene, patch: Patch, size: float):
    """List of (center, normal, area, reflectivity) tuples tiling the patch."""
    axis, at_max, normal = _WALLS[patch.wall]
    free = [a for a in range(3) if a != axis]
    na = max(1, int(math.floor((patch.a1 - patch.a0) / size + 0.5)))
    nb = max(1, int(math.floor((patch.b1 - patch.b0) / size + 0.5)))
    da = (patch.a1 - patch.a0) / na
    db = (patch.b1 - patch.b0) / nb
    out = []
    for i in range(na):
        for j in range(nb):
            c = [0.0, 0.0, 0.0]
            c[axis] = scene.size[axis] if at_max else 0.0
            c[free[0]] = patch.a0 + (i + 0.5) * da
            c[free[1]] = patch.b0 + (j + 0.5) * db
            out.append((tuple(c), normal, da * db, patch.reflectivity))
    return out


def blocked(p, q, box) -> bool:
    """Does the open segment p-q pass through the open box interior?"""
    if box is None:
        return False
    lo_t, hi_t = 0.0, 1.0
    for axis in range(3):
        p0 = p[axis]
        dp = q[axis] - p[axis]
        lo, hi = box[axis], box[axis + 3]
        if dp == 0.0:
            if p0 <= lo or p0 >= hi:
                return False
            continue
        ta = (lo - p0) / dp
        tb = (hi - p0) / dp
        lo_t = max(lo_t, min(ta, tb))
        hi_t = min(hi_t, max(ta, tb))
    return lo_t < hi_t


def _order(semi_angle):
    return math.log(0.5) / math.log(math.cos(semi_angle * math.pi / 180.0))


def _hop(src, src_axis, n, dst, dst_normal, dst_area, fov=None):
    """Lambertian power fraction for one hop, or 0."""
    v = _sub(dst, src)
    d = _norm(v)
    if d == 0.0:
        return 0.0, 0.0
    cos_e = _dot(src_axis, v) / d
    cos_i = -_dot(dst_normal, v) / d
    if cos_e <= 0.0 or cos_i <= 0.0:
        return 0.0, d
    if fov is not None and math.acos(min(1.0, cos_i)) > fov * math.pi / 180.0:
        return 0.0, d
    return (n + 1.0) / (2.0 * math.pi * d * d) * cos_e ** n * cos_i * dst_area, d


def oracle_trace(scene: OracleScene, max_order: int = 2) -> dict:
    """Exhaustive sum over all paths up to ``max_order`` bounces; returns ``{bin: watts}``."""
    em = scene.emitter_position
    em_axis = direction(scene.emitter_elevation, scene.emitter_azimuth)
    n = _order(scene.semi_angle)
    det = scene.detector_position
    det_normal = direction(scene.detector_elevation, scene.detector_azimuth)
    dt = scene.time_bin
    fine = [e for p in scene.patches for e in patch_elements(scene, p, scene.fine)]
    coarse = [e for p in scene.patches for e in patch_elements(scene, p, scene.coarse)]
    bins: dict = {}

    def deposit(t, watts):
        if watts > 0.0:
            k = int(math.floor(t / dt))
            bins[k] = bins.get(k, 0.0) + watts

    g, d = _hop(em, em_axis, n, det, det_normal, scene.detector_area, scene.detector_fov)
    if g > 0 and not blocked(em, det, scene.box):
        deposit(d / C, scene.power * g)

    if max_order >= 1:
        for c1, n1, a1, r1 in fine:
            g1, d1 = _hop(em, em_axis, n, c1, n1, a1)
            if g1 == 0.0 or blocked(em, c1, scene.box):
                continue
            p1 = scene.power * g1
            g2, d2 = _hop(c1, n1, 1.0, det, det_normal, scene.detector_area, scene.detector_fov)
            if g2 > 0.0 and not blocked(c1, det, scene.box):
                deposit((d1 + d2) / C, p1 * r1 * g2)
            if max_order < 2:
                continue
            for c2, n2, a2, r2 in coarse:
                g12, d12 = _hop(c1, n1, 1.0, c2, n2, a2)
                if g12 == 0.0 or blocked(c1, c2, scene.box):
                    continue
                g3, d3 = _hop(c2, n2, 1.0, det, det_normal, scene.detector_area, scene.detector_fov)
                if g3 == 0.0 or blocked(c2, det, scene.box):
                    continue
                deposit((d1 + d12 + d3) / C, p1 * r1 * g12 * r2 * g3)
    return bins


def oracle_los_gain(em_pos, em_axis, n, det_pos, det_normal, area, fov_deg):
    return _hop(em_pos, em_axis, n, det_pos, det_normal, area, fov_deg)[0]


def oracle_delay_spread(taps, weighting: str = "power_squared") -> float:
    """Two-pass RMS delay spread of ``(time, power)`` taps."""
    taps = list(taps)
    if sum(p for _, p in taps) <= 0:
        raise ValueError("zero total power")
    if weighting == "power_squared":
        w = [p * p for _, p in taps]
    elif weighting == "power":
        w = [p for _, p in taps]
    else:
        raise ValueError(weighting)
    total = math.fsum(w)
    mean = math.fsum(t * wi for (t, _), wi in zip(taps, w)) / total
    var = math.fsum((t - mean) ** 2 * wi for (t, _), wi in zip(taps, w)) / total
    return math.sqrt(var)
