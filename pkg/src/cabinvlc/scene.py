"""Cabin geometry: boundary surfaces, seat occluders and reflecting elements.

Coordinates: x runs along the cabin length (nose at x = 0), y across the
width (seat 1 against the y = 0 wall), z up from the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SeatGeometry:
    width: float = 0.50
    depth: float = 0.60
    surface_height: float = 0.45
    back_height: float = 1.10
    back_thickness: float = 0.10

    def __post_init__(self):
        for name in ("width", "depth", "surface_height", "back_height", "back_thickness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"seat.{name} must be positive")
        if self.back_height <= self.surface_height:
            raise ValueError("seat.back_height must exceed seat.surface_height")
        if self.back_thickness > self.depth:
            raise ValueError("seat.back_thickness cannot exceed seat.depth")


@dataclass(frozen=True)
class Reflectivity:
    ceiling: float = 0.8
    side_walls: float = 0.8
    floor: float = 0.3
    end_walls: float = 0.3

    def __post_init__(self):
        for name in ("ceiling", "side_walls", "floor", "end_walls"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"reflectivity.{name} must lie in [0, 1], got {value}")

    def scaled(self, k: float) -> "Reflectivity":
        return Reflectivity(self.ceiling * k, self.side_walls * k, self.floor * k, self.end_walls * k)


@dataclass(frozen=True)
class CabinConfig:
    """Parametric cuboid cabin with rows of seats in groups separated by aisles.

    ``front_margin`` is the distance from the nose wall to the first row; by
    default the rows are centred along the length.
    """

    length: float = 57.0
    width: float = 6.37
    height: float = 2.41
    rows: int = 54
    layout: tuple[int, ...] = (3, 4, 3)
    row_pitch: float = 0.81
    wall_clearance: float = 0.20
    front_margin: float | None = None
    seat: SeatGeometry = field(default_factory=SeatGeometry)
    reflectivity: Reflectivity = field(default_factory=Reflectivity)

    def __post_init__(self):
        for name in ("length", "width", "height", "row_pitch"):
            if not getattr(self, name) > 0:
                raise ValueError(f"cabin.{name} must be positive")
        if self.rows < 1:
            raise ValueError("cabin.rows must be at least 1")
        if not self.layout or any(n < 1 for n in self.layout):
            raise ValueError("cabin.layout must list positive seat counts")
        object.__setattr__(self, "layout", tuple(int(n) for n in self.layout))
        if self.wall_clearance < 0:
            raise ValueError("cabin.wall_clearance must be non-negative")
        if self.seat.depth > self.row_pitch:
            raise ValueError("seat.depth exceeds cabin.row_pitch: seats would overlap")
        if self.seat.back_height >= self.height:
            raise ValueError("seat.back_height must be below the ceiling")
        if self.rows * self.row_pitch > self.length + 1e-12:
            raise ValueError("rows do not fit along the cabin length")
        if self.front_margin is not None and (
            self.front_margin < 0 or self.front_margin + self.rows * self.row_pitch > self.length + 1e-12
        ):
            raise ValueError("cabin.front_margin places rows outside the cabin")
        if self.aisle_width < 0:
            raise ValueError("seat groups do not fit across the cabin width")

    @property
    def seats_per_row(self) -> int:
        return sum(self.layout)

    @property
    def aisle_width(self) -> float:
        if len(self.layout) == 1:
            return 0.0
        free = self.width - 2 * self.wall_clearance - self.seats_per_row * self.seat.width
        return free / (len(self.layout) - 1)

    @property
    def first_row_x(self) -> float:
        if self.front_margin is not None:
            return self.front_margin
        return 0.5 * (self.length - self.rows * self.row_pitch)

    def row_extent(self, row: int) -> tuple[float, float]:
        x0 = self.first_row_x + (row - 1) * self.row_pitch
        return x0, x0 + self.row_pitch

    def seat_y_centers(self) -> list[float]:
        w = self.seat.width
        y = self.wall_clearance
        centers = []
        for g, count in enumerate(self.layout):
            if g:
                y += self.aisle_width
            for _ in range(count):
                centers.append(y + 0.5 * w)
                y += w
        return centers


@dataclass(frozen=True)
class SubdivisionSpec:
    first_order_element: float = 0.05
    second_order_element: float = 0.20
    time_bin: float = 5e-11

    def __post_init__(self):
        if not self.first_order_element > 0 or not self.second_order_element > 0:
            raise ValueError("element sizes must be positive")
        if not self.time_bin > 0:
            raise ValueError("time_bin must be positive")


@dataclass(frozen=True)
class Surface:
    """Axis-aligned rectangle ``origin + a*edge_u + b*edge_v`` for a, b in [0, 1]."""

    name: str
    origin: tuple[float, float, float]
    edge_u: tuple[float, float, float]
    edge_v: tuple[float, float, float]
    normal: tuple[float, float, float]
    reflectivity: float

    @property
    def lengths(self) -> tuple[float, float]:
        return float(np.linalg.norm(self.edge_u)), float(np.linalg.norm(self.edge_v))

    @property
    def area(self) -> float:
        lu, lv = self.lengths
        return lu * lv


@dataclass(frozen=True)
class Seat:
    row: int
    number: int
    group: int
    center: tuple[float, float]
    cushion: tuple[float, ...]
    back: tuple[float, ...]

    @property
    def label(self) -> str:
        return f"{self.row}-{self.number:02d}"


@dataclass(frozen=True)
class Mount:
    row: int
    group: int
    size: int
    position: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable cabin slice. ``occluders`` rows are ``(xmin, ymin, zmin, xmax, ymax, zmax)``."""

    surfaces: tuple[Surface, ...]
    occluders: np.ndarray
    seats: tuple[Seat, ...] = ()
    mounts: tuple[Mount, ...] = ()
    config: CabinConfig | None = None
    span: tuple[int, int] | None = None

    def __post_init__(self):
        occ = np.ascontiguousarray(np.asarray(self.occluders, dtype=np.float64).reshape(-1, 6))
        occ.setflags(write=False)
        object.__setattr__(self, "occluders", occ)
        object.__setattr__(self, "_grid", _BoxGrid(occ))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        pts = []
        for s in self.surfaces:
            o = np.asarray(s.origin)
            pts.extend([o, o + s.edge_u, o + s.edge_v, o + s.edge_u + s.edge_v])
        pts = np.array(pts)
        return pts.min(axis=0), pts.max(axis=0)

    def surface(self, name: str) -> Surface:
        for s in self.surfaces:
            if s.name == name:
                return s
        raise KeyError(name)

    def without_occluder(self, index: int) -> "Scene":
        occ = np.delete(self.occluders, index, axis=0)
        return Scene(self.surfaces, occ, self.seats, self.mounts, self.config, self.span)


def box_surfaces(x0, y0, z0, x1, y1, z1, reflectivity) -> tuple[Surface, ...]:
    """The six inward-facing walls of a cuboid.

    ``reflectivity`` maps ``floor``, ``ceiling``, ``wall_y0``, ``wall_y1``,
    ``end_x0`` and ``end_x1`` to their coefficients.
    """
    lx, ly, lz = x1 - x0, y1 - y0, z1 - z0
    if min(lx, ly, lz) <= 0:
        raise ValueError("cuboid dimensions must be positive")
    return (
        Surface("floor", (x0, y0, z0), (lx, 0, 0), (0, ly, 0), (0, 0, 1), reflectivity["floor"]),
        Surface("ceiling", (x0, y0, z1), (lx, 0, 0), (0, ly, 0), (0, 0, -1), reflectivity["ceiling"]),
        Surface("wall_y0", (x0, y0, z0), (lx, 0, 0), (0, 0, lz), (0, 1, 0), reflectivity["wall_y0"]),
        Surface("wall_y1", (x0, y1, z0), (lx, 0, 0), (0, 0, lz), (0, -1, 0), reflectivity["wall_y1"]),
        Surface("end_x0", (x0, y0, z0), (0, ly, 0), (0, 0, lz), (1, 0, 0), reflectivity["end_x0"]),
        Surface("end_x1", (x1, y0, z0), (0, ly, 0), (0, 0, lz), (-1, 0, 0), reflectivity["end_x1"]),
    )


def parse_span(text: str) -> tuple[int, int]:
    """Parse an inclusive, 1-based ``"A..B"`` row range (``"A"`` alone is one row)."""
    parts = text.split("..")
    try:
        if len(parts) == 1:
            a = b = int(parts[0])
        elif len(parts) == 2:
            a, b = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"row span must look like 'A..B', got {text!r}") from None
    return a, b


def build_scene(config: CabinConfig, span: tuple[int, int] | str) -> Scene:
    """Build the cabin slice covering rows ``span[0]..span[1]`` inclusive.

    The slice is bounded along x by the rows' own extent, so its two end walls
    are the planes closing the slice.
    """
    if isinstance(span, str):
        span = parse_span(span)
    first, last = span
    if last < first:
        raise ValueError(f"empty row span {first}..{last}")
    if first < 1 or last > config.rows:
        raise ValueError(f"row span {first}..{last} outside 1..{config.rows}")

    x0 = config.row_extent(first)[0]
    x1 = config.row_extent(last)[1]
    refl = config.reflectivity
    surfaces = box_surfaces(
        x0, 0.0, 0.0, x1, config.width, config.height,
        {
            "floor": refl.floor, "ceiling": refl.ceiling,
            "wall_y0": refl.side_walls, "wall_y1": refl.side_walls,
            "end_x0": refl.end_walls, "end_x1": refl.end_walls,
        },
    )

    seat = config.seat
    ys = config.seat_y_centers()
    seats, boxes, mounts = [], [], []
    for row in range(first, last + 1):
        _, row_end = config.row_extent(row)
        sx0, sx1 = row_end - seat.depth, row_end
        xc = 0.5 * (sx0 + sx1)
        number = 0
        for group, count in enumerate(config.layout):
            group_ys = []
            for _ in range(count):
                yc = ys[number]
                number += 1
                group_ys.append(yc)
                cushion = (sx0, yc - seat.width / 2, 0.0, sx1, yc + seat.width / 2, seat.surface_height)
                back = (sx1 - seat.back_thickness, yc - seat.width / 2, seat.surface_height,
                        sx1, yc + seat.width / 2, seat.back_height)
                seats.append(Seat(row, number, group, (xc, yc), cushion, back))
                boxes.extend([cushion, back])
            mounts.append(Mount(row, group, count, (xc, 0.5 * (group_ys[0] + group_ys[-1]), config.height)))

    return Scene(tuple(surfaces), np.array(boxes, dtype=np.float64), tuple(seats), tuple(mounts),
                 config, (first, last))


def element_count(length: float, size: float) -> int:
    # round half up; pitch is then stretched so the elements tile exactly
    return max(1, int(math.floor(length / size + 0.5)))


@dataclass(frozen=True, eq=False)
class SurfaceElement:
    center: np.ndarray
    normal: np.ndarray
    area: float
    reflectivity: float
    surface: int
    emission_order: float = 1.0


class ElementSet(Sequence):
    """Struct-of-arrays view over reflecting elements; indexing yields ``SurfaceElement``."""

    def __init__(self, centers, normals, areas, reflectivity, surface_index):
        self.centers = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
        self.normals = np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 3)
        self.areas = np.ascontiguousarray(areas, dtype=np.float64)
        self.reflectivity = np.ascontiguousarray(reflectivity, dtype=np.float64)
        self.surface_index = np.ascontiguousarray(surface_index, dtype=np.int64)
        n = len(self.areas)
        if not (len(self.centers) == len(self.normals) == len(self.reflectivity) == len(self.surface_index) == n):
            raise ValueError("element arrays differ in length")

    def __len__(self) -> int:
        return len(self.areas)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return ElementSet(self.centers[i], self.normals[i], self.areas[i],
                              self.reflectivity[i], self.surface_index[i])
        return SurfaceElement(self.centers[i].copy(), self.normals[i].copy(), float(self.areas[i]),
                              float(self.reflectivity[i]), int(self.surface_index[i]))

    def __iter__(self) -> Iterator[SurfaceElement]:
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_elements(cls, elements) -> "ElementSet":
        elements = list(elements)
        if not elements:
            return cls(np.empty((0, 3)), np.empty((0, 3)), [], [], [])
        return cls([e.center for e in elements], [e.normal for e in elements], [e.area for e in elements],
                   [e.reflectivity for e in elements], [e.surface for e in elements])

    def with_reflectivity(self, values) -> "ElementSet":
        return ElementSet(self.centers, self.normals, self.areas,
                          np.broadcast_to(values, self.areas.shape), self.surface_index)


def subdivide_surface(surface: Surface, size: float):
    lu, lv = surface.lengths
    nu, nv = element_count(lu, size), element_count(lv, size)
    u = np.asarray(surface.edge_u, dtype=np.float64)
    v = np.asarray(surface.edge_v, dtype=np.float64)
    a = (np.arange(nu) + 0.5) / nu
    b = (np.arange(nv) + 0.5) / nv
    aa, bb = np.meshgrid(a, b, indexing="ij")
    centers = np.asarray(surface.origin, dtype=np.float64) + aa.reshape(-1, 1) * u + bb.reshape(-1, 1) * v
    # pin the constant coordinate so centres sit exactly on the plane
    axis = int(np.argmax(np.abs(surface.normal)))
    centers[:, axis] = surface.origin[axis]
    area = (lu / nu) * (lv / nv)
    return centers, np.full(nu * nv, area)


def subdivide(scene: Scene, sizes: SubdivisionSpec, order: str = "first") -> ElementSet:
    """Tile every boundary surface with elements of the size assigned to ``order``.

    Elements below seats are still produced; the occlusion test removes them
    from every path, which keeps the tiling identity exact.
    """
    if order not in ("first", "second"):
        raise ValueError("order must be 'first' or 'second'")
    size = sizes.first_order_element if order == "first" else sizes.second_order_element
    centers, normals, areas, rho, idx = [], [], [], [], []
    for k, surf in enumerate(scene.surfaces):
        c, a = subdivide_surface(surf, size)
        centers.append(c)
        normals.append(np.broadcast_to(np.asarray(surf.normal, dtype=np.float64), c.shape))
        areas.append(a)
        rho.append(np.full(len(a), surf.reflectivity))
        idx.append(np.full(len(a), k))
    return ElementSet(np.concatenate(centers), np.concatenate(normals), np.concatenate(areas),
                      np.concatenate(rho), np.concatenate(idx))


# ---------------------------------------------------------------------------
# occlusion


class _BoxGrid:
    """Uniform bucketing of occluder boxes along x (CSR layout) for the segment test."""

    def __init__(self, boxes: np.ndarray, cell: float = 0.5):
        self.boxes = boxes
        if len(boxes) == 0:
            self.x0, self.cell = 0.0, 1.0
            self.starts = np.zeros(2, dtype=np.int64)
            self.items = np.zeros(0, dtype=np.int64)
            self.ztop = -np.inf
            return
        self.x0 = float(boxes[:, 0].min())
        self.cell = cell
        ncell = max(1, int(math.ceil((boxes[:, 3].max() - self.x0) / cell)) + 1)
        buckets: list[list[int]] = [[] for _ in range(ncell)]
        for i, b in enumerate(boxes):
            lo = int((b[0] - self.x0) // cell)
            hi = min(ncell - 1, int((b[3] - self.x0) // cell))
            for c in range(lo, hi + 1):
                buckets[c].append(i)
        self.starts = np.zeros(ncell + 1, dtype=np.int64)
        self.starts[1:] = np.cumsum([len(b) for b in buckets])
        self.items = np.array([i for b in buckets for i in b], dtype=np.int64)
        self.ztop = float(boxes[:, 5].max())

    def args(self):
        return self.boxes, self.starts, self.items, self.x0, self.cell, self.ztop


@njit(cache=True, nogil=True)
def _segment_hits_box(p, d, box):
    # open segment p + t*d, t in (0, 1), against the open box interior
    tmin = 0.0
    tmax = 1.0
    for a in range(3):
        lo = box[a]
        hi = box[a + 3]
        if d[a] == 0.0:
            if not (lo < p[a] < hi):
                return False
        else:
            t1 = (lo - p[a]) / d[a]
            t2 = (hi - p[a]) / d[a]
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin >= tmax:
                return False
    return tmin < tmax


@njit(cache=True, nogil=True)
def segment_blocked(p, q, boxes, starts, items, x0, cell, ztop):
    if p[2] >= ztop and q[2] >= ztop:
        return False
    # canonical endpoint order makes the test exactly symmetric
    swap = False
    for a in range(3):
        if p[a] != q[a]:
            swap = p[a] > q[a]
            break
    a0 = q if swap else p
    a1 = p if swap else q
    d = np.empty(3)
    for a in range(3):
        d[a] = a1[a] - a0[a]
    # restrict the bucket scan to the part of the segment below the box tops
    ta, tb = 0.0, 1.0
    if d[2] != 0.0:
        tz = (ztop - a0[2]) / d[2]
        if d[2] > 0.0:
            tb = min(tb, tz)
        else:
            ta = max(ta, tz)
    xa = a0[0] + ta * d[0]
    xb = a0[0] + tb * d[0]
    if xa > xb:
        xa, xb = xb, xa
    ncell = starts.shape[0] - 1
    c0 = int(math.floor((xa - x0) / cell))
    c1 = int(math.floor((xb - x0) / cell))
    if c1 < 0 or c0 >= ncell:
        return False
    c0 = max(c0, 0)
    c1 = min(c1, ncell - 1)
    for c in range(c0, c1 + 1):
        for k in range(starts[c], starts[c + 1]):
            if _segment_hits_box(a0, d, boxes[items[k]]):
                return True
    return False


@njit(cache=True, nogil=True)
def points_visible_from(origin, points, boxes, starts, items, x0, cell, ztop):
    out = np.empty(points.shape[0], dtype=np.bool_)
    for i in range(points.shape[0]):
        out[i] = not segment_blocked(origin, points[i], boxes, starts, items, x0, cell, ztop)
    return out


def visible(p, q, scene: Scene) -> bool:
    """True when the open segment ``p``-``q`` clears every seat occluder."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.array_equal(p, q):
        raise ValueError("visibility needs two distinct points")
    return not segment_blocked(p, q, *scene._grid.args())


def visible_from(origin, points, scene: Scene) -> np.ndarray:
    """Vectorised ``visible(origin, points[i])``."""
    return points_visible_from(np.asarray(origin, dtype=np.float64),
                               np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3),
                               *scene._grid.args())
