"""Lambertian emitters, reading-light units and the two receiver front ends."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import Scene, Seat

LENS_COEFFICIENTS = (-0.1982, 0.0425, 0.8778)

# (elevation, azimuth) per branch, degrees
SIDE3_ORIENTATIONS = ((-55.0, 180.0), (-90.0, 0.0), (-55.0, 0.0))
MIDDLE4_ORIENTATIONS = ((-65.0, 180.0), (-80.0, 180.0), (-80.0, 0.0), (-65.0, 0.0))
ADR_ORIENTATIONS = ((70.0, 45.0), (70.0, 135.0), (70.0, 225.0), (70.0, 315.0))

# Branch azimuths are given in the reading-light frame, whose x axis runs
# across the cabin; rotating by this yaw maps them into cabin coordinates.
UNIT_YAW_DEG = 90.0


@dataclass(frozen=True)
class Orientation:
    elevation: float
    azimuth: float

    def direction(self) -> np.ndarray:
        el, az = math.radians(self.elevation), math.radians(self.azimuth)
        return np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])


def _yaw(vec: np.ndarray, degrees: float) -> np.ndarray:
    if degrees == 0.0:
        return vec
    c, s = math.cos(math.radians(degrees)), math.sin(math.radians(degrees))
    out = np.array([c * vec[0] - s * vec[1], s * vec[0] + c * vec[1], vec[2]])
    # exact zeros keep axis-aligned beams exactly axis-aligned
    out[np.abs(out) < 1e-15] = 0.0
    return out


def lambertian_order(semi_angle: float) -> float:
    """Lambertian mode number whose intensity halves at ``semi_angle`` degrees."""
    if not 0.0 < semi_angle < 90.0:
        raise ValueError(f"semi-angle must lie in (0, 90) degrees, got {semi_angle}")
    return -math.log(2.0) / math.log(math.cos(math.radians(semi_angle)))


@dataclass(frozen=True)
class Branch:
    position: tuple[float, float, float]
    orientation: Orientation
    semi_angle: float
    power: float = 1.0
    yaw: float = 0.0

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError("branch optical power must be positive")
        lambertian_order(self.semi_angle)

    @property
    def emission_order(self) -> float:
        return lambertian_order(self.semi_angle)

    @property
    def direction(self) -> np.ndarray:
        return _yaw(self.orientation.direction(), self.yaw)


def radiant_intensity(branch: Branch, angle):
    """Generalised Lambertian intensity in W/sr at ``angle`` radians off the beam axis."""
    angle = np.asarray(angle, dtype=np.float64)
    if np.any(angle < 0) or np.any(angle > math.pi / 2 + 1e-15):
        raise ValueError("angle must lie in [0, pi/2]")
    n = branch.emission_order
    out = branch.power * (n + 1) / (2 * math.pi) * np.cos(angle) ** n
    out = np.where(angle >= math.pi / 2, 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TransmitterUnit:
    kind: str
    branches: tuple[Branch, ...]
    name: str = ""

    @classmethod
    def side3(cls, position, power=1.0, semi_angle=14.0, yaw=UNIT_YAW_DEG, name=""):
        return cls("side3", tuple(Branch(tuple(position), Orientation(el, az), semi_angle, power, yaw)
                                  for el, az in SIDE3_ORIENTATIONS), name)

    @classmethod
    def middle4(cls, position, power=1.0, semi_angle=10.0, yaw=UNIT_YAW_DEG, name=""):
        return cls("middle4", tuple(Branch(tuple(position), Orientation(el, az), semi_angle, power, yaw)
                                    for el, az in MIDDLE4_ORIENTATIONS), name)


def place_units(scene: Scene, power: float = 1.0, side_semi_angle: float = 14.0,
                middle_semi_angle: float = 10.0) -> list[TransmitterUnit]:
    """One reading-light unit centred on the ceiling above each seat group, row by row."""
    if scene.config is None or scene.config.layout != (3, 4, 3):
        raise ValueError("reading-light placement supports the 3-4-3 layout only")
    units = []
    for m in scene.mounts:
        name = f"{m.row}-{m.group}"
        if m.size == 3:
            units.append(TransmitterUnit.side3(m.position, power, side_semi_angle, name=name))
        else:
            units.append(TransmitterUnit.middle4(m.position, power, middle_semi_angle, name=name))
    return units


# ---------------------------------------------------------------------------
# receivers


@dataclass(frozen=True)
class Detector:
    position: tuple[float, float, float]
    orientation: Orientation
    area: float = 4e-6
    fov: float = 21.0
    responsivity: float = 0.4

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError("detector area must be positive")
        if not 0.0 < self.fov <= 90.0:
            raise ValueError("detector FOV must lie in (0, 90] degrees")
        if not self.responsivity > 0:
            raise ValueError("responsivity must be positive")

    @property
    def normal(self) -> np.ndarray:
        return self.orientation.direction()


def _geometry(position, src_pos, src_axis):
    """Distance, emitter cosine and arrival direction (receiver towards source)."""
    v = np.asarray(position, dtype=np.float64) - np.asarray(src_pos, dtype=np.float64).reshape(-1, 3)
    d = np.sqrt(np.einsum("ij,ij->i", v, v))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = v / d[:, None]
    cos_phi = np.einsum("ij,ij->i", np.asarray(src_axis, dtype=np.float64).reshape(-1, 3), u)
    return d, cos_phi, -u


def _lambert_factor(order, cos_phi, d):
    order = np.broadcast_to(np.asarray(order, dtype=np.float64), cos_phi.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = (order + 1.0) * np.maximum(cos_phi, 0.0) ** order / (2.0 * math.pi * d * d)
    return np.where((cos_phi > 0) & (d > 0), f, 0.0)


def los_gain(emitter, detector: Detector) -> float:
    """Fraction of an emitter's power collected by ``detector`` on the direct path.

    ``emitter`` is a ``(position, unit_normal, order)`` triple; a ``Branch`` is
    also accepted.
    """
    if isinstance(emitter, Branch):
        pos, axis, n = emitter.position, emitter.direction, emitter.emission_order
    else:
        pos, axis, n = emitter
    return float(DetectorArray((detector,)).gain_matrix(pos, axis, n)[0][0, 0])


class DetectorArray:
    """Co-located photodetectors with individual orientation and field of view."""

    kind = "detectors"

    def __init__(self, detectors):
        self.detectors = tuple(detectors)
        if not self.detectors:
            raise ValueError("a receiver needs at least one detector")
        self.position = np.asarray(self.detectors[0].position, dtype=np.float64)
        self.normals = np.array([d.normal for d in self.detectors])
        self.areas = np.array([d.area for d in self.detectors])
        self.fovs = np.radians([d.fov for d in self.detectors])
        self.responsivity = self.detectors[0].responsivity

    @property
    def n_outputs(self) -> int:
        return len(self.detectors)

    def gain_matrix(self, src_pos, src_axis, src_order):
        """Per-detector gains ``(M, J)`` and distances ``(M,)`` for M emitters."""
        d, cos_phi, arrival = _geometry(self.position, src_pos, src_axis)
        cos_theta = arrival @ self.normals.T
        theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
        accept = (cos_theta > 0) & (theta <= self.fovs)
        g = _lambert_factor(src_order, cos_phi, d)[:, None] * self.areas * cos_theta
        return np.where(accept, g, 0.0), d


class AdrReceiver(DetectorArray):
    kind = "adr"

    def __init__(self, detectors):
        super().__init__(detectors)
        if len(self.detectors) != 4:
            raise ValueError("an angle diversity receiver has exactly four branches")

    @classmethod
    def standard(cls, position, area=4e-6, fov=21.0, responsivity=0.4):
        pos = tuple(float(c) for c in position)
        return cls(Detector(pos, Orientation(el, az), area, fov, responsivity) for el, az in ADR_ORIENTATIONS)


def lens_transmission(incidence, fov: float = 40.0):
    """Transmission of the imaging lens at ``incidence`` radians; zero outside the FOV."""
    y = np.asarray(incidence, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("incidence angle must be non-negative")
    a, b, c = LENS_COEFFICIENTS
    tc = np.clip(a * y * y + b * y + c, 0.0, 1.0)
    tc = np.where(y <= math.radians(fov), tc, 0.0)
    return float(tc) if tc.ndim == 0 else tc


def _pixel_index(ax, ay, az, fov, grid):
    s = math.sin(fov)
    width = 2 * s / grid
    inside = (az > 0) & (np.arccos(np.clip(az, -1.0, 1.0)) <= fov)
    col = np.floor((ax + s) / width)
    row = np.floor((ay + s) / width)
    inside &= (col >= 0) & (col < grid) & (row >= 0) & (row < grid)
    idx = np.where(inside, row * grid + col, -1)
    return idx.astype(np.int64)


@dataclass(frozen=True, eq=False)
class ImrReceiver:
    """Pixel array behind one upward-facing lens; arrival direction picks the pixel.

    Pixels tile a ``grid x grid`` square over the direction-cosine plane
    ``(sin Y cos a, sin Y sin a)``, clipped to the FOV disk.
    """

    position: tuple[float, float, float]
    fov: float = 40.0
    pixel_area: float = 4e-6
    responsivity: float = 0.4
    grid: int = 5

    kind = "imr"

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        if not 0.0 < self.fov < 90.0:
            raise ValueError("imaging receiver FOV must lie in (0, 90) degrees")

    @property
    def n_outputs(self) -> int:
        return self.grid * self.grid

    def pixel_cell(self, index: int) -> tuple[float, float, float, float]:
        """``(u_lo, u_hi, v_lo, v_hi)`` of a pixel in direction-cosine space."""
        s = math.sin(math.radians(self.fov))
        w = 2 * s / self.grid
        row, col = divmod(index, self.grid)
        return -s + col * w, -s + (col + 1) * w, -s + row * w, -s + (row + 1) * w

    def gain_matrix(self, src_pos, src_axis, src_order):
        d, cos_phi, arrival = _geometry(self.position, src_pos, src_axis)
        fov = math.radians(self.fov)
        idx = _pixel_index(arrival[:, 0], arrival[:, 1], arrival[:, 2], fov, self.grid)
        cos_y = arrival[:, 2]
        y = np.arccos(np.clip(cos_y, -1.0, 1.0))
        g = _lambert_factor(src_order, cos_phi, d) * self.pixel_area * cos_y * lens_transmission(y, self.fov)
        out = np.zeros((len(d), self.n_outputs))
        hit = idx >= 0
        out[np.nonzero(hit)[0], idx[hit]] = g[hit]
        return out, d


def pixel_for_direction(arrival, receiver: ImrReceiver):
    """Pixel index that a unit arrival direction (receiver frame) lands on, or None."""
    a = np.asarray(arrival, dtype=np.float64)
    if abs(float(np.linalg.norm(a)) - 1.0) > 1e-9:
        raise ValueError("arrival direction must be a unit vector")
    idx = _pixel_index(a[0:1], a[1:2], a[2:3], math.radians(receiver.fov), receiver.grid)[0]
    return None if idx < 0 else int(idx)


@dataclass(frozen=True)
class ReceiverSettings:
    height_above_seat: float = 0.30
    offset_x: float = 0.0
    offset_y: float = 0.0
    responsivity: float = 0.4
    area: float = 4e-6
    adr_fov: float = 21.0
    imr_fov: float = 40.0
    imr_grid: int = 5

    def __post_init__(self):
        if self.height_above_seat <= 0:
            raise ValueError("receiver.height_above_seat must be positive")


def place_receiver(kind: str, seat: Seat, scene: Scene, settings: ReceiverSettings | None = None):
    """Receiver above the seat cushion, facing the ceiling."""
    settings = settings or ReceiverSettings()
    z = scene.config.seat.surface_height + settings.height_above_seat
    pos = (seat.center[0] + settings.offset_x, seat.center[1] + settings.offset_y, z)
    if kind == "adr":
        return AdrReceiver.standard(pos, settings.area, settings.adr_fov, settings.responsivity)
    if kind == "imr":
        return ImrReceiver(pos, settings.imr_fov, settings.area, settings.responsivity, settings.imr_grid)
    raise ValueError(f"unknown receiver kind {kind!r}")
