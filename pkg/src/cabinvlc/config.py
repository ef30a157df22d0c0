"""TOML run configuration: schema, defaults and validation.

Every key is optional. Unknown sections or keys, wrong types and
out-of-range values raise ``ConfigError`` naming the offending field.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import NoiseParams
from .optics import ReceiverSettings
from .scene import CabinConfig, Reflectivity, SeatGeometry, SubdivisionSpec, parse_span


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


_NUM = (int, float)

SCHEMA: dict[str, dict[str, tuple]] = {
    "cabin": {
        "length": (_NUM, 57.0), "width": (_NUM, 6.37), "height": (_NUM, 2.41), "rows": (int, 54),
        "layout": (list, [3, 4, 3]), "row_pitch": (_NUM, 0.81), "wall_clearance": (_NUM, 0.20),
        "front_margin": (_NUM, None),
    },
    "seat": {
        "width": (_NUM, 0.50), "depth": (_NUM, 0.60), "surface_height": (_NUM, 0.45),
        "back_height": (_NUM, 1.10), "back_thickness": (_NUM, 0.10),
    },
    "subdivision": {
        "first_order_element": (_NUM, 0.05), "second_order_element": (_NUM, 0.20), "time_bin": (_NUM, 5e-11),
    },
    "reflectivity": {
        "ceiling": (_NUM, 0.8), "side_walls": (_NUM, 0.8), "floor": (_NUM, 0.3), "end_walls": (_NUM, 0.3),
    },
    "transmitter": {
        "power_w": (_NUM, 1.0), "side_semi_angle": (_NUM, 14.0), "middle_semi_angle": (_NUM, 10.0),
    },
    "receiver": {
        "kind": (str, "both"), "height_above_seat": (_NUM, 0.30), "offset_x": (_NUM, 0.0),
        "offset_y": (_NUM, 0.0), "responsivity": (_NUM, 0.4), "area": (_NUM, 4e-6),
        "adr_fov": (_NUM, 21.0), "imr_fov": (_NUM, 40.0), "imr_grid": (int, 5),
    },
    "noise": {
        "preamp_density": (_NUM, 4.5e-12), "background_current": (_NUM, 10e-6),
    },
    "analysis": {
        "bitrate_gbps": (_NUM, 10.0), "target_ber": (_NUM, 1e-9),
        "delay_spread_weighting": (str, "power_squared"), "max_order": (int, 2),
    },
    "run": {
        "rows": (str, "1..4"), "threads": (int, 1),
    },
}

CHOICES = {
    ("receiver", "kind"): ("adr", "imr", "both"),
    ("analysis", "delay_spread_weighting"): ("power_squared", "power"),
    ("analysis", "max_order"): (0, 1, 2),
}


def defaults() -> dict:
    return {sec: {k: copy.deepcopy(v[1]) for k, v in keys.items()} for sec, keys in SCHEMA.items()}


def _check_type(field, value, kind):
    if kind is _NUM:
        ok = isinstance(value, _NUM) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        name = "number" if kind is _NUM else kind.__name__
        raise ConfigError(field, f"expected {name}, got {type(value).__name__}")


def merge(raw: dict) -> dict:
    """Overlay ``raw`` on the defaults, checking names and types."""
    data = defaults()
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    for sec, table in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        if not isinstance(table, dict):
            raise ConfigError(sec, "expected a table")
        for key, value in table.items():
            field = f"{sec}.{key}"
            if key not in SCHEMA[sec]:
                raise ConfigError(field, "unknown key")
            _check_type(field, value, SCHEMA[sec][key][0])
            choices = CHOICES.get((sec, key))
            if choices is not None and value not in choices:
                raise ConfigError(field, f"must be one of {', '.join(map(str, choices))}")
            if key == "layout" and not all(isinstance(v, int) and v > 0 for v in value):
                raise ConfigError(field, "expected a list of positive integers")
            data[sec][key] = value
    return data


@dataclass(frozen=True)
class SimulationConfig:
    cabin: CabinConfig
    subdivision: SubdivisionSpec
    receiver: ReceiverSettings
    receiver_kind: str
    noise: NoiseParams
    power_w: float
    side_semi_angle: float
    middle_semi_angle: float
    bitrate: float
    target_ber: float
    weighting: str
    max_order: int
    rows: tuple[int, int]
    threads: int
    resolved: dict

    @property
    def receiver_kinds(self) -> tuple[str, ...]:
        return ("adr", "imr") if self.receiver_kind == "both" else (self.receiver_kind,)


def _build(section, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        field = msg.split(" ", 1)[0] if "." in msg.split(" ", 1)[0] else section
        raise ConfigError(field, msg) from None


def resolve(raw: dict | None = None) -> SimulationConfig:
    data = merge(raw or {})
    c, s, r = data["cabin"], data["seat"], data["receiver"]
    seat = _build("seat", SeatGeometry, **s)
    refl = _build("reflectivity", Reflectivity, **data["reflectivity"])
    cabin = _build("cabin", CabinConfig, length=c["length"], width=c["width"], height=c["height"],
                   rows=c["rows"], layout=tuple(c["layout"]), row_pitch=c["row_pitch"],
                   wall_clearance=c["wall_clearance"], front_margin=c["front_margin"], seat=seat,
                   reflectivity=refl)
    sub = _build("subdivision", SubdivisionSpec, **data["subdivision"])
    recv = _build("receiver", ReceiverSettings, **{k: v for k, v in r.items() if k != "kind"})
    noise = _build("noise", NoiseParams, **data["noise"])
    t, a, run = data["transmitter"], data["analysis"], data["run"]
    for field, value in (("transmitter.power_w", t["power_w"]), ("analysis.bitrate_gbps", a["bitrate_gbps"]),
                         ("run.threads", run["threads"])):
        if not value > 0:
            raise ConfigError(field, "must be positive")
    for field, value in (("transmitter.side_semi_angle", t["side_semi_angle"]),
                         ("transmitter.middle_semi_angle", t["middle_semi_angle"])):
        if not 0 < value < 90:
            raise ConfigError(field, "must lie in (0, 90) degrees")
    if not 0 < a["target_ber"] < 0.5:
        raise ConfigError("analysis.target_ber", "must lie in (0, 0.5)")
    try:
        rows = parse_span(run["rows"])
    except ValueError as exc:
        raise ConfigError("run.rows", str(exc)) from None
    if rows[1] < rows[0] or rows[0] < 1 or rows[1] > cabin.rows:
        raise ConfigError("run.rows", f"span {run['rows']} outside 1..{cabin.rows} or empty")
    return SimulationConfig(cabin, sub, recv, r["kind"], noise, float(t["power_w"]), float(t["side_semi_angle"]),
                            float(t["middle_semi_angle"]), float(a["bitrate_gbps"]) * 1e9, float(a["target_ber"]),
                            a["delay_spread_weighting"], a["max_order"], rows, run["threads"], data)


def load(path: str | Path) -> dict:
    """Parse a TOML file; ``OSError`` / ``ConfigError`` on failure."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"invalid TOML: {exc}") from None
