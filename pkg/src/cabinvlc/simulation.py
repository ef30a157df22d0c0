"""Per-seat sweep: build the slice, trace every seat's receiver, evaluate the link."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import LinkReport, evaluate_link
from .channel import Tracer
from .config import SimulationConfig
from .optics import place_receiver, place_units
from .scene import build_scene, subdivide

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("seat", "receiver", "combiner", "sinr_db", "ber", "delay_spread_ns", "max_rate_gbps")
IR_COLUMNS = ("unit", "branch", "detector", "bin_index", "time_s", "power_w")


@dataclass
class SimulationResult:
    reports: list[LinkReport]
    impulse_responses: dict = field(default_factory=dict)


def run(config: SimulationConfig, receivers=None, find_max_rate=False, dump_ir=False,
        observer=None) -> SimulationResult:
    """Trace and evaluate every seat of the configured slice.

    ``observer(kind, seat, hist, report)`` is called once per link with the
    (branch, output, bin) histogram, which is otherwise discarded.
    """
    receivers = tuple(receivers or config.receiver_kinds)
    scene = build_scene(config.cabin, config.rows)
    fine = subdivide(scene, config.subdivision, "first") if config.max_order >= 1 else None
    coarse = subdivide(scene, config.subdivision, "second") if config.max_order == 2 else None
    units = place_units(scene, config.power_w, config.side_semi_angle, config.middle_semi_angle)
    log.info("slice rows %d..%d: %d seats, %d branches, %s fine / %s coarse elements",
             *config.rows, len(scene.seats), sum(len(u.branches) for u in units),
             len(fine) if fine is not None else 0, len(coarse) if coarse is not None else 0)
    tracer = Tracer(scene, units, fine, coarse, config.max_order, config.subdivision.time_bin, config.threads)

    result = SimulationResult([])
    for kind in receivers:
        for seat in scene.seats:
            receiver = place_receiver(kind, seat, scene, config.receiver)
            hist = tracer.histograms(receiver)
            report = evaluate_link(hist, config.subdivision.time_bin, tracer.labels, seat.label, kind,
                                   receiver.responsivity, config.noise, config.bitrate, config.weighting,
                                   find_max_rate, config.target_ber)
            result.reports.append(report)
            if observer is not None:
                observer(kind, seat, hist, report)
            if dump_ir:
                result.impulse_responses[(kind, seat.label)] = _ir_rows(hist, tracer.labels,
                                                                        config.subdivision.time_bin)
            log.debug("%s %s: SC %.3g MRC %.3g", kind, seat.label, report.sinr_sc, report.sinr_mrc)
    return result


def _ir_rows(hist, labels, dt):
    rows = []
    for b, j, k in zip(*np.nonzero(hist)):
        unit, branch = labels[b]
        rows.append((unit, branch, int(j), int(k), k * dt, float(hist[b, j, k])))
    return rows


def fmt(value) -> str:
    """Round-trippable, platform-stable float text."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def sinr_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else float("-inf")


def report_rows(reports, combiners=("sc", "mrc")):
    rows = []
    for r in reports:
        for comb in combiners:
            value = r.sinr_sc if comb == "sc" else r.sinr_mrc
            error = r.ber_sc if comb == "sc" else r.ber_mrc
            rate = r.max_rate_sc if comb == "sc" else r.max_rate_mrc
            rows.append((r.seat, r.receiver, comb, fmt(sinr_db(value)), fmt(error),
                         fmt(r.delay_spread * 1e9), fmt(None if rate is None else rate / 1e9)))
    return rows
