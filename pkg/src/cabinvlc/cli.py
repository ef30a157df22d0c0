"""Command-line front end: ``cabinvlc simulate`` and ``cabinvlc plot``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load, resolve
from .plotting import line_chart
from .simulation import IR_COLUMNS, REPORT_COLUMNS, fmt, report_rows, run

log = logging.getLogger("cabinvlc")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cabinvlc", description="Aircraft-cabin visible-light link simulator")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="trace a cabin slice and write per-seat link reports")
    s.add_argument("--config", help="TOML configuration (defaults apply to anything omitted)")
    s.add_argument("--rows", help="inclusive 1-based row span, e.g. 1..4")
    s.add_argument("--receiver", choices=("adr", "imr", "both"))
    s.add_argument("--combiner", choices=("sc", "mrc", "both"), default="both")
    rate = s.add_mutually_exclusive_group()
    rate.add_argument("--bitrate", type=float, metavar="GBPS", help="bit rate at which SINR/BER are evaluated")
    rate.add_argument("--find-max-rate", action="store_true",
                      help="also search the highest bit rate meeting the target BER")
    s.add_argument("--dump-ir", action="store_true", help="write impulse responses under <out>/ir/")
    s.add_argument("--threads", type=int, help="number of branch partitions traced concurrently")
    s.add_argument("--out", required=True, help="output directory")

    pl = sub.add_parser("plot", help="render delay-spread and SINR charts from a report CSV")
    pl.add_argument("--reports", required=True)
    pl.add_argument("--out", required=True)
    return p


def _raw_config(args) -> dict:
    raw = load(args.config) if args.config else {}
    overrides = {
        ("run", "rows"): args.rows,
        ("receiver", "kind"): args.receiver,
        ("analysis", "bitrate_gbps"): args.bitrate,
        ("run", "threads"): args.threads,
    }
    for (sec, key), value in overrides.items():
        if value is not None:
            raw.setdefault(sec, {})[key] = value
    return raw


def simulate(args) -> int:
    try:
        config = resolve(_raw_config(args))
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    combiners = ("sc", "mrc") if args.combiner == "both" else (args.combiner,)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        result = run(config, find_max_rate=args.find_max_rate, dump_ir=args.dump_ir)

        with open(out / "link_reports.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            w.writerows(report_rows(result.reports, combiners))
        with open(out / "branch_sinr.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("seat", "receiver", "output", "sinr"))
            for r in result.reports:
                w.writerows((r.seat, r.receiver, j, fmt(v)) for j, v in enumerate(r.branch_sinr))
        if args.dump_ir:
            (out / "ir").mkdir(exist_ok=True)
            for (kind, seat), rows in result.impulse_responses.items():
                with open(out / "ir" / f"{kind}_{seat}.csv", "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(IR_COLUMNS)
                    w.writerows((u, b, j, k, fmt(t), fmt(p)) for u, b, j, k, t, p in rows)
        meta = {
            "version": __version__,
            "config": config.resolved,
            "combiners": list(combiners),
            "find_max_rate": bool(args.find_max_rate),
            "dump_ir": bool(args.dump_ir),
        }
        with open(out / "run_metadata.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status
        log.debug("simulation failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %d report rows to %s", len(result.reports) * len(combiners), out)
    return EXIT_OK


def read_reports(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(REPORT_COLUMNS)}")
        rows = []
        for n, rec in enumerate(reader, start=2):
            if len(rec) != len(REPORT_COLUMNS):
                raise ValueError(f"{path}:{n}: expected {len(REPORT_COLUMNS)} fields")
            row = dict(zip(REPORT_COLUMNS, rec))
            try:
                row["sinr_db"] = float(row["sinr_db"])
                row["delay_spread_ns"] = float(row["delay_spread_ns"])
            except ValueError:
                raise ValueError(f"{path}:{n}: non-numeric value") from None
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no report rows")
    return rows


def plot(args) -> int:
    try:
        rows = read_reports(args.reports)
    except OSError as exc:
        print(f"error: cannot read reports: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: malformed reports: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seats: dict = {}
    delay: dict = {}
    snr: dict = {}
    for row in rows:
        x = seats.setdefault(row["seat"], len(seats))
        ds = delay.setdefault(row["receiver"].upper(), {})
        ds.setdefault(x, row["delay_spread_ns"])
        snr.setdefault(f"{row['receiver'].upper()} {row['combiner'].upper()}", []).append((x, row["sinr_db"]))
    delay_series = {name: sorted(pts.items()) for name, pts in delay.items()}
    delay_series = {k: [(x, y if math.isfinite(y) else float("nan")) for x, y in v]
                    for k, v in delay_series.items()}

    out = Path(args.out)
    try:
        ds_svg = line_chart(delay_series, "RMS delay spread", "seat index", "delay spread (ns)")
        sinr_svg = line_chart(snr, "SINR", "seat index", "SINR (dB)")
        out.mkdir(parents=True, exist_ok=True)
        (out / "delay_spread.svg").write_text(ds_svg)
        (out / "sinr.svg").write_text(sinr_svg)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return simulate(args) if args.command == "simulate" else plot(args)


if __name__ == "__main__":
    sys.exit(main())
