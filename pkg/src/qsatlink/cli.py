"""Command-line entry point: ``qsatlink <command> [options]``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical
failure, 3 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .channel import (LossProfile, ParseError, NonMonotonicTime, LossOutOfRange,
                      ElevationBelowTable, export_loss_csv, ingest_loss_csv, loss_profile)
from .config import ConfigError, ScenarioConfig, load_config
from .optimizer import NoFeasiblePoint
from .orbitpass import NoVisibility, pass_geometry
from .passsim import (ApertureRow, CalibrationError, QkdRecord, QkpcRecord,
                      aperture_sweep, calibrate_intrinsic_loss, optimize_profile,
                      qkd_records, qkd_summary, qkpc_records, qkpc_summary, zenith_loss_db)
from .qkpc import OptimizerFailure
from .validation import format_table, run_validation

log = logging.getLogger("qsatlink")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3
DEFAULT_APERTURES = tuple(round(0.02 + 0.01 * k, 2) for k in range(11))

INPUT_ERRORS = (ConfigError, ParseError, NonMonotonicTime, LossOutOfRange,
                ElevationBelowTable, NoVisibility, OSError)
NUMERIC_ERRORS = (CalibrationError, OptimizerFailure, NoFeasiblePoint, ArithmeticError,
                  ValueError)


def _write_rows(path: Path, rows, row_type) -> None:
    names = [f.name for f in fields(row_type)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([repr(getattr(row, n)) for n in names])


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _scenario_profile(cfg: ScenarioConfig) -> tuple[LossProfile, dict]:
    """Loss profile from the loss CSV override or from the orbit and channel."""
    if cfg.loss_csv:
        profile = ingest_loss_csv(cfg.loss_csv)
        return profile, {"profile_source": "ingested"}
    channel = cfg.channel
    info: dict = {"profile_source": "computed"}
    if cfg.zenith_loss_db is not None:
        channel = calibrate_intrinsic_loss(cfg.orbit, channel, cfg.zenith_loss_db)
        info["calibrated_intrinsic_db"] = channel.intrinsic_loss_db
    geometry = pass_geometry(cfg.orbit)
    info["geometric_window_s"] = geometry.visible_duration_s
    info["zenith_loss_db"] = zenith_loss_db(cfg.orbit, channel)
    return loss_profile(geometry, channel), info


def _plot_pass(out: Path, qkd: list[QkdRecord] | None, qkpc: list[QkpcRecord] | None) -> None:
    from .svgplot import line_chart

    if qkd:
        t = [r.t_s for r in qkd]
        line_chart(out / "skr_vs_time.svg", t, {"SKR [Hz]": [r.skr_hz for r in qkd]},
                   "Secret key rate over the pass", "time from zenith [s]", "SKR [Hz]")
        line_chart(out / "qber_vs_time.svg", t, {"Q_Z [%]": [100 * r.qber_z for r in qkd]},
                   "Key-basis QBER over the pass", "time from zenith [s]", "QBER [%]")
        line_chart(out / "loss_vs_elevation.svg", [r.elevation_deg for r in qkd],
                   {"loss [dB]": [r.loss_db for r in qkd]},
                   "Total loss versus elevation", "elevation [deg]", "loss [dB]")
        line_chart(out / "parameters_vs_time.svg", t,
                   {"mu1": [r.mu1 for r in qkd], "mu2": [r.mu2 for r in qkd],
                    "p_mu1": [r.p_mu1 for r in qkd], "P_Z^A": [r.p_za for r in qkd]},
                   "Optimal protocol parameters", "time from zenith [s]", "value")
    if qkpc:
        t = [r.t_s for r in qkpc]
        line_chart(out / "qkpc_rate_vs_time.svg", t,
                   {"rate [Mbit/s]": [r.qkpc_rate_bps / 1e6 for r in qkpc]},
                   "QKPC rate over the pass", "time from zenith [s]", "rate [Mbit/s]")
        line_chart(out / "qkpc_photons_vs_time.svg", t,
                   {"mu_opt": [r.mu_opt for r in qkpc]},
                   "Optimal photons per pulse", "time from zenith [s]", "mean photon number")


def _run_pass(cfg: ScenarioConfig, args, with_qkd: bool) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile, summary = _scenario_profile(cfg)
    summary["pass_duration_s"] = len(profile) * cfg.window_s
    log.info("%d windows of %g s", len(profile), cfg.window_s)

    qkd = None
    if with_qkd:
        results = optimize_profile(profile, cfg.qkd, seed=cfg.seed, workers=args.workers)
        qkd = qkd_records(profile, results)
        _write_rows(out / "qkd_pass.csv", qkd, QkdRecord)
        summary.update(qkd_summary(qkd, cfg.window_s))

    qkpc = qkpc_records(profile, cfg.qkpc, cfg.source_rate_hz, cfg.qkpc_optimize_q,
                        workers=args.workers)
    _write_rows(out / "qkpc_pass.csv", qkpc, QkpcRecord)
    summary.update(qkpc_summary(qkpc, cfg.window_s))
    if not cfg.loss_csv:
        export_loss_csv(profile, out / "loss_profile.csv")
    _write_json(out / "summary.json", summary)
    if args.plots:
        _plot_pass(out, qkd, qkpc)
    for key in ("total_skl_bits", "qkd_window_s", "peak_skr_hz", "total_private_bits"):
        if key in summary:
            print(f"{key} = {summary[key]}")
    return EXIT_OK


def cmd_simulate_pass(cfg: ScenarioConfig, args) -> int:
    return _run_pass(cfg, args, with_qkd=True)


def cmd_qkpc_profile(cfg: ScenarioConfig, args) -> int:
    return _run_pass(cfg, args, with_qkd=False)


def cmd_aperture_sweep(cfg: ScenarioConfig, args) -> int:
    d_t = args.d_t or list(DEFAULT_APERTURES)
    bad = [d for d in d_t if not d > 0]
    if bad:
        raise ConfigError(f"--d-t: aperture must be > 0, got {bad[0]}")
    channel = cfg.channel
    if cfg.zenith_loss_db is not None:
        # calibrate once at the configured aperture, then hold the constant loss fixed
        channel = calibrate_intrinsic_loss(cfg.orbit, channel, cfg.zenith_loss_db)
    rows = aperture_sweep(d_t, cfg.orbit, channel, cfg.qkd, seed=cfg.seed)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "aperture_sweep.csv", rows, ApertureRow)
    for r in rows:
        print(f"d_t = {r.d_t_m:.3f} m  zenith loss = {r.zenith_loss_db:.2f} dB  "
              f"SKR = {r.skr_hz:.1f} Hz")
    if args.plots:
        from .svgplot import line_chart
        line_chart(out / "aperture_sweep.svg", [r.d_t_m for r in rows],
                   {"SKR [kHz]": [r.skr_hz / 1e3 for r in rows]},
                   "Zenith key rate versus transmitter aperture", "D_T [m]", "SKR [kHz]")
    return EXIT_OK


def cmd_validate(cfg: ScenarioConfig, args) -> int:
    trials = args.trials if args.trials is not None else cfg.trials
    if trials < 10:
        raise ConfigError(f"--trials must be >= 10, got {trials}")
    checks = run_validation(trials, cfg.seed, cfg.detector, cfg.security)
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


COMMANDS = {
    "simulate-pass": cmd_simulate_pass,
    "aperture-sweep": cmd_aperture_sweep,
    "qkpc-profile": cmd_qkpc_profile,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file of 'key = value' lines")
    common.add_argument("--loss-csv", help="use this loss profile instead of the orbit model")
    common.add_argument("--out", help="output directory (overrides run.output_dir)")
    common.add_argument("--seed", type=int, help="run seed (overrides run.seed)")
    common.add_argument("--plots", action="store_true", help="also write SVG charts")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="qsatlink", description="LEO satellite quantum downlink simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate-pass", parents=[common],
                   help="optimized QKD and QKPC rates over one pass")
    sweep = sub.add_parser("aperture-sweep", parents=[common],
                           help="zenith key rate versus transmitter aperture")
    sweep.add_argument("--d-t", type=float, nargs="+", metavar="M",
                       help="transmitter apertures in metres")
    sub.add_parser("qkpc-profile", parents=[common], help="QKPC rates over one pass")
    val = sub.add_parser("validate", parents=[common],
                         help="Monte Carlo containment and property checks")
    val.add_argument("--trials", type=int, help="Monte Carlo runs per check (>= 10)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.loss_csv is not None:
        overrides["run.loss_csv"] = args.loss_csv
    if args.out is not None:
        overrides["run.output_dir"] = args.out
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except INPUT_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
