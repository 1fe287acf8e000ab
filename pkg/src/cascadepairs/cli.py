"""Command-line entry point: ``cascadepairs <verb> [options]``."""

import argparse
import json
import sys
from pathlib import Path

from . import experiment
from .photonstream import read_clickstream
from .tia import analyze, build_histogram, write_histogram_csv, write_result_csv


def _powers(text):
    return [float(v) * 1e-3 for v in text.split(",") if v.strip()]


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration (defaults are built in)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="base seed (u64)")
    common.add_argument("--powers", type=_powers, help="comma-separated pump powers, mW")
    common.add_argument("--duration", type=float, help="acquisition time per run, s")
    common.add_argument("--bin-width", type=float, help="histogram bin width, ps")
    common.add_argument("--workers", type=int, help="parallel processes for sweeps")

    parser = argparse.ArgumentParser(prog="cascadepairs", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("calibrate", parents=[common], help="calibrate dispersion and background")
    sub.add_parser("shg-sweep", parents=[common], help="SHG tuning curve versus pump wavelength")
    sub.add_parser("power-sweep", parents=[common], help="Monte Carlo sweep over pump power")
    single = sub.add_parser("single-point", parents=[common], help="one operating point")
    single.add_argument("--power", type=float, help="pump power, mW (default: operating point)")
    single.add_argument("--write-streams", action="store_true", help="also write click streams")
    an = sub.add_parser("analyze", parents=[common], help="analyse two click-stream files")
    an.add_argument("signal", type=Path)
    an.add_argument("idler", type=Path)
    return parser


def _config(args):
    overrides = {}
    if args.bin_width is not None:
        overrides.setdefault("run", {})["bin_width_ps"] = args.bin_width
    if args.workers is not None:
        overrides.setdefault("run", {})["workers"] = args.workers
    return experiment.load_config(args.config, overrides)


def _seeds(args, config):
    if args.seed is None:
        return config.run.seeds
    return tuple(args.seed + k for k in range(len(config.run.seeds)))


def _run(args):
    config = _config(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.verb == "calibrate":
        summary = experiment.calibrate(config)
        (out / "calibration.json").write_text(json.dumps(summary, indent=2) + "\n")
        return summary
    if args.verb == "shg-sweep":
        result = experiment.run_shg_sweep(config)
        experiment.write_sweep(result, out, "shg_sweep")
        return result.fits
    if args.verb == "power-sweep":
        result = experiment.run_power_sweep(config, args.powers, args.duration, _seeds(args, config))
        experiment.write_sweep(result, out, "power_sweep")
        return result.fits
    if args.verb == "single-point":
        power = None if args.power is None else args.power * 1e-3
        point = experiment.run_single_point(config, power, args.duration, _seeds(args, config)[0],
                                            keep_streams=args.write_streams)
        experiment.write_single_point(point, out, args.write_streams)
        return {"net_rate_per_s": point.result.net_rate, "car": point.result.car,
                "peak_delay_s": point.result.peak_delay, "fwhm_s": point.result.peak_fwhm}
    if args.verb == "analyze":
        signal, idler = read_clickstream(args.signal), read_clickstream(args.idler)
        hist = build_histogram(signal, idler, config.run.bin_width, config.run.window)
        result = analyze(hist, config.run.peak_exclusion_half_width)
        write_histogram_csv(hist, out / "histogram.csv")
        write_result_csv(result, out / "result.csv")
        return {"net": result.net_coincidences, "car": result.car,
                "peak_delay_s": result.peak_delay, "fwhm_s": result.peak_fwhm}
    raise ValueError(f"unknown verb {args.verb}")


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        summary = _run(args)
    except Exception as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "verb": args.verb}
        print(json.dumps(record), file=sys.stderr)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "error.json").write_text(json.dumps(record) + "\n")
        except OSError:
            pass
        return 1
    print(json.dumps(summary, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
