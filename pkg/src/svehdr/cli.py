"""Batch pipeline driver: simulate | calibrate | reconstruct | evaluate.

Configuration precedence is command-line flags over a JSON config file
over built-in defaults; the effective configuration is echoed into every
output directory for provenance. Exit codes are a stable contract:
0 success, 2 usage/config, 3 I/O or format, 4 calibration insufficiency,
5 profile mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io as svio
from .calib import ExposureSeries, calibrate_from_radiometric, measure_radiometric
from .cfa import RGGB, RawFrame, decompose, roles_for_wavelength
from .errors import (CalibrationError, ConfigError, EolMismatchError,
                     FormatError, SveHdrError)
from .linearize import dynamic_range_db, linearize
from .metrics import evaluate_run
from .simcam import SensorModel, expose, flatfield_times, make_flatfield, make_test_chart
from .sve import construct, from_values, usage_fractions

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CALIBRATION = 4
EXIT_PROFILE_MISMATCH = 5

ENV_OUT_ROOT = "SVEHDR_OUT_ROOT"


@dataclass
class RunConfig:
    illuminant_nm: float = 625.0
    eol: int = 3400
    green_policy: str = "average"
    order_radiometric: int = 7
    order_alpha: int = 7
    linear_margin: float = 0.9
    noise_floor: float = 1.0
    seed: int = 0
    roi: list | None = None
    bit_depth: int = 12
    gain: float = 1000.0
    alpha_source: str = "measured"


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable config file: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key, value in doc.items():
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


def _out_dir(args: argparse.Namespace) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    else:
        out = Path(os.environ.get(ENV_OUT_ROOT, ".")) / "svehdr_out"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path, extra: dict) -> None:
    doc = dict(asdict(cfg))
    doc.update(extra)
    (out / "effective_config.json").write_text(
        json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _require_inputs(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise ConfigError(f"input {p} does not exist")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if not (args.flatfield or args.chart):
        raise ConfigError("nothing to simulate: pass --flatfield and/or --chart")
    roles = roles_for_wavelength(cfg.illuminant_nm)
    sensor = SensorModel(gain=cfg.gain, eol=cfg.eol, bit_depth=cfg.bit_depth,
                         read_noise_sigma=args.noise_sigma,
                         shot_noise=args.shot_noise, shoulder=args.shoulder,
                         seed=cfg.seed)
    out = _out_dir(args)
    _echo_config(cfg, out, {
        "command": "simulate", "flatfield": args.flatfield, "chart": args.chart,
        "exposures": args.exposures, "t_min": args.t_min, "t_max": args.t_max,
        "level": args.level, "knee_margin": args.knee_margin,
        "steps": args.steps, "contrast_ratio": args.contrast_ratio,
        "width": args.width, "height": args.height,
        "noise_sigma": args.noise_sigma, "shot_noise": args.shot_noise,
        "shoulder": args.shoulder,
    })

    def sweep():
        if args.exposures == 1:
            return np.array([args.t_min])
        knees = ()
        if args.knee_margin > 0:
            per_second = cfg.gain * args.level
            knees = (cfg.eol / per_second, cfg.eol / (roles.e2 * per_second))
        return flatfield_times(args.t_min, args.t_max, args.exposures,
                               knee_times=knees, knee_margin=args.knee_margin)

    shape = (args.height, args.width)
    if args.flatfield:
        scene = make_flatfield(args.level, shape)
        entries = []
        for i, t in enumerate(sweep()):
            name = f"ff_{i:03d}.pgm"
            svio.write_raw16(expose(scene, sensor, RGGB, roles, float(t)),
                             out / name)
            entries.append((float(t), name))
        manifest = svio.ExposureManifest(tuple(entries))
        svio.write_manifest(manifest, out / "manifest.csv")
        print(out / "manifest.csv")
    if args.chart:
        scene, regions = make_test_chart(shape, steps=args.steps,
                                         contrast_ratio=args.contrast_ratio,
                                         peak=args.level)
        entries = []
        for i, t in enumerate(sweep()):
            name = f"chart_{i:03d}.pgm"
            svio.write_raw16(expose(scene, sensor, RGGB, roles, float(t)),
                             out / name)
            entries.append((float(t), name))
        svio.write_manifest(svio.ExposureManifest(tuple(entries)),
                            out / "chart_manifest.csv")
        (out / "regions.json").write_text(
            json.dumps({"regions": [list(r) for r in regions],
                        "white_index": 0}) + "\n", encoding="utf-8")
        print(out / "chart_manifest.csv")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _require_inputs(args.manifest)
    manifest = svio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    entries = [(t, svio.read_raw16(base / rel, bit_depth=cfg.bit_depth))
               for t, rel in manifest.entries]
    series = ExposureSeries(tuple(entries))
    roles = roles_for_wavelength(cfg.illuminant_nm)
    roi = tuple(cfg.roi) if cfg.roi else None
    rf = measure_radiometric(series, RGGB, roles, cfg.eol, roi=roi,
                             green_policy=cfg.green_policy)
    profile = calibrate_from_radiometric(
        rf, roles=roles, eol=cfg.eol,
        order_radiometric=cfg.order_radiometric, order_alpha=cfg.order_alpha,
        margin=cfg.linear_margin, alpha_source=cfg.alpha_source)
    out = _out_dir(args)
    _echo_config(cfg, out, {"command": "calibrate", "manifest": str(args.manifest)})
    svio.write_profile(profile, out / "profile.json")
    svio.write_radiometric_csv(rf, out / "radiometric.csv")
    covered = [(tp.tier, tp.v_domain) for tp in profile.alpha_of_value.tiers]
    print(f"line: a={profile.linear.a:.6g} DN/s  b={profile.linear.b:.6g} DN  "
          f"residual_rms={profile.linear.residual_rms:.3g} DN")
    print(f"poly: order={profile.poly.order}  "
          f"rms={profile.poly.rms_residual:.3g} DN  "
          f"monotone={profile.poly.monotone_on_domain}")
    print(f"alpha tiers: {covered}")
    print(out / "profile.json")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _require_inputs(args.frame, args.profile)
    profile = svio.read_profile(args.profile)
    if args.eol is not None and int(args.eol) != profile.eol:
        raise EolMismatchError(
            f"requested eol {args.eol} but profile was calibrated at "
            f"{profile.eol}")
    frame = svio.read_raw16(args.frame, bit_depth=cfg.bit_depth)
    planes = decompose(frame, RGGB, profile.roles, cfg.green_policy)
    sve = construct(planes, profile.eol)
    hdr = linearize(sve, profile, domain_policy=args.policy)
    out = _out_dir(args)
    _echo_config(cfg, out, {"command": "reconstruct", "frame": str(args.frame),
                            "profile": str(args.profile), "policy": args.policy})
    if 3 * profile.eol > 65535:
        raise ConfigError("SVE values exceed the 16-bit container range")
    svio.write_raw16(RawFrame(sve.values.astype(np.uint16), bit_depth=16),
                     out / "sve_values.pgm")
    svio.write_hdr(hdr, out / "linear_hdr.sveh")
    if args.preview:
        svio.write_preview8(hdr, out / "preview.pgm")
    u = usage_fractions(sve)
    print(f"usage: main={u.main:.4f} extra1={u.extra1:.4f} "
          f"extra2={u.extra2:.4f} unrecoverable={u.unrecoverable:.4f}")
    print(f"dynamic range: {dynamic_range_db(hdr, cfg.noise_floor):.2f} dB")
    print(out / "linear_hdr.sveh")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _require_inputs(args.reconstructed, args.reference, args.regions, args.sve)
    recon = svio.read_hdr(args.reconstructed)
    reference = svio.read_hdr(args.reference)
    sve_frame = svio.read_raw16(args.sve, bit_depth=16)
    sve = from_values(sve_frame.samples, cfg.eol)
    try:
        doc = json.loads(Path(args.regions).read_text(encoding="utf-8"))
        regions = [tuple(r) for r in doc["regions"]]
        white_index = int(doc.get("white_index", 0))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable regions file: {exc}") from None
    record = evaluate_run(recon, reference, sve, regions, args.scale,
                          noise_floor=cfg.noise_floor, white_index=white_index,
                          exposure_s=args.exposure)
    out = _out_dir(args)
    _echo_config(cfg, out, {"command": "evaluate", "scale": args.scale,
                            "exposure": args.exposure})
    svio.append_evaluation_csv(record, out / "metrics.csv")
    print(f"nrms={record.nrms:.6f}  dr={record.dynamic_range_db:.2f} dB  "
          f"usage=({record.usage.main:.3f}, {record.usage.extra1:.3f}, "
          f"{record.usage.extra2:.3f}, {record.usage.unrecoverable:.3f})")
    print(out / "metrics.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--illuminant", dest="illuminant_nm", type=float,
                   help="dominant wavelength in nm")
    p.add_argument("--eol", type=int, help="end-of-linearity threshold in DN")
    p.add_argument("--green-policy", dest="green_policy",
                   choices=("average", "first", "second"))
    p.add_argument("--order-n", dest="order_radiometric", type=int,
                   help="radiometric polynomial order")
    p.add_argument("--order-m", dest="order_alpha", type=int,
                   help="correction polynomial order")
    p.add_argument("--margin", dest="linear_margin", type=float,
                   help="linear-region boundary as a fraction of EOL")
    p.add_argument("--noise-floor", dest="noise_floor", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--roi", type=int, nargs=4, metavar=("X", "Y", "W", "H"))
    p.add_argument("--bits", dest="bit_depth", type=int)
    p.add_argument("--gain", type=float, help="sensor gain in DN per unit*s")
    p.add_argument("--alpha-source", dest="alpha_source",
                   choices=("measured", "model"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svehdr",
        description="Single-shot HDR reconstruction from Bayer raw frames "
                    "under quasimonochromatic light.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render synthetic exposures")
    p.add_argument("--flatfield", action="store_true")
    p.add_argument("--chart", action="store_true")
    p.add_argument("--exposures", type=int, default=20)
    p.add_argument("--t-min", type=float, default=0.00025)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--level", type=float, default=1.0,
                   help="scene irradiance (flat-field level / chart peak)")
    p.add_argument("--knee-margin", type=float, default=0.0,
                   help="skip exposures within this fraction of a tier knee")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--contrast-ratio", type=float, default=128.0)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--shot-noise", action="store_true")
    p.add_argument("--shoulder", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit a correction profile")
    p.add_argument("--manifest", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reconstruct", help="merge and linearize one frame")
    p.add_argument("--frame", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--policy", choices=("clamp", "invalidate"), default="clamp")
    p.add_argument("--preview", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score a reconstruction")
    p.add_argument("--reconstructed", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--sve", required=True,
                   help="merged-value graymap from reconstruct")
    p.add_argument("--regions", required=True)
    p.add_argument("--scale", type=float, required=True,
                   help="exposure ratio reconstructed/reference")
    p.add_argument("--exposure", type=float, default=float("nan"))
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EolMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROFILE_MISMATCH
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, SveHdrError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
