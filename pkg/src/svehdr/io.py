"""Bit-exact file formats: raw frames, HDR output, profiles, manifests, CSVs.

Raw frames travel as binary 16-bit portable graymaps (the canonical
subset: ``P5 <w> <h> 65535`` header, big-endian samples), chosen so the
format is parseable without third-party dependencies and byte-compatible
with linear 16-bit converter output after a lossless container
conversion. Profiles are JSON for diffability. HDR images use a small
binary container (magic ``SVEH``). Readers raise structured errors only,
never crash, whatever the input bytes.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calib import (AlphaPolynomial, CorrectionProfile, LinearModel, PolyModel,
                    TierPolynomial)
from .cfa import PixelRoles, RawFrame
from .errors import (ConfigError, FormatError, HeaderError,
                     ProfileInvariantError, SampleRangeError, SchemaError,
                     SveHdrError, TruncatedError, VersionError)
from .linearize import LinearHdrImage
from .metrics import EvaluationRecord

PROFILE_VERSION = 1
HDR_MAGIC = b"SVEH"
HDR_VERSION = 1

EVALUATION_HEADER = ("exposure_s,dr_db,nrms,main_frac,extra1_frac,"
                     "extra2_frac,unrec_frac,h1,h2,h3,h4,h5,h6,h7,h8")


# ---------------------------------------------------------------------------
# 16-bit portable graymap
# ---------------------------------------------------------------------------

def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """First `count` whitespace-separated tokens and the raster offset."""
    tokens, i, n = [], 0, len(buf)
    while len(tokens) < count:
        while i < n and buf[i:i + 1].isspace():
            i += 1
        start = i
        while i < n and not buf[i:i + 1].isspace():
            i += 1
        if start == i:
            raise HeaderError("incomplete graymap header")
        tokens.append(buf[start:i])
        if i - start > 20:
            raise HeaderError("oversized header token")
    if i >= n or not buf[i:i + 1].isspace():
        raise HeaderError("missing whitespace after maxval")
    return tokens, i + 1


def read_raw16(path, bit_depth: int = 12) -> RawFrame:
    """Read a 16-bit binary graymap as a raw frame.

    Samples above the declared bit depth are rejected; pass
    bit_depth=16 to accept the full sample range.
    """
    buf = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise HeaderError(f"not a binary graymap: magic {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise HeaderError(f"non-numeric header fields {tokens[1:]}") from None
    if width <= 0 or height <= 0:
        raise HeaderError(f"bad dimensions {width}x{height}")
    if maxval != 65535:
        raise HeaderError(f"unsupported maxval {maxval}, need 65535")
    if width % 2 or height % 2:
        raise HeaderError(f"frame dims must be even, got {width}x{height}")
    expected = width * height * 2
    payload = buf[offset:]
    if len(payload) < expected:
        raise TruncatedError(f"payload {len(payload)} bytes, need {expected}")
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes")
    samples = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    limit = (1 << bit_depth) - 1
    if int(samples.max(initial=0)) > limit:
        raise SampleRangeError(
            f"sample {int(samples.max())} above {bit_depth}-bit limit {limit}")
    return RawFrame(samples.astype(np.uint16), bit_depth=bit_depth)


def write_raw16(frame: RawFrame, path) -> None:
    header = f"P5\n{frame.width} {frame.height}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + frame.samples.astype(">u2").tobytes())


def write_preview8(img: LinearHdrImage, path) -> None:
    """Scaled 8-bit graymap preview; invalid pixels render black."""
    peak = float(img.values[img.valid].max()) if np.any(img.valid) else 1.0
    scale = 255.0 / peak if peak > 0 else 0.0
    data = np.where(img.valid, np.clip(np.round(img.values * scale), 0, 255), 0)
    h, w = img.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.astype(np.uint8).tobytes())


# ---------------------------------------------------------------------------
# Correction profile (JSON)
# ---------------------------------------------------------------------------

def _require_keys(doc: dict, keys: tuple, where: str) -> None:
    missing = set(keys) - set(doc)
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")
    unknown = set(doc) - set(keys)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")


def write_profile(profile: CorrectionProfile, path) -> None:
    doc = {
        "version": PROFILE_VERSION,
        "eol": profile.eol,
        "roles": {
            "lambda_nm": profile.roles.wavelength_nm,
            "main": profile.roles.main,
            "extra1": profile.roles.extra1,
            "extra2": profile.roles.extra2,
            "e1": profile.roles.e1,
            "e2": profile.roles.e2,
            "e3": profile.roles.e3,
        },
        "linear": {"a": profile.linear.a, "b": profile.linear.b},
        "poly": {
            "order": profile.poly.order,
            "coeffs": profile.poly.coeffs.tolist(),
            "t_domain": list(profile.poly.t_domain),
        },
        "alpha_value_poly": {
            "order": profile.alpha_of_value.order,
            "tiers": [
                {"tier": tp.tier, "coeffs": tp.coeffs.tolist(),
                 "v_domain": list(tp.v_domain)}
                for tp in profile.alpha_of_value.tiers
            ],
        },
        "alpha_samples": profile.alpha_samples.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def read_profile(path) -> CorrectionProfile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"not a profile document: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("profile document must be an object")
    _require_keys(doc, ("version", "eol", "roles", "linear", "poly",
                        "alpha_value_poly", "alpha_samples"), "profile")
    if doc["version"] != PROFILE_VERSION:
        raise VersionError(f"unsupported profile version {doc['version']!r}")
    try:
        r = doc["roles"]
        _require_keys(r, ("lambda_nm", "main", "extra1", "extra2",
                          "e1", "e2", "e3"), "roles")
        roles = PixelRoles(r["lambda_nm"], r["main"], r["extra1"], r["extra2"],
                           r["e1"], r["e2"], r["e3"])
        lin = doc["linear"]
        _require_keys(lin, ("a", "b"), "linear")
        linear = LinearModel(a=lin["a"], b=lin["b"])
        p = doc["poly"]
        _require_keys(p, ("order", "coeffs", "t_domain"), "poly")
        coeffs = np.asarray(p["coeffs"], dtype=float)
        if coeffs.size != p["order"] + 1:
            raise SchemaError("poly order does not match coefficient count")
        grid = np.polynomial.polynomial.polyval(
            np.linspace(p["t_domain"][0], p["t_domain"][1], 512), coeffs)
        monotone = bool(np.all(np.diff(grid) >= -1e-9 * np.max(np.abs(grid))))
        poly = PolyModel(coeffs=coeffs, t_domain=tuple(p["t_domain"]),
                         monotone_on_domain=monotone)
        ap = doc["alpha_value_poly"]
        _require_keys(ap, ("order", "tiers"), "alpha_value_poly")
        tiers = []
        for tier_doc in ap["tiers"]:
            _require_keys(tier_doc, ("tier", "coeffs", "v_domain"), "tier")
            tiers.append(TierPolynomial(
                tier=int(tier_doc["tier"]),
                coeffs=np.asarray(tier_doc["coeffs"], dtype=float),
                v_domain=tuple(tier_doc["v_domain"])))
        alpha_poly = AlphaPolynomial(eol=int(doc["eol"]), order=int(ap["order"]),
                                     tiers=tuple(tiers))
        samples = np.asarray(doc["alpha_samples"], dtype=float)
        return CorrectionProfile(eol=int(doc["eol"]), roles=roles, linear=linear,
                                 poly=poly, alpha_samples=samples,
                                 alpha_of_value=alpha_poly)
    except (SchemaError, VersionError, ProfileInvariantError):
        raise
    except (TypeError, KeyError) as exc:
        raise SchemaError(f"ill-typed profile field: {exc}") from None
    except SveHdrError as exc:
        raise ProfileInvariantError(str(exc)) from None


# ---------------------------------------------------------------------------
# Linear HDR container
# ---------------------------------------------------------------------------

def write_hdr(img: LinearHdrImage, path) -> None:
    h, w = img.shape
    if h == 0 or w == 0:
        raise ConfigError("refusing to write zero-dimension image")
    values = img.values.astype(np.float32)
    if not np.all(np.isfinite(values)):
        raise ConfigError("non-finite sample in HDR image")
    head = HDR_MAGIC + bytes([HDR_VERSION]) + struct.pack("<II", w, h)
    bitmap = np.packbits(img.valid.ravel()).tobytes()
    Path(path).write_bytes(head + values.tobytes() + bitmap)


def read_hdr(path) -> LinearHdrImage:
    buf = Path(path).read_bytes()
    if len(buf) < 13:
        raise TruncatedError(f"{len(buf)} bytes is too short for a header")
    if buf[:4] != HDR_MAGIC:
        raise HeaderError(f"bad magic {buf[:4]!r}")
    if buf[4] != HDR_VERSION:
        raise VersionError(f"unsupported container version {buf[4]}")
    w, h = struct.unpack("<II", buf[5:13])
    if w == 0 or h == 0:
        raise HeaderError(f"zero dimension {w}x{h}")
    n = w * h
    expected = 13 + 4 * n + (n + 7) // 8
    if len(buf) < expected:
        raise TruncatedError(f"{len(buf)} bytes, need {expected}")
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes")
    values = np.frombuffer(buf, dtype="<f4", count=n, offset=13)
    bitmap = np.frombuffer(buf, dtype=np.uint8, offset=13 + 4 * n)
    valid = np.unpackbits(bitmap)[:n].astype(bool)
    try:
        return LinearHdrImage(values=values.reshape(h, w).astype(np.float64),
                              valid=valid.reshape(h, w))
    except ConfigError as exc:
        raise FormatError(f"invalid HDR content: {exc}") from None


# ---------------------------------------------------------------------------
# Exposure manifest and CSV exports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExposureManifest:
    """Ordered (exposure seconds, relative frame path) pairs."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(t), str(p)) for t, p in self.entries)
        object.__setattr__(self, "entries", entries)
        times = [t for t, _ in entries]
        if not times:
            raise ConfigError("manifest needs at least one entry")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ConfigError("manifest exposures must be strictly increasing")


def write_manifest(manifest: ExposureManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["exposure_s", "path"])
        for t, p in manifest.entries:
            writer.writerow([repr(t), p])


def read_manifest(path) -> ExposureManifest:
    """Load a manifest; every referenced file must exist next to it."""
    base = Path(path).parent
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise SchemaError(f"unreadable manifest: {exc}") from None
    if not rows or rows[0] != ["exposure_s", "path"]:
        raise SchemaError("manifest must start with 'exposure_s,path'")
    entries = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise SchemaError(f"manifest line {i}: expected 2 fields")
        try:
            t = float(row[0])
        except ValueError:
            raise SchemaError(f"manifest line {i}: bad exposure {row[0]!r}") from None
        if not (base / row[1]).exists():
            raise FormatError(f"manifest references missing file {row[1]!r}")
        entries.append((t, row[1]))
    try:
        return ExposureManifest(tuple(entries))
    except ConfigError as exc:
        raise SchemaError(str(exc)) from None


def write_radiometric_csv(rf, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["T_seconds", "mean_sve"])
        for t, m in zip(rf.times, rf.means):
            writer.writerow([repr(float(t)), repr(float(m))])


def append_evaluation_csv(record: EvaluationRecord, path) -> None:
    """Append one evaluation row, creating the file with its header first."""
    if len(record.halftone.ratios) != 8:
        raise ConfigError(
            f"evaluation row needs 8 halftone ratios, got "
            f"{len(record.halftone.ratios)}")
    p = Path(path)
    fresh = not p.exists()
    with open(p, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(EVALUATION_HEADER.split(","))
        u = record.usage
        writer.writerow(
            [repr(record.exposure_s), repr(record.dynamic_range_db),
             repr(record.nrms), repr(u.main), repr(u.extra1), repr(u.extra2),
             repr(u.unrecoverable)]
            + [repr(float(r)) for r in record.halftone.ratios])
