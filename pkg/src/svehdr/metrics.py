"""Reconstruction quality metrics: normalized RMS error and halftone stability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cfa import CfaLayout, PixelRoles, RawFrame, decompose
from .errors import ConfigError
from .linearize import LinearHdrImage, dynamic_range_db
from .sve import SveImage, UsageFractions, usage_fractions


def nrms(reconstructed: LinearHdrImage, reference: LinearHdrImage,
         scale: float) -> float:
    """Normalized RMS error of reconstructed/scale against the reference.

    Computed over pixels valid in both images and normalized by the
    reference range over that set. Note the asymmetry: swapping the
    arguments changes the normalization to the other image's range.
    """
    if reconstructed.shape != reference.shape:
        raise ConfigError(f"shape mismatch {reconstructed.shape} vs "
                          f"{reference.shape}")
    if scale <= 0:
        raise ConfigError(f"scale must be > 0, got {scale}")
    joint = reconstructed.valid & reference.valid
    if not np.any(joint):
        raise ConfigError("no jointly valid pixels")
    r = reconstructed.values[joint] / scale
    o = reference.values[joint]
    span = float(o.max() - o.min())
    if span == 0:
        raise ConfigError("reference has zero range over the joint-valid set")
    return float(np.sqrt(np.mean((r - o) ** 2)) / span)


@dataclass(frozen=True)
class HalftoneReport:
    """Gradient-bar region means and their ratios to the brightest region."""

    region_means: tuple
    ratios: tuple
    regions: tuple
    white_index: int


def halftone_stability(img: LinearHdrImage, regions, white_index: int = 0
                       ) -> HalftoneReport:
    """Mean valid value per region, expressed relative to the white region."""
    regions = tuple(tuple(r) for r in regions)
    if not 0 <= white_index < len(regions):
        raise ConfigError(f"white_index {white_index} outside 0..{len(regions) - 1}")
    means = []
    for i, (x, y, w, h) in enumerate(regions):
        if (x < 0 or y < 0 or w <= 0 or h <= 0
                or y + h > img.shape[0] or x + w > img.shape[1]):
            raise ConfigError(f"region {i} {(x, y, w, h)} outside image {img.shape}")
        vals = img.values[y:y + h, x:x + w]
        ok = img.valid[y:y + h, x:x + w]
        if not np.any(ok):
            raise ConfigError(f"region {i} fully invalid")
        means.append(float(vals[ok].mean()))
    white = means[white_index]
    if white <= 0:
        raise ConfigError(f"white region {white_index} mean is not positive")
    return HalftoneReport(
        region_means=tuple(means),
        ratios=tuple(m / white for m in means),
        regions=regions,
        white_index=white_index,
    )


def main_pixel_reference(frame: RawFrame, layout: CfaLayout, roles: PixelRoles,
                         eol: int, green_policy: str = "average") -> LinearHdrImage:
    """Reference image: the main-pixel plane of a non-saturated exposure.

    Pixels at or above EOL are non-linear and marked invalid.
    """
    planes = decompose(frame, layout, roles, green_policy)
    values = planes.main.astype(np.float64)
    return LinearHdrImage(values=values, valid=values < eol)


@dataclass(frozen=True)
class EvaluationRecord:
    """The four per-exposure quality figures, bundled for one reconstruction."""

    exposure_s: float
    dynamic_range_db: float
    nrms: float
    usage: UsageFractions
    halftone: HalftoneReport


def evaluate_run(reconstructed: LinearHdrImage, reference: LinearHdrImage,
                 sve: SveImage, regions, scale: float,
                 noise_floor: float = 1.0, white_index: int = 0,
                 exposure_s: float = float("nan")) -> EvaluationRecord:
    if sve.shape != reconstructed.shape:
        raise ConfigError(f"sve shape {sve.shape} != image {reconstructed.shape}")
    return EvaluationRecord(
        exposure_s=float(exposure_s),
        dynamic_range_db=dynamic_range_db(reconstructed, noise_floor),
        nrms=nrms(reconstructed, reference, scale),
        usage=usage_fractions(sve),
        halftone=halftone_stability(reconstructed, regions, white_index),
    )
