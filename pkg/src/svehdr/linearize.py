"""Linearization of merged images and dynamic-range measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calib import CorrectionProfile
from .errors import ConfigError, EolMismatchError
from .sve import Provenance, SveImage

DOMAIN_POLICIES = ("clamp", "invalidate")


@dataclass(frozen=True)
class LinearHdrImage:
    """Real-valued plane proportional to scene irradiance, with validity mask.

    Invalid pixels (unrecoverable sources, or values outside the
    correction domain under the "invalidate" policy) hold 0.
    """

    values: np.ndarray      # float, >= 0 where valid
    valid: np.ndarray       # bool, same shape

    def __post_init__(self):
        if self.values.shape != self.valid.shape:
            raise ConfigError("values/valid shape mismatch")
        v = self.values[self.valid]
        if v.size and (not np.all(np.isfinite(v)) or v.min() < 0):
            raise ConfigError("valid values must be finite and >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def linearize(sve: SveImage, profile: CorrectionProfile,
              domain_policy: str = "clamp") -> LinearHdrImage:
    """Apply the correction per pixel: output = alpha(v) * v.

    Alpha comes from the profile's per-tier value polynomials, never from
    re-inverting the radiometric model at runtime. Unrecoverable pixels
    are always invalid. Values in a tier without calibration coverage are
    clamped to the nearest covered domain point ("clamp", default) or
    marked invalid ("invalidate").
    """
    if domain_policy not in DOMAIN_POLICIES:
        raise ConfigError(f"domain_policy must be one of {DOMAIN_POLICIES}")
    if sve.eol != profile.eol:
        raise EolMismatchError(
            f"image eol {sve.eol} != profile eol {profile.eol}")
    v = sve.values.astype(np.float64)
    valid = sve.provenance != Provenance.UNRECOVERABLE

    alpha, covered = profile.alpha_of_value.evaluate_masked(v)
    if not np.all(covered):
        if domain_policy == "clamp":
            v_eval = profile.alpha_of_value.nearest_covered(v)
            alpha, _ = profile.alpha_of_value.evaluate_masked(v_eval)
        else:
            valid = valid & covered
    out = np.where(valid, alpha * v, 0.0)

    # The merge guarantees the true linear value of a tier-j pixel is at
    # least the largest value recoverable from tier j-1, so flooring each
    # tier there costs nothing on good data and keeps outputs ordered
    # across tier boundaries even with fit wobble at the domain edges.
    floors = _tier_floors(profile)
    tier = sve.provenance.astype(np.int64)
    for j, floor in floors.items():
        sel = valid & (tier == j)
        out[sel] = np.maximum(out[sel], floor)

    out = np.maximum(np.nan_to_num(out, nan=0.0), 0.0)
    return LinearHdrImage(values=out, valid=valid)


def _tier_floors(profile: CorrectionProfile) -> dict:
    floors = {1: float(profile.eol)}
    tier1 = next((tp for tp in profile.alpha_of_value.tiers if tp.tier == 1), None)
    if tier1 is not None:
        top = tier1.v_domain[1]
        floors[2] = float(tier1.evaluate(top) * top)
    else:
        floors[2] = float(profile.eol)
    return floors


def dynamic_range_db(img: LinearHdrImage, noise_floor: float = 1.0,
                     roi: tuple[int, int, int, int] | None = None) -> float:
    """20*log10(max valid value / noise_floor), optionally over a rectangle."""
    if noise_floor <= 0:
        raise ConfigError(f"noise_floor must be > 0, got {noise_floor}")
    values, valid = img.values, img.valid
    if roi is not None:
        x, y, w, h = roi
        if (x < 0 or y < 0 or w <= 0 or h <= 0
                or y + h > values.shape[0] or x + w > values.shape[1]):
            raise ConfigError(f"roi {roi} outside image {values.shape}")
        values = values[y:y + h, x:x + w]
        valid = valid[y:y + h, x:x + w]
    if not np.any(valid):
        raise ConfigError("no valid pixels for dynamic range")
    peak = float(values[valid].max())
    if peak <= 0:
        raise ConfigError("maximum valid value is zero")
    return float(20.0 * np.log10(peak / noise_floor))
