"""Synthetic Bayer sensor and scene generators.

Ground truth for pipeline verification: per-site response is
u = gain * e_channel * E * T, with an optional compressive shoulder
between EOL and the ADC ceiling, optional seeded Poisson shot noise and
Gaussian read noise, then rounding and clamping to the ADC range.
Frames are deterministic for a fixed (seed, exposure) pair, so a series
can be rendered in any order or in parallel and still reproduce.

Scene irradiance is constant within each 2x2 mosaic quad, matching the
neutral-filter model where neighbouring sites see the same irradiance;
halftone region geometry is therefore returned in quad coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cfa import CfaLayout, PixelRoles, RawFrame
from .errors import ConfigError

#: 15x15 quad-pixel patches, as used by the halftone stability metric.
REGION_SIZE = 15
_PAD = 4


@dataclass(frozen=True)
class Scene:
    """Relative irradiance map, full sensor resolution, non-negative."""

    irradiance: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.irradiance, dtype=np.float64)
        if e.ndim != 2:
            raise ConfigError(f"irradiance must be 2-D, got shape {e.shape}")
        if not np.all(np.isfinite(e)) or (e.size and e.min() < 0):
            raise ConfigError("irradiance must be finite and >= 0")
        object.__setattr__(self, "irradiance", e)

    @property
    def shape(self) -> tuple[int, int]:
        return self.irradiance.shape


@dataclass(frozen=True)
class SensorModel:
    """Linear sensor with an end-of-linearity knee.

    gain is DN per (irradiance unit * second). With `shoulder` enabled,
    ideal responses above `eol` are compressed onto (eol, adc_max) by a
    saturating exponential, making that range realistically untrustworthy;
    leave it off for exact-oracle tests. Channel transmittances come from
    the PixelRoles passed to expose().
    """

    gain: float
    eol: int = 3400
    bit_depth: int = 12
    read_noise_sigma: float = 0.0
    shot_noise: bool = False
    shoulder: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.gain <= 0:
            raise ConfigError(f"gain must be > 0, got {self.gain}")
        if not 0 < self.eol <= self.adc_max:
            raise ConfigError(f"eol {self.eol} outside (0, {self.adc_max}]")
        if self.read_noise_sigma < 0:
            raise ConfigError("read_noise_sigma must be >= 0")

    @property
    def adc_max(self) -> int:
        return (1 << self.bit_depth) - 1


def _frame_rng(seed: int, t: float) -> np.random.Generator:
    # generator state derived from (seed, T) so each frame reproduces on its own
    t_bits = int(np.float64(t).view(np.uint64))
    return np.random.default_rng(np.random.SeedSequence([int(seed), t_bits]))


def expose(scene: Scene, sensor: SensorModel, layout: CfaLayout,
           roles: PixelRoles, t: float) -> RawFrame:
    """Render one raw mosaic frame at exposure time `t` seconds."""
    if t <= 0:
        raise ConfigError(f"exposure time must be > 0, got {t}")
    h, w = scene.shape
    if h % 2 or w % 2:
        raise ConfigError(f"scene dims must be even, got {w}x{h}")

    trans = np.empty((2, 2))
    for r in (0, 1):
        for c in (0, 1):
            trans[r, c] = roles.transmittance(layout.pattern[r][c])
    site_e = np.tile(trans, (h // 2, w // 2))

    u = sensor.gain * site_e * scene.irradiance * t
    if sensor.shoulder:
        span = sensor.adc_max - sensor.eol
        over = u > sensor.eol
        u = np.where(over, sensor.eol + span * (1.0 - np.exp(-(u - sensor.eol) / span)), u)
    if sensor.shot_noise or sensor.read_noise_sigma > 0:
        rng = _frame_rng(sensor.seed, t)
        if sensor.shot_noise:
            u = rng.poisson(u).astype(np.float64)
        if sensor.read_noise_sigma > 0:
            u = u + rng.normal(0.0, sensor.read_noise_sigma, size=u.shape)
    dn = np.clip(np.round(u), 0, sensor.adc_max).astype(np.uint16)
    return RawFrame(dn, bit_depth=sensor.bit_depth, exposure_time=float(t))


def make_flatfield(level: float, shape: tuple[int, int]) -> Scene:
    """Spatially uniform scene at `level` relative irradiance."""
    if level < 0:
        raise ConfigError(f"flat-field level must be >= 0, got {level}")
    h, w = shape
    return Scene(np.full((h, w), float(level)))


def make_test_chart(shape: tuple[int, int], steps: int = 8,
                    contrast_ratio: float = 128.0, peak: float = 1.0
                    ) -> tuple[Scene, list[tuple[int, int, int, int]]]:
    """High-contrast test scene: gradient bar plus binary line patterns.

    The bar holds `steps` blocks in geometric progression, brightest
    (= peak) on the left, brightest/contrast_ratio on the right. Line
    patterns of pitch 1, 2, 4 and 8 quad pixels alternate peak and zero
    below the bar. Returns the scene and one 15x15 measurement rectangle
    (x, y, w, h) per step, in quad coordinates, brightest first.
    """
    if steps < 2:
        raise ConfigError(f"steps must be >= 2, got {steps}")
    if contrast_ratio <= 1:
        raise ConfigError(f"contrast_ratio must be > 1, got {contrast_ratio}")
    if peak <= 0:
        raise ConfigError(f"peak must be > 0, got {peak}")
    h, w = shape
    if h % 2 or w % 2:
        raise ConfigError(f"chart dims must be even, got {w}x{h}")
    hq, wq = h // 2, w // 2

    block_w = wq // steps
    bar_h = REGION_SIZE + 2 * _PAD
    pitches = (1, 2, 4, 8)
    band_h = 8
    need_h = _PAD + bar_h + _PAD + len(pitches) * band_h + _PAD
    need_w = steps * (REGION_SIZE + 2)
    if wq < need_w or hq < need_h:
        raise ConfigError(
            f"chart needs at least {2 * need_w}x{2 * need_h} sensor pixels "
            f"for {steps} steps, got {w}x{h}")

    levels = peak * contrast_ratio ** (-np.arange(steps) / (steps - 1))
    quad = np.zeros((hq, wq))
    regions = []
    bar_top = _PAD
    for i, lev in enumerate(levels):
        x0 = i * block_w
        quad[bar_top:bar_top + bar_h, x0:x0 + block_w] = lev
        rx = x0 + (block_w - REGION_SIZE) // 2
        ry = bar_top + (bar_h - REGION_SIZE) // 2
        regions.append((rx, ry, REGION_SIZE, REGION_SIZE))

    row = bar_top + bar_h + _PAD
    cols = np.arange(wq)
    for pitch in pitches:
        stripe = (cols // pitch) % 2 == 0
        quad[row:row + band_h, :] = np.where(stripe, peak, 0.0)
        row += band_h

    return Scene(np.kron(quad, np.ones((2, 2)))), regions


def flatfield_times(t_lo: float, t_hi: float, count: int, *,
                    knee_times: tuple[float, ...] = (),
                    knee_margin: float = 0.0) -> np.ndarray:
    """Log-spaced exposure ladder for a flat-field series.

    When `knee_margin` > 0, exposures within (1 +/- margin) of any entry
    in `knee_times` are avoided: means measured there straddle a tier
    transition of the merge and are ambiguous, and they dominate the
    radiometric-fit residual. The returned ladder still has `count`
    entries, redistributed over the remaining range. Margins around
    0.1-0.15 work well; much larger ones force the fitted correction to
    extrapolate across the excluded band and cost accuracy.
    """
    if not 0 < t_lo < t_hi:
        raise ConfigError(f"need 0 < t_lo < t_hi, got ({t_lo}, {t_hi})")
    if count < 2:
        raise ConfigError(f"count must be >= 2, got {count}")
    if knee_margin <= 0 or not knee_times:
        return np.geomspace(t_lo, t_hi, count)
    cand = np.geomspace(t_lo, t_hi, count * 4)
    keep = np.ones(cand.size, dtype=bool)
    for kt in knee_times:
        keep &= ~((cand > kt * (1 - knee_margin)) & (cand < kt * (1 + knee_margin)))
    cand = cand[keep]
    if cand.size < count:
        raise ConfigError("knee margin leaves too few usable exposures")
    idx = np.round(np.linspace(0, cand.size - 1, count)).astype(int)
    return cand[np.unique(idx)]
