"""Bayer mosaic model under quasimonochromatic light.

Under a narrow-band illuminant the RGGB colour filter array acts as a
pattern of neutral-density filters: one channel ("main") transmits the
most, the other two ("first extra", "second extra") progressively less.
This module decomposes a raw mosaic frame into the three co-registered
half-resolution planes that the merge stage consumes.

Conventions: arrays are numpy 2-D, shape (height, width), row-major;
quad coordinates address the half-resolution grid of 2x2 mosaic cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnknownIlluminantError

CHANNELS = ("R", "G", "B")

#: How far a requested dominant wavelength may sit from a table entry (nm).
WAVELENGTH_TOLERANCE_NM = 50.0

GREEN_POLICIES = ("average", "first", "second")


@dataclass(frozen=True)
class CfaLayout:
    """2x2 colour filter pattern; must contain one R, one B and two G sites."""

    pattern: tuple[tuple[str, str], tuple[str, str]] = (("R", "G"), ("G", "B"))

    def __post_init__(self):
        flat = [c for row in self.pattern for c in row]
        if sorted(flat) != ["B", "G", "G", "R"]:
            raise ConfigError(f"CFA quad must hold one R, two G, one B; got {flat}")

    def sites(self, channel: str) -> list[tuple[int, int]]:
        """(row, col) offsets of `channel` within the 2x2 quad, reading order."""
        return [(r, c) for r in (0, 1) for c in (0, 1) if self.pattern[r][c] == channel]


RGGB = CfaLayout()


@dataclass(frozen=True)
class PixelRoles:
    """Channel-to-role assignment and transmittances for one illuminant.

    e1 is the main channel's transmittance and is 1.0 by definition;
    e2 and e3 belong to the first and second extra channels and must
    decrease strictly: 1 = e1 > e2 > e3 > 0.
    """

    wavelength_nm: float
    main: str
    extra1: str
    extra2: str
    e1: float = 1.0
    e2: float = 0.0
    e3: float = 0.0

    def __post_init__(self):
        if {self.main, self.extra1, self.extra2} != set(CHANNELS):
            raise ConfigError(
                f"roles must cover R, G, B exactly once, got "
                f"({self.main}, {self.extra1}, {self.extra2})")
        if not (self.e1 == 1.0 and self.e1 > self.e2 > self.e3 > 0.0):
            raise ConfigError(
                f"transmittances must satisfy 1 = e1 > e2 > e3 > 0, got "
                f"({self.e1}, {self.e2}, {self.e3})")

    def transmittance(self, channel: str) -> float:
        return {self.main: self.e1, self.extra1: self.e2, self.extra2: self.e3}[channel]


#: Transmittance table for the LED illuminants characterised on the reference
#: camera: red 625 nm, green 520 nm, blue 470 nm.
LED_ROLES = (
    PixelRoles(625.0, "R", "G", "B", 1.00, 0.20, 0.09),
    PixelRoles(520.0, "G", "B", "R", 1.00, 0.33, 0.15),
    PixelRoles(470.0, "B", "G", "R", 1.00, 0.45, 0.08),
)


def roles_for_wavelength(wavelength_nm, table=LED_ROLES) -> PixelRoles:
    """Pick the table entry with the nearest dominant wavelength.

    Raises UnknownIlluminantError when no entry lies within
    WAVELENGTH_TOLERANCE_NM of the request.
    """
    if not table:
        raise ConfigError("empty transmittance table")
    best = min(table, key=lambda r: abs(r.wavelength_nm - wavelength_nm))
    if abs(best.wavelength_nm - wavelength_nm) > WAVELENGTH_TOLERANCE_NM:
        raise UnknownIlluminantError(
            f"no transmittance entry within {WAVELENGTH_TOLERANCE_NM:g} nm "
            f"of {wavelength_nm:g} nm")
    return best


@dataclass(frozen=True)
class RawFrame:
    """One Bayer-mosaic exposure: integer DN samples plus capture metadata."""

    samples: np.ndarray                     # 2-D unsigned DN, shape (h, w)
    bit_depth: int = 12
    exposure_time: float | None = None      # seconds

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ConfigError(f"frame samples must be 2-D, got shape {s.shape}")
        h, w = s.shape
        if h % 2 or w % 2 or h == 0 or w == 0:
            raise ConfigError(f"frame dims must be even and non-zero, got {w}x{h}")
        if not (1 <= self.bit_depth <= 16):
            raise ConfigError(f"bit depth {self.bit_depth} outside 1..16")
        if np.issubdtype(s.dtype, np.floating):
            raise ConfigError("frame samples must be integer DN")
        if s.size and (int(s.min()) < 0 or int(s.max()) > self.max_dn):
            raise ConfigError(
                f"samples outside [0, {self.max_dn}] for {self.bit_depth}-bit frame")
        if self.exposure_time is not None and not self.exposure_time > 0:
            raise ConfigError(f"exposure time must be > 0, got {self.exposure_time}")
        object.__setattr__(self, "samples", s.astype(np.uint16, copy=False))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def max_dn(self) -> int:
        return (1 << self.bit_depth) - 1


@dataclass(frozen=True)
class QuadPlanes:
    """Half-resolution main / first-extra / second-extra planes of one frame."""

    main: np.ndarray
    extra1: np.ndarray
    extra2: np.ndarray
    bit_depth: int = 12

    def __post_init__(self):
        if not (self.main.shape == self.extra1.shape == self.extra2.shape):
            raise ConfigError(
                f"plane shapes differ: {self.main.shape}, "
                f"{self.extra1.shape}, {self.extra2.shape}")
        limit = (1 << self.bit_depth) - 1
        for name in ("main", "extra1", "extra2"):
            p = getattr(self, name)
            if p.size and int(p.max()) > limit:
                raise ConfigError(f"{name} plane exceeds {self.bit_depth}-bit range")

    @property
    def shape(self) -> tuple[int, int]:
        return self.main.shape


def _extract(samples: np.ndarray, layout: CfaLayout, channel: str,
             green_policy: str) -> np.ndarray:
    sites = layout.sites(channel)
    if len(sites) == 1:
        (r, c), = sites
        return samples[r::2, c::2]
    (r0, c0), (r1, c1) = sites
    if green_policy == "first":
        return samples[r0::2, c0::2]
    if green_policy == "second":
        return samples[r1::2, c1::2]
    a = samples[r0::2, c0::2].astype(np.uint32)
    b = samples[r1::2, c1::2].astype(np.uint32)
    # integer mean, ties rounded up
    return ((a + b + 1) // 2).astype(np.uint16)


def decompose(frame: RawFrame, layout: CfaLayout, roles: PixelRoles,
              green_policy: str = "average") -> QuadPlanes:
    """Split a mosaic frame into role-ordered quad planes.

    Each output position (i, j) covers input quad (2i..2i+1, 2j..2j+1).
    The plane whose channel owns both green sites is reduced per
    `green_policy`: "average" (integer mean, default), "first" or "second"
    site in reading order.
    """
    if green_policy not in GREEN_POLICIES:
        raise ConfigError(f"green_policy must be one of {GREEN_POLICIES}")
    s = frame.samples
    return QuadPlanes(
        main=_extract(s, layout, roles.main, green_policy),
        extra1=_extract(s, layout, roles.extra1, green_policy),
        extra2=_extract(s, layout, roles.extra2, green_policy),
        bit_depth=frame.bit_depth,
    )


def interleave(planes: QuadPlanes, layout: CfaLayout, roles: PixelRoles,
               exposure_time: float | None = None) -> RawFrame:
    """Re-mosaic quad planes; the channel with two sites gets the plane at both.

    Inverse of decompose up to the green reduction: with green_policy="first"
    the sites that were read are reproduced exactly.
    """
    h, w = planes.shape
    out = np.zeros((2 * h, 2 * w), dtype=np.uint16)
    for channel, plane in ((roles.main, planes.main),
                           (roles.extra1, planes.extra1),
                           (roles.extra2, planes.extra2)):
        for r, c in layout.sites(channel):
            out[r::2, c::2] = plane
    return RawFrame(out, bit_depth=planes.bit_depth, exposure_time=exposure_time)
