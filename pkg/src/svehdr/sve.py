"""Extended-range image construction from quad planes.

The merge walks the three exposure tiers per pixel: a main-pixel value
below the end-of-linearity threshold is kept as-is; otherwise the first
extra pixel is promoted (offset by one EOL), then the second (offset by
two EOLs). Pixels saturated in all three tiers are unrecoverable and
pinned at 3*EOL so downstream stages can exclude them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .cfa import QuadPlanes
from .errors import ConfigError


class Provenance(IntEnum):
    """Which tier supplied each merged value."""

    MAIN = 0
    EXTRA1 = 1
    EXTRA2 = 2
    UNRECOVERABLE = 3


@dataclass(frozen=True)
class UsageFractions:
    main: float
    extra1: float
    extra2: float
    unrecoverable: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.main, self.extra1, self.extra2, self.unrecoverable)


@dataclass(frozen=True)
class SveImage:
    """Merged extended-range plane plus per-pixel provenance.

    Invariants: MAIN values lie in [0, eol), EXTRA1 in [eol, 2*eol),
    EXTRA2 in [2*eol, 3*eol), UNRECOVERABLE exactly at 3*eol.
    """

    values: np.ndarray        # uint32, extended DN in [0, 3*eol]
    provenance: np.ndarray    # uint8 of Provenance codes
    eol: int

    def __post_init__(self):
        if self.values.shape != self.provenance.shape:
            raise ConfigError("values/provenance shape mismatch")
        if self.eol <= 0:
            raise ConfigError(f"eol must be positive, got {self.eol}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def construct(planes: QuadPlanes, eol: int) -> SveImage:
    """Apply the three-branch tier merge at threshold `eol`.

    Per pixel: main < eol keeps the main value; else extra1 < eol gives
    eol + extra1; else extra2 < eol gives 2*eol + extra2; else the pixel
    is unrecoverable at 3*eol. Comparison is against eol, not ADC
    saturation: values at or above eol are non-linear and untrusted.
    """
    max_dn = (1 << planes.bit_depth) - 1
    if not 0 < eol <= max_dn:
        raise ConfigError(f"eol {eol} outside (0, {max_dn}] for "
                          f"{planes.bit_depth}-bit planes")
    main = planes.main.astype(np.uint32)
    e1 = planes.extra1.astype(np.uint32)
    e2 = planes.extra2.astype(np.uint32)

    use_main = main < eol
    use_e1 = ~use_main & (e1 < eol)
    use_e2 = ~use_main & ~use_e1 & (e2 < eol)

    values = np.where(use_main, main,
             np.where(use_e1, eol + e1,
             np.where(use_e2, 2 * eol + e2, 3 * eol))).astype(np.uint32)
    prov = np.where(use_main, Provenance.MAIN,
           np.where(use_e1, Provenance.EXTRA1,
           np.where(use_e2, Provenance.EXTRA2,
                    Provenance.UNRECOVERABLE))).astype(np.uint8)
    return SveImage(values=values, provenance=prov, eol=int(eol))


def from_values(values: np.ndarray, eol: int) -> SveImage:
    """Rebuild an SveImage from a bare value plane.

    The tier ranges are disjoint, so provenance is recoverable from the
    values alone: floor(v / eol) clipped to the tier codes.
    """
    v = np.asarray(values)
    if eol <= 0:
        raise ConfigError(f"eol must be positive, got {eol}")
    if v.size and int(v.max()) > 3 * eol:
        raise ConfigError(f"value {int(v.max())} above 3*eol = {3 * eol}")
    prov = np.minimum(v.astype(np.int64) // eol, 3).astype(np.uint8)
    return SveImage(values=v.astype(np.uint32), provenance=prov, eol=int(eol))


def usage_fractions(sve: SveImage, roi: tuple[int, int, int, int] | None = None
                    ) -> UsageFractions:
    """Fraction of pixels per tier over `roi` (x, y, w, h), or the whole image."""
    prov = sve.provenance
    if roi is not None:
        x, y, w, h = roi
        if (x < 0 or y < 0 or w <= 0 or h <= 0
                or y + h > prov.shape[0] or x + w > prov.shape[1]):
            raise ConfigError(f"roi {roi} empty or outside image {prov.shape}")
        prov = prov[y:y + h, x:x + w]
    total = prov.size
    if total == 0:
        raise ConfigError("empty roi")
    counts = np.bincount(prov.ravel(), minlength=4)
    return UsageFractions(*(float(c) / total for c in counts[:4]))
