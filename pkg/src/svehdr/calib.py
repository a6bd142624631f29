"""Radiometric calibration of the tier-merge imaging chain.

From a flat-field exposure series the calibration measures the merged
system's radiometric function (mean SVE value vs exposure time), fits
the ideal linear response a*T + b to the sub-EOL part, fits a high-order
polynomial model to the whole curve, and derives correction coefficients
alpha = (a*T + b) / f(T) that linearize merged values downstream.

The correction-vs-value interpolant is stored per SVE tier: the merge
offsets each tier by a multiple of EOL, so a merged value identifies its
tier and the correction within one tier is a smooth function of the
value, while across tiers it is discontinuous. One polynomial per tier
(tier 0 is the identity) reproduces the correction to a fraction of a
percent; a single polynomial across tiers cannot get below ~13 % error
regardless of weighting, which would swamp the reconstruction budget.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cfa import CfaLayout, PixelRoles, decompose
from .errors import (CalibrationError, ConfigError, InsufficientCoverageError,
                     ProfileInvariantError)
from .sve import Provenance, construct

DEFAULT_POLY_ORDER = 7
DEFAULT_ALPHA_ORDER = 7
DEFAULT_LINEAR_MARGIN = 0.9
DEFAULT_B_MAX = 2.0
DEFAULT_ROI_SIZE = 256

#: Per-tier polynomial degrees above this extrapolate poorly into the
#: unsampled part of a tier, which evaluation always has to reach.
_TIER_DEGREE_CAP = 4

#: Intercepts below this fraction of the data scale are numerical noise.
_INTERCEPT_SNAP = 1e-9

_COND_LIMIT = 1e12
_DENSE_GRID = 2048


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExposureSeries:
    """Flat-field captures at strictly increasing exposure times.

    Parameters
    ----------
    entries : list of (seconds, RawFrame)
    min_entries, min_decades : coverage floor; the defaults require at
        least 8 exposures spanning two decades.
    """

    entries: tuple
    min_entries: int = 8
    min_decades: float = 2.0

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < self.min_entries:
            raise InsufficientCoverageError(
                f"series has {len(entries)} entries, needs >= {self.min_entries}")
        times = np.array([t for t, _ in entries], dtype=float)
        if np.any(times <= 0):
            raise ConfigError("all exposure times must be > 0")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("exposure times must be strictly increasing")
        span = np.log10(times[-1] / times[0])
        if span < self.min_decades - 1e-12:
            raise InsufficientCoverageError(
                f"series spans {span:.2f} decades, needs >= {self.min_decades}")
        first = entries[0][1]
        for _, frame in entries:
            if frame.samples.shape != first.samples.shape:
                raise ConfigError("all frames must share dimensions")
            if frame.bit_depth != first.bit_depth:
                raise ConfigError("all frames must share bit depth")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.entries], dtype=float)


@dataclass(frozen=True)
class RadiometricFunction:
    """Mean SVE value over the calibration ROI per exposure time."""

    times: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        m = np.asarray(self.means, dtype=float)
        if t.shape != m.shape or t.ndim != 1 or t.size == 0:
            raise ConfigError("times/means must be equal-length non-empty 1-D")
        # monotone apart from sub-0.5% noise dips
        if np.any(m[1:] < m[:-1] * 0.995):
            raise CalibrationError("radiometric function dips by more than 0.5%")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "means", m)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class LinearModel:
    """Ideal linear response a*T + b fitted to the sub-EOL samples."""

    a: float
    b: float
    residual_rms: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise CalibrationError(f"line slope must be positive, got {self.a}")
        if self.b < 0:
            raise CalibrationError(f"line intercept must be >= 0, got {self.b}")

    def predict(self, t) -> np.ndarray:
        return self.a * np.asarray(t, dtype=float) + self.b


@dataclass(frozen=True)
class PolyModel:
    """Polynomial radiometric model f(T) = sum p_n * T^n in physical units."""

    coeffs: np.ndarray                 # ascending powers of T
    t_domain: tuple[float, float]
    rms_residual: float = 0.0
    monotone_on_domain: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ConfigError("poly model needs >= 2 coefficients")
        object.__setattr__(self, "coeffs", c)
        lo, hi = self.t_domain
        if not lo < hi:
            raise ConfigError(f"bad T domain {self.t_domain}")

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, t) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float),
                                                self.coeffs)


@dataclass(frozen=True)
class TierPolynomial:
    """Correction polynomial for one SVE tier, in physical value units.

    v_domain is the fitted data hull [min v_k, max v_k]; evaluation
    within the rest of the tier extrapolates (the linearizer floors the
    result against the previous tier's ceiling).
    """

    tier: int
    coeffs: np.ndarray                 # ascending powers of v
    v_domain: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    def evaluate(self, v) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(v, dtype=float),
                                                self.coeffs)


@dataclass(frozen=True)
class AlphaPolynomial:
    """Correction coefficient vs merged value, one polynomial per tier.

    Tier 0 (values below EOL) is the identity: the response there is
    linear by definition of end-of-linearity. Tiers without calibration
    coverage are absent; evaluate_masked reports them out of domain.
    """

    eol: int
    order: int
    tiers: tuple[TierPolynomial, ...]

    def __post_init__(self):
        seen = [tp.tier for tp in self.tiers]
        if len(set(seen)) != len(seen):
            raise ConfigError(f"duplicate tier polynomials: {seen}")
        if 0 not in seen:
            raise ConfigError("tier 0 polynomial is required")

    def tier_of(self, v) -> np.ndarray:
        return np.minimum(np.asarray(v, dtype=np.float64) // self.eol, 3).astype(int)

    def evaluate_masked(self, v) -> tuple[np.ndarray, np.ndarray]:
        """alpha per value plus a bool mask of values in a covered tier."""
        v = np.asarray(v, dtype=float)
        tier_idx = self.tier_of(v)
        alpha = np.full(v.shape, np.nan)
        covered = np.zeros(v.shape, dtype=bool)
        for tp in self.tiers:
            sel = tier_idx == tp.tier
            if np.any(sel):
                alpha[sel] = tp.evaluate(v[sel])
                covered[sel] = True
        return alpha, covered

    def evaluate(self, v) -> np.ndarray:
        alpha, covered = self.evaluate_masked(v)
        if not np.all(covered):
            missing = sorted(set(self.tier_of(np.asarray(v)[~covered]).tolist()))
            raise ConfigError(f"values fall in uncovered tiers {missing}")
        return alpha

    def nearest_covered(self, v) -> np.ndarray:
        """Clamp values in uncovered tiers to the closest covered domain point."""
        v = np.asarray(v, dtype=float)
        _, covered = self.evaluate_masked(v)
        if np.all(covered):
            return v
        out = v.copy()
        bad = ~covered
        edges = []
        for tp in self.tiers:
            edges.extend(tp.v_domain)
        edges = np.asarray(sorted(edges))
        # nearest domain edge is the closest covered point for values in a gap
        idx = np.argmin(np.abs(v[bad][:, None] - edges[None, :]), axis=1)
        out[bad] = edges[idx]
        return out


@dataclass(frozen=True)
class CorrectionProfile:
    """Complete calibration artifact for one illuminant and sensor.

    Invariants enforced here: every correction sample is positive, the
    correction is positive across its covered domain, and samples in the
    linear region (line prediction below 0.9 * EOL) sit within 2 % of 1.
    """

    eol: int
    roles: PixelRoles
    linear: LinearModel
    poly: PolyModel
    alpha_samples: np.ndarray          # shape (n, 2): (T, alpha)
    alpha_of_value: AlphaPolynomial

    def __post_init__(self):
        samples = np.asarray(self.alpha_samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] == 0:
            raise ConfigError("alpha_samples must be a non-empty (n, 2) array")
        object.__setattr__(self, "alpha_samples", samples)
        if self.eol != self.alpha_of_value.eol:
            raise ProfileInvariantError("profile eol differs from correction eol")
        if np.any(samples[:, 1] <= 0):
            raise ProfileInvariantError("correction samples must be positive")
        lin = self.linear.predict(samples[:, 0]) < DEFAULT_LINEAR_MARGIN * self.eol
        if np.any(np.abs(samples[lin, 1] - 1.0) > 0.02):
            worst = float(np.max(np.abs(samples[lin, 1] - 1.0)))
            raise ProfileInvariantError(
                f"linear-region correction off unity by {worst:.3%} (> 2%)")
        for tp in self.alpha_of_value.tiers:
            grid = np.linspace(tp.v_domain[0], tp.v_domain[1], 256)
            if np.any(tp.evaluate(grid) <= 0):
                raise ProfileInvariantError(
                    f"tier-{tp.tier} correction non-positive on its domain")


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------

def default_roi(shape: tuple[int, int],
                size: int = DEFAULT_ROI_SIZE) -> tuple[int, int, int, int]:
    """Centered size x size rectangle in quad coordinates, clipped to shape."""
    h, w = shape
    rw, rh = min(size, w), min(size, h)
    return ((w - rw) // 2, (h - rh) // 2, rw, rh)


def measure_radiometric(series: ExposureSeries, layout: CfaLayout,
                        roles: PixelRoles, eol: int,
                        roi: tuple[int, int, int, int] | None = None,
                        green_policy: str = "average") -> RadiometricFunction:
    """Mean merged value over the ROI for each exposure in the series.

    Unrecoverable pixels are excluded from each mean; an exposure with
    more than half its ROI unrecoverable is dropped with a warning.
    """
    times, means = [], []
    for t, frame in series.entries:
        planes = decompose(frame, layout, roles, green_policy)
        sve = construct(planes, eol)
        if roi is None:
            roi_t = default_roi(sve.shape)
        else:
            roi_t = roi
        x, y, w, h = roi_t
        if (x < 0 or y < 0 or w <= 0 or h <= 0
                or y + h > sve.shape[0] or x + w > sve.shape[1]):
            raise ConfigError(f"roi {roi_t} outside quad plane {sve.shape}")
        vals = sve.values[y:y + h, x:x + w]
        prov = sve.provenance[y:y + h, x:x + w]
        good = prov != Provenance.UNRECOVERABLE
        frac_bad = 1.0 - good.mean()
        if frac_bad > 0.5:
            warnings.warn(
                f"exposure {t:g}s: {frac_bad:.0%} of ROI unrecoverable, "
                f"sample excluded", stacklevel=2)
            continue
        times.append(t)
        means.append(float(vals[good].mean()))
    if not times:
        raise CalibrationError("no usable exposures in series")
    return RadiometricFunction(np.asarray(times), np.asarray(means))


def split_linear_region(rf: RadiometricFunction, eol: int,
                        margin: float = DEFAULT_LINEAR_MARGIN
                        ) -> tuple[RadiometricFunction, RadiometricFunction]:
    """Partition samples at mean value margin * eol; both sides need >= 3."""
    if not 0 < margin <= 1:
        raise ConfigError(f"margin must be in (0, 1], got {margin}")
    lin = rf.means < margin * eol
    n_lin, n_non = int(lin.sum()), int((~lin).sum())
    if n_lin < 3 or n_non < 3:
        raise InsufficientCoverageError(
            f"{n_lin} linear / {n_non} non-linear samples; need >= 3 of each")
    return (RadiometricFunction(rf.times[lin], rf.means[lin]),
            RadiometricFunction(rf.times[~lin], rf.means[~lin]))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def fit_linear(linear_samples: RadiometricFunction,
               b_max: float = DEFAULT_B_MAX) -> LinearModel:
    """Least-squares line with the intercept boxed into [0, b_max].

    An unconstrained intercept below zero triggers a through-origin
    refit; one above b_max is pinned there. Intercepts smaller than
    1e-9 of the data scale are snapped to exactly zero.
    """
    t, v = linear_samples.times, linear_samples.means
    if t.size < 3:
        raise InsufficientCoverageError(f"need >= 3 samples, got {t.size}")
    if np.ptp(t) == 0:
        raise CalibrationError("degenerate fit: all exposure times equal")
    design = np.stack([t, np.ones_like(t)], axis=1)
    (a, b), *_ = np.linalg.lstsq(design, v, rcond=None)
    if b < 0 or b < _INTERCEPT_SNAP * float(np.max(np.abs(v))):
        b = 0.0
        a = float(np.dot(t, v) / np.dot(t, t))
    elif b > b_max:
        b = float(b_max)
        a = float(np.dot(t, v - b) / np.dot(t, t))
    if a <= 0:
        raise CalibrationError(f"non-positive slope {a:g}")
    rms = float(np.sqrt(np.mean((a * t + b - v) ** 2)))
    return LinearModel(a=float(a), b=float(b), residual_rms=rms)


def _fit_physical_poly(x: np.ndarray, y: np.ndarray, deg: int,
                       window: tuple[float, float]) -> np.ndarray:
    """LS polynomial fit on a normalized abscissa, coefficients de-normalized."""
    lo, hi = window
    xn = 2.0 * (x - lo) / (hi - lo) - 1.0
    vander = np.polynomial.polynomial.polyvander(xn, deg)
    if np.linalg.cond(vander) > _COND_LIMIT:
        raise CalibrationError(
            f"ill-conditioned order-{deg} fit; try a lower order")
    cn, *_ = np.linalg.lstsq(vander, y, rcond=None)
    poly = np.polynomial.Polynomial(cn, domain=[lo, hi], window=[-1, 1])
    return poly.convert().coef


def fit_poly(rf: RadiometricFunction, order: int = DEFAULT_POLY_ORDER) -> PolyModel:
    """Polynomial radiometric model over all samples, linear and non-linear.

    The fit minimizes the plain sum of squared residuals; T is normalized
    internally and the coefficients are reported in physical units. The
    model is checked for positivity (fatal: the correction divides by it)
    and monotonicity (recorded; a high-order fit across the merge's tier
    steps is generally not monotone everywhere) on a dense grid.
    """
    if order < 2:
        raise ConfigError(f"order must be >= 2, got {order}")
    if len(rf) < order + 2:
        raise CalibrationError(
            f"{len(rf)} samples cannot support order {order}; need >= {order + 2}")
    lo, hi = float(rf.times[0]), float(rf.times[-1])
    coeffs = _fit_physical_poly(rf.times, rf.means, order, (lo, hi))
    fitted = np.polynomial.polynomial.polyval(rf.times, coeffs)
    rms = float(np.sqrt(np.mean((fitted - rf.means) ** 2)))
    grid = np.polynomial.polynomial.polyval(np.linspace(lo, hi, _DENSE_GRID), coeffs)
    if np.any(grid <= 0):
        raise CalibrationError("radiometric model non-positive on its domain")
    monotone = bool(np.all(np.diff(grid) >= -1e-9 * float(np.max(np.abs(grid)))))
    if not monotone:
        warnings.warn("radiometric model is not monotone on its domain",
                      stacklevel=2)
    return PolyModel(coeffs=coeffs, t_domain=(lo, hi), rms_residual=rms,
                     monotone_on_domain=monotone)


# ---------------------------------------------------------------------------
# Correction coefficients
# ---------------------------------------------------------------------------

def compute_correction(linear: LinearModel, poly: PolyModel,
                       t_grid) -> np.ndarray:
    """alpha(T) = (a*T + b) / f(T) on the grid; f must stay positive there."""
    t = np.asarray(t_grid, dtype=float)
    lo, hi = poly.t_domain
    tol = 1e-9 * (hi - lo)
    if np.any(t < lo - tol) or np.any(t > hi + tol):
        raise ConfigError("t_grid extends outside the polynomial domain")
    f = poly.evaluate(t)
    if np.any(f <= 0):
        raise CalibrationError("radiometric model non-positive on t_grid")
    return np.stack([t, linear.predict(t) / f], axis=1)


def measured_correction(linear: LinearModel, rf: RadiometricFunction) -> np.ndarray:
    """alpha(T) with the measured mean values in the denominator.

    Exact on the true correction curve where the model route smooths the
    tier steps; preferred when the samples themselves are trusted.
    """
    if np.any(rf.means <= 0):
        raise CalibrationError("cannot form corrections: non-positive mean value")
    return np.stack([rf.times, linear.predict(rf.times) / rf.means], axis=1)


def fit_alpha_of_value(alpha_samples, poly: PolyModel | None = None,
                       order: int = DEFAULT_ALPHA_ORDER, *, eol: int,
                       values=None) -> AlphaPolynomial:
    """Fit the per-tier correction-vs-value polynomials.

    Sample values default to the polynomial model evaluated at the sample
    times; pass `values` (e.g. measured means) to override. Each covered
    tier gets a polynomial of degree min(order, n_tier - 1, 4) whose
    domain is that tier's sampled value range; tier 0 is the identity.
    """
    samples = np.asarray(alpha_samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ConfigError("alpha_samples must be an (n, 2) array of (T, alpha)")
    if samples.shape[0] < order + 2:
        raise CalibrationError(
            f"{samples.shape[0]} correction samples cannot support order "
            f"{order}; need >= {order + 2}")
    if eol <= 0:
        raise ConfigError(f"eol must be positive, got {eol}")
    if values is None:
        if poly is None:
            raise ConfigError("need a poly model or explicit values")
        v = poly.evaluate(samples[:, 0])
    else:
        v = np.asarray(values, dtype=float)
        if v.shape != samples[:, 0].shape:
            raise ConfigError("values length differs from alpha_samples")
    alpha = samples[:, 1]

    tiers = [TierPolynomial(tier=0, coeffs=np.array([1.0]),
                            v_domain=(0.0, float(eol)))]
    tier_idx = np.minimum(v // eol, 2).astype(int)
    for j in (1, 2):
        sel = tier_idx == j
        v_j, idx = np.unique(v[sel], return_index=True)
        a_j = alpha[sel][idx]
        n = int(v_j.size)
        if n < 2:
            if n == 1:
                warnings.warn(
                    f"tier {j} has a single correction sample and stays "
                    f"uncovered; add exposures inside that tier", stacklevel=2)
            continue
        deg = max(1, min(order, n - 1, _TIER_DEGREE_CAP))
        hull = (float(v_j.min()), float(v_j.max()))
        coeffs = _fit_physical_poly(v_j, a_j, deg, hull)
        tiers.append(TierPolynomial(tier=j, coeffs=coeffs, v_domain=hull))
    return AlphaPolynomial(eol=int(eol), order=int(order), tiers=tuple(tiers))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def calibrate_from_radiometric(rf: RadiometricFunction, *, roles: PixelRoles,
                               eol: int,
                               order_radiometric: int = DEFAULT_POLY_ORDER,
                               order_alpha: int = DEFAULT_ALPHA_ORDER,
                               margin: float = DEFAULT_LINEAR_MARGIN,
                               alpha_source: str = "measured"
                               ) -> CorrectionProfile:
    """Fit all calibration models from an already-measured radiometric function.

    alpha_source selects the correction denominator: "measured" uses the
    measured mean values (default; exact at the samples), "model" uses
    the fitted radiometric polynomial.
    """
    if alpha_source not in ("measured", "model"):
        raise ConfigError(f"alpha_source must be 'measured' or 'model', "
                          f"got {alpha_source!r}")
    linear_part, _ = split_linear_region(rf, eol, margin)
    linear = fit_linear(linear_part)
    poly = fit_poly(rf, order_radiometric)
    if alpha_source == "measured":
        alpha_samples = measured_correction(linear, rf)
        alpha_poly = fit_alpha_of_value(alpha_samples, poly, order_alpha,
                                        eol=eol, values=rf.means)
    else:
        alpha_samples = compute_correction(linear, poly, rf.times)
        alpha_poly = fit_alpha_of_value(alpha_samples, poly, order_alpha, eol=eol)
    try:
        return CorrectionProfile(eol=int(eol), roles=roles, linear=linear,
                                 poly=poly, alpha_samples=alpha_samples,
                                 alpha_of_value=alpha_poly)
    except ProfileInvariantError as exc:
        raise CalibrationError(f"calibration failed its own checks: {exc}") from None


def calibrate(series: ExposureSeries, *, layout: CfaLayout, roles: PixelRoles,
              eol: int, order_radiometric: int = DEFAULT_POLY_ORDER,
              order_alpha: int = DEFAULT_ALPHA_ORDER,
              margin: float = DEFAULT_LINEAR_MARGIN,
              roi: tuple[int, int, int, int] | None = None,
              green_policy: str = "average",
              alpha_source: str = "measured") -> CorrectionProfile:
    """Measure the flat-field series and fit a complete CorrectionProfile."""
    rf = measure_radiometric(series, layout, roles, eol, roi=roi,
                             green_policy=green_policy)
    return calibrate_from_radiometric(rf, roles=roles, eol=eol,
                                      order_radiometric=order_radiometric,
                                      order_alpha=order_alpha, margin=margin,
                                      alpha_source=alpha_source)
