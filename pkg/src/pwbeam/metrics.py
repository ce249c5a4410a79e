"""Envelope detection, B-mode conversion, and image quality metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
import scipy.signal

from .geometry import ImagingGrid
from .images import BModeImage, EnvelopeImage, RfImage


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class DiskRegion:
    """Disk of radius r around (cz, cx), coordinates in meters."""
    cz: float
    cx: float
    r: float


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle [z_lo, z_hi] x [x_lo, x_hi] in meters.

    The optional steps keep every z_step-th row and x_step-th column of the
    covered pixels, for sampling speckle at its correlation length so the
    statistics tests see roughly independent values.
    """
    z_lo: float
    z_hi: float
    x_lo: float
    x_hi: float
    z_step: int = 1
    x_step: int = 1


@dataclass(frozen=True)
class AnnulusRegion:
    """Annulus r_inner <= d <= r_outer around (cz, cx), meters."""
    cz: float
    cx: float
    r_inner: float
    r_outer: float


RegionSpec = Union[DiskRegion, RectRegion, AnnulusRegion]


def region_mask(region: RegionSpec, grid: ImagingGrid) -> np.ndarray:
    """Boolean (num_z, num_x) membership mask; rejects empty regions."""
    zz = grid.z_coords[:, None]
    xx = grid.x_coords[None, :]
    if isinstance(region, DiskRegion):
        mask = (zz - region.cz) ** 2 + (xx - region.cx) ** 2 <= region.r ** 2
    elif isinstance(region, RectRegion):
        if region.z_step < 1 or region.x_step < 1:
            raise ValueError("region steps must be >= 1")
        mask = ((zz >= region.z_lo) & (zz <= region.z_hi)
                & (xx >= region.x_lo) & (xx <= region.x_hi))
        mask = np.broadcast_to(mask, (grid.num_z, grid.num_x)).copy()
        if region.z_step > 1 or region.x_step > 1:
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            if rows.size and cols.size:
                keep = np.zeros_like(mask)
                sel_r = rows[::region.z_step]
                sel_c = cols[::region.x_step]
                keep[np.ix_(sel_r, sel_c)] = True
                mask &= keep
    elif isinstance(region, AnnulusRegion):
        d2 = (zz - region.cz) ** 2 + (xx - region.cx) ** 2
        mask = (d2 >= region.r_inner ** 2) & (d2 <= region.r_outer ** 2)
    else:
        raise TypeError(f"not a region spec: {region!r}")
    mask = np.broadcast_to(mask, (grid.num_z, grid.num_x)).copy()
    if not mask.any():
        raise ValueError("region contains no grid pixels")
    return mask


# ---------------------------------------------------------------------------
# envelope / b-mode

def envelope(rf: RfImage) -> EnvelopeImage:
    """Per-column envelope via the analytic signal.

    The analytic signal is formed in the frequency domain (negative
    frequencies zeroed, positive doubled, DC and Nyquist kept), one lateral
    column at a time along the axial axis.
    """
    img = rf.as_image()
    if img.shape[0] < 4:
        raise ValueError("need at least 4 axial samples for envelope detection")
    analytic = scipy.signal.hilbert(img, axis=0)
    return EnvelopeImage(data=np.abs(analytic), grid=rf.grid)


def log_compress(env: EnvelopeImage, dynamic_range: float = 60.0) -> BModeImage:
    """Envelope to dB relative to the image maximum, clamped to [-DR, 0]."""
    if dynamic_range <= 0:
        raise ValueError("dynamic_range must be positive")
    peak = env.data.max()
    if peak <= 0:
        raise ValueError("all-zero envelope cannot be log compressed")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env.data / peak)
    return BModeImage(data=np.clip(db, -dynamic_range, 0.0), grid=env.grid,
                      dynamic_range=dynamic_range)


# ---------------------------------------------------------------------------
# resolution

def fwhm(env: EnvelopeImage, peak: tuple[int, int], axis: str) -> float:
    """Full width at half maximum through a peak pixel, in millimeters.

    Parameters
    ----------
    env : EnvelopeImage
    peak : (iz, ix)
        Pixel indices of the target peak; must be a local maximum of the
        profile along the chosen axis.
    axis : 'axial' or 'lateral'

    The half-maximum crossings are located by linear interpolation between
    the neighboring profile samples; a profile that never falls below half
    maximum on one side raises (unresolved target).
    """
    iz, ix = peak
    if axis == "axial":
        profile = env.data[:, ix]
        center = iz
        step_mm = env.grid.dz * 1e3
    elif axis == "lateral":
        profile = env.data[iz, :]
        center = ix
        step_mm = env.grid.dx * 1e3
    else:
        raise ValueError("axis must be 'axial' or 'lateral'")

    top = profile[center]
    if center > 0 and profile[center - 1] > top:
        raise ValueError("peak is not a local maximum along the profile")
    if center < profile.size - 1 and profile[center + 1] > top:
        raise ValueError("peak is not a local maximum along the profile")
    half = top / 2.0

    left = _half_crossing(profile, center, half, -1)
    right = _half_crossing(profile, center, half, +1)
    return (right - left) * step_mm


def _half_crossing(profile, center, half, direction):
    # walk from the peak until the profile drops below half maximum,
    # interpolate the crossing position in fractional samples
    i = center
    while True:
        j = i + direction
        if j < 0 or j >= profile.size:
            raise ValueError("unresolved target: profile never falls below half maximum")
        if profile[j] < half:
            frac = (profile[i] - half) / (profile[i] - profile[j])
            return i + direction * frac
        i = j


# ---------------------------------------------------------------------------
# contrast

def cnr(env: EnvelopeImage, roi: RegionSpec, background: RegionSpec) -> float:
    """Contrast-to-noise ratio in dB between two regions of the envelope.

    20 log10(|mu_roi - mu_bg| / sqrt((var_roi + var_bg) / 2)) on the linear
    envelope.  Zero pooled variance is rejected; equal means give -inf.
    """
    a = env.data[region_mask(roi, env.grid)]
    b = env.data[region_mask(background, env.grid)]
    pooled = (a.var() + b.var()) / 2.0
    if pooled == 0:
        raise ValueError("zero pooled variance between regions")
    diff = abs(a.mean() - b.mean())
    if diff == 0:
        return float("-inf")
    return float(20.0 * np.log10(diff / np.sqrt(pooled)))


def gcnr(env: EnvelopeImage, roi: RegionSpec, background: RegionSpec,
         num_bins: int = 100) -> float:
    """Generalized CNR: 1 minus the histogram overlap of the two regions.

    Both histograms share num_bins equal-width bins spanning the joint
    min-max and are normalized to unit sum, so the result lies in [0, 1]
    (0 = identical distributions, 1 = fully separated).
    """
    a = env.data[region_mask(roi, env.grid)]
    b = env.data[region_mask(background, env.grid)]
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return 0.0
    edges = np.linspace(lo, hi, num_bins + 1)
    pa, _ = np.histogram(a, bins=edges)
    pb, _ = np.histogram(b, bins=edges)
    pa = pa / pa.sum()
    pb = pb / pb.sum()
    return float(1.0 - np.minimum(pa, pb).sum())


# ---------------------------------------------------------------------------
# speckle statistics

class KsResult(NamedTuple):
    statistic: float
    critical_value: float
    passed: bool
    n_used: int
    n_excluded: int


def ks_rayleigh_test(env: EnvelopeImage, region: RegionSpec,
                     alpha: float = 0.05) -> KsResult:
    """Kolmogorov-Smirnov test of the region's envelope against a Rayleigh fit.

    The Rayleigh scale is the maximum-likelihood fit sigma^2 = sum(r^2)/(2n).
    Nonpositive samples are excluded (their count is reported).  The critical
    value is the asymptotic c(alpha)/sqrt(n); the test passes iff the
    statistic is below it.  A region with no positive samples cannot be
    Rayleigh under any scale: the result carries the supremum discrepancy
    D = 1 and fails.
    """
    mask = region_mask(region, env.grid)
    if mask.sum() < 50:
        raise ValueError("region must contain at least 50 pixels")
    r = env.data[mask]
    n_total = r.size
    r = r[r > 0]
    n = r.size
    c_alpha = np.sqrt(-0.5 * np.log(alpha / 2.0))  # 1.358 at alpha = 0.05
    if n == 0:
        return KsResult(statistic=1.0,
                        critical_value=float(c_alpha / np.sqrt(n_total)),
                        passed=False, n_used=0, n_excluded=n_total)

    sigma2 = np.sum(r * r) / (2.0 * n)
    r = np.sort(r)
    cdf = 1.0 - np.exp(-r * r / (2.0 * sigma2))
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    critical = c_alpha / np.sqrt(n)
    return KsResult(statistic=float(d), critical_value=float(critical),
                    passed=bool(d < critical), n_used=n,
                    n_excluded=n_total - n)
