"""Synthetic scenes and channel-data simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage
import scipy.signal

from .geometry import ImagingGrid
from .images import RfImage
from .model import SparseModel


@dataclass(frozen=True)
class PhantomSpec:
    """Scene description: diffuse speckle, anechoic disks, point targets.

    point_targets are (z, x, amplitude) triples in meters; each impulse is
    placed at the nearest pixel center.  cysts are (cz, cx, radius) disks
    whose strict interior is anechoic.  The reflectivity is convolved
    axially with a Gaussian-modulated cosine pulse; fractional_bandwidth is
    the -6 dB bandwidth over center_freq, and sound_speed maps pulse time
    onto the two-way axial distance of the grid.
    """

    speckle_enabled: bool = True
    speckle_std: float = 1.0
    point_targets: tuple = ()
    cysts: tuple = ()
    pulse_center_freq: float = 5e6
    pulse_fractional_bandwidth: float = 1.0
    sound_speed: float = 1540.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.speckle_std < 0:
            raise ValueError("speckle_std must be nonnegative")
        if self.pulse_center_freq <= 0:
            raise ValueError("pulse_center_freq must be positive")
        if not 0 < self.pulse_fractional_bandwidth < 2:
            raise ValueError("pulse_fractional_bandwidth must lie in (0, 2)")
        for c in self.cysts:
            if len(c) != 3 or c[2] <= 0:
                raise ValueError(f"bad cyst spec {c!r}")
        for t in self.point_targets:
            if len(t) != 3:
                raise ValueError(f"bad point target spec {t!r}")


@dataclass
class ChannelData:
    """One transmit event's received samples, shape (num_samples, num_elements)."""

    samples: np.ndarray
    sampling_freq: float
    time_offset: float
    angle: float

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))

    def to_vector(self) -> np.ndarray:
        """Element-major sample vector matching the model's row order."""
        return self.samples.T.ravel()

    @classmethod
    def from_vector(cls, y: np.ndarray, num_samples: int, num_elements: int,
                    sampling_freq: float, time_offset: float,
                    angle: float) -> "ChannelData":
        y = np.asarray(y, dtype=float).ravel()
        if y.size != num_samples * num_elements:
            raise ValueError("vector length does not match (samples, elements)")
        return cls(samples=y.reshape(num_elements, num_samples).T,
                   sampling_freq=sampling_freq, time_offset=time_offset,
                   angle=angle)


def pulse_kernel(spec: PhantomSpec, grid: ImagingGrid) -> np.ndarray:
    """Axial point-spread pulse sampled at the grid's two-way pitch.

    Odd length, peak 1 at the center tap, truncated at the -60 dB envelope.
    """
    dt = 2.0 * grid.dz / spec.sound_speed  # pulse-echo time per axial pixel
    cutoff = scipy.signal.gausspulse("cutoff", fc=spec.pulse_center_freq,
                                     bw=spec.pulse_fractional_bandwidth,
                                     tpr=-60)
    half = max(int(np.ceil(cutoff / dt)), 1)
    t = np.arange(-half, half + 1) * dt
    return scipy.signal.gausspulse(t, fc=spec.pulse_center_freq,
                                   bw=spec.pulse_fractional_bandwidth)


def make_reflectivity(spec: PhantomSpec, grid: ImagingGrid) -> RfImage:
    """Build the ground-truth reflectivity image for a scene.

    Order of operations: i.i.d. zero-mean Gaussian speckle where enabled,
    anechoic disks zeroed (pixels strictly inside), point impulses added,
    then every lateral column convolved axially with the pulse.
    """
    rng = np.random.default_rng(spec.rng_seed)
    if spec.speckle_enabled:
        img = rng.normal(0.0, spec.speckle_std, size=(grid.num_z, grid.num_x))
    else:
        img = np.zeros((grid.num_z, grid.num_x))

    zz = grid.z_coords[:, None]
    xx = grid.x_coords[None, :]
    for cz, cx, r in spec.cysts:
        inside = (zz - cz) ** 2 + (xx - cx) ** 2 < r * r
        if not inside.any():
            raise ValueError(f"cyst at ({cz}, {cx}) covers no grid pixel")
        img[inside] = 0.0

    for z, x, amp in spec.point_targets:
        iz = int(np.round((z - grid.z_start) / grid.dz))
        ix = int(np.round((x - grid.x_coords[0]) / grid.dx))
        if not (0 <= iz < grid.num_z and 0 <= ix < grid.num_x):
            raise ValueError(f"point target at ({z}, {x}) is outside the grid")
        img[iz, ix] += amp

    kernel = pulse_kernel(spec, grid)
    img = scipy.ndimage.convolve1d(img, kernel, axis=0, mode="constant", cval=0.0)
    return RfImage(data=img.ravel(), grid=grid)


def simulate_channel_data(model: SparseModel, x: RfImage, snr_db: float = np.inf,
                          seed: int = 0) -> ChannelData:
    """Project a reflectivity image through the model and add white noise.

    snr_db fixes 20 log10(rms(A x) / sigma_noise); +inf means noiseless,
    -inf is rejected.  The noise is drawn from default_rng(seed), so equal
    seeds reproduce the data exactly.
    """
    if np.isneginf(snr_db):
        raise ValueError("snr_db = -inf would mean pure noise; rejected")
    if x.grid != model.grid:
        raise ValueError("reflectivity grid does not match model grid")
    clean = model.apply(x.data)
    if np.isposinf(snr_db):
        y = clean
    else:
        rms = float(np.sqrt(np.mean(clean ** 2)))
        sigma = rms * 10.0 ** (-snr_db / 20.0)
        rng = np.random.default_rng(seed)
        y = clean + rng.normal(0.0, sigma, size=clean.size) if sigma > 0 else clean.copy()
    return ChannelData.from_vector(
        y, model.num_samples, model.probe.num_elements,
        sampling_freq=model.probe.sampling_freq,
        time_offset=model.probe.time_offset,
        angle=model.tx.angle)
