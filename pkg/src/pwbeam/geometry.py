"""Probe and grid geometry, propagation delays, reception apodization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProbeGeometry:
    """Linear array description.

    Parameters
    ----------
    num_elements : int
        Number of array elements.
    pitch : float
        Element-to-element spacing in meters.
    sampling_freq : float
        Channel sampling frequency in Hz.
    center_freq : float
        Nominal transmit center frequency in Hz.
    sound_speed : float
        Speed of sound in m/s.
    time_offset : float
        Acquisition time of sample index 0, in seconds.
    """

    num_elements: int
    pitch: float
    sampling_freq: float
    center_freq: float
    sound_speed: float
    time_offset: float = 0.0

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        if self.sampling_freq <= 0:
            raise ValueError("sampling_freq must be positive")
        if self.center_freq <= 0:
            raise ValueError("center_freq must be positive")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be positive")


@dataclass(frozen=True)
class ImagingGrid:
    """Rectangular pixel grid; (z, x) are pixel centers, z axial, x lateral.

    Pixel vectors are axial-major: pixel j = iz * num_x + ix, i.e. the
    C-order ravel of a (num_z, num_x) image array.
    """

    z_start: float
    num_z: int
    num_x: int
    dz: float
    dx: float

    def __post_init__(self):
        if self.num_z < 1 or self.num_x < 1:
            raise ValueError("grid must contain at least one pixel")
        if self.dz <= 0 or self.dx <= 0:
            raise ValueError("pixel spacings must be positive")
        if self.z_start <= 0:
            raise ValueError("z_start must be positive (grid sits below the array)")

    @classmethod
    def for_probe(cls, probe: ProbeGeometry, z_start: float, num_z: int,
                  num_x: int | None = None) -> "ImagingGrid":
        """Grid with default spacings dz = c / (2 fs) and dx = pitch."""
        dz = probe.sound_speed / (2.0 * probe.sampling_freq)
        nx = probe.num_elements if num_x is None else num_x
        return cls(z_start=z_start, num_z=num_z, num_x=nx, dz=dz, dx=probe.pitch)

    @property
    def num_pixels(self) -> int:
        return self.num_z * self.num_x

    @property
    def z_coords(self) -> np.ndarray:
        return self.z_start + self.dz * np.arange(self.num_z)

    @property
    def x_coords(self) -> np.ndarray:
        # lateral axis centered on the array, same convention as element_positions
        return self.dx * (np.arange(self.num_x) - (self.num_x - 1) / 2.0)

    def pixel_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(z, x) of every pixel as two length-num_pixels vectors, axial-major."""
        zz, xx = np.meshgrid(self.z_coords, self.x_coords, indexing="ij")
        return zz.ravel(), xx.ravel()


@dataclass(frozen=True)
class PlaneWaveTx:
    """Steered plane-wave transmit; angle in radians, 0 = broadside."""

    angle: float = 0.0


@dataclass(frozen=True)
class ApodizationSpec:
    """Receive apodization: window over a depth-dependent aperture.

    The aperture half-width at depth z is z / (2 f_number); the window peaks
    at 1 for an element directly above the pixel and is 0 outside the
    aperture.  tukey_taper is the tapered fraction of the Tukey window and is
    ignored for the other windows.
    """

    window: str = "hanning"
    f_number: float = 0.5
    tukey_taper: float = 0.25

    def __post_init__(self):
        if self.window not in ("hanning", "tukey", "rect"):
            raise ValueError(f"unknown window {self.window!r}")
        if self.f_number <= 0:
            raise ValueError("f_number must be positive")
        if not 0.0 <= self.tukey_taper <= 1.0:
            raise ValueError("tukey_taper must lie in [0, 1]")


def element_positions(probe: ProbeGeometry) -> np.ndarray:
    """Lateral element centers in meters, symmetric about x = 0."""
    idx = np.arange(probe.num_elements) - (probe.num_elements - 1) / 2.0
    return idx * probe.pitch


def tx_delay_plane_wave(z, x, tx: PlaneWaveTx, sound_speed: float):
    """One-way transmit delay of a steered plane wave to pixel (z, x).

    The wavefront passes through the array center at t = 0, so the delay is
    (z cos(angle) + x sin(angle)) / c.  Broadcasts over array inputs.
    """
    return (z * np.cos(tx.angle) + x * np.sin(tx.angle)) / sound_speed


def rx_delay(z, x, element_x, sound_speed: float):
    """One-way return delay from pixel (z, x) to an element at element_x."""
    return np.sqrt(z * z + (x - element_x) ** 2) / sound_speed


def apodization_weight(z, x, element_x, spec: ApodizationSpec):
    """Receive apodization weight of an element for pixel (z, x).

    Zero outside the aperture |x - element_x| > z / (2 f_number); inside, the
    window value at the normalized offset, peaking at 1 above the pixel.
    """
    z = np.asarray(z, dtype=float)
    off = np.abs(np.asarray(x, dtype=float) - element_x)
    half = z / (2.0 * spec.f_number)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(half > 0, off / np.where(half > 0, half, 1.0), np.inf)
    u = np.where((off == 0) & (half == 0), 0.0, u)
    w = np.where(u <= 1.0, _window_value(np.minimum(u, 1.0), spec), 0.0)
    if w.ndim == 0:
        return float(w)
    return w


def _window_value(u, spec: ApodizationSpec):
    # u = normalized |offset| / half-aperture in [0, 1]
    if spec.window == "rect":
        return np.ones_like(u)
    if spec.window == "hanning":
        return 0.5 * (1.0 + np.cos(np.pi * u))
    # tukey: flat inner region, raised-cosine taper over the outer fraction
    a = spec.tukey_taper
    if a == 0.0:
        return np.ones_like(u)
    t = (u - (1.0 - a)) / a
    return np.where(u <= 1.0 - a, 1.0, 0.5 * (1.0 + np.cos(np.pi * t)))
