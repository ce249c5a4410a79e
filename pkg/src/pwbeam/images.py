"""Image containers shared by the simulator, solvers, and metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ImagingGrid


@dataclass
class RfImage:
    """Beamformed (or ground-truth) RF pixel vector plus its grid.

    data is the axial-major pixel vector of length grid.num_pixels.
    """

    data: np.ndarray
    grid: ImagingGrid

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).ravel()
        if self.data.size != self.grid.num_pixels:
            raise ValueError("pixel vector length does not match grid")

    def as_image(self) -> np.ndarray:
        """View as a (num_z, num_x) array."""
        return self.data.reshape(self.grid.num_z, self.grid.num_x)


@dataclass
class EnvelopeImage:
    """Nonnegative detected envelope, shape (num_z, num_x)."""

    data: np.ndarray
    grid: ImagingGrid

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.grid.num_z, self.grid.num_x):
            raise ValueError("envelope shape does not match grid")


@dataclass
class BModeImage:
    """Log-compressed image in dB, values in [-dynamic_range, 0]."""

    data: np.ndarray
    grid: ImagingGrid
    dynamic_range: float
