"""Sparse linear measurement model mapping pixel reflectivity to channel data.

Each row of the model corresponds to one recorded sample of one element.
Row r holds sample m = r mod M of element n = r // M, taken at time
t = t0 + m / fs.  A pixel with total propagation delay tau (plane-wave
transmit plus element return path) contributes to that row iff
|t - tau| <= 1/fs; its weight is the triangular interpolation

    w = 1 - |t - tau| / tmax

with tmax the largest |t - tau| among the row's contributing pixels,
multiplied by the receive apodization of (pixel, element).  Rows with no
contributing pixel stay empty; zero weights are not stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .geometry import (ApodizationSpec, ImagingGrid, PlaneWaveTx,
                       ProbeGeometry, apodization_weight, element_positions,
                       rx_delay, tx_delay_plane_wave)


@dataclass
class SparseModel:
    """CSR measurement model of shape (num_samples * num_elements, num_pixels)."""

    matrix: sparse.csr_matrix
    probe: ProbeGeometry
    grid: ImagingGrid
    tx: PlaneWaveTx
    apod: ApodizationSpec
    num_samples: int

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def weights(self) -> np.ndarray:
        return self.matrix.data

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Forward projection: channel-sample vector of length num_rows."""
        x = np.asarray(x).ravel()
        if x.size != self.num_cols:
            raise ValueError(f"expected pixel vector of length {self.num_cols}")
        return self.matrix @ x

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Transpose projection: pixel vector of length num_cols."""
        y = np.asarray(y).ravel()
        if y.size != self.num_rows:
            raise ValueError(f"expected sample vector of length {self.num_rows}")
        return self.matrix.T @ y

    def column_norm_weights(self) -> np.ndarray:
        """Per-pixel sum of model weights (the DAS normalization)."""
        return np.asarray(self.matrix.sum(axis=0)).ravel()


def num_samples_for(probe: ProbeGeometry, grid: ImagingGrid,
                    tx: PlaneWaveTx) -> int:
    """Smallest sample count that covers every pixel's contribution window.

    The latest total delay over (pixel, element) pairs is attained at a grid
    corner because both delay terms are convex in the pixel position.
    """
    cz = np.array([grid.z_coords[0], grid.z_coords[-1]])
    cx = np.array([grid.x_coords[0], grid.x_coords[-1]])
    zz, xx = np.meshgrid(cz, cx, indexing="ij")
    corners_z = zz.ravel()[:, None]
    corners_x = xx.ravel()[:, None]
    elem_x = element_positions(probe)[None, :]
    tau = (tx_delay_plane_wave(corners_z, corners_x, tx, probe.sound_speed)
           + rx_delay(corners_z, corners_x, elem_x, probe.sound_speed))
    dt = 1.0 / probe.sampling_freq
    span = tau.max() + dt - probe.time_offset
    if span <= 0:
        raise ValueError("time_offset lies after every pixel's echo window")
    return int(np.ceil(span * probe.sampling_freq)) + 1


def build_model(probe: ProbeGeometry, grid: ImagingGrid, tx: PlaneWaveTx,
                apod: ApodizationSpec, num_samples: int | None = None) -> SparseModel:
    """Assemble the sparse measurement model for one plane-wave transmit.

    Parameters
    ----------
    probe, grid, tx, apod
        Acquisition geometry, pixel grid, transmit steering, receive window.
    num_samples : int, optional
        Samples per element (M).  Defaults to the smallest count covering
        every pixel, see num_samples_for.

    Returns
    -------
    SparseModel
        Rows ordered element-major (element n occupies rows n*M .. n*M+M-1),
        columns axial-major over pixels, float64 weights.
    """
    if grid.num_pixels < 1:
        raise ValueError("empty imaging grid")
    m_count = num_samples_for(probe, grid, tx) if num_samples is None else int(num_samples)
    if m_count < 1:
        raise ValueError("num_samples must be >= 1")

    c = probe.sound_speed
    fs = probe.sampling_freq
    t0 = probe.time_offset
    dt = 1.0 / fs

    pz, px = grid.pixel_coords()
    tau_tx = tx_delay_plane_wave(pz, px, tx, c)
    elem_x = element_positions(probe)

    rows_parts, cols_parts, vals_parts = [], [], []
    # candidate sample offsets around floor((tau - t0) * fs); the window
    # |t - tau| <= 1/fs can cover at most 3 sample ticks, the extra slack
    # guards the floor() against float rounding at the boundaries
    cand = np.arange(-1, 3)

    for n in range(probe.num_elements):
        tau = tau_tx + rx_delay(pz, px, elem_x[n], c)
        apo = apodization_weight(pz, px, elem_x[n], apod)

        m_cand = np.floor((tau - t0) * fs).astype(np.int64)[:, None] + cand[None, :]
        t_cand = t0 + m_cand / fs
        dtv = np.abs(t_cand - tau[:, None])
        ok = (m_cand >= 0) & (m_cand < m_count) & (dtv <= dt)

        pix_idx, _ = np.nonzero(ok)
        m_sel = m_cand[ok]
        d_sel = dtv[ok]

        # per-row max |t - tau| over contributing pixels, before apodization
        tmax = np.zeros(m_count)
        np.maximum.at(tmax, m_sel, d_sel)
        denom = tmax[m_sel]
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(denom > 0, 1.0 - d_sel / np.where(denom > 0, denom, 1.0), 1.0)
        w = w * apo[pix_idx]

        keep = w > 0
        rows_parts.append(n * m_count + m_sel[keep])
        cols_parts.append(pix_idx[keep])
        vals_parts.append(w[keep])

    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)
    mat = sparse.csr_matrix(
        (vals, (rows, cols)),
        shape=(m_count * probe.num_elements, grid.num_pixels),
    )
    mat.sort_indices()
    return SparseModel(matrix=mat, probe=probe, grid=grid, tx=tx, apod=apod,
                       num_samples=m_count)
