"""Binary file formats for channel data, images, and cached models.

All formats are little-endian with a 4-byte ASCII magic.  Writers go
through a temp file in the destination directory and rename on success, so
a failed write never leaves a partial file behind.  Readers validate the
header before touching the payload.

    CHD1  channel data   magic, M u32, N u32, fs f64, t0 f64, angle f64,
                         M*N f32 samples row-major
    IMG1  pixel image    magic, num_z u32, num_x u32, dz f64, dx f64,
                         num_z*num_x f32 row-major
    PHI1  model cache    magic, rows u64, cols u64, nnz u64, sha256 of the
                         build inputs (32 bytes), row offsets i64,
                         column indices i32, weights f32
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np
import scipy.sparse as sparse

from .geometry import ApodizationSpec, ImagingGrid, PlaneWaveTx, ProbeGeometry
from .images import RfImage
from .model import SparseModel
from .phantom import ChannelData

CHD_MAGIC = b"CHD1"
IMG_MAGIC = b"IMG1"
PHI_MAGIC = b"PHI1"


class FormatError(ValueError):
    """Raised on magic/size mismatches while reading."""


def atomic_write(path, payload_writer):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            payload_writer(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_exact(fh, count, what):
    buf = fh.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated file while reading {what}")
    return buf


# ---------------------------------------------------------------------------
# channel data

def write_channel_data(path, data: ChannelData):
    m, n = data.samples.shape

    def body(fh):
        fh.write(CHD_MAGIC)
        fh.write(struct.pack("<IIddd", m, n, data.sampling_freq,
                             data.time_offset, data.angle))
        fh.write(np.ascontiguousarray(data.samples, dtype="<f4").tobytes())

    atomic_write(path, body)


def read_channel_data(path) -> ChannelData:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CHD_MAGIC:
            raise FormatError(f"not a channel data file: magic {magic!r}")
        m, n, fs, t0, angle = struct.unpack("<IIddd", _read_exact(fh, 32, "header"))
        if m < 1 or n < 1:
            raise FormatError("empty channel data")
        raw = _read_exact(fh, 4 * m * n, "samples")
        samples = np.frombuffer(raw, dtype="<f4").reshape(m, n).astype(float)
    return ChannelData(samples=samples, sampling_freq=fs, time_offset=t0,
                       angle=angle)


# ---------------------------------------------------------------------------
# images

def write_image(path, image: RfImage):
    g = image.grid

    def body(fh):
        fh.write(IMG_MAGIC)
        fh.write(struct.pack("<IIdd", g.num_z, g.num_x, g.dz, g.dx))
        fh.write(np.ascontiguousarray(image.as_image(), dtype="<f4").tobytes())

    atomic_write(path, body)


def read_image_raw(path) -> tuple[np.ndarray, float, float]:
    """Read an image file standalone; returns (pixels, dz, dx)."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != IMG_MAGIC:
            raise FormatError(f"not an image file: magic {magic!r}")
        nz, nx, dz, dx = struct.unpack("<IIdd", _read_exact(fh, 24, "header"))
        if nz < 1 or nx < 1:
            raise FormatError("empty image")
        raw = _read_exact(fh, 4 * nz * nx, "pixels")
        img = np.frombuffer(raw, dtype="<f4").reshape(nz, nx).astype(float)
    return img, dz, dx


def read_image(path, grid: ImagingGrid) -> RfImage:
    """Read an image file; the grid supplies z_start and is validated
    against the stored dimensions and spacings."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != IMG_MAGIC:
            raise FormatError(f"not an image file: magic {magic!r}")
        nz, nx, dz, dx = struct.unpack("<IIdd", _read_exact(fh, 24, "header"))
        if (nz, nx) != (grid.num_z, grid.num_x):
            raise FormatError(f"image is {nz}x{nx}, grid expects "
                              f"{grid.num_z}x{grid.num_x}")
        if not (np.isclose(dz, grid.dz) and np.isclose(dx, grid.dx)):
            raise FormatError("image pixel spacing does not match grid")
        raw = _read_exact(fh, 4 * nz * nx, "pixels")
        img = np.frombuffer(raw, dtype="<f4").reshape(nz, nx).astype(float)
    return RfImage(data=img.ravel(), grid=grid)


# ---------------------------------------------------------------------------
# model cache

def model_fingerprint(probe: ProbeGeometry, grid: ImagingGrid, tx: PlaneWaveTx,
                      apod: ApodizationSpec, num_samples: int) -> bytes:
    """sha256 over a canonical rendering of everything the build depends on."""
    parts = [
        "probe", repr(probe.num_elements), float(probe.pitch).hex(),
        float(probe.sampling_freq).hex(), float(probe.center_freq).hex(),
        float(probe.sound_speed).hex(), float(probe.time_offset).hex(),
        "grid", float(grid.z_start).hex(), repr(grid.num_z), repr(grid.num_x),
        float(grid.dz).hex(), float(grid.dx).hex(),
        "tx", float(tx.angle).hex(),
        "apod", apod.window, float(apod.f_number).hex(),
        float(apod.tukey_taper).hex(),
        "m", repr(int(num_samples)),
    ]
    return hashlib.sha256("|".join(parts).encode("ascii")).digest()


def write_model_cache(path, model: SparseModel):
    mat = model.matrix
    digest = model_fingerprint(model.probe, model.grid, model.tx, model.apod,
                               model.num_samples)

    def body(fh):
        fh.write(PHI_MAGIC)
        fh.write(struct.pack("<QQQ", mat.shape[0], mat.shape[1], mat.nnz))
        fh.write(digest)
        fh.write(np.ascontiguousarray(mat.indptr, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(mat.indices, dtype="<i4").tobytes())
        fh.write(np.ascontiguousarray(mat.data, dtype="<f4").tobytes())

    atomic_write(path, body)


def read_model_cache(path, probe: ProbeGeometry, grid: ImagingGrid,
                     tx: PlaneWaveTx, apod: ApodizationSpec,
                     num_samples: int) -> SparseModel:
    """Load a cached model; rejects a cache built from different inputs.

    Cached weights are 32-bit, so a cache round trip quantizes the model.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != PHI_MAGIC:
            raise FormatError(f"not a model cache: magic {magic!r}")
        rows, cols, nnz = struct.unpack("<QQQ", _read_exact(fh, 24, "header"))
        digest = _read_exact(fh, 32, "fingerprint")
        expect = model_fingerprint(probe, grid, tx, apod, num_samples)
        if digest != expect:
            raise FormatError("model cache was built from different inputs")
        if rows != num_samples * probe.num_elements or cols != grid.num_pixels:
            raise FormatError("model cache dimensions are inconsistent")
        indptr = np.frombuffer(_read_exact(fh, 8 * (rows + 1), "row offsets"),
                               dtype="<i8")
        indices = np.frombuffer(_read_exact(fh, 4 * nnz, "column indices"),
                                dtype="<i4")
        weights = np.frombuffer(_read_exact(fh, 4 * nnz, "weights"),
                                dtype="<f4").astype(float)
    mat = sparse.csr_matrix((weights, indices.astype(np.int32), indptr.astype(np.int64)),
                            shape=(rows, cols))
    return SparseModel(matrix=mat, probe=probe, grid=grid, tx=tx, apod=apod,
                       num_samples=num_samples)
