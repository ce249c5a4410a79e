import math

import numpy as np
import pytest

from pwbeam import (ApodizationSpec, ImagingGrid, PlaneWaveTx, ProbeGeometry,
                    build_model, num_samples_for)


def brute_force_dense(probe, grid, tx, apod, num_samples):
    """Reference model assembled entry by entry with plain Python loops.

    Independent of the package's vectorized path: delays, window functions,
    per-row max, and apodization are all recomputed with math.* here.
    """
    n_el, m = probe.num_elements, num_samples
    c, fs, t0 = probe.sound_speed, probe.sampling_freq, probe.time_offset
    dt = 1.0 / fs
    ex = [(i - (n_el - 1) / 2.0) * probe.pitch for i in range(n_el)]
    zs = [grid.z_start + grid.dz * iz for iz in range(grid.num_z)]
    xs = [grid.dx * (ix - (grid.num_x - 1) / 2.0) for ix in range(grid.num_x)]
    pix = [(z, x) for z in zs for x in xs]  # axial-major
    p = len(pix)

    def apod_weight(z, x, xe):
        half = z / (2.0 * apod.f_number)
        off = abs(x - xe)
        if off > half:
            return 0.0
        u = off / half if half > 0 else 0.0
        if apod.window == "rect":
            return 1.0
        if apod.window == "hanning":
            return 0.5 * (1.0 + math.cos(math.pi * u))
        a = apod.tukey_taper
        if a == 0.0 or u <= 1.0 - a:
            return 1.0
        return 0.5 * (1.0 + math.cos(math.pi * (u - 1.0 + a) / a))

    dense = np.zeros((m * n_el, p))
    for n in range(n_el):
        tau = [(z * math.cos(tx.angle) + x * math.sin(tx.angle)) / c
               + math.sqrt(z * z + (x - ex[n]) ** 2) / c for z, x in pix]
        for mi in range(m):
            t = t0 + mi * dt
            diffs = [abs(t - tau[j]) for j in range(p)]
            contrib = [j for j in range(p) if diffs[j] <= dt]
            if not contrib:
                continue
            tmax = max(diffs[j] for j in contrib)
            for j in contrib:
                w = 1.0 if tmax == 0.0 else 1.0 - diffs[j] / tmax
                w *= apod_weight(pix[j][0], pix[j][1], ex[n])
                dense[n * m + mi, j] = w
    return dense


@pytest.mark.parametrize("angle,window", [
    (0.0, "hanning"),
    (np.deg2rad(4.0), "hanning"),
    (np.deg2rad(-7.0), "tukey"),
    (np.deg2rad(2.0), "rect"),
])
def test_matches_brute_force_reference(small_probe, small_grid, angle, window):
    tx = PlaneWaveTx(angle)
    apod = ApodizationSpec(window=window, f_number=0.5)
    model = build_model(small_probe, small_grid, tx, apod)
    ref = brute_force_dense(small_probe, small_grid, tx, apod, model.num_samples)
    got = model.matrix.toarray()
    assert got.shape == ref.shape
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-11)


def test_nonzero_time_offset_matches_reference(small_probe, small_grid):
    probe = ProbeGeometry(num_elements=small_probe.num_elements,
                          pitch=small_probe.pitch,
                          sampling_freq=small_probe.sampling_freq,
                          center_freq=small_probe.center_freq,
                          sound_speed=small_probe.sound_speed,
                          time_offset=5.2e-6)
    tx, apod = PlaneWaveTx(0.0), ApodizationSpec()
    model = build_model(probe, small_grid, tx, apod)
    ref = brute_force_dense(probe, small_grid, tx, apod, model.num_samples)
    assert np.allclose(model.matrix.toarray(), ref, rtol=1e-9, atol=1e-11)


def test_weights_in_unit_interval(small_model):
    assert small_model.nnz > 0
    assert np.all(small_model.weights > 0.0)
    assert np.all(small_model.weights <= 1.0)


def test_sparsity(small_model):
    density = small_model.nnz / (small_model.num_rows * small_model.num_cols)
    assert density < 0.05


def test_row_layout_element_major(small_model, small_probe):
    m = small_model.num_samples
    assert small_model.num_rows == m * small_probe.num_elements
    # early samples precede the first echo, so row 0 is empty but present
    offsets = small_model.row_offsets
    assert offsets.size == small_model.num_rows + 1
    assert offsets[1] - offsets[0] == 0


def test_column_sums_match_dense(small_model, small_dense):
    assert np.allclose(small_model.column_norm_weights(), small_dense.sum(axis=0),
                       rtol=1e-12, atol=1e-14)


def test_apply_adjoint_match_dense(small_model, small_dense):
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.normal(size=small_model.num_cols)
        y = rng.normal(size=small_model.num_rows)
        assert np.allclose(small_model.apply(x), small_dense @ x, rtol=1e-12, atol=1e-12)
        assert np.allclose(small_model.adjoint(y), small_dense.T @ y, rtol=1e-12, atol=1e-12)


def test_adjoint_dot_identity(small_model):
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.normal(size=small_model.num_cols)
        y = rng.normal(size=small_model.num_rows)
        ax = small_model.apply(x)
        lhs = np.dot(ax, y)
        rhs = np.dot(x, small_model.adjoint(y))
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(ax) * np.linalg.norm(y)


def test_single_pixel_hits_window_of_samples(small_probe, small_grid, small_model):
    # a delta reflectivity shows up only within +-1 sample of its delay
    j = 7 * small_grid.num_x + 9
    z = small_grid.z_coords[7]
    x = small_grid.x_coords[9]
    y = small_model.apply(np.eye(small_model.num_cols)[j])
    m = small_model.num_samples
    fs, c = small_probe.sampling_freq, small_probe.sound_speed
    ex = (np.arange(8) - 3.5) * small_probe.pitch
    tau = z / c + np.sqrt(z * z + (x - ex) ** 2) / c
    for n in range(8):
        hits = np.nonzero(y[n * m:(n + 1) * m])[0]
        if hits.size:
            t_hit = hits / fs
            assert np.all(np.abs(t_hit - tau[n]) <= 1.0 / fs + 1e-15)


def test_num_samples_covers_all_delays(small_probe, small_grid):
    for angle in (0.0, np.deg2rad(8.0)):
        tx = PlaneWaveTx(angle)
        m = num_samples_for(small_probe, small_grid, tx)
        zz, xx = small_grid.pixel_coords()
        ex = (np.arange(8) - 3.5) * small_probe.pitch
        tau = ((zz * np.cos(angle) + xx * np.sin(angle))[:, None]
               + np.sqrt(zz[:, None] ** 2 + (xx[:, None] - ex[None, :]) ** 2)
               ) / small_probe.sound_speed
        t_last = small_probe.time_offset + (m - 1) / small_probe.sampling_freq
        assert t_last >= tau.max() + 1.0 / small_probe.sampling_freq


def test_build_is_deterministic(small_probe, small_grid):
    a = build_model(small_probe, small_grid, PlaneWaveTx(0.0), ApodizationSpec())
    b = build_model(small_probe, small_grid, PlaneWaveTx(0.0), ApodizationSpec())
    assert np.array_equal(a.row_offsets, b.row_offsets)
    assert np.array_equal(a.col_indices, b.col_indices)
    assert np.array_equal(a.weights, b.weights)


def test_shape_checks():
    with pytest.raises(ValueError):
        ImagingGrid(z_start=5e-3, num_z=0, num_x=4, dz=1e-4, dx=1e-4)


def test_apply_rejects_wrong_length(small_model):
    with pytest.raises(ValueError):
        small_model.apply(np.zeros(small_model.num_cols + 1))
    with pytest.raises(ValueError):
        small_model.adjoint(np.zeros(small_model.num_rows - 1))
