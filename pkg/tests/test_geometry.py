import math

import numpy as np
import pytest

from pwbeam import (ApodizationSpec, ImagingGrid, PlaneWaveTx, ProbeGeometry,
                    apodization_weight, element_positions, rx_delay,
                    tx_delay_plane_wave)


def test_element_positions_centered_and_pitched(small_probe):
    ex = element_positions(small_probe)
    assert ex.size == small_probe.num_elements
    assert abs(ex.sum()) < 1e-15
    assert np.allclose(np.diff(ex), small_probe.pitch)
    # symmetric pair around the center
    assert ex[0] == -ex[-1]


def test_element_positions_odd_count_has_center_element():
    probe = ProbeGeometry(num_elements=5, pitch=0.2e-3, sampling_freq=10e6,
                          center_freq=5e6, sound_speed=1500.0)
    ex = element_positions(probe)
    assert ex[2] == 0.0


def test_tx_delay_broadside_is_z_over_c():
    tx = PlaneWaveTx(0.0)
    assert tx_delay_plane_wave(0.02, 0.005, tx, 1540.0) == pytest.approx(0.02 / 1540.0, rel=1e-15)


def test_tx_delay_steered_matches_projection():
    # wavefront through the array center: delay is the path projection / c
    th = 0.2
    z, x, c = 0.02, 0.005, 1540.0
    expect = (z * math.cos(th) + x * math.sin(th)) / c
    assert tx_delay_plane_wave(z, x, PlaneWaveTx(th), c) == pytest.approx(expect, rel=1e-14)
    # steering toward positive x shortens the path of negative-x pixels
    assert (tx_delay_plane_wave(z, -x, PlaneWaveTx(th), c)
            < tx_delay_plane_wave(z, x, PlaneWaveTx(th), c))


def test_rx_delay_directly_above_and_345():
    assert rx_delay(0.02, 0.001, 0.001, 1540.0) == pytest.approx(0.02 / 1540.0, rel=1e-15)
    # 3-4-5 triangle
    assert rx_delay(4e-3, 3e-3, 0.0, 1000.0) == pytest.approx(5e-6, rel=1e-14)


def test_rx_delay_axial_continuity():
    # neighbors along z differ by less than 2 dz / c
    rng = np.random.default_rng(7)
    c, dz = 1540.0, 61.6e-6
    z = rng.uniform(1e-3, 40e-3, 200)
    x = rng.uniform(-10e-3, 10e-3, 200)
    xe = rng.uniform(-10e-3, 10e-3, 200)
    step = np.abs(rx_delay(z + dz, x, xe, c) - rx_delay(z, x, xe, c))
    assert np.all(step < 2 * dz / c)


def test_delay_bounds():
    rng = np.random.default_rng(3)
    z = rng.uniform(1e-4, 50e-3, 100)
    x = rng.uniform(-20e-3, 20e-3, 100)
    for th in (-0.3, 0.0, 0.3):
        tau = tx_delay_plane_wave(z, x, PlaneWaveTx(th), 1540.0)
        assert np.all(np.abs(tau) <= (z + np.abs(x)) / 1540.0 + 1e-18)
    # the return path is never shorter than straight up
    assert np.all(rx_delay(z, x, 0.0, 1540.0) >= z / 1540.0 - 1e-18)


class TestApodization:
    def test_peak_at_element_above_pixel(self):
        spec = ApodizationSpec(window="hanning", f_number=0.5)
        assert apodization_weight(0.02, 0.003, 0.003, spec) == pytest.approx(1.0)

    def test_zero_outside_aperture(self):
        spec = ApodizationSpec(window="hanning", f_number=1.0)
        half = 0.02 / 2.0  # a = z / (2 f#)
        assert apodization_weight(0.02, 0.0, half * 1.01, spec) == 0.0
        assert apodization_weight(0.02, 0.0, -half * 1.5, spec) == 0.0

    def test_hanning_zero_at_edge(self):
        spec = ApodizationSpec(window="hanning", f_number=0.5)
        half = 0.02  # z=0.02, f#=0.5
        assert apodization_weight(0.02, 0.0, half, spec) == pytest.approx(0.0, abs=1e-15)

    def test_hanning_half_way(self):
        spec = ApodizationSpec(window="hanning", f_number=0.5)
        # u = 1/2 -> 0.5 (1 + cos(pi/2)) = 0.5
        assert apodization_weight(0.02, 0.0, 0.01, spec) == pytest.approx(0.5, rel=1e-12)

    def test_rect_flat_inside(self):
        spec = ApodizationSpec(window="rect", f_number=0.5)
        for xe in (0.0, 0.005, -0.019, 0.02):
            assert apodization_weight(0.02, 0.0, xe, spec) == 1.0

    def test_tukey_flat_then_taper(self):
        spec = ApodizationSpec(window="tukey", f_number=0.5, tukey_taper=0.25)
        half = 0.02
        # inside the untapered 75%
        assert apodization_weight(0.02, 0.0, 0.5 * half, spec) == 1.0
        assert apodization_weight(0.02, 0.0, 0.74 * half, spec) == 1.0
        # taper region strictly between 0 and 1, and 0 at the edge
        w = apodization_weight(0.02, 0.0, 0.9 * half, spec)
        assert 0.0 < w < 1.0
        assert apodization_weight(0.02, 0.0, half, spec) == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_and_monotone(self):
        spec = ApodizationSpec(window="hanning", f_number=0.7)
        offs = np.linspace(0.0, 0.99, 25)
        half = 0.03 / (2 * 0.7)
        w_pos = apodization_weight(0.03, 0.0, offs * half, spec)
        w_neg = apodization_weight(0.03, 0.0, -offs * half, spec)
        assert np.allclose(w_pos, w_neg, rtol=1e-14)
        assert np.all(np.diff(w_pos) <= 1e-15)

    def test_rejects_bad_specs(self):
        with pytest.raises(ValueError):
            ApodizationSpec(window="hamming")
        with pytest.raises(ValueError):
            ApodizationSpec(f_number=0.0)
        with pytest.raises(ValueError):
            ApodizationSpec(tukey_taper=1.5)


def test_grid_coords_are_pixel_centers(small_grid):
    z = small_grid.z_coords
    x = small_grid.x_coords
    assert z[0] == small_grid.z_start
    assert np.allclose(np.diff(z), small_grid.dz)
    assert abs(x.sum()) < 1e-15  # centered like the array
    zz, xx = small_grid.pixel_coords()
    # axial-major: pixel j = iz * num_x + ix
    j = 3 * small_grid.num_x + 5
    assert zz[j] == z[3] and xx[j] == x[5]


def test_grid_default_spacings(small_probe):
    g = ImagingGrid.for_probe(small_probe, z_start=10e-3, num_z=32)
    assert g.dz == pytest.approx(small_probe.sound_speed / (2 * small_probe.sampling_freq))
    assert g.dx == small_probe.pitch
    assert g.num_x == small_probe.num_elements


def test_invalid_geometry_rejected():
    with pytest.raises(ValueError):
        ProbeGeometry(num_elements=0, pitch=0.3e-3, sampling_freq=1e6,
                      center_freq=1e6, sound_speed=1540.0)
    with pytest.raises(ValueError):
        ProbeGeometry(num_elements=4, pitch=0.3e-3, sampling_freq=0.0,
                      center_freq=1e6, sound_speed=1540.0)
    with pytest.raises(ValueError):
        ImagingGrid(z_start=0.01, num_z=0, num_x=4, dz=1e-4, dx=1e-4)
    with pytest.raises(ValueError):
        ImagingGrid(z_start=-0.01, num_z=4, num_x=4, dz=1e-4, dx=1e-4)
