import numpy as np
import pytest

from pwbeam import (ApodizationSpec, ImagingGrid, PlaneWaveTx, ProbeGeometry,
                    build_model)


@pytest.fixture(scope="session")
def small_probe():
    return ProbeGeometry(num_elements=8, pitch=0.3e-3, sampling_freq=12.5e6,
                         center_freq=5e6, sound_speed=1540.0)


@pytest.fixture(scope="session")
def small_grid(small_probe):
    return ImagingGrid.for_probe(small_probe, z_start=5e-3, num_z=16, num_x=16)


@pytest.fixture(scope="session")
def small_model(small_probe, small_grid):
    return build_model(small_probe, small_grid, PlaneWaveTx(0.0),
                       ApodizationSpec())


@pytest.fixture(scope="session")
def small_dense(small_model):
    return small_model.matrix.toarray()


def rng_for(*seeds):
    return np.random.default_rng(np.random.SeedSequence(list(seeds)))
