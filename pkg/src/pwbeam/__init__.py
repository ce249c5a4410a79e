"""Plane-wave ultrasound beamforming as a sparse linear inverse problem.

The measurement model maps a pixel reflectivity vector to the raw channel
samples of one steered plane-wave transmit.  On top of it sit delay-and-sum
and three model-based reconstructions (l1-ADMM, plug-and-play with a
non-local means denoiser, and the denoiser-induced-regularizer solver),
plus envelope/contrast/resolution/speckle metrics and binary file formats
for channel data, images, and cached models.
"""

from .geometry import (ApodizationSpec, ImagingGrid, PlaneWaveTx,
                       ProbeGeometry, apodization_weight, element_positions,
                       rx_delay, tx_delay_plane_wave)
from .images import BModeImage, EnvelopeImage, RfImage
from .model import SparseModel, build_model, num_samples_for
from .phantom import (ChannelData, PhantomSpec, make_reflectivity,
                      pulse_kernel, simulate_channel_data)
from .optim import LbfgsOptions, LbfgsReport, admm_u_subproblem, lbfgs_minimize
from .denoise import NlmParams, estimate_noise_sigma, nlm_denoise
from .solvers import (SolverConfig, SolverReport, admm_beamform, compound,
                      das_beamform, pnp_beamform, red_beamform, red_v_update,
                      soft_threshold)
from .metrics import (AnnulusRegion, DiskRegion, KsResult, RectRegion,
                      cnr, envelope, fwhm, gcnr, ks_rayleigh_test,
                      log_compress, region_mask)

__version__ = "0.1.0"

__all__ = [
    "ApodizationSpec", "ImagingGrid", "PlaneWaveTx", "ProbeGeometry",
    "apodization_weight", "element_positions", "rx_delay", "tx_delay_plane_wave",
    "BModeImage", "EnvelopeImage", "RfImage",
    "SparseModel", "build_model", "num_samples_for",
    "ChannelData", "PhantomSpec", "make_reflectivity", "pulse_kernel",
    "simulate_channel_data",
    "LbfgsOptions", "LbfgsReport", "admm_u_subproblem", "lbfgs_minimize",
    "NlmParams", "estimate_noise_sigma", "nlm_denoise",
    "SolverConfig", "SolverReport", "admm_beamform", "compound",
    "das_beamform", "pnp_beamform", "red_beamform", "red_v_update",
    "soft_threshold",
    "AnnulusRegion", "DiskRegion", "KsResult", "RectRegion", "cnr",
    "envelope", "fwhm", "gcnr", "ks_rayleigh_test", "log_compress",
    "region_mask",
]
