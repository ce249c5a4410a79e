"""Command-line front end: simulate, beamform, metrics, render.

Configuration files are flat ``key = value`` text with dotted keys; ``#``
starts a comment.  Unknown keys are rejected.  Every key has a default, so
an empty file is a valid config.  Keys:

    probe.num_elements        probe.pitch            probe.sampling_freq
    probe.center_freq         probe.sound_speed      probe.time_offset
    grid.z_start  grid.num_z  grid.num_x  grid.dz  grid.dx
    apodization.window        apodization.f_number   apodization.tukey_taper
    tx.angles_deg             (comma list, degrees)
    phantom.speckle_enabled   phantom.speckle_std
    phantom.cysts             (semicolon list of "z x r")
    phantom.point_targets     (semicolon list of "z x amplitude")
    phantom.pulse_center_freq phantom.pulse_fractional_bandwidth
    snr_db  seed  compound
    solver.name               (das | admm | pnp | red)
    solver.mu  solver.beta  solver.eps  solver.max_outer_iters
    solver.red_inner_k
    solver.lbfgs.memory  solver.lbfgs.max_iters  solver.lbfgs.grad_tol
    solver.nlm.search_window  solver.nlm.patch_window  solver.nlm.smoothing_h
    render.dynamic_range

Region files for the metrics command use the same syntax with entries

    fwhm.<id> = z x
    contrast.<id>.roi = disk cz cx r | rect zlo zhi xlo xhi | annulus cz cx ri ro
    contrast.<id>.bg  = (same shapes)
    speckle.<id> = (same shapes; rect also takes optional trailing
                    "zstep xstep" to subsample at the speckle cell size)

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np
import scipy.signal

from . import io as pio
from .denoise import NlmParams
from .geometry import ApodizationSpec, ImagingGrid, PlaneWaveTx, ProbeGeometry
from .images import EnvelopeImage
from .metrics import (AnnulusRegion, DiskRegion, RectRegion, cnr, envelope,
                      fwhm, gcnr, ks_rayleigh_test)
from .model import build_model, num_samples_for
from .optim import LbfgsOptions
from .phantom import PhantomSpec, make_reflectivity, simulate_channel_data
from .solvers import (SolverConfig, admm_beamform, compound, das_beamform,
                      pnp_beamform, red_beamform)

SOLVERS = ("das", "admm", "pnp", "red")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; 2 is reserved for runtime failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# config

@dataclass
class RunConfig:
    probe: ProbeGeometry
    grid: ImagingGrid
    apod: ApodizationSpec
    angles: tuple  # radians
    phantom: PhantomSpec
    snr_db: float
    seed: int
    compound: bool
    solver_name: str
    solver: SolverConfig
    dynamic_range: float


def parse_kv_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key}")
        out[key] = val.strip()
    return out


def _floats(s):
    return [float(tok) for tok in s.replace(",", " ").split()]


def _triples(s):
    out = []
    for part in s.split(";"):
        part = part.strip()
        if part:
            out.append(tuple(_floats(part)))
    return tuple(out)


def _bool(s):
    low = s.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        kv = parse_kv_text(fh.read())
    return config_from_dict(kv)


def config_from_dict(kv: dict) -> RunConfig:
    kv = dict(kv)

    def take(key, default, conv):
        if key in kv:
            return conv(kv.pop(key))
        return default

    probe = ProbeGeometry(
        num_elements=take("probe.num_elements", 64, int),
        pitch=take("probe.pitch", 0.3e-3, float),
        sampling_freq=take("probe.sampling_freq", 12.5e6, float),
        center_freq=take("probe.center_freq", 5e6, float),
        sound_speed=take("probe.sound_speed", 1540.0, float),
        time_offset=take("probe.time_offset", 0.0, float),
    )
    z_start = take("grid.z_start", 14e-3, float)
    num_z = take("grid.num_z", 256, int)
    num_x = take("grid.num_x", probe.num_elements, int)
    dz = take("grid.dz", probe.sound_speed / (2 * probe.sampling_freq), float)
    dx = take("grid.dx", probe.pitch, float)
    grid = ImagingGrid(z_start=z_start, num_z=num_z, num_x=num_x, dz=dz, dx=dx)

    apod = ApodizationSpec(
        window=take("apodization.window", "hanning", str),
        f_number=take("apodization.f_number", 0.5, float),
        tukey_taper=take("apodization.tukey_taper", 0.25, float),
    )
    angles = tuple(np.deg2rad(a) for a in take("tx.angles_deg", [0.0], _floats))
    if not angles:
        raise ValueError("tx.angles_deg must list at least one angle")

    seed = take("seed", 0, int)
    phantom = PhantomSpec(
        speckle_enabled=take("phantom.speckle_enabled", True, _bool),
        speckle_std=take("phantom.speckle_std", 1.0, float),
        cysts=take("phantom.cysts", ((20e-3, 0.0, 4e-3),), _triples),
        point_targets=take(
            "phantom.point_targets",
            ((16e-3, -6e-3, 25.0), (22e-3, 5.2e-3, 25.0), (26.5e-3, 0.0, 25.0)),
            _triples),
        pulse_center_freq=take("phantom.pulse_center_freq", 5e6, float),
        pulse_fractional_bandwidth=take("phantom.pulse_fractional_bandwidth",
                                        1.0, float),
        sound_speed=probe.sound_speed,
        rng_seed=seed,
    )

    nlm_h = take("solver.nlm.smoothing_h", None, float)
    solver = SolverConfig(
        mu=take("solver.mu", 0.0, float),
        beta=take("solver.beta", 1000.0, float),
        eps=take("solver.eps", 1e-3, float),
        max_outer_iters=take("solver.max_outer_iters", 50, int),
        red_inner_k=take("solver.red_inner_k", 1, int),
        lbfgs=LbfgsOptions(
            memory=take("solver.lbfgs.memory", 10, int),
            max_iters=take("solver.lbfgs.max_iters", 100, int),
            grad_tol=take("solver.lbfgs.grad_tol", 1e-6, float),
        ),
        nlm=NlmParams(
            search_window=take("solver.nlm.search_window", 21, int),
            patch_window=take("solver.nlm.patch_window", 5, int),
            smoothing_h=nlm_h,
        ),
    )
    solver_name = take("solver.name", "das", str)
    if solver_name not in SOLVERS:
        raise ValueError(f"unknown solver {solver_name!r}; pick from {SOLVERS}")

    cfg = RunConfig(
        probe=probe, grid=grid, apod=apod, angles=angles, phantom=phantom,
        snr_db=take("snr_db", 20.0, float), seed=seed,
        compound=take("compound", True, _bool),
        solver_name=solver_name, solver=solver,
        dynamic_range=take("render.dynamic_range", 60.0, float),
    )
    if kv:
        raise ValueError(f"unknown config keys: {', '.join(sorted(kv))}")
    return cfg


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg: RunConfig, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    truth = make_reflectivity(cfg.phantom, cfg.grid)
    pio.write_image(os.path.join(out_dir, "truth.img"), truth)

    # one sample count covering every angle keeps the files uniform
    m = max(num_samples_for(cfg.probe, cfg.grid, PlaneWaveTx(a))
            for a in cfg.angles)
    paths = []
    for i, angle in enumerate(cfg.angles):
        model = build_model(cfg.probe, cfg.grid, PlaneWaveTx(angle), cfg.apod,
                            num_samples=m)
        data = simulate_channel_data(model, truth, snr_db=cfg.snr_db,
                                     seed=cfg.seed + 1 + i)
        path = os.path.join(out_dir, f"channel_a{i:02d}.chd")
        pio.write_channel_data(path, data)
        print(f"wrote {path} (M={m}, N={cfg.probe.num_elements}, "
              f"fs={cfg.probe.sampling_freq:g})")
        paths.append(path)
    return paths


def cmd_beamform(cfg: RunConfig, channel_files: list, out_dir: str) -> list:
    if not channel_files:
        raise UsageError("beamform needs at least one channel file")
    os.makedirs(out_dir, exist_ok=True)

    images, outputs = [], []
    for i, path in enumerate(channel_files):
        data = pio.read_channel_data(path)
        if not np.isclose(data.sampling_freq, cfg.probe.sampling_freq):
            raise ValueError(f"{path}: sampling_freq does not match config")
        if not np.isclose(data.time_offset, cfg.probe.time_offset):
            raise ValueError(f"{path}: time_offset does not match config")
        if data.samples.shape[1] != cfg.probe.num_elements:
            raise ValueError(f"{path}: element count does not match config")
        model = build_model(cfg.probe, cfg.grid, PlaneWaveTx(data.angle),
                            cfg.apod, num_samples=data.samples.shape[0])

        if cfg.solver_name == "das":
            img, report = das_beamform(model, data), None
        elif cfg.solver_name == "admm":
            img, report = admm_beamform(model, data, cfg.solver)
        elif cfg.solver_name == "pnp":
            img, report = pnp_beamform(model, data, cfg.solver)
        else:
            img, report = red_beamform(model, data, cfg.solver)
        images.append(img)

        rpt_path = os.path.join(out_dir, f"report_a{i:02d}.txt")
        text = report.to_text() if report is not None \
            else "solver das\niterations 0\ntermination direct\n"
        pio.atomic_write(rpt_path, lambda fh: fh.write(text.encode("ascii")))
        outputs.append(rpt_path)

    if cfg.compound and len(images) > 1:
        out = os.path.join(out_dir, "image.img")
        pio.write_image(out, compound(images))
        print(f"wrote {out} (compounded over {len(images)} angles)")
        outputs.append(out)
    else:
        for i, img in enumerate(images):
            out = os.path.join(out_dir, "image.img" if len(images) == 1
                               else f"image_a{i:02d}.img")
            pio.write_image(out, img)
            print(f"wrote {out}")
            outputs.append(out)
    return outputs


def _parse_region(tokens: list):
    kind, nums = tokens[0], [float(t) for t in tokens[1:]]
    if kind == "disk" and len(nums) == 3:
        return DiskRegion(*nums)
    if kind == "rect" and len(nums) == 4:
        return RectRegion(*nums)
    if kind == "rect" and len(nums) == 6:
        return RectRegion(*nums[:4], z_step=int(nums[4]), x_step=int(nums[5]))
    if kind == "annulus" and len(nums) == 4:
        return AnnulusRegion(*nums)
    raise ValueError(f"bad region: {' '.join(tokens)}")


def cmd_metrics(cfg: RunConfig, image_file: str, regions_file: str,
                out_path: str | None = None) -> list:
    img = pio.read_image(image_file, cfg.grid)
    env = envelope(img)
    with open(regions_file, "r", encoding="utf-8") as fh:
        kv = parse_kv_text(fh.read())

    lines = []
    contrast: dict = {}
    for key, val in kv.items():
        parts = key.split(".")
        if parts[0] == "fwhm" and len(parts) == 2:
            z, x = _floats(val)
            lines.extend(_fwhm_lines(env, parts[1], z, x))
        elif parts[0] == "contrast" and len(parts) == 3 and parts[2] in ("roi", "bg"):
            contrast.setdefault(parts[1], {})[parts[2]] = _parse_region(val.split())
        elif parts[0] == "speckle" and len(parts) == 2:
            res = ks_rayleigh_test(env, _parse_region(val.split()))
            lines.append(f"ks_statistic {parts[1]} {res.statistic:.6f}")
            lines.append(f"ks_critical {parts[1]} {res.critical_value:.6f}")
            lines.append(f"ks_pass {parts[1]} {'true' if res.passed else 'false'}")
        else:
            raise ValueError(f"unknown region entry {key!r}")

    for name, pair in sorted(contrast.items()):
        if "roi" not in pair or "bg" not in pair:
            raise ValueError(f"contrast.{name} needs both roi and bg")
        lines.append(f"cnr {name} {cnr(env, pair['roi'], pair['bg']):.6f}")
        lines.append(f"gcnr {name} {gcnr(env, pair['roi'], pair['bg']):.6f}")

    for line in lines:
        print(line)
    if out_path:
        pio.atomic_write(out_path,
                         lambda fh: fh.write(("\n".join(lines) + "\n").encode("ascii")))
    return lines


def _fwhm_lines(env: EnvelopeImage, name: str, z: float, x: float) -> list:
    g = env.grid
    iz = int(np.clip(round((z - g.z_start) / g.dz), 0, g.num_z - 1))
    ix = int(np.clip(round((x - g.x_coords[0]) / g.dx), 0, g.num_x - 1))
    # snap to the brightest pixel near the nominal position
    r = 5
    zlo, zhi = max(iz - r, 0), min(iz + r + 1, g.num_z)
    xlo, xhi = max(ix - r, 0), min(ix + r + 1, g.num_x)
    patch = env.data[zlo:zhi, xlo:xhi]
    pz, px = np.unravel_index(np.argmax(patch), patch.shape)
    peak = (zlo + int(pz), xlo + int(px))

    out = []
    for axis, label in (("axial", "fwhm_axial"), ("lateral", "fwhm_lateral")):
        try:
            out.append(f"{label} {name} {fwhm(env, peak, axis):.6f}")
        except ValueError:
            out.append(f"{label} {name} unresolved")
    return out


def cmd_render(image_file: str, dynamic_range: float, out_path: str):
    if dynamic_range <= 0:
        raise UsageError("dynamic range must be positive")
    img, _, _ = pio.read_image_raw(image_file)
    nz, nx = img.shape
    analytic_env = np.abs(scipy.signal.hilbert(img, axis=0)) if nz >= 4 else np.abs(img)
    peak = analytic_env.max()
    if peak <= 0:
        print("warning: all-zero image, rendering uniform black", file=sys.stderr)
        gray = np.zeros((nz, nx), dtype=np.uint8)
    else:
        db = 20.0 * np.log10(np.maximum(analytic_env / peak, 1e-300))
        db = np.clip(db, -dynamic_range, 0.0)
        gray = np.round((db + dynamic_range) / dynamic_range * 255.0).astype(np.uint8)

    def body(fh):
        fh.write(f"P5\n{nx} {nz}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())

    pio._atomic_write(out_path, body)
    print(f"wrote {out_path} ({nx}x{nz}, {dynamic_range:g} dB)")


# ---------------------------------------------------------------------------

def build_arg_parser() -> _Parser:
    ap = _Parser(prog="pwbeam",
                 description="plane-wave beamforming: simulate, reconstruct, "
                             "measure, render")
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="phantom to channel data files")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default=".")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--angles", help="comma list of degrees, overrides config")

    p_bf = sub.add_parser("beamform", help="channel data to an image file")
    p_bf.add_argument("channels", nargs="+")
    p_bf.add_argument("--config", required=True)
    p_bf.add_argument("--solver", choices=SOLVERS)
    p_bf.add_argument("--out", default=".")

    p_met = sub.add_parser("metrics", help="image quality report")
    p_met.add_argument("image")
    p_met.add_argument("regions")
    p_met.add_argument("--config", required=True)
    p_met.add_argument("--out", help="also write the report to this file")

    p_ren = sub.add_parser("render", help="image file to 8-bit PGM")
    p_ren.add_argument("image")
    p_ren.add_argument("out")
    p_ren.add_argument("--dynamic-range", type=float, default=60.0)
    return ap


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        if ns.command == "render":
            cmd_render(ns.image, ns.dynamic_range, ns.out)
            return 0

        cfg = load_config(ns.config)
        if ns.command == "simulate":
            if ns.seed is not None:
                cfg = replace(cfg, seed=ns.seed,
                              phantom=replace(cfg.phantom, rng_seed=ns.seed))
            if ns.angles is not None:
                cfg = replace(cfg, angles=tuple(np.deg2rad(a)
                                                for a in _floats(ns.angles)))
            cmd_simulate(cfg, ns.out)
        elif ns.command == "beamform":
            if ns.solver is not None:
                cfg = replace(cfg, solver_name=ns.solver)
            cmd_beamform(cfg, ns.channels, ns.out)
        elif ns.command == "metrics":
            cmd_metrics(cfg, ns.image, ns.regions, ns.out)
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failures: bad files, mismatched geometry
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
