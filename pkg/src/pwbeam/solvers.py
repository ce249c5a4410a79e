"""Image reconstruction: DAS, l1-ADMM, plug-and-play, and denoiser-regularized solvers.

All iterative solvers share the same splitting: u carries the data fit,
v the regularized image, lam the scaled dual variable.  Each outer
iteration solves the penalized data-fit subproblem for u (warm-started
L-BFGS), applies the solver-specific v update, then takes the dual ascent
step lam += beta (u - v).  The returned image is v.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoise import NlmParams, nlm_denoise
from .images import RfImage
from .model import SparseModel
from .optim import LbfgsOptions, admm_u_subproblem
from .phantom import ChannelData


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver settings.

    mu scales the regularizer (l1 weight for ADMM, denoiser strength for
    the denoiser-regularized solver; unused by the plug-and-play solver).
    eps is the relative stopping threshold on the outer iteration.
    red_inner_k is the number of fixed-point passes per v update of the
    denoiser-regularized solver.
    """

    mu: float = 0.0
    beta: float = 1000.0
    eps: float = 1e-3
    max_outer_iters: int = 50
    red_inner_k: int = 1
    lbfgs: LbfgsOptions = field(default_factory=LbfgsOptions)
    nlm: NlmParams = field(default_factory=NlmParams)

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.red_inner_k < 1:
            raise ValueError("red_inner_k must be >= 1")


@dataclass
class SolverReport:
    """Per-iteration trace of an outer solver run.

    trace holds the objective value for the objective-driven solvers and
    the relative iterate change for the plug-and-play solver; residual is
    ||u - v|| after each iteration.  termination is 'eps' or 'max_iters'.
    """

    solver: str = ""
    iterations: int = 0
    trace: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    termination: str = ""
    flags: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"solver {self.solver}",
                 f"iterations {self.iterations}",
                 f"termination {self.termination}"]
        if self.flags:
            lines.append("flags " + ",".join(self.flags))
        lines.append("iter value residual")
        for i, (val, res) in enumerate(zip(self.trace, self.residual), start=1):
            lines.append(f"{i} {val:.10e} {res:.10e}")
        return "\n".join(lines) + "\n"


def soft_threshold(w: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise max(|w| - tau, 0) * sign(w)."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    w = np.asarray(w)
    return np.maximum(np.abs(w) - tau, 0.0) * np.sign(w)


def das_beamform(model: SparseModel, data: ChannelData) -> RfImage:
    """Delay-and-sum: adjoint projection normalized by per-pixel weight sums.

    Pixels never touched by the model (zero weight sum) come out 0.
    """
    _check_match(model, data)
    num = model.adjoint(data.to_vector())
    den = model.column_norm_weights()
    out = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return RfImage(data=out, grid=model.grid)


def admm_beamform(model: SparseModel, data: ChannelData,
                  config: SolverConfig) -> tuple[RfImage, SolverReport]:
    """l1-regularized reconstruction by ADMM.

    Minimizes 0.5 ||y - A x||^2 + mu ||x||_1 via splitting; the v update is
    soft thresholding at mu/beta.  Stops when the relative change of the
    augmented objective falls below eps for consecutive iterations.
    """
    _check_match(model, data)
    y = data.to_vector()
    reg = lambda v: config.mu * np.abs(v).sum()

    def v_update(u, v_prev, lam):
        return soft_threshold(u + lam / config.beta, config.mu / config.beta)

    return _split_solve(model, y, config, v_update, reg, "admm")


def pnp_beamform(model: SparseModel, data: ChannelData,
                 config: SolverConfig) -> tuple[RfImage, SolverReport]:
    """Plug-and-play reconstruction: the v update is the NLM denoiser.

    There is no overall objective, so the outer loop stops on the relative
    iterate change ||v_next - v|| / ||v|| <= eps.
    """
    _check_match(model, data)
    y = data.to_vector()
    shape = (model.grid.num_z, model.grid.num_x)

    def v_update(u, v_prev, lam):
        w = u + lam / config.beta
        return nlm_denoise(w.reshape(shape), config.nlm).ravel()

    return _split_solve(model, y, config, v_update, None, "pnp")


def red_v_update(u: np.ndarray, v_prev: np.ndarray, lam: np.ndarray,
                 denoiser, mu: float, beta: float, num_inner: int) -> np.ndarray:
    """Fixed-point v update of the denoiser-regularized solver.

    Iterates z <- (mu F(z) + beta u + lam) / (mu + beta) for num_inner
    passes starting from the previous v; F is the denoiser acting on the
    pixel vector.
    """
    if num_inner < 1:
        raise ValueError("num_inner must be >= 1")
    z = np.asarray(v_prev, dtype=float).copy()
    rhs = beta * u + lam
    for _ in range(num_inner):
        z = (mu * denoiser(z) + rhs) / (mu + beta)
    return z


def red_beamform(model: SparseModel, data: ChannelData,
                 config: SolverConfig) -> tuple[RfImage, SolverReport]:
    """Reconstruction with the denoiser-induced regularizer.

    rho(v) = 0.5 v^T (v - F(v)) with F the NLM denoiser; the v update runs
    red_inner_k fixed-point passes.  Stops on the relative change of the
    objective with mu rho(v) as the regularization term.
    """
    if config.mu <= 0:
        raise ValueError("denoiser-regularized solver needs mu > 0")
    _check_match(model, data)
    y = data.to_vector()
    shape = (model.grid.num_z, model.grid.num_x)

    def denoiser(z):
        return nlm_denoise(z.reshape(shape), config.nlm).ravel()

    def reg(v):
        return config.mu * 0.5 * np.dot(v, v - denoiser(v))

    def v_update(u, v_prev, lam):
        return red_v_update(u, v_prev, lam, denoiser,
                            config.mu, config.beta, config.red_inner_k)

    return _split_solve(model, y, config, v_update, reg, "red")


def compound(images: list[RfImage]) -> RfImage:
    """Coherent average of per-angle reconstructions on one grid."""
    if not images:
        raise ValueError("nothing to compound")
    grid = images[0].grid
    for im in images[1:]:
        if im.grid != grid:
            raise ValueError("compounding needs identical grids")
    stack = np.stack([im.data for im in images])
    return RfImage(data=stack.mean(axis=0), grid=grid)


# ---------------------------------------------------------------------------

def _check_match(model: SparseModel, data: ChannelData):
    m, n = data.samples.shape
    if m != model.num_samples or n != model.probe.num_elements:
        raise ValueError(
            f"channel data {m}x{n} does not match model "
            f"{model.num_samples}x{model.probe.num_elements}")


def _split_solve(model, y, config, v_update, reg, name):
    p = model.num_cols
    u = np.zeros(p)
    v = np.zeros(p)
    lam = np.zeros(p)
    beta = config.beta
    report = SolverReport(solver=name)

    prev_metric = None
    for it in range(config.max_outer_iters):
        u, inner = admm_u_subproblem(model, y, v, lam, beta,
                                     warm_start=u, opts=config.lbfgs)
        if inner.line_search_failed and "line_search_failed" not in report.flags:
            report.flags.append("line_search_failed")

        v_new = v_update(u, v, lam)
        lam = lam + beta * (u - v_new)

        report.iterations = it + 1
        report.residual.append(float(np.linalg.norm(u - v_new)))

        if reg is not None:
            r = model.apply(u) - y
            metric = 0.5 * np.dot(r, r) + reg(v_new) \
                + 0.5 * beta * np.dot(u - v_new + lam / beta, u - v_new + lam / beta)
            report.trace.append(float(metric))
            if prev_metric is not None:
                denom = max(abs(prev_metric), np.finfo(float).tiny)
                if abs(metric - prev_metric) / denom <= config.eps:
                    v = v_new
                    report.termination = "eps"
                    break
            prev_metric = metric
        else:
            change = float(np.linalg.norm(v_new - v))
            # symmetric denominator: finite on the first step from v = 0
            denom = max(float(np.linalg.norm(v)), float(np.linalg.norm(v_new)),
                        np.finfo(float).tiny)
            rel = change / denom
            report.trace.append(rel)
            if rel <= config.eps:
                v = v_new
                report.termination = "eps"
                break
        v = v_new
    else:
        report.termination = "max_iters"

    return RfImage(data=v, grid=model.grid), report
