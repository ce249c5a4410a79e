"""Limited-memory BFGS and the penalized data-fit subproblem."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class LbfgsOptions:
    """memory: curvature pairs kept; grad_tol: max-norm stopping threshold."""

    memory: int = 10
    max_iters: int = 100
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass
class LbfgsReport:
    iterations: int = 0
    objective: list = field(default_factory=list)
    grad_norm: float = np.inf
    converged: bool = False
    line_search_failed: bool = False


def lbfgs_minimize(oracle: Callable[[np.ndarray], tuple[float, np.ndarray]],
                   x0: np.ndarray,
                   opts: LbfgsOptions = LbfgsOptions()) -> tuple[np.ndarray, LbfgsReport]:
    """Minimize a smooth function given a joint value/gradient oracle.

    Two-loop-recursion L-BFGS with Armijo backtracking from unit step.
    Stops when the gradient max-norm falls below opts.grad_tol, the
    iteration budget runs out, or the line search stalls (reported via
    line_search_failed, not an exception).  Objective values along the
    accepted iterates are collected in the report and never increase.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = oracle(x)
    report = LbfgsReport(objective=[float(f)], grad_norm=float(np.abs(g).max(initial=0.0)))

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []

    for it in range(opts.max_iters):
        gnorm = np.abs(g).max(initial=0.0)
        report.grad_norm = float(gnorm)
        if gnorm <= opts.grad_tol:
            report.converged = True
            break

        d = -_two_loop(g, s_hist, y_hist, rho_hist)
        if np.dot(d, g) >= 0:  # not a descent direction; fall back
            d = -g

        step = 1.0
        gd = np.dot(g, d)
        accepted = False
        for _ in range(opts.max_backtracks + 1):
            x_new = x + step * d
            f_new, g_new = oracle(x_new)
            if f_new <= f + opts.armijo_c * step * gd:
                accepted = True
                break
            step *= opts.backtrack_factor
        if not accepted:
            report.line_search_failed = True
            break

        s = x_new - x
        yv = g_new - g
        sy = np.dot(s, yv)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_hist.append(s)
            y_hist.append(yv)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > opts.memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        x, f, g = x_new, f_new, g_new
        report.iterations = it + 1
        report.objective.append(float(f))
    else:
        report.grad_norm = float(np.abs(g).max(initial=0.0))
        report.converged = report.grad_norm <= opts.grad_tol

    return x, report


def _two_loop(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        gamma = np.dot(s_hist[-1], y_hist[-1]) / np.dot(y_hist[-1], y_hist[-1])
        q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def admm_u_subproblem(model, y: np.ndarray, v: np.ndarray, lam: np.ndarray,
                      beta: float, warm_start: np.ndarray | None = None,
                      opts: LbfgsOptions = LbfgsOptions()) -> tuple[np.ndarray, LbfgsReport]:
    """Solve min_u 0.5 ||y - A u||^2 + (beta/2) ||u - v + lam/beta||^2.

    The gradient is A^T(A u - y) + beta (u - v + lam/beta); the quadratic is
    strongly convex for beta > 0 so L-BFGS converges from any start.  The
    stopping threshold is opts.grad_tol relative to the starting gradient
    norm.  warm_start defaults to zeros.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    y = np.asarray(y, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    shift = v - lam / beta

    def oracle(u):
        r = model.apply(u) - y
        val = 0.5 * np.dot(r, r) + 0.5 * beta * np.dot(u - shift, u - shift)
        grad = model.adjoint(r) + beta * (u - shift)
        return val, grad

    x0 = np.zeros_like(v) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    g0_norm = np.abs(oracle(x0)[1]).max(initial=0.0)
    if g0_norm == 0.0:
        return x0, LbfgsReport(converged=True, grad_norm=0.0,
                               objective=[oracle(x0)[0]])
    eff = replace(opts, grad_tol=opts.grad_tol * g0_norm)
    return lbfgs_minimize(oracle, x0, eff)
