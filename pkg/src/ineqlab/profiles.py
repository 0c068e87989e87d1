"""Closed-form extremal and reference families, and projection onto them.

The translation parameter of the Aubin-Talenti family is fixed to 0
throughout: every object here is radial and the extremal manifold is searched
only along its two-parameter (a, c) slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radial import RadialGrid, RadialProfile, differentiate, grad_inner, \
    lp_norm, make_grid


class OptimizationError(RuntimeError):
    """Raised when the projection bracket contains no interior minimum."""


def default_grid(d: int, r_max: float = 200.0, n: int = 2048,
                 grading: float = 2.0) -> RadialGrid:
    """Reference grid resolving both the origin and the fat polynomial tails."""
    return make_grid(d, r_max, n, grading)


@dataclass(frozen=True)
class AubinTalentiParams:
    a: float
    c: float
    d: int

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError(f"scale a={self.a} must be positive")
        if self.d < 3:
            raise ValueError("Aubin-Talenti profiles need d >= 3")


@dataclass(frozen=True)
class BarenblattParams:
    m: float
    d: int

    def __post_init__(self):
        m_c = (self.d - 2) / self.d
        if not m_c < self.m < 1:
            raise ValueError(
                f"m={self.m} outside ({m_c}, 1): stationary profile has "
                "infinite mass")


def aubin_talenti(params: AubinTalentiParams, grid: RadialGrid) -> RadialProfile:
    """c (a + r^2)^{-(d-2)/2} with tail exponent d-2."""
    r = grid.nodes
    vals = params.c * (params.a + r ** 2) ** (-(params.d - 2) / 2)
    return RadialProfile(grid, vals, decay_exponent=float(params.d - 2))


def g_star(grid: RadialGrid) -> RadialProfile:
    """Unit-scale extremal (1 + r^2)^{-(d-2)/2}."""
    return aubin_talenti(AubinTalentiParams(1.0, 1.0, grid.d), grid)


def barenblatt(params: BarenblattParams, grid: RadialGrid) -> RadialProfile:
    """Stationary profile (1 + r^2)^{1/(m-1)} with tail exponent 2/(1-m)."""
    vals = (1.0 + grid.nodes ** 2) ** (1.0 / (params.m - 1.0))
    return RadialProfile(grid, vals, decay_exponent=2.0 / (1.0 - params.m))


def gns_range(d: int) -> tuple[float, float]:
    """Admissible (p_min, p_max) of the interpolation family; +inf if d <= 2."""
    return 1.0, (d / (d - 2) if d >= 3 else math.inf)


def gns_optimizer(p: float, d: int, grid: RadialGrid) -> RadialProfile:
    """Optimizer (1 + r^2)^{-1/(p-1)} of the interpolation inequality.

    Its 2p-th power is the stationary diffusion profile with m = (p+1)/(2p);
    the identity is checked nodewise on construction.
    """
    lo, hi = gns_range(d)
    if not lo < p <= hi:
        raise ValueError(f"p={p} outside the admissible range ({lo}, {hi}]")
    if grid.d != d:
        raise ValueError("grid dimension does not match d")
    f = RadialProfile(grid, (1.0 + grid.nodes ** 2) ** (-1.0 / (p - 1.0)),
                      decay_exponent=2.0 / (p - 1.0))
    bb = barenblatt(BarenblattParams((p + 1) / (2 * p), d), grid)
    err = np.max(np.abs(f.values ** (2 * p) - bb.values))
    if err > 1e-12:
        raise AssertionError(f"optimizer/stationary dictionary broken: {err}")
    return f


def yamabe_separable(T: float, t: float, grid: RadialGrid, d: int) -> RadialProfile:
    """Separating-variables solution of the m=(d-2)/(d+2) diffusion flow.

    Amplitude c (T-t)^alpha with alpha = (d+2)/4 and c = (4d(d-2)/(d+2))^alpha,
    profile g_star^{(d+2)/(d-2)}; the solution vanishes at t = T.
    """
    if d < 3:
        raise ValueError("separable solution needs d >= 3")
    if not 0 <= t < T:
        raise ValueError(f"time t={t} must lie in [0, T={T})")
    alpha = (d + 2) / 4.0
    c = (4.0 * d * (d - 2) / (d + 2)) ** alpha
    q = (d + 2) / (d - 2)
    gs = g_star(grid)
    return RadialProfile(grid, c * (T - t) ** alpha * gs.values ** q,
                         decay_exponent=float(d + 2))


def _golden_min(fun, lo: float, hi: float, rel_tol: float = 1e-8):
    """Golden-section minimization; returns (x, fun(x)).

    For plateaus of equal minima the left (smaller-x) end survives, so ties
    resolve to the smallest argument.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while (b - a) > rel_tol * (abs(a) + abs(b) + 1.0):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def project_to_aubin_talenti(f: RadialProfile,
                             bracket: tuple[float, float] = (1e-4, 1e4)):
    """Gradient-norm projection of f onto the radial extremal slice.

    Minimizes ||grad(f - g_{a,c})||_2^2; the amplitude optimum c*(a) is the
    explicit least-squares coefficient, the scale is found by golden-section
    over log a.  Returns (AubinTalentiParams, squared distance).
    """
    d = f.grid.d
    if d < 3:
        raise ValueError("projection needs d >= 3")
    e_ff = grad_inner(f, f)
    if not math.isfinite(e_ff):
        raise ValueError("profile has infinite gradient energy")

    def objective(log_a):
        g1 = aubin_talenti(AubinTalentiParams(math.exp(log_a), 1.0, d), f.grid)
        e_gg = grad_inner(g1, g1)
        cross = grad_inner(f, g1)
        return e_ff - cross ** 2 / e_gg

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    log_a, dist2 = _golden_min(objective, lo, hi)
    span = hi - lo
    if min(log_a - lo, hi - log_a) < 1e-6 * span and objective(log_a) < e_ff * (1 - 1e-12):
        raise OptimizationError(
            f"no interior optimum of the scale parameter in {bracket}")
    a = math.exp(log_a)
    g1 = aubin_talenti(AubinTalentiParams(a, 1.0, d), f.grid)
    c = grad_inner(f, g1) / grad_inner(g1, g1)
    return AubinTalentiParams(a, c, d), max(dist2, 0.0)
