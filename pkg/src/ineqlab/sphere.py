"""Zonal functionals and the interpolation-inequality flow on the sphere.

Functions depend only on the polar angle; everything is collocated at
Gauss-Jacobi nodes in x = cos(theta), whose weight (1-x^2)^{(d-2)/2} is the
density of the uniform probability measure pushed to [-1, 1].  Derivatives
use the barycentric differentiation matrix, so smooth zonal profiles are
resolved to spectral accuracy with a few dozen nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .flows import FlowConfig, FlowTrace, PositivityError


def _diff_matrix(x: np.ndarray) -> np.ndarray:
    """Barycentric differentiation matrix for arbitrary distinct nodes."""
    n = len(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    # log-scaled barycentric weights for stability at larger n
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sgn = np.prod(np.sign(diff), axis=1)
    d = np.empty((n, n))
    wr = sgn * np.exp(logw - np.max(logw))
    d = (wr[None, :] / wr[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -np.sum(d, axis=1))
    return d


@dataclass(frozen=True)
class ZonalGrid:
    """Gauss-Jacobi collocation of zonal functions; weights sum to 1."""

    d: int
    x: np.ndarray          # cos(theta), ascending
    weights: np.ndarray
    diff: np.ndarray       # d/dx at the nodes

    @property
    def thetas(self) -> np.ndarray:
        return np.arccos(self.x)

    def integrate(self, vals: np.ndarray) -> float:
        return float(self.weights @ vals)

    def lp_norm(self, vals: np.ndarray, p: float) -> float:
        return self.integrate(np.abs(vals) ** p) ** (1.0 / p)


def make_zonal_grid(d: int, n: int = 64) -> ZonalGrid:
    if d < 1:
        raise ValueError("sphere dimension must be >= 1")
    if n < 8:
        raise ValueError("need at least 8 collocation nodes")
    alpha = (d - 2.0) / 2.0
    x, w = roots_jacobi(n, alpha, alpha)
    w = w / np.sum(w)
    return ZonalGrid(d, x, w, _diff_matrix(x))


@dataclass(frozen=True)
class ZonalProfile:
    grid: ZonalGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.x.shape:
            raise ValueError("profile values must match the grid nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")


def sphere_energy(f: ZonalProfile) -> float:
    """int |dF/dtheta|^2 dmu = int (1-x^2) (dF/dx)^2 dmu."""
    g = f.grid
    df = g.diff @ f.values
    return g.integrate((1.0 - g.x ** 2) * df ** 2)


def _p_range(d: int) -> float:
    return 2.0 * d / (d - 2.0) if d >= 3 else math.inf


def ep_functional(f: ZonalProfile, p: float) -> float:
    """(||F||_p^2 - ||F||_2^2)/(p-2), read as the entropy at p = 2."""
    g = f.grid
    if p == 2.0:
        f2 = f.values ** 2
        n2 = g.integrate(f2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(f2 > 0, f2 * np.log(f2 / n2), 0.0)
        return 0.5 * g.integrate(ent)
    if not 1.0 <= p < _p_range(g.d):
        raise ValueError(f"p={p} outside [1, 2) U (2, {_p_range(g.d)})")
    return (g.lp_norm(f.values, p) ** 2 - g.lp_norm(f.values, 2.0) ** 2) \
        / (p - 2.0)


def pi1_project(f: ZonalProfile) -> np.ndarray:
    """Zonal projection onto the first spherical-harmonic eigenspace."""
    g = f.grid
    coef = (g.d + 1.0) * g.integrate(f.values * g.x)
    return coef * g.x


def sphere_deficit(f: ZonalProfile, p: float) -> dict:
    """Deficit of the subcritical interpolation inequality plus stability.

    The stability functional is
    ||grad P1 F||^4 / (||grad F||^2 + ||F||^2) + ||grad (F - P1 F)||^2,
    quartic in the degenerate first-harmonic direction and quadratic
    transversally.
    """
    g = f.grid
    energy = sphere_energy(f)
    deficit = energy - g.d * ep_functional(f, p)
    p1 = ZonalProfile(g, pi1_project(f))
    rest = ZonalProfile(g, f.values - p1.values)
    e1 = sphere_energy(p1)
    stab = e1 ** 2 / (energy + g.lp_norm(f.values, 2.0) ** 2) \
        + sphere_energy(rest)
    return {
        "name": "sphere-interpolation",
        "p": p,
        "deficit": deficit,
        "stability_functional": stab,
        "quotient": deficit / stab if stab > 0 else None,
    }


def sphere_sobolev_deficit(f: ZonalProfile) -> dict:
    """||grad F||^2 - d(d-2)/4 (||F||_{2*}^2 - ||F||_2^2), d >= 3."""
    g = f.grid
    if g.d < 3:
        raise ValueError("needs d >= 3")
    two_star = _p_range(g.d)
    deficit = sphere_energy(f) - 0.25 * g.d * (g.d - 2.0) * (
        g.lp_norm(f.values, two_star) ** 2 - g.lp_norm(f.values, 2.0) ** 2)
    return {"name": "sphere-sobolev", "deficit": deficit}


def m_exponents(d: int, p: float) -> tuple[float, float]:
    """Admissible exponent bracket of the nonlinear flow.

    m_pm = (dp + 2 +- sqrt(d(p-1)(2d - (d-2)p))) / ((d+2)p).
    """
    radicand = d * (p - 1.0) * (2.0 * d - (d - 2.0) * p)
    if radicand < 0:
        raise ValueError(f"no admissible exponents: radicand {radicand} < 0")
    root = math.sqrt(radicand)
    denom = (d + 2.0) * p
    return (d * p + 2.0 - root) / denom, (d * p + 2.0 + root) / denom


def sphere_flow(f0: ZonalProfile, p: float, m: float,
                cfg: FlowConfig) -> FlowTrace:
    """Integrate du/dt = u^{-p(1-m)} (Lap u + (mp-1)|grad u|^2/u) by RK4.

    Records the interpolation deficit; within the m-bracket the deficit is
    nonincreasing along the flow.  The trace reuses the radial FlowTrace
    container: the deficit sits in the free_energy column, the stability
    functional in fisher, the entropy-like quantity E_p in j_functional,
    and the conserved int u^p dmu in mass.
    """
    lo, hi = m_exponents(f0.grid.d, p)
    if not lo - 1e-12 <= m <= hi + 1e-12:
        raise ValueError(f"m={m} outside the admissible bracket "
                         f"[{lo}, {hi}] for (d={f0.grid.d}, p={p})")
    g = f0.grid
    if np.any(f0.values <= 0):
        raise ValueError("initial datum must be positive")
    x, diff = g.x, g.diff
    kappa = m * p - 1.0
    expo = -p * (1.0 - m)

    def rhs(u):
        du = diff @ u
        lap = (1.0 - x ** 2) * (diff @ du) - g.d * x * du
        return u ** expo * (lap + kappa * (1.0 - x ** 2) * du ** 2 / u)

    trace = FlowTrace()
    u = np.array(f0.values)
    t = 0.0

    def record():
        rep = sphere_deficit(ZonalProfile(g, u), p)
        trace.times.append(t)
        trace.mass.append(g.integrate(u ** p))
        trace.free_energy.append(rep["deficit"])
        trace.fisher.append(rep["stability_functional"])
        trace.quotient.append(rep["quotient"])
        trace.j_functional.append(ep_functional(ZonalProfile(g, u), p))

    record()
    n_steps = int(round(cfg.t_end / cfg.dt))
    dt = cfg.dt
    for k in range(n_steps):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u_new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u_new)) or np.any(u_new <= 0):
            raise PositivityError(f"positivity lost at t={t:.6g}")
        u, t = u_new, t + dt
        if (k + 1) % cfg.record_every == 0 or k == n_steps - 1:
            record()
    return trace


def large_d_limit_check(v, support: float, p: float, d_list,
                        n_nodes: int = 256) -> list[dict]:
    """Compare d * (sphere deficit) of embedded profiles with the flat limit.

    v is a callable supported in [-support, support]; on each sphere it is
    embedded as u_d(theta) = v(r_d cos(theta)) with r_d = sqrt(d / (2 pi)),
    so that r_d cos(theta) converges in law to the Gaussian exp(-pi x^2) dx
    as d grows.  The reported sphere-side value is (2 pi / d) times the
    unit-sphere interpolation deficit, i.e. the deficit measured on the
    sphere of radius r_d, where the embedding is isometric to the Gaussian
    scale; with this normalization the values converge (at rate 1/d) to the
    flat sharp-deficit functional.  Entries with r_d < support cannot hold
    the profile and are flagged as skipped.
    """
    from .gaussian import gns_limit_value
    if not 1.0 < p < 2.0:
        raise ValueError("the large-dimension limit needs p in (1, 2)")
    target = gns_limit_value(v, p)
    out = []
    for d in d_list:
        r_d = math.sqrt(d / (2.0 * math.pi))
        if r_d < support:
            out.append({"d": d, "skipped": True, "r_d": r_d,
                        "support": support})
            continue
        g = make_zonal_grid(d, n_nodes)
        u = ZonalProfile(g, np.asarray([v(r_d * xi) for xi in g.x]))
        sphere_val = (2.0 * math.pi / d) * (
            sphere_energy(u) - d * ep_functional(u, p))
        out.append({"d": d, "skipped": False, "sphere": sphere_val,
                    "gaussian": target,
                    "difference": abs(sphere_val - target)})
    return out
