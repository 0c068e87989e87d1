"""Gaussian-measure log-Sobolev deficits and related stability constants.

Two Gaussian normalizations coexist in the literature and both are
supported, with an explicit tag: "pi-normal" is exp(-pi x^2) dx and
"standard" is (2 pi)^{-1/2} exp(-x^2/2) dx; both are probability measures.
The sharp log-Sobolev prefactor is pi in the first convention and 1/2 in the
second, and a change of variables x -> x sqrt(2 pi) (plus an amplitude
factor) maps one deficit onto the other.  All computations are 1-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profiles import _golden_min
from .radial import _interval_rules

_SQRT2PI = math.sqrt(2.0 * math.pi)


class ConstraintViolation(ValueError):
    """An input breaks a normalization or support hypothesis."""


@dataclass(frozen=True)
class GaussianGrid:
    """Uniform nodes over +-12 standard deviations, weights include dgamma."""

    normalization: str
    xs: np.ndarray
    weights: np.ndarray

    def integrate(self, vals: np.ndarray) -> float:
        return float(self.weights @ vals)

    def lp_norm(self, vals: np.ndarray, p: float) -> float:
        return self.integrate(np.abs(vals) ** p) ** (1.0 / p)

    @property
    def sigma(self) -> float:
        return 1.0 / _SQRT2PI if self.normalization == "pi-normal" else 1.0


def _density(normalization: str, x: np.ndarray) -> np.ndarray:
    if normalization == "pi-normal":
        return np.exp(-math.pi * x ** 2)
    if normalization == "standard":
        return np.exp(-0.5 * x ** 2) / _SQRT2PI
    raise ValueError(f"unknown normalization {normalization!r}")


def make_gaussian_grid(normalization: str = "pi-normal",
                       n: int = 4000) -> GaussianGrid:
    sigma = 1.0 / _SQRT2PI if normalization == "pi-normal" else \
        1.0 if normalization == "standard" else None
    if sigma is None:
        raise ValueError(f"unknown normalization {normalization!r}")
    if n < 64:
        raise ValueError("need at least 64 intervals")
    xs = np.linspace(-12.0 * sigma, 12.0 * sigma, n + 1)
    start, w = _interval_rules(xs)
    weights = np.zeros(n + 1)
    for j in range(4):
        np.add.at(weights, start + j, w[:, j])
    return GaussianGrid(normalization, xs, weights * _density(normalization, xs))


@dataclass(frozen=True)
class GaussianProfile:
    grid: GaussianGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.xs.shape:
            raise ValueError("profile values must match the grid nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")


def derivative(u: GaussianProfile) -> np.ndarray:
    """Fourth-order finite differences on the uniform grid."""
    v = u.values
    h = u.grid.xs[1] - u.grid.xs[0]
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    for i in (0, 1):
        out[i] = (-25 * v[i] + 48 * v[i + 1] - 36 * v[i + 2]
                  + 16 * v[i + 3] - 3 * v[i + 4]) / (12 * h)
        j = len(v) - 1 - i
        out[j] = (25 * v[j] - 48 * v[j - 1] + 36 * v[j - 2]
                  - 16 * v[j - 3] + 3 * v[j - 4]) / (12 * h)
    return out


def _entropy(grid: GaussianGrid, u2: np.ndarray, norm2: float) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(u2 > 0, u2 * np.log(u2 / norm2), 0.0)
    return grid.integrate(ent)


def gaussian_lsi_deficit(u: GaussianProfile) -> dict:
    """Deficit of the sharp Gaussian logarithmic Sobolev inequality.

    pi-normal:  ||u'||^2 - pi  * int u^2 log(u^2/||u||^2) dgamma,
    standard:   ||u'||^2 - 1/2 * int u^2 log(u^2/||u||^2) dgamma.
    """
    grid = u.grid
    pref = math.pi if grid.normalization == "pi-normal" else 0.5
    energy = grid.integrate(derivative(u) ** 2)
    u2 = u.values ** 2
    norm2 = grid.integrate(u2)
    deficit = energy - pref * _entropy(grid, u2, norm2)
    return {"name": "gaussian-log-sobolev",
            "normalization": grid.normalization,
            "deficit": deficit, "energy": energy, "norm2": norm2,
            "prefactor": pref}


def bridge_to_standard(u: GaussianProfile) -> GaussianProfile:
    """Map a pi-normal profile to the standard convention, deficit-preserving.

    The substitution y = x sqrt(2 pi) sends the nodes of the pi-normal grid
    exactly onto the standard ones, and the amplitude factor sqrt(2 pi)
    makes the two deficits equal (both terms are 2-homogeneous and pick up
    the same 2 pi under the substitution).
    """
    if u.grid.normalization != "pi-normal":
        raise ValueError("input must use the pi-normal convention")
    std = make_gaussian_grid("standard", len(u.grid.xs) - 1)
    return GaussianProfile(std, _SQRT2PI * u.values)


def logsob_distance(u: GaussianProfile,
                    bracket: tuple[float, float] = (-5.0, 5.0)):
    """Least-squares distance of u to the exponential family c e^{ax}.

    The amplitude optimum c*(a) = <u, e^{ax}> / ||e^{ax}||^2 is explicit;
    the rate a is found by golden-section on the bracket.  Returns
    (a, c, squared distance).
    """
    grid = u.grid
    xs = grid.xs
    nu2 = grid.integrate(u.values ** 2)

    def parts(a):
        e = np.exp(a * xs)
        ne2 = grid.integrate(e * e)
        cross = grid.integrate(u.values * e)
        return cross, ne2

    def objective(a):
        cross, ne2 = parts(a)
        return nu2 - cross ** 2 / ne2

    a, dist2 = _golden_min(objective, bracket[0], bracket[1])
    cross, ne2 = parts(a)
    return a, cross / ne2, max(dist2, 0.0)


def compact_lsi_constants(d: int, R: float) -> dict:
    """Improved log-Sobolev constant for compact support in a radius-R ball.

    K_star = max(d, (d+1) R^2/(1+R^2)); C_star(K) = 1 + 1/(432 K); the
    combined constant is C = 1 + (C_star(K_star)-1)/(1 + R^2 C_star(K_star)).
    """
    if d < 1 or R <= 0:
        raise ValueError("need d >= 1 and R > 0")
    k_star = max(float(d), (d + 1.0) * R ** 2 / (1.0 + R ** 2))
    c_star = 1.0 + 1.0 / (432.0 * k_star)
    c = 1.0 + (c_star - 1.0) / (1.0 + R ** 2 * c_star)
    return {"K_star": k_star, "C_star": c_star, "C": c}


def compact_lsi_check(u: GaussianProfile, R: float, d: int = 1,
                    tol: float = 1e-9) -> dict:
    """Check the improved inequality ||u'||^2 >= (C/2) int u^2 log u^2.

    Requires the standard normalization, unit L^2(dgamma) norm, vanishing
    first moment of u^2, and support inside [-R, R] (all to 1e-8).
    """
    grid = u.grid
    if grid.normalization != "standard":
        raise ConstraintViolation("the improved constant is stated for the "
                                  "standard normalization")
    norm2 = grid.integrate(u.values ** 2)
    if abs(norm2 - 1.0) > 1e-8:
        raise ConstraintViolation(f"int u^2 dgamma = {norm2!r}, must be 1")
    moment = grid.integrate(grid.xs * u.values ** 2)
    if abs(moment) > 1e-8:
        raise ConstraintViolation(f"int x u^2 dgamma = {moment!r}, must be 0")
    outside = np.abs(grid.xs) > R + 1e-12
    if np.any(np.abs(u.values[outside]) > 1e-8):
        raise ConstraintViolation(f"support leaks outside [-{R}, {R}]")
    consts = compact_lsi_constants(d, R)
    energy = grid.integrate(derivative(u) ** 2)
    u2 = u.values ** 2
    entropy = _entropy(grid, u2, 1.0)
    slack = energy - 0.5 * consts["C"] * entropy
    return {**consts, "R": R, "energy": energy, "entropy": entropy,
            "slack": slack,
            "status": "pass" if slack >= -tol * max(energy, 1.0) else "fail"}


def gns_limit_value(v, p: float, n: int = 4000) -> float:
    """Flat-space limit functional of the subcritical sphere inequalities.

    For a compactly supported v this is the sharp pi-normal quantity
    ||v'||^2_gamma - 2 pi (||v||_2^2 - ||v||_p^2)/(2-p); as p -> 2 it
    recovers the pi-normal Gaussian log-Sobolev deficit (prefactor pi), and
    under the sqrt(2 pi) change of variables it is the deficit of the
    interpolation inequality for the standard Gaussian with constant
    1/(2-p).
    """
    if not 1.0 < p < 2.0:
        raise ValueError("need p in (1, 2)")
    grid = make_gaussian_grid("pi-normal", n)
    u = GaussianProfile(grid, np.asarray([v(x) for x in grid.xs]))
    energy = grid.integrate(derivative(u) ** 2)
    return energy - 2.0 * math.pi * (
        grid.lp_norm(u.values, 2.0) ** 2
        - grid.lp_norm(u.values, p) ** 2) / (2.0 - p)
