"""Piecewise-linear finite elements on a radial mesh.

Used for the discretely-consistent duality framework (stiffness solves whose
integration-by-parts identities hold to solver precision) and for the
sector eigenproblems.  Element integrals use 4-point Gauss-Legendre, which
is plenty for the smooth weights that appear here.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solveh_banded

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _element_points(nodes):
    """Gauss points/weights per element; shapes (N, 4)."""
    a = nodes[:-1][:, None]
    b = nodes[1:][:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * _GAUSS_X[None, :]
    w = 0.5 * (b - a) * _GAUSS_W[None, :]
    return x, w


def stiffness_tridiag(nodes, weight):
    """Tridiagonal form of int w'(r)^2 weight(r) dr for hat functions.

    Returns (diag, off) with off[i] coupling nodes i and i+1.
    """
    x, w = _element_points(nodes)
    h = np.diff(nodes)
    ke = (w * weight(x)).sum(axis=1) / h ** 2
    diag = np.zeros(len(nodes))
    diag[:-1] += ke
    diag[1:] += ke
    return diag, -ke


def lumped_mass(nodes, weight):
    """Diagonal (lumped) form of int w(r)^2 weight(r) dr for hat functions."""
    x, w = _element_points(nodes)
    t = (x - nodes[:-1][:, None]) / np.diff(nodes)[:, None]
    wx = w * weight(x)
    diag = np.zeros(len(nodes))
    diag[:-1] += (wx * (1.0 - t)).sum(axis=1)
    diag[1:] += (wx * t).sum(axis=1)
    return diag


def apply_tridiag(diag, off, v):
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def solve_tridiag_spd(diag, off, rhs):
    """Solve the SPD tridiagonal system (diag, off) x = rhs."""
    ab = np.zeros((2, len(diag)))
    ab[0, 1:] = off
    ab[1] = diag
    return solveh_banded(ab, rhs)
