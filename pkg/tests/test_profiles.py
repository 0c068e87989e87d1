import math

import numpy as np
import pytest

from ineqlab.profiles import (AubinTalentiParams, BarenblattParams,
                              _golden_min, aubin_talenti, barenblatt, g_star,
                              gns_optimizer, gns_range,
                              project_to_aubin_talenti, yamabe_separable)
from ineqlab.radial import mass


def test_param_validation():
    with pytest.raises(ValueError):
        AubinTalentiParams(-1.0, 1.0, 3)
    with pytest.raises(ValueError):
        AubinTalentiParams(1.0, 1.0, 2)
    with pytest.raises(ValueError):
        BarenblattParams(0.2, 3)      # below m_c = 1/3
    with pytest.raises(ValueError):
        BarenblattParams(1.0, 3)


def test_golden_min_quadratic():
    x, fx = _golden_min(lambda x: (x - 1.7) ** 2 + 0.25, -5.0, 5.0)
    assert x == pytest.approx(1.7, abs=1e-6)
    assert fx == pytest.approx(0.25, abs=1e-10)


def test_projection_recovers_member(grid_d3):
    f = aubin_talenti(AubinTalentiParams(2.5, 1.3, 3), grid_d3)
    params, dist2 = project_to_aubin_talenti(f)
    assert params.a == pytest.approx(2.5, rel=1e-4)
    assert params.c == pytest.approx(1.3, rel=1e-6)
    assert dist2 < 1e-10


def test_projection_of_perturbed_member(grid_d3):
    r = grid_d3.nodes
    g = g_star(grid_d3)
    f = g.with_values(g.values * (1.0 + 0.1 * np.exp(-r ** 2)), 1.0)
    params, dist2 = project_to_aubin_talenti(f)
    assert dist2 > 1e-5
    assert 0.5 < params.a < 2.0


def test_gns_optimizer_range(grid_d3):
    lo, hi = gns_range(3)
    assert (lo, hi) == (1.0, 3.0)
    with pytest.raises(ValueError):
        gns_optimizer(0.5, 3, grid_d3)
    with pytest.raises(ValueError):
        gns_optimizer(3.5, 3, grid_d3)
    f = gns_optimizer(2.0, 3, grid_d3)
    assert np.all(f.values > 0)


def test_barenblatt_mass_finite(grid_d3):
    bb = barenblatt(BarenblattParams(0.8, 3), grid_d3)
    m = mass(bb)
    assert math.isfinite(m) and m > 0


def test_yamabe_separable_amplitude(grid_d3):
    v0 = yamabe_separable(1.0, 0.0, grid_d3, 3)
    v_half = yamabe_separable(1.0, 0.5, grid_d3, 3)
    alpha = (3 + 2) / 4.0
    ratio = v_half.values[0] / v0.values[0]
    assert ratio == pytest.approx(0.5 ** alpha, rel=1e-12)
    # profile part is the (d+2)-power of the unit extremal
    g = g_star(grid_d3)
    shape = v0.values / v0.values[0]
    assert np.allclose(shape, (g.values / g.values[0]) ** 5, rtol=1e-10)
    with pytest.raises(ValueError):
        yamabe_separable(1.0, 1.0, grid_d3, 3)
