import numpy as np
import pytest

from ineqlab.radial import make_grid
from ineqlab.spectrum import (assemble_sector, hardy_poincare_gap,
                              sector_eigenvalues, spectral_gap_report)


@pytest.fixture(scope="module")
def grids():
    return {d: make_grid(d, 200.0, 1024, 2.0) for d in (1, 2, 3)}


def test_m_range_validation(grids):
    with pytest.raises(ValueError):
        assemble_sector(3, 0.6, 0, grids[3])    # below (d-1)/d = 2/3
    with pytest.raises(ValueError):
        assemble_sector(1, 0.3, 0, grids[1])
    with pytest.raises(ValueError):
        assemble_sector(1, 0.8, 2, grids[1])    # d=1 has two sectors only


def test_translation_mode_gives_four(grids):
    # grad B^{m-1} generates an exact eigenfunction at eigenvalue 4 in ell=1
    for d, m in [(1, 0.6), (2, 0.9), (3, 0.8)]:
        lam = hardy_poincare_gap(assemble_sector(d, m, 1, grids[d]))
        assert lam == pytest.approx(4.0, rel=1e-2)


def test_constrained_gap_formula(grids):
    # mean-zero ell=0 gap equals 4(2 - d(1-m)) in this m range
    for d, m in [(3, 0.8), (1, 0.6), (2, 0.9)]:
        lam = hardy_poincare_gap(assemble_sector(d, m, 0, grids[d]))
        assert lam == pytest.approx(4.0 * (2.0 - d * (1.0 - m)), rel=1e-2)


def test_sector_eigenvalues_ordered(grids):
    op = assemble_sector(3, 0.8, 0, grids[3])
    vals = sector_eigenvalues(op, k=3)
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == pytest.approx(0.0, abs=1e-6)   # constants are in ell=0


def test_report_attaining_sectors(grids):
    rep = spectral_gap_report(3, 0.8, grids[3], constrained=False)
    assert rep["ell"] == 1
    assert rep["lambda"] == pytest.approx(4.0, rel=1e-2)
    assert rep["alpha_est"] == pytest.approx(rep["lambda"] / 4.0)
    rep_c = spectral_gap_report(3, 0.8, grids[3], constrained=True)
    assert rep_c["lambda"] > rep["lambda"]


def test_higher_sectors_lie_above(grids):
    lam1 = hardy_poincare_gap(assemble_sector(3, 0.8, 1, grids[3]))
    for ell in (2, 3):
        lam = hardy_poincare_gap(assemble_sector(3, 0.8, ell, grids[3]))
        assert lam > lam1
