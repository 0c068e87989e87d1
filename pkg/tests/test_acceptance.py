"""Acceptance suite: one test per headline criterion, pinned tolerances.

Each test prints a single `[criterion NN] ... PASS` line (visible with -s or
on failure); the assertions carry the stated tolerances.  All grids, seeds
and initial data are fixed so the numbers are reproducible.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from ineqlab import cli
from ineqlab.flows import (FlowConfig, FlowTrace, backward_quotient_check,
                           fit_decay_rate, rate_constants, run_rfd,
                           run_yamabe)
from ineqlab.functionals import (DualityFrame, duality_gap_report,
                                 entropy_pair, reference_barenblatt,
                                 rescale_to_mass, sharp_constants,
                                 sobolev_constant_exact)
from ineqlab.profiles import (AubinTalentiParams, aubin_talenti, default_grid,
                              yamabe_separable)
from ineqlab.radial import RadialProfile, make_grid, mass
from ineqlab.spectrum import assemble_sector, hardy_poincare_gap
from ineqlab.sphere import (ZonalProfile, large_d_limit_check, m_exponents,
                            make_zonal_grid, sphere_deficit, sphere_flow)


def _report(n, text):
    print(f"[criterion {n:02d}] {text} PASS")


@pytest.fixture(scope="module")
def grid_d3():
    return default_grid(3)


@pytest.fixture(scope="module")
def frame_d3(grid_d3):
    return DualityFrame(grid_d3)


@pytest.fixture(scope="module")
def grid_flow():
    return make_grid(1, 60.0, 512, 2.0)


def _at(grid, a, c=1.0):
    return aubin_talenti(AubinTalentiParams(a, c, 3), grid)


def _family20(grid):
    r = grid.nodes
    g1, g4 = _at(grid, 1.0), _at(grid, 4.0)
    return [_at(grid, a) for a in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0)] \
        + [_at(grid, a, 0.7) for a in (1.0, 2.0)] + [
        RadialProfile(grid, 0.7 * g1.values + 0.3 * g4.values, 1.0),
        RadialProfile(grid, g1.values * (1.0 + 0.3 * np.exp(-(r - 2.0) ** 2)),
                      1.0),
        RadialProfile(grid, np.exp(-r ** 2 / 4.0)),
        RadialProfile(grid, np.exp(-r ** 2 / 10.0)),
        RadialProfile(grid, (1.0 + r ** 2) ** -1.0, 2.0),
        RadialProfile(grid, (1.0 + r ** 2) ** -1.5, 3.0),
        RadialProfile(grid, r ** 2 * np.exp(-r ** 2)),
        RadialProfile(grid, 1.0 / (1.0 + r ** 4)),
        RadialProfile(grid, np.exp(-r)),
        RadialProfile(grid, g1.values + 0.1 * np.exp(-(r - 3.0) ** 2)),
    ]


def _curated10(grid):
    r = grid.nodes
    g1, g4 = _at(grid, 1.0), _at(grid, 4.0)
    return [_at(grid, a) for a in (1.5, 2.0, 3.0, 4.0, 6.0)] + [
        RadialProfile(grid, 0.7 * g1.values + 0.3 * g4.values, 1.0),
        RadialProfile(grid, g1.values * (1.0 + 0.3 * np.exp(-(r - 2.0) ** 2)),
                      1.0),
        RadialProfile(grid, np.exp(-r ** 2 / 4.0)),
        RadialProfile(grid, np.exp(-r ** 2 / 10.0)),
        RadialProfile(grid, (1.0 + r ** 2) ** -1.0, 2.0),
    ]


def _dilated(grid, m, lam):
    bb = reference_barenblatt(grid, m)
    vals = lam ** grid.d * (1.0 + (lam * grid.nodes) ** 2) ** (1.0 / (m - 1.0))
    return rescale_to_mass(RadialProfile(grid, vals, bb.decay_exponent),
                           mass(bb))


def _perturbed(grid, m, amp):
    bb = reference_barenblatt(grid, m)
    v = bb.with_values(
        bb.values * (1.0 + amp * np.exp(-(grid.nodes - 1.0) ** 2)),
        bb.decay_exponent)
    return rescale_to_mass(v, mass(bb))


def test_criterion_01_sharp_constant_closed_form():
    t0 = time.perf_counter()
    errs = {}
    for d in (3, 4, 5):
        computed = sharp_constants(d)["S_d"]
        exact = sobolev_constant_exact(d)
        errs[d] = abs(computed - exact) / exact
        assert errs[d] < 1e-3
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report(1, f"S_d matches closed form, rel errs {errs}, {elapsed:.2f}s")


def test_criterion_02_duality_identity(grid_d3, frame_d3):
    t0 = time.perf_counter()
    family = _family20(grid_d3)
    assert len(family) == 20
    worst = 0.0
    for f in family:
        rep = duality_gap_report(f, frame_d3)
        md = rep.metadata
        worst = max(worst, abs(md["identity_residual"]) / md["identity_scale"])
        assert rep.deficit <= md["strong_side"] \
            + 1e-12 * md["identity_scale"]
    assert worst <= 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report(2, f"20 profiles: weak <= strong, worst identity residual "
               f"{worst:.2e}, {elapsed:.2f}s")


def test_criterion_03_duality_constant_interval(grid_d3, frame_d3):
    ratios = [duality_gap_report(f, frame_d3).quotient
              for f in _curated10(grid_d3)]
    c_est = max(r for r in ratios if r is not None)
    assert 3.0 / 7.0 <= c_est < 1.0
    _report(3, f"C_est = {c_est:.4f} in [3/7, 1)")


def test_criterion_04_phi_refinement(grid_d3, frame_d3):
    worst = math.inf
    for f in _curated10(grid_d3):
        md = duality_gap_report(f, frame_d3).metadata
        worst = min(worst, md["phi_slack"])
        assert md["phi_slack"] >= -1e-6 * max(1.0, md["identity_scale"])
    _report(4, f"phi-refined bound slack >= {worst:.2e} on curated family")


def test_criterion_05_yamabe_monotone_and_extinction():
    grid = make_grid(3, 100.0, 1024, 2.0)
    sep = yamabe_separable(1.0, 0.0, grid, 3)
    r = grid.nodes
    data = [
        (sep, 1.15, 500),
        (RadialProfile(grid, (1.0 + r ** 2) ** -2.5, 5.0), 0.3, 200),
        (RadialProfile(grid, (1.0 + r ** 2) ** -3.0, 6.0), 0.3, 200),
        (RadialProfile(grid, (1.0 + r ** 2) ** -4.0, 8.0), 0.3, 200),
        (sep.with_values(sep.values * (1.0 + 0.2 * np.exp(-r ** 2)),
                         sep.decay_exponent), 0.3, 200),
    ]
    ext = None
    for i, (v0, t_end, every) in enumerate(data):
        cfg = FlowConfig(m=0.2, dt=1e-4, t_end=t_end, record_every=every)
        trace = run_yamabe(v0, cfg)
        hs = np.array(trace.h_functional)
        assert np.all(np.diff(hs) >= -1e-12 * abs(hs[0])), f"datum {i}"
        if i == 0:
            ext = trace.extinction_time
    assert ext is not None
    assert abs(ext - 1.0) <= 0.05
    _report(5, f"H nondecreasing on 5 data; extinction at {ext:.4f} "
               "(target 1.0 within 5%)")


def test_criterion_06_rfd_decay_envelope(grid_flow):
    runs = [(0.5, _dilated(grid_flow, 0.5, 1.25)),
            (0.5, _dilated(grid_flow, 0.5, 0.8)),
            (0.8, _dilated(grid_flow, 0.8, 1.25)),
            (0.8, _dilated(grid_flow, 0.8, 0.8)),
            (0.8, _perturbed(grid_flow, 0.8, 0.3))]
    rates = []
    for m, v0 in runs:
        t0 = time.perf_counter()
        trace = run_rfd(v0, FlowConfig(m=m, dt=1e-3, t_end=2.0,
                                       record_every=20))
        assert time.perf_counter() - t0 < 60.0
        ts = np.array(trace.times)
        fs = np.array(trace.free_energy)
        assert np.all(fs <= fs[0] * np.exp(-4.0 * ts) * (1.0 + 1e-2)
                      + 1e-300)
        rate = fit_decay_rate(trace, (0.5, 1.5))
        assert rate >= 3.92
        rates.append(rate)
    _report(6, f"F <= F(0) e^(-4t)(1+1e-2) on 5 runs; rates {np.round(rates, 3)}")


def test_criterion_07_improved_rate_centered(grid_flow):
    eta = rate_constants(1, 0.8, 0.0).eta
    assert eta == pytest.approx(1.6)
    rates = []
    for v0 in (_dilated(grid_flow, 0.8, 1.25),
               _perturbed(grid_flow, 0.8, 0.3)):
        trace = run_rfd(v0, FlowConfig(m=0.8, dt=1e-3, t_end=2.0,
                                       record_every=20))
        rate = fit_decay_rate(trace, (0.5, 1.5))
        assert rate >= 4.0 + eta - 0.05
        rates.append(rate)
    _report(7, f"centered data rates {np.round(rates, 3)} >= 4+eta-0.05 "
               f"= {4.0 + eta - 0.05}")


def test_criterion_08_eep_quotient_and_backward_bound(grid_flow):
    bb = reference_barenblatt(grid_flow, 0.8)
    target = mass(bb)
    rng = np.random.default_rng(0)
    q_min = math.inf
    for _ in range(20):
        amp = rng.uniform(0.05, 0.4)
        c = rng.uniform(0.0, 3.0)
        w = rng.uniform(0.5, 2.0)
        v = rescale_to_mass(bb.with_values(
            bb.values * (1.0 + amp * np.exp(-((grid_flow.nodes - c) / w) ** 2)),
            bb.decay_exponent), target)
        q = entropy_pair(v, 0.8).quotient
        q_min = min(q_min, q)
        assert q >= 4.0 * (1.0 - 1e-3)
    # backward propagation of the quotient bound along an actual run
    trace = run_rfd(_perturbed(grid_flow, 0.8, 0.3),
                    FlowConfig(m=0.8, dt=1e-3, t_end=1.2, record_every=20))
    rc = rate_constants(1, 0.8, 1.0)
    rep = backward_quotient_check(trace, rc.eta, 1.0)
    assert rep["status"] == "pass"
    # synthetic equality trace of dQ/dt = Q(Q-4) saturates zeta
    eta, t_star = rc.eta, 1.0
    times = np.linspace(0.0, t_star, 10001)
    e = np.exp(-4.0 * (t_star - times))
    q_exact = 4.0 + 4.0 * eta * e / (4.0 + eta - eta * e)
    synth = backward_quotient_check(
        FlowTrace(times=list(times), quotient=list(q_exact)), eta, t_star)
    assert synth["status"] == "pass"
    assert abs(synth["min_margin"]) <= 1e-4
    assert synth["zeta_at_zero"] == pytest.approx(rc.zeta, abs=1e-12)
    _report(8, f"min Q = {q_min:.3f} >= 4(1-1e-3); backward bound pass; "
               f"equality trace margin {synth['min_margin']:.1e}")


def test_criterion_09_hardy_poincare_gaps():
    results = {}
    for d, m in [(3, 0.8), (1, 0.6), (2, 0.9)]:
        grid = make_grid(d, 200.0, 1024, 2.0)
        t0 = time.perf_counter()
        lam1 = hardy_poincare_gap(assemble_sector(d, m, 1, grid))
        lam0 = hardy_poincare_gap(assemble_sector(d, m, 0, grid))
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0
        assert lam1 == pytest.approx(4.0, rel=1e-2)
        target = 4.0 * (2.0 - d * (1.0 - m))
        assert lam0 == pytest.approx(target, rel=1e-2)
        results[(d, m)] = (round(lam1, 4), round(lam0, 4))
    _report(9, f"gaps 4 / 4(2-d(1-m)) within 1%: {results}")


def test_criterion_10_mass_conservation(grid_flow):
    trace = run_rfd(_dilated(grid_flow, 0.5, 1.25),
                    FlowConfig(m=0.5, dt=2e-3, t_end=5.0, record_every=100))
    drift = abs(trace.mass[-1] - trace.mass[0]) / trace.mass[0]
    assert drift <= 1e-6
    _report(10, f"relative mass drift over [0,5] = {drift:.2e} <= 1e-6")


def test_criterion_11_sphere_quartic_degeneracy():
    g = make_zonal_grid(3, 64)
    eps = np.geomspace(1e-3, 1e-2, 9)
    defs, stabs, quots = [], [], []
    for e in eps:
        rep = sphere_deficit(ZonalProfile(g, 1.0 + e * g.x), 4.0)
        defs.append(rep["deficit"])
        stabs.append(rep["stability_functional"])
        quots.append(rep["quotient"])
    slope_d = float(np.polyfit(np.log(eps), np.log(defs), 1)[0])
    slope_s = float(np.polyfit(np.log(eps), np.log(stabs), 1)[0])
    assert slope_d == pytest.approx(4.0, abs=0.1)
    assert slope_s == pytest.approx(4.0, abs=0.1)
    q_min, q_max = min(quots), max(quots)
    assert q_min > 0.0
    assert q_max / q_min < 1.5
    _report(11, f"slopes {slope_d:.3f}/{slope_s:.3f} = 4.0+-0.1; quotient in "
                f"[{q_min:.3f}, {q_max:.3f}]")


def test_criterion_12_flow_exponent_formulas():
    lo, hi = m_exponents(3, 4.0)
    assert lo == pytest.approx(0.48787, abs=5e-6)
    assert hi == pytest.approx(0.91213, abs=5e-6)
    for d in (3, 4):
        two_star = 2.0 * d / (d - 2.0)
        lo_c, hi_c = m_exponents(d, two_star)
        m1 = (d - 1.0) / d
        assert abs(lo_c - m1) < 1e-10
        assert abs(hi_c - m1) < 1e-10
    _report(12, "m_-(3,4)=0.48787, m_+(3,4)=0.91213 (5 digits); "
                "m_+-(d,2*)=(d-1)/d to 1e-10 for d=3,4")


def test_criterion_13_sphere_flow_monotone():
    g = make_zonal_grid(3, 40)
    lo, hi = m_exponents(3, 4.0)
    finals = []
    for m in (lo, 0.5 * (lo + hi), hi):
        f0 = ZonalProfile(g, 1.0 + 0.2 * g.x)
        trace = sphere_flow(f0, 4.0, m,
                            FlowConfig(m=m, dt=2e-4, t_end=0.3,
                                       record_every=100))
        ds = np.array(trace.free_energy)
        assert np.all(np.diff(ds) <= 1e-12 * ds[0]), f"m={m}"
        finals.append(ds[-1] / ds[0])
    _report(13, f"deficit nonincreasing at m-, mid, m+; final/initial "
                f"{np.round(finals, 4)}")


def test_criterion_14_gaussian_suite():
    from ineqlab.gaussian import (GaussianProfile, bridge_to_standard,
                                  gaussian_lsi_deficit, logsob_distance,
                                  make_gaussian_grid, compact_lsi_constants,
                                  compact_lsi_check)
    pi_grid = make_gaussian_grid("pi-normal", 4000)
    u = GaussianProfile(pi_grid, 1.2 * np.exp(0.6 * pi_grid.xs))
    rep = gaussian_lsi_deficit(u)
    assert abs(rep["deficit"]) <= 1e-6 * max(rep["energy"], 1.0)
    _, _, dist2 = logsob_distance(u)
    assert dist2 <= 1e-8
    consts = compact_lsi_constants(1, 1.0)
    assert consts["C_star"] - 1.0 == pytest.approx(1.0 / 432.0, rel=1e-12)
    assert consts["C_star"] - 1.0 == pytest.approx(0.00231481, abs=1e-8)
    std_grid = make_gaussian_grid("standard", 4000)
    vals = np.maximum(1.0 - std_grid.xs ** 2, 0.0) ** 2
    vals /= std_grid.lp_norm(vals, 2.0)
    verify = compact_lsi_check(GaussianProfile(std_grid, vals), 1.0)
    assert verify["status"] == "pass"
    w = GaussianProfile(pi_grid, 1.0 + 0.4 * np.tanh(pi_grid.xs))
    d_pi = gaussian_lsi_deficit(w)["deficit"]
    d_std = gaussian_lsi_deficit(bridge_to_standard(w))["deficit"]
    assert abs(d_std - d_pi) <= 1e-8 * max(abs(d_pi), 1.0)
    _report(14, f"exp family deficit ~0, distance ~0; C*(1)-1 = 1/432; "
                f"bridge gap {abs(d_std - d_pi):.1e} <= 1e-8")


def test_criterion_15_large_d_trend():
    def bump1(x):
        return max(1.0 - x * x, 0.0) ** 2

    def bump2(x):
        return max(1.0 - (x / 0.8) ** 2, 0.0) ** 3

    for v in (bump1, bump2):
        out = large_d_limit_check(v, 1.0, 1.5, [8, 16, 32, 64])
        assert not any(o["skipped"] for o in out)
        diffs = [o["difference"] for o in out]
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
    _report(15, "|scaled sphere deficit - flat limit| strictly decreasing "
                "over d = 8, 16, 32, 64 for both bumps")


def test_criterion_16_suite_determinism(tmp_path):
    cfg = os.path.join(os.path.dirname(cli.__file__), "configs",
                       "paper-suite.toml")
    t0 = time.perf_counter()
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert cli.main(["run", cfg, "--out", out]) == 0
        blob = {}
        for name in sorted(os.listdir(out)):
            with open(os.path.join(out, name), "rb") as fh:
                blob[name] = fh.read()
        outs.append(blob)
    elapsed = time.perf_counter() - t0
    assert outs[0] == outs[1]
    assert elapsed < 900.0
    # sanity: the suite actually produced the report artifacts
    names = outs[0].keys()
    assert any(n.endswith("-trace.csv") for n in names)
    assert any(n.endswith("-summary.json") for n in names)
    assert any(n.endswith(".gp") for n in names)
    for name in names:
        if name.endswith("-summary.json"):
            doc = json.loads(outs[0][name])
            assert "constants" in doc
    _report(16, f"two suite runs byte-identical; wall clock {elapsed:.1f}s "
                "< 15 min")
