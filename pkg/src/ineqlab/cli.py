"""Experiment runner: config in, CSV traces + JSON summaries + plot scripts out.

Configs are TOML (JSON accepted as a fallback).  Every run writes a JSON
summary embedding the sharp-constant map used, so results are auditable, and
a gnuplot script referencing the CSV traces.  Exit codes: 0 success, 1 usage
error (bad config or parameters), 2 inequality violated beyond tolerance.

Sweeps expand a parameter lattice, run the points concurrently (capped by
the INEQLAB_WORKERS environment variable) and write one CSV row per lattice
point in lexicographic order, independent of completion order.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import math
import os
import sys
from importlib import resources

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from . import flows, functionals, gaussian, profiles, radial, spectrum, sphere


class UsageError(ValueError):
    """Bad config or parameter; maps to exit code 1."""


class ToleranceFailure(RuntimeError):
    """An inequality check failed beyond tolerance; maps to exit code 2."""


def load_defaults() -> dict:
    with resources.files("ineqlab").joinpath("defaults.toml").open("rb") as fh:
        return tomllib.load(fh)


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from exc
    try:
        return tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError:
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(
                f"config: {path} is neither valid TOML nor JSON "
                f"({exc})") from exc


def _merged(config: dict) -> dict:
    defaults = load_defaults()
    params = dict(config.get("parameters", {}))
    params.setdefault("_defaults", defaults)
    params.setdefault("_tolerances", defaults["tolerances"])
    return params


def _grid_from(params: dict, d: int) -> radial.RadialGrid:
    g = dict(params["_defaults"]["grid"])
    g.update(params.get("grid", {}))
    return radial.make_grid(d, g["r_max"], int(g["n"]), g["grading"])


def _flow_cfg(params: dict, m: float) -> flows.FlowConfig:
    f = dict(params["_defaults"]["flow"])
    f.update(params.get("flow", {}))
    return flows.FlowConfig(m=m, dt=f["dt"], t_end=f["t_end"],
                            sweeps=int(f["sweeps"]),
                            record_every=int(f["record_every"]))


def _fmt(x) -> str:
    """CSV cell: full-precision floats, bare strings, empty for None."""
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _plot_script(path, csv_name, title, curves):
    with open(path, "w") as fh:
        fh.write('set datafile separator ","\n')
        fh.write(f'set title "{title}"\nset key top right\nset logscale y\n')
        parts = [f'"{csv_name}" using {spec} with lines title "{label}"'
                 for spec, label in curves]
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Experiment implementations; each returns a summary dict


def _exp_rfd(params, out, tag, tol_scale):
    d = int(params.get("d", 1))
    m = params.get("m")
    if m is None:
        raise UsageError("parameters: rfd needs the exponent m")
    m_c = (d - 2) / d
    if m <= m_c:
        raise UsageError(f"parameters: m={m} must exceed m_c=(d-2)/d={m_c}")
    grid = _grid_from(params, d)
    bb = profiles.barenblatt(profiles.BarenblattParams(m, d), grid)
    lam = params.get("dilation", 1.0)
    if lam == 1.0:
        v0 = bb
    else:
        r = grid.nodes
        vals = lam ** d * (1.0 + (lam * r) ** 2) ** (1.0 / (m - 1.0))
        v0 = functionals.rescale_to_mass(
            radial.RadialProfile(grid, vals, bb.decay_exponent),
            radial.mass(bb))
    cfg = _flow_cfg(params, m)
    trace = flows.run_rfd(v0, cfg)
    csv = os.path.join(out, f"{tag}-trace.csv")
    trace.to_csv(csv)
    _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                 f"self-similar flow d={d} m={m}",
                 [("1:3", "free energy"), ("1:4", "production")])
    ts = np.array(trace.times)
    fs = np.array(trace.free_energy)
    tol = params["_tolerances"]
    drift = abs(trace.mass[-1] - trace.mass[0]) / abs(trace.mass[0])
    envelope_ok = bool(np.all(
        fs <= fs[0] * np.exp(-4.0 * ts)
        * (1.0 + tol["envelope_slack"] * tol_scale) + 1e-300))
    summary = {
        "free_energy_initial": fs[0],
        "free_energy_final": fs[-1],
        "mass_drift": drift,
        "envelope_ok": envelope_ok,
        "monotone": bool(np.all(np.diff(fs) <= tol["monotonicity"]
                                * max(fs[0], 1.0) * tol_scale)),
    }
    if fs[0] > 0 and cfg.t_end > 1.0:
        window = (0.25 * cfg.t_end, 0.75 * cfg.t_end)
        try:
            summary["fitted_rate"] = flows.fit_decay_rate(trace, window)
            summary["rate_window"] = list(window)
        except ValueError:
            pass
    if not envelope_ok or drift > tol["mass_drift"] * tol_scale:
        raise ToleranceFailure("rfd: decay envelope or mass conservation "
                               "violated")
    return summary


def _exp_yamabe(params, out, tag, tol_scale):
    d = int(params.get("d", 3))
    if d < 3:
        raise UsageError("parameters: yamabe needs d >= 3")
    grid = _grid_from(params, d)
    m = (d - 2.0) / (d + 2.0)
    datum = params.get("datum", "separable")
    if datum == "separable":
        T = params.get("T", 1.0)
        v0 = profiles.yamabe_separable(T, 0.0, grid, d)
    elif datum == "power":
        sigma = params.get("sigma", 2.0 * d)
        v0 = radial.RadialProfile(
            grid, (1.0 + grid.nodes ** 2) ** (-sigma / 2.0), sigma)
    else:
        raise UsageError(f"parameters: unknown datum {datum!r}")
    cfg = _flow_cfg(params, m)
    trace = flows.run_yamabe(v0, cfg)
    csv = os.path.join(out, f"{tag}-trace.csv")
    trace.to_csv(csv)
    _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                 f"conformal-exponent flow d={d}",
                 [("1:(-$3)", "-H"), ("1:4", "J")])
    hs = np.array(trace.h_functional)
    tol = params["_tolerances"]
    monotone = bool(np.all(np.diff(hs) >= -tol["monotonicity"] * tol_scale
                           * max(abs(hs[0]), 1.0)))
    summary = {
        "extinction_time": trace.extinction_time,
        "h_initial": hs[0],
        "h_final": hs[-1],
        "h_monotone": monotone,
    }
    if not monotone:
        raise ToleranceFailure("yamabe: H lost monotonicity")
    return summary


def _exp_spectrum(params, out, tag, tol_scale):
    d = int(params.get("d", 3))
    m = params.get("m")
    if m is None:
        raise UsageError("parameters: spectrum needs the exponent m")
    grid = _grid_from(params, d)
    reports = [spectrum.spectral_gap_report(d, m, grid, constrained=c)
               for c in (False, True)]
    with open(os.path.join(out, f"{tag}-gaps.json"), "w") as fh:
        json.dump(reports, fh, indent=2)
    return {"unconstrained_lambda": reports[0]["lambda"],
            "unconstrained_ell": reports[0]["ell"],
            "constrained_lambda": reports[1]["lambda"],
            "constrained_ell": reports[1]["ell"]}


def _exp_deficit(params, out, tag, tol_scale):
    d = int(params.get("d", 3))
    grid = _grid_from(params, d)
    frame = functionals.DualityFrame(grid)
    rng = np.random.default_rng(params.get("_seed", 0))
    n_profiles = int(params.get("profiles", 10))
    r = grid.nodes
    rows = []
    tol = params["_tolerances"]
    worst = 0.0
    for i in range(n_profiles):
        a = math.exp(rng.uniform(math.log(1.2), math.log(8.0)))
        c = rng.uniform(0.5, 2.0)
        mix = rng.uniform(0.0, 0.4)
        vals = c * ((1 - mix) * (1.0 + r ** 2) ** (-(d - 2) / 2)
                    + mix * (a + r ** 2) ** (-(d - 2) / 2))
        f = radial.RadialProfile(grid, vals, float(d - 2))
        rep = functionals.duality_gap_report(f, frame)
        md = rep.metadata
        res = abs(md["identity_residual"]) / md["identity_scale"]
        worst = max(worst, res)
        rows.append({"index": i, "a": a, "c": c, "mix": mix,
                     "weak_deficit": rep.deficit,
                     "strong_side": md["strong_side"],
                     "ratio": rep.quotient,
                     "identity_residual": res,
                     "phi_slack": md["phi_slack"]})
    csv = os.path.join(out, f"{tag}-duality.csv")
    with open(csv, "w") as fh:
        cols = list(rows[0])
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) for k in cols) + "\n")
    _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                 f"duality gap family d={d}",
                 [("5:6", "weak vs strong deficit")])
    ratios = [row["ratio"] for row in rows if row["ratio"] is not None]
    if worst > tol["identity_residual"] * tol_scale:
        raise ToleranceFailure(f"deficit: identity residual {worst:.2e} "
                               "too large")
    return {"profiles": n_profiles, "max_ratio": max(ratios),
            "min_ratio": min(ratios), "worst_identity_residual": worst,
            "sharp_discrete": frame.sharp}


def _exp_sphere(params, out, tag, tol_scale):
    d = int(params.get("d", 3))
    p = params.get("p", 4.0)
    sp = dict(params["_defaults"]["sphere"])
    sp.update(params.get("sphere", {}))
    g = sphere.make_zonal_grid(d, int(sp["nodes"]))
    mode = params.get("mode", "eps-sweep")
    if mode == "eps-sweep":
        eps = np.geomspace(params.get("eps_min", 1e-3),
                           params.get("eps_max", 1e-2),
                           int(params.get("eps_points", 9)))
        rows = []
        for e in eps:
            rep = sphere.sphere_deficit(
                sphere.ZonalProfile(g, 1.0 + e * g.x), p)
            rows.append((e, rep["deficit"], rep["stability_functional"]))
        csv = os.path.join(out, f"{tag}-eps.csv")
        with open(csv, "w") as fh:
            fh.write("eps,deficit,stability_functional\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                     f"first-harmonic degeneracy d={d} p={p}",
                     [("1:2", "deficit"), ("1:3", "stability functional")])
        le = np.log(eps)
        slope_d = float(np.polyfit(le, np.log([r[1] for r in rows]), 1)[0])
        slope_s = float(np.polyfit(le, np.log([r[2] for r in rows]), 1)[0])
        return {"deficit_slope": slope_d, "stability_slope": slope_s,
                "quotients": [r[1] / r[2] for r in rows]}
    if mode == "flow":
        m = params.get("m")
        if m is None:
            raise UsageError("parameters: sphere flow needs m")
        amp = params.get("amplitude", 0.2)
        cfg = flows.FlowConfig(m=m, dt=sp["dt"], t_end=sp["t_end"],
                               record_every=int(sp["record_every"]))
        trace = sphere.sphere_flow(
            sphere.ZonalProfile(g, 1.0 + amp * g.x), p, m, cfg)
        csv = os.path.join(out, f"{tag}-flow.csv")
        trace.to_csv(csv)
        _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                     f"sphere flow d={d} p={p} m={m}",
                     [("1:3", "deficit")])
        ds = np.array(trace.free_energy)
        monotone = bool(np.all(np.diff(ds) <= 1e-12 * max(ds[0], 1.0)))
        if not monotone:
            raise ToleranceFailure("sphere: deficit lost monotonicity")
        return {"deficit_initial": ds[0], "deficit_final": ds[-1],
                "monotone": monotone}
    raise UsageError(f"parameters: unknown sphere mode {mode!r}")


def _exp_gaussian(params, out, tag, tol_scale):
    rng = np.random.default_rng(params.get("_seed", 0))
    n = int(params.get("n", params["_defaults"]["gaussian"]["n"]))
    grid = gaussian.make_gaussian_grid("standard", n)
    radii = params.get("radii", [0.5, 1.0, 2.0])
    n_bumps = int(params.get("bumps", 5))
    rows = []
    for R in radii:
        for i in range(n_bumps):
            width = rng.uniform(0.4, 1.0) * R
            power = rng.integers(2, 5)
            vals = np.maximum(1.0 - (grid.xs / width) ** 2, 0.0) ** power
            vals /= grid.lp_norm(vals, 2.0)
            u = gaussian.GaussianProfile(grid, vals)
            rep = gaussian.compact_lsi_check(u, R)
            rows.append({"R": R, "bump": i, "width": width,
                         "slack": rep["slack"], "status": rep["status"]})
    csv = os.path.join(out, f"{tag}-bumps.csv")
    with open(csv, "w") as fh:
        cols = list(rows[0])
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) for k in cols) + "\n")
    _plot_script(os.path.join(out, f"{tag}.gp"), os.path.basename(csv),
                 "compact-support improved constant suite",
                 [("1:4", "slack")])
    failures = [row for row in rows if row["status"] != "pass"]
    if failures:
        raise ToleranceFailure(f"gaussian: {len(failures)} bumps violated "
                               "the improved inequality")
    return {"cases": len(rows), "all_pass": True,
            "min_slack": min(row["slack"] for row in rows)}


_EXPERIMENTS = {
    "rfd": _exp_rfd,
    "yamabe": _exp_yamabe,
    "spectrum": _exp_spectrum,
    "deficit": _exp_deficit,
    "sphere": _exp_sphere,
    "gaussian": _exp_gaussian,
}


def _run_single(name, params, out, tag, tol_scale):
    if name not in _EXPERIMENTS:
        raise UsageError(f"experiment: unknown experiment {name!r} "
                         f"(choose from {sorted(_EXPERIMENTS)})")
    summary = _EXPERIMENTS[name](params, out, tag, tol_scale)
    d = int(params.get("d", 3))
    constants = {"d": d}
    if d >= 3:
        constants["S_d_closed_form"] = functionals.sobolev_constant_exact(d)
    summary_doc = {
        "experiment": name,
        "parameters": {k: v for k, v in params.items()
                       if not k.startswith("_")},
        "seed": params.get("_seed", 0),
        "constants": constants,
        "defaults_version": params["_defaults"]["defaults_version"],
        "results": summary,
    }
    with open(os.path.join(out, f"{tag}-summary.json"), "w") as fh:
        json.dump(summary_doc, fh, indent=2, sort_keys=True)
    return summary_doc


def run(config: dict, out: str, seed: int | None, tol_scale: float) -> int:
    names = config.get("experiment")
    if names is None:
        raise UsageError("experiment: missing top-level 'experiment' field")
    suite = config.get("suite", [])
    os.makedirs(out, exist_ok=True)
    if names == "suite":
        if not suite:
            raise UsageError("suite: experiment 'suite' needs a [[suite]] "
                             "list")
        jobs = [(entry["experiment"], entry) for entry in suite]
    else:
        jobs = [(names, config)]
    for i, (name, entry) in enumerate(jobs):
        params = _merged(entry)
        params["_seed"] = seed if seed is not None else entry.get("seed", 0)
        tag = entry.get("tag", f"{name}" if names != "suite" else
                        f"{i:02d}-{name}")
        _run_single(name, params, out, tag, tol_scale)
    return 0


def _sweep_point(args):
    name, params, out, tag, tol_scale = args
    try:
        doc = _run_single(name, params, out, tag, tol_scale)
        flat = {k: v for k, v in doc["results"].items()
                if isinstance(v, (int, float, bool, str)) or v is None}
        return {"error": "", **flat}
    except (ToleranceFailure, UsageError, ValueError, RuntimeError) as exc:
        return {"error": str(exc).replace(",", ";")}


def sweep(config: dict, out: str, seed: int | None, tol_scale: float) -> int:
    name = config.get("experiment")
    lattice = config.get("lattice")
    if not lattice:
        raise UsageError("lattice: sweep config needs a [lattice] table of "
                         "lists")
    keys = sorted(lattice)
    for k in keys:
        if not isinstance(lattice[k], list) or not lattice[k]:
            raise UsageError(f"lattice: field {k!r} must be a non-empty list")
    os.makedirs(out, exist_ok=True)
    points = list(itertools.product(*(lattice[k] for k in keys)))
    jobs = []
    for idx, values in enumerate(points):
        entry = dict(config)
        entry["parameters"] = dict(config.get("parameters", {}))
        for k, v in zip(keys, values):
            entry["parameters"][k] = v
        params = _merged(entry)
        params["_seed"] = seed if seed is not None else config.get("seed", 0)
        jobs.append((name, params, out, f"point{idx:04d}", tol_scale))
    workers = int(os.environ.get("INEQLAB_WORKERS",
                                 min(4, os.cpu_count() or 1)))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]
    cols = keys + sorted({k for row in results for k in row})
    csv = os.path.join(out, "sweep.csv")
    with open(csv, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for values, row in zip(points, results):
            cells = {**dict(zip(keys, values)), **row}
            fh.write(",".join(_fmt(cells.get(k, "")) for k in cols) + "\n")
    if any(row["error"] for row in results):
        raise ToleranceFailure("sweep: one or more lattice points failed")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ineqlab",
        description="deficits, entropy flows and stability diagnostics for "
                    "sharp functional inequalities")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("run", "sweep"):
        sp = sub.add_parser(cmd)
        sp.add_argument("config", help="TOML (or JSON) experiment file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--tol-scale", type=float, default=1.0,
                        help="scale all tolerances by this factor")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        handler = run if args.command == "run" else sweep
        return handler(config, args.out, args.seed, args.tol_scale)
    except UsageError as exc:
        print(f"ineqlab: {exc}", file=sys.stderr)
        return 1
    except ToleranceFailure as exc:
        print(f"ineqlab: FAILED: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
