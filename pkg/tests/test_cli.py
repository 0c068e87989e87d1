import json
import os

import pytest

from ineqlab import cli


SPECTRUM_CFG = """\
experiment = "spectrum"
seed = 3
[parameters]
d = 3
m = 0.8
[parameters.grid]
n = 512
"""

SWEEP_CFG = """\
experiment = "spectrum"
seed = 3
[parameters.grid]
n = 512
[lattice]
d = [1, 3]
m = [0.75, 0.8]
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_bytes_map(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


def test_run_spectrum_and_summary(tmp_path):
    cfg = write(tmp_path, "cfg.toml", SPECTRUM_CFG)
    out = str(tmp_path / "out")
    assert cli.main(["run", cfg, "--out", out]) == 0
    with open(os.path.join(out, "spectrum-summary.json")) as fh:
        doc = json.load(fh)
    assert doc["experiment"] == "spectrum"
    # every summary embeds the sharp-constant map used
    assert doc["constants"]["S_d_closed_form"] == pytest.approx(5.4779,
                                                                rel=1e-4)
    assert doc["results"]["unconstrained_lambda"] == pytest.approx(4.0,
                                                                   rel=2e-2)


def test_json_config_fallback(tmp_path):
    cfg = write(tmp_path, "cfg.json", json.dumps({
        "experiment": "spectrum", "seed": 3,
        "parameters": {"d": 3, "m": 0.8, "grid": {"n": 512}}}))
    out = str(tmp_path / "out")
    assert cli.main(["run", cfg, "--out", out]) == 0


def test_usage_errors(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.toml"),
                     "--out", str(tmp_path)]) == 1
    cfg = write(tmp_path, "bad.toml", 'experiment = "spectrum"\n')
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "m" in err      # the diagnostic names the offending field
    cfg2 = write(tmp_path, "unknown.toml",
                 'experiment = "frobnicate"\n[parameters]\nd = 3\n')
    assert cli.main(["run", cfg2, "--out", str(tmp_path / "o2")]) == 1


def test_run_determinism(tmp_path):
    cfg = write(tmp_path, "cfg.toml", SPECTRUM_CFG)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["run", cfg, "--out", a]) == 0
    assert cli.main(["run", cfg, "--out", b]) == 0
    assert read_bytes_map(a) == read_bytes_map(b)


def test_sweep_row_order_and_error_column(tmp_path):
    cfg = write(tmp_path, "sweep.toml", SWEEP_CFG.replace("0.75", "0.6"))
    out = str(tmp_path / "sw")
    # m=0.6 is invalid at d=3: per-row error, overall exit 2
    assert cli.main(["sweep", cfg, "--out", out]) == 2
    lines = open(os.path.join(out, "sweep.csv")).read().splitlines()
    head = lines[0].split(",")
    rows = [dict(zip(head, ln.split(","))) for ln in lines[1:]]
    assert [(r["d"], r["m"]) for r in rows] == \
        [("1", "0.6"), ("1", "0.8"), ("3", "0.6"), ("3", "0.8")]
    bad = [r for r in rows if r["error"]]
    assert len(bad) == 1 and bad[0]["d"] == "3" and bad[0]["m"] == "0.6"


def test_single_point_lattice_matches_run(tmp_path):
    run_cfg = write(tmp_path, "run.toml", SPECTRUM_CFG)
    sweep_cfg = write(tmp_path, "sweep1.toml", SPECTRUM_CFG.replace(
        "[parameters]\nd = 3\nm = 0.8\n",
        "[lattice]\nd = [3]\nm = [0.8]\n"))
    out_r, out_s = str(tmp_path / "r"), str(tmp_path / "s")
    assert cli.main(["run", run_cfg, "--out", out_r]) == 0
    assert cli.main(["sweep", sweep_cfg, "--out", out_s]) == 0
    with open(os.path.join(out_r, "spectrum-summary.json")) as fh:
        run_doc = json.load(fh)
    with open(os.path.join(out_s, "point0000-summary.json")) as fh:
        sweep_doc = json.load(fh)
    assert run_doc["results"] == sweep_doc["results"]


def test_sweep_workers_env_deterministic(tmp_path, monkeypatch):
    cfg = write(tmp_path, "sweep.toml", SWEEP_CFG)
    outs = []
    for workers, sub in (("1", "w1"), ("4", "w4")):
        monkeypatch.setenv("INEQLAB_WORKERS", workers)
        out = str(tmp_path / sub)
        assert cli.main(["sweep", cfg, "--out", out]) == 0
        outs.append(open(os.path.join(out, "sweep.csv")).read())
    assert outs[0] == outs[1]


def test_plot_script_emitted(tmp_path):
    cfg = write(tmp_path, "cfg.toml", """\
experiment = "sphere"
[parameters]
d = 3
p = 4.0
mode = "eps-sweep"
""")
    out = str(tmp_path / "out")
    assert cli.main(["run", cfg, "--out", out]) == 0
    script = open(os.path.join(out, "sphere.gp")).read()
    assert 'set datafile separator ","' in script
    assert "plot" in script
