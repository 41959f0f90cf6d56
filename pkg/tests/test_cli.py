import csv
import io
import json
import shutil
import subprocess

import pytest

from fgflab.cli import DEFAULTS, SCHEMA, RunConfig, UsageError, main, resolve


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def provenance(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))


def test_kernel_table_has_grid_rows(capsys):
    code, out, _ = run(capsys, "kernel", "--model", "circle", "--s", "1", "--m", "1", "--grid", "256")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["r", "value", "method", "error_estimate"]
    assert len(rows) == 257
    assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(0.5)
    prov = provenance(out)
    assert prov["subcommand"] == "kernel" and prov["s"] == "1.0" and "version" in prov


def test_kernel_is_deterministic(capsys):
    a = run(capsys, "kernel", "--model", "sphere2", "--s", "2", "--m", "1", "--grid", "16")[1]
    b = run(capsys, "kernel", "--model", "sphere2", "--s", "2", "--m", "1", "--grid", "16")[1]
    assert a == b


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("# kernel settings\nsubcommand = kernel\nmodel = sphere3\ns = 2.5\ngrid = 8\n")
    code, out, _ = run(capsys, "kernel", "--config", str(cfg), "--grid", "5")
    assert code == 0
    prov = provenance(out)
    assert prov["model"] == "sphere3" and prov["s"] == "2.5" and prov["grid"] == "5"
    assert len(data_rows(out)) == 6


def test_config_rejections(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("subcommand = kernel\nseed = 3\n")
    code, _, err = run(capsys, "kernel", "--config", str(bad))
    assert code == 2 and json.loads(err)["error"]
    other = tmp_path / "other.cfg"
    other.write_text("subcommand = gap\n")
    assert run(capsys, "kernel", "--config", str(other))[0] == 2


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["kernel", "--m", "-1"],
    ["kernel", "--m", "0"],
    ["gap", "--mesh", "100"],
    ["geometry", "--n", "50"],
    ["geometry", "--s", "0.5"],
    ["kernel", "--model", "torus"],
    ["verify", "--suite", "nonsense"],
])
def test_usage_errors_exit_2_with_json(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in json.loads(err.strip().splitlines()[-1])


def test_run_config_text_round_trip():
    cfg = resolve(["gap", "--n", "200", "--relaxation"])
    again = RunConfig.from_text(cfg.to_text())
    assert again.subcommand == "gap"
    assert again.values == {k: v for k, v in cfg.values.items() if v is not None}
    with pytest.raises(UsageError):
        RunConfig.from_text("s = 1\n")


def test_schema_covers_defaults():
    for sub, vals in DEFAULTS.items():
        assert set(vals) <= set(SCHEMA[sub])


def test_sample_json(tmp_path, capsys):
    out = tmp_path / "f.json"
    assert run(capsys, "sample", "--ell", "17", "--seed", "3", "--out", str(out))[0] == 0
    d = json.loads(out.read_text())
    assert d["config"]["seed"] == 3
    assert len(d["field"]["xi"]) == 17


def test_noise_dist_and_dudley(tmp_path, capsys):
    code, out, _ = run(capsys, "noise-dist", "--grid", "32")
    assert code == 0 and data_rows(out)[0] == ["r", "rho"]
    code, out, _ = run(capsys, "noise-dist", "--grid", "32", "--alpha", "0.25")
    assert code == 0 and data_rows(out)[0] == ["alpha", "max_ratio"]
    rep = tmp_path / "d.json"
    code, out, _ = run(capsys, "dudley", "--grid", "256", "--n-eps", "10", "--report", str(rep))
    assert code == 0
    assert data_rows(out)[0] == ["epsilon", "N", "sqrt_log_N"]
    assert "dudley_bound" in json.loads(rep.read_text())


def test_geometry_json(capsys):
    code, out, _ = run(capsys, "geometry", "--n", "200", "--grid", "256", "--ell", "129", "--threads", "2")
    assert code == 0
    d = json.loads(out)
    names = {e["estimator"] for e in d["estimators"]}
    assert {"volume", "length", "distance"} <= names
    assert all("ci99" in e and "se" in e for e in d["estimators"])


def test_gap_csv(capsys):
    code, out, err = run(capsys, "gap", "--n", "100", "--mesh", "64", "--ell", "33")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["lambda1", "sup_abs_h", "ratio", "pass"] and len(rows) == 101
    assert json.loads(err)["inequality_holds"]


def test_diffusion_outputs(tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, out, _ = run(capsys, "diffusion", "--n", "200", "--t", "0.05", "--dt", "1e-3", "--ell", "9",
                       "--bins", "8", "--report", str(rep))
    assert code in (0, 1)
    assert data_rows(out)[0] == ["bin_lo", "bin_hi", "empirical", "stationary"]
    d = json.loads(rep.read_text())
    assert {"ks", "ess"} <= set(d)


def test_verify_single_suite(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, err = run(capsys, "verify", "--suite", "4", "--out", str(out))
    assert code == 0
    d = json.loads(out.read_text())
    assert d["criteria"][0]["passed"] and "[PASS]" in err


@pytest.mark.skipif(shutil.which("fgflab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["fgflab", "kernel", "--grid", "4"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(data_rows(res.stdout)) == 5
