import csv
import json

import numpy as np
import pytest

from strip_bloch.cli import emit_plot_data, main

DEFECT = {"L": 1, "R": 0, "rows": [[-1.5]]}


def write_config(tmp_path, name="run.json", **cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run(job, cfg_path, out, *extra):
    return main([job, "--config", str(cfg_path), "--out", str(out), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bands_job(tmp_path):
    cfg = write_config(tmp_path, potential=DEFECT, params={"M": 32})
    out = tmp_path / "out"
    assert run("bands", cfg, out) == 0
    rows = read_csv(out / "bands.csv")
    assert len(rows) == 32
    for r in rows:
        k = float(r["k"])
        assert abs(float(r["E"]) - (2 * np.cos(k) - 2.5)) < 1e-10
        assert r["embedded"] == "0" and r["band_index"] == "0"
    assert read_csv(out / "singular_points.csv") == []
    dat = (out / "bands.dat").read_text().splitlines()
    assert dat[0].startswith("# k band_index E")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["derived"]["k_grid_size"] == 32
    assert set(manifest["outputs"]) == {"bands.csv", "singular_points.csv", "bands.dat"}


def test_bands_dat_has_one_block_per_band(tmp_path):
    pot = {"L": 2, "R": 0, "rows": [[-1.5, -1.5]]}
    cfg = write_config(tmp_path, potential=pot, params={"M": 32})
    out = tmp_path / "out"
    assert run("bands", cfg, out) == 0
    bands = {r["band_index"] for r in read_csv(out / "bands.csv")}
    blocks = (out / "bands.dat").read_text().strip().split("\n\n")
    assert len(bands) >= 2 and len(blocks) == len(bands)
    assert any(r["reason"] == "crossing" for r in read_csv(out / "singular_points.csv"))


def test_empty_band_set_warns(tmp_path, caplog):
    cfg = write_config(tmp_path, potential={"L": 1, "R": 0, "rows": [[0.0]]}, params={"M": 8})
    out = tmp_path / "out"
    assert run("bands", cfg, out) == 0
    assert (out / "bands.dat").read_text().strip().startswith("#")
    manifest = json.loads((out / "manifest.json").read_text())
    assert any("empty" in w for w in manifest["warnings"])


def test_malformed_potential_names_the_row(tmp_path, caplog):
    pot = {"L": 2, "R": 1, "rows": [[0, 1], [2], [3, 4]]}
    cfg = write_config(tmp_path, potential=pot, params={"M": 8})
    assert run("bands", cfg, tmp_path / "out") == 2
    assert "row 1" in caplog.text


def test_potential_from_file_and_missing_file(tmp_path):
    (tmp_path / "v.json").write_text(json.dumps(DEFECT))
    cfg = write_config(tmp_path, potential="v.json", params={"k_values": [0.5]})
    out = tmp_path / "out"
    assert run("eigenmodes", cfg, out) == 0
    rows = read_csv(out / "eigenmodes.csv")
    assert len(rows) == 1 and abs(float(rows[0]["E"]) - (2 * np.cos(0.5) - 2.5)) < 1e-10
    prof = json.loads((out / "eigenmodes.json").read_text())
    assert abs(sum(prof[0]["column_mass"]) - 1) < 1e-12
    cfg = write_config(tmp_path, "b.json", potential="nope.json", params={"k_values": [0.5]})
    assert run("eigenmodes", cfg, out) == 2


@pytest.mark.parametrize(
    "cfg",
    [
        {"potential": DEFECT, "params": {}},
        {"potential": DEFECT, "params": {"M": 8, "colour": 1}},
        {"potential": DEFECT, "params": {"M": 0}},
        {"potential": DEFECT, "params": {"M": 8}, "tolerances": {"tol": -1}},
        {"potential": DEFECT, "params": {"M": 8}, "job": "evolve"},
        {"params": {"M": 8}},
    ],
)
def test_invalid_configs_exit_2(tmp_path, cfg):
    assert run("bands", write_config(tmp_path, **cfg), tmp_path / "out") == 2


def test_unreadable_config_exits_1(tmp_path):
    assert run("bands", tmp_path / "missing.json", tmp_path / "out") == 1


def test_invalid_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run("bands", path, tmp_path / "out") == 2


def test_evolve_box_too_small_exits_3(tmp_path):
    params = {"packet": "surface", "M": 32, "k0": np.pi / 2, "half_width": 0.6, "T": 20, "n_steps": 20, "Nx": 8}
    cfg = write_config(tmp_path, potential=DEFECT, params=params)
    out = tmp_path / "out"
    assert run("evolve", cfg, out) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert "BoundaryContamination" in manifest["error"]


def test_evolve_gaussian(tmp_path):
    params = {"packet": "gaussian", "k0": [0.0, 1.0], "sigma": 4.0, "Nx": 40, "Ny": 80, "T": 10, "n_steps": 20}
    cfg = write_config(tmp_path, potential={"L": 1, "R": 0, "rows": [[0.0]]}, params=params)
    out = tmp_path / "out"
    assert run("evolve", cfg, out) == 0
    slopes = json.loads((out / "slopes.json").read_text())
    assert abs(slopes["measured"]["vel_Y"] / (-2 * np.sin(1.0)) - 1) < 0.02
    header = (out / "transport.csv").read_text().splitlines()[0]
    assert header == "t,mean_X,mean_Y,var_X,var_Y,norm,boundary_mass,chi_mass_v0.5,chi_mass_v1"
    assert (out / "transport.dat").exists()


def test_scatter_job(tmp_path):
    params = {"a": 0.5, "center_k": np.pi / 2, "width": 1.0, "T_list": [5, 10], "cook_times": [0, 5]}
    cfg = write_config(tmp_path, potential=DEFECT, params=params)
    out = tmp_path / "out"
    assert run("scatter", cfg, out) == 0
    rep = json.loads((out / "scattering_report.json").read_text())
    assert set(rep["r"]) == {"x", "y"} and len(rep["r"]["y"]) == 2
    assert set(rep["cauchy"]) == {"5", "10"}
    assert rep["omega_norm_drift"] < 1e-10


def test_validate_is_deterministic(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, potential=DEFECT, seed=7, params={"n_transfer": 200, "n_k": 2, "M": 32})
    assert run("validate", cfg, tmp_path / "a") == 0
    monkeypatch.setenv("STRIP_BLOCH_THREADS", "2")
    assert run("validate", cfg, tmp_path / "b") == 0
    a = (tmp_path / "a" / "validation.json").read_bytes()
    assert a == (tmp_path / "b" / "validation.json").read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["threads"] == 2


def test_threaded_bands_match_serial(tmp_path):
    pot = {"L": 2, "R": 1, "rows": [[0.3, -1.2], [-2.0, 0.5], [1.1, 0.0]]}
    cfg = write_config(tmp_path, potential=pot, params={"M": 32, "seed_stride": 4})
    assert run("bands", cfg, tmp_path / "a") == 0
    assert run("bands", cfg, tmp_path / "b", "--threads", "3") == 0
    for name in ("bands.csv", "singular_points.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_plot_data_command(tmp_path):
    assert main(["plot-data", "--out", str(tmp_path)]) == 1
    (tmp_path / "transport.csv").write_text("t,mean_X\n0.0,1.5\n")
    written = emit_plot_data(tmp_path)
    assert [p.name for p in written] == ["transport.dat"]
    assert (tmp_path / "transport.dat").read_text() == "# t mean_X\n0.0 1.5\n"
