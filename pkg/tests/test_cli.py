import math
from pathlib import Path

import numpy as np
import pytest

from qparam.cli import emit_figure_data, main, read_csv, run_scenario, scan_bands_cmd, write_csv
from qparam.config import FigureSpec, config_from_dict, load_config

CONFIGS = Path(__file__).parent.parent / "configs"


def column(path, name):
    _, cols, data = read_csv(path)
    return data[:, cols.index(name)]


def test_csv_round_trip_and_units(tmp_path):
    vals = [[0.1, 1 / 3, 1e-300], [math.pi, -2.5e17, 7.0]]
    path = write_csv(tmp_path / "x.csv", ["a", "b", "c"], vals, {"a": "time", "b": "energy", "c": "dimensionless"},
                     {"note": "demo"})
    meta, cols, data = read_csv(path)
    assert cols == ["a", "b", "c"]
    assert meta["note"] == "demo"
    assert "a=time" in meta["units"]
    np.testing.assert_array_equal(data, np.array(vals))


def test_null_scenario(tmp_path):
    cfg = load_config(CONFIGS / "null.toml")
    out = run_scenario(cfg, tmp_path)
    assert np.all(column(out / "gamma.csv", "gamma") == 0.0)
    for f in sorted((out / "distributions").glob("*.csv")):
        p = column(f, "P")
        assert p[0] == 1.0 and np.all(p[1:] == 0.0)


def test_null_scenario_squeezed(tmp_path):
    raw = {
        "profile": {"omega0": 1.0, "tau": 2.0, "n_periods": 5, "segments": [{"duration": 2.0, "delta": 0.0}]},
        "scenario": {"regime": "squeezed", "m_list": [0, 3]},
        "perturbation": {"rho0_offset": 0.0},
    }
    out = run_scenario(config_from_dict(raw), tmp_path)
    assert column(out / "gamma.csv", "gamma") == pytest.approx(np.ones(6), abs=1e-14)
    for f in sorted((out / "distributions").glob("m03_*.csv")):
        p = column(f, "P")
        assert p[3] == pytest.approx(1.0, abs=1e-12)


def test_every_output_declares_units(tmp_path):
    cfg = load_config(CONFIGS / "null.toml")
    out = run_scenario(cfg, tmp_path / "s")
    scan_bands_cmd(cfg, tmp_path / "b")
    emit_figure_data("fig2", FigureSpec(), tmp_path / "f")
    files = list(tmp_path.rglob("*.csv"))
    assert len(files) > 5
    for f in files:
        meta, cols, _ = read_csv(f)
        units = dict(item.split("=") for item in meta["units"].split("; "))
        assert set(cols) <= set(units)


def test_displaced_inband_moments(tmp_path):
    cfg = load_config(CONFIGS / "displaced_inband.toml")
    out = run_scenario(cfg, tmp_path, threads=2)
    _, cols, data = read_csv(out / "moments.csv")
    gamma = data[:, cols.index("gamma")]
    ratio = data[:, cols.index("mean_over_ecl")]
    assert np.all(np.diff(gamma[data[:, 0] == 0]) > 0)
    last = gamma == gamma.max()
    assert ratio[last] == pytest.approx(1.0, abs=2e-3)


def test_squeezed_inband_moments(tmp_path):
    cfg = load_config(CONFIGS / "squeezed_inband.toml")
    out = run_scenario(cfg, tmp_path, threads=0)
    _, cols, data = read_csv(out / "moments.csv")
    gamma = data[:, cols.index("gamma")]
    last = gamma == gamma.max()
    m = data[last, 0]
    assert data[last, cols.index("mean_over_ecl")] == pytest.approx(m + 0.5, rel=1e-3)
    assert data[last, cols.index("stddev_over_ecl")] == pytest.approx(np.sqrt(((m + 1) ** 2 - m) / 2), rel=1e-3)


def test_figure_asymptotes(tmp_path):
    spec = FigureSpec(m_max=5, energy_min=2.0, energy_max=1e4, n_energy=5)
    path = emit_figure_data("fig2", spec, tmp_path)
    asym = column(path, "asymptote")
    assert asym[0] == pytest.approx(0.7071068, abs=1e-7)
    assert asym[3] == pytest.approx(2.5495098, abs=1e-7)
    _, cols, data = read_csv(emit_figure_data("fig1b", spec, tmp_path))
    rows = data[(data[:, 0] == 2)]
    top = rows[np.argmax(rows[:, cols.index("e_cl_over_omega")])]
    assert top[cols.index("mean_over_ecl")] == pytest.approx(2.5, rel=1e-3)
    _, cols, data = read_csv(emit_figure_data("fig1a", spec, tmp_path))
    top = data[data[:, cols.index("gamma")] == data[:, cols.index("gamma")].max()]
    assert top[:, cols.index("mean_over_ecl")] == pytest.approx(1.0, rel=1e-2)


def test_band_scan_csv(tmp_path):
    cfg = load_config(CONFIGS / "bands_square.toml")
    path = scan_bands_cmd(cfg, tmp_path)
    flags = column(path, "in_band")
    assert flags.any() and not flags.all()
    assert (np.diff(flags) != 0).sum() >= 6
    raw = {
        "profile": {"omega0": 1.0, "tau": 1.0, "segments": [{"duration": 1.0, "delta": 0.0}]},
        "scenario": {"regime": "displaced", "m_list": [0]},
        "bands": {"n_points": 300},
    }
    flat = scan_bands_cmd(config_from_dict(raw), tmp_path / "flat")
    assert not column(flat, "in_band").any()


def test_exit_codes(tmp_path, capsys):
    assert main(["selftest", "--size", "4"]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text('[scenario]\nregime = "displaced"\nm_list = [0]\n')
    assert main(["spectrum", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "profile" in capsys.readouterr().err
    # squeezed run sampled far past the distribution cap
    text = (CONFIGS / "squeezed_inband.toml").read_text()
    text = text.replace("n_periods = 20", "n_periods = 40").replace("stride = 6.0", "stride = 12.0")
    late = tmp_path / "late.toml"
    late.write_text(text)
    assert main(["spectrum", "--config", str(late), "--out", str(tmp_path / "late")]) == 3
    assert "n_max" in capsys.readouterr().err


@pytest.mark.parametrize("cmd", ["bands", "evolve", "spectrum", "figures"])
def test_commands_deterministic(tmp_path, cmd):
    cfg = str(CONFIGS / "displaced_inband.toml")
    for name in ("a", "b"):
        assert main([cmd, "--config", cfg, "--out", str(tmp_path / name), "--threads", "2"]) == 0
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*.csv"))
    assert files_a == files_b and files_a
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
