import json

import numpy as np
import pytest
import yaml

from weylstab import load_matrix
from weylstab.lab.cli import main
from weylstab.lab.sweeps import read_csv


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "h.yaml"
    p.write_text(yaml.safe_dump({"name": "h", "mode": "hausdorff", "symbol": "cos_xi_plus_cos_x",
                                 "field": {"family": "sine", "A": 1.0}, "grid": {"L": 64, "N": 1024},
                                 "sweep": {"delta": [0.2, 0.1, 0.05]}, "out": str(tmp_path / "out")}))
    return p


def test_quantize_and_grid_override(config, tmp_path, capsys):
    assert main(["quantize", "--config", str(config), "--grid", "16,128", "--csv"]) == 0
    M, meta = load_matrix(tmp_path / "out" / "h_matrix.bin")
    assert M.shape == (128, 128) and meta["L"] == 16.0
    assert (tmp_path / "out" / "h_matrix.csv").exists()
    assert "h_matrix.bin" in capsys.readouterr().out


def test_spectrum(config, tmp_path, capsys):
    assert main(["spectrum", "--config", str(config), "--grid", "16,128", "--delta", "0.1"]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    ev = np.loadtxt(tmp_path / "out" / "h_spectrum.csv", skiprows=1)
    assert summary["edge_plus"] == pytest.approx(ev[-1]) and ev.size == 128


def test_sweep_fit_and_plot(config, tmp_path, capsys):
    out = tmp_path / "alt"
    assert main(["sweep", "--config", str(config), "--mode", "hausdorff", "--grid", "16,128",
                 "--out", str(out), "--parallel", "2"]) == 0
    csv = out / "h.csv"
    assert len(read_csv(csv)[1]) == 4
    capsys.readouterr()
    assert main(["fit", str(csv), "--y", "hausdorff_full", "--out", str(out / "refit.csv")]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["points"] == 3 and (out / "refit.csv").exists()
    assert main(["plot", str(csv), "--y", "hausdorff_full", "--fit", "--out", str(out / "p.svg")]) == 0
    assert (out / "p.svg").read_text().startswith("<?xml")


def test_config_errors_exit_2(tmp_path, config, capsys):
    assert main(["sweep", "--config", str(tmp_path / "nope.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("mode: hausdorff\nsweep: {delta: [2.0]}\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert main(["sweep", "--config", str(config), "--mode", "edges"]) == 2
    assert main(["sweep", "--config", str(config), "--grid", "16,100"]) == 2
    assert "config error" in capsys.readouterr().err


def test_too_few_points_is_a_config_error(tmp_path):
    p = tmp_path / "two.yaml"
    p.write_text(yaml.safe_dump({"mode": "gapwatch", "grid": {"L": 16, "N": 128},
                                 "sweep": {"delta": [0.2, 0.1]}, "out": str(tmp_path)}))
    assert main(["sweep", "--config", str(p)]) == 2


def test_numerical_failure_exits_3(tmp_path, monkeypatch, config):
    from weylstab import EigSolveFailure
    from weylstab.lab import cli

    def boom(*a, **k):
        raise EigSolveFailure("did not converge")

    monkeypatch.setattr(cli, "spectrum", boom)
    assert main(["spectrum", "--config", str(config), "--grid", "16,128"]) == 3


def test_bad_seed_is_rejected(config):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", str(config), "--seed", "-4"])
    assert exc.value.code == 2
