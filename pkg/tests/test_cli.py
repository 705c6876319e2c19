import json
import math

import numpy as np
import pytest

from pntomo.cli import main


def write_config(path, **overrides):
    cfg = {
        "state": {"kind": "coherent", "beta": [1.0, 0.0]},
        "dim": 15,
        "grid": {"r_max": 3.5, "n_r": 20, "n_theta": 16},
        "eta": 1.0,
        "s": "auto",
        "n_max": 10,
        "shots": "exact",
        "seed": 0,
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_gen_state_coherent_p0(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "rho.json"
    assert main(["gen-state", "--config", str(cfg), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["dim"] == 15
    assert obj["re"][0][0] == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert "leakage" in capsys.readouterr().out


def test_gen_state_thermal_p0(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", state={"kind": "thermal", "nbar": 0.5}, dim=40)
    out = tmp_path / "rho.json"
    assert main(["gen-state", "--config", str(cfg), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["re"][0][0] == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_gen_state_fock_diag(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", state={"kind": "fock", "n": 2}, dim=6, n_max=5)
    out = tmp_path / "rho.json"
    assert main(["gen-state", "--config", str(cfg), "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert np.asarray(obj["re"]).diagonal().tolist() == [0, 0, 1, 0, 0, 0]


def test_simulate_vacuum_exact_row(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", state={"kind": "fock", "n": 0}, dim=8, n_max=5)
    out = tmp_path / "table.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert (tmp_path / "table.meta.json").exists()
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha_re,alpha_im,n,p"


def test_simulate_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", shots=3000, seed=5)
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    meta_a = (tmp_path / "a.meta.json").read_text()
    meta_b = (tmp_path / "b.meta.json").read_text()
    assert meta_a == meta_b


def test_full_pipeline_roundtrip(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "cfg.json", grid={"r_max": 3.5, "n_r": 32, "n_theta": 32}, n_max=12
    )
    rho_file = tmp_path / "rho.json"
    table = tmp_path / "table.csv"
    report = tmp_path / "report.json"
    assert main(["gen-state", "--config", str(cfg), "--out", str(rho_file)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(table)]) == 0
    assert main(["reconstruct", "--config", str(cfg), "--out", str(report), str(table)]) == 0
    obj = json.loads(report.read_text())
    # eta=1 auto policy -> midpoint of (-1, 0]
    assert obj["params"]["s"] == pytest.approx(-0.5, abs=1e-12)
    assert obj["raw_trace"] == pytest.approx(1.0, abs=1e-2)
    capsys.readouterr()
    assert main(["compare", str(rho_file), str(report)]) == 0
    out = capsys.readouterr().out
    fid = float(out.splitlines()[0].split()[1])
    assert fid > 0.999


def test_compare_trivial_cases(tmp_path, capsys):
    cfg0 = write_config(tmp_path / "c0.json", state={"kind": "fock", "n": 0}, dim=10, n_max=5)
    cfg1 = write_config(tmp_path / "c1.json", state={"kind": "fock", "n": 1}, dim=10, n_max=5)
    f0, f1 = tmp_path / "rho0.json", tmp_path / "rho1.json"
    main(["gen-state", "--config", str(cfg0), "--out", str(f0)])
    main(["gen-state", "--config", str(cfg1), "--out", str(f1)])
    capsys.readouterr()
    main(["compare", str(f0), str(f0)])
    assert float(capsys.readouterr().out.splitlines()[0].split()[1]) == pytest.approx(1.0)
    main(["compare", str(f0), str(f1)])
    assert float(capsys.readouterr().out.splitlines()[0].split()[1]) == pytest.approx(0.0, abs=1e-12)


def test_compare_coherent_overlap(tmp_path, capsys):
    cfg0 = write_config(tmp_path / "c0.json", state={"kind": "coherent", "beta": [0.0, 0.0]}, dim=20)
    cfg1 = write_config(tmp_path / "c1.json", state={"kind": "coherent", "beta": [1.0, 0.0]}, dim=20)
    f0, f1 = tmp_path / "rho0.json", tmp_path / "rho1.json"
    main(["gen-state", "--config", str(cfg0), "--out", str(f0)])
    main(["gen-state", "--config", str(cfg1), "--out", str(f1)])
    capsys.readouterr()
    main(["compare", str(f0), str(f1)])
    fid = float(capsys.readouterr().out.splitlines()[0].split()[1])
    assert fid == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_qscan_vacuum_q(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "cfg.json",
        state={"kind": "fock", "n": 0},
        dim=12,
        grid={"r_max": 4.5, "n_r": 24, "n_theta": 16},
    )
    rho_file = tmp_path / "rho.json"
    scan = tmp_path / "scan.csv"
    main(["gen-state", "--config", str(cfg), "--out", str(rho_file)])
    assert main(["qscan", "--config", str(cfg), "--s", "-1", "--out", str(scan), str(rho_file)]) == 0
    out = capsys.readouterr().out
    norm = float(out.rsplit("normalization=", 1)[1])
    assert norm == pytest.approx(1.0, abs=1e-6)
    rows = scan.read_text().splitlines()[1:]
    re0, im0, val = map(float, rows[0].split(","))
    assert val == pytest.approx(math.exp(-(re0**2 + im0**2)), abs=1e-10)


def test_validation_exit_codes(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", dim=0)
    assert main(["gen-state", "--config", str(cfg), "--out", str(tmp_path / "x.json")]) == 2
    cfg2 = write_config(tmp_path / "cfg2.json", eta=1.5)
    assert main(["gen-state", "--config", str(cfg2), "--out", str(tmp_path / "y.json")]) == 2
    cfg3 = write_config(tmp_path / "cfg3.json", n_max=20)  # n_max >= dim
    assert main(["gen-state", "--config", str(cfg3), "--out", str(tmp_path / "z.json")]) == 2
    capsys.readouterr()


def test_reconstruct_inadmissible_eta_message(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", eta=0.4)
    table = tmp_path / "table.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(table)]) == 0
    code = main(["reconstruct", "--config", str(cfg), "--out", str(tmp_path / "r.json"), str(table)])
    assert code == 2
    err = capsys.readouterr().err
    assert "delta^2 >= 1.5" in err


def test_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", state={"kind": "fock", "n": 1}, dim=15, n_max=5)
    out = tmp_path / "rho.json"
    assert main(["gen-state", "--config", str(cfg), "--dim", "9", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["dim"] == 9
