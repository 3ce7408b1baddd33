import json
from dataclasses import replace

import numpy as np
import pytest

from coupled_waves import cli, scenario as sc


def write(tmp_path, cfg, name="s.ini"):
    p = tmp_path / name
    p.write_text(sc.serialize(cfg))
    return p


def read_csv(p):
    lines = p.read_text().splitlines()
    return lines[0].split(","), np.array([[float(v) if v not in ("ok",) else 0 for v in l.split(",")] for l in lines[1:]])


def test_simulate_counterexample_conserves(tmp_path, capsys):
    cfg = sc.counterexample_scenario(n=799, T=1.0)
    out = tmp_path / "o.csv"
    code = cli.main(["simulate", "--config", str(write(tmp_path, cfg)), "--out", str(out), "--json-summary", "-"])
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["values"]["ET_over_E0"] - 1) < 1e-8
    assert code == 0 and summary["passed"]
    header, data = read_csv(out)
    assert header == ["t", "E", "D", "H_norm_sq", "C_log_running"]


def test_simulate_zero_data_all_zero_csv(tmp_path):
    cfg = replace(sc.overlap_scenario(n=15, T=1.0), initial="zero", dt=0.1, stride=1)
    out = tmp_path / "z.csv"
    assert cli.main(["simulate", "--config", str(write(tmp_path, cfg)), "--out", str(out)]) == 0
    _, data = read_csv(out)
    assert np.all(data[:, 1:] == 0) and data.shape[0] == 11


def test_simulate_overlap_monotone_column(tmp_path):
    cfg = sc.overlap_scenario(n=31, T=1e4)
    cfg = replace(cfg, dt=0.5, stride=100)
    out = tmp_path / "m.csv"
    assert cli.main(["simulate", "--config", str(write(tmp_path, cfg)), "--out", str(out)]) == 0
    _, data = read_csv(out)
    assert data[-1, 0] == 1e4
    assert np.all(np.diff(data[:, 1]) <= 1e-12 * data[0, 1])


def test_deterministic_output(tmp_path):
    cfg = replace(sc.overlap_scenario(n=15, T=2.0), initial="random(11)")
    p = write(tmp_path, cfg)
    outs = []
    for k in range(2):
        o = tmp_path / f"d{k}.csv"
        cli.main(["simulate", "--config", str(p), "--out", str(o)])
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]
    for v in outs[0].decode().splitlines()[2].split(","):
        assert f"{float(v):.17g}" == v


def test_spectrum_commands(tmp_path, capsys):
    ce = sc.counterexample_scenario(n=99)
    assert cli.main(["spectrum", "--config", str(write(tmp_path, ce)), "--out", str(tmp_path / "e.csv"), "--json-summary", "-"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["values"]["feasible"] is False

    free = replace(sc.overlap_scenario(n=15), alpha=sc.Profile("constant", (0.0,)), beta=sc.Profile("constant", (0.0,)))
    cli.main(["spectrum", "--config", str(write(tmp_path, free)), "--out", str(tmp_path / "f.csv")])
    _, data = read_csv(tmp_path / "f.csv")
    assert np.abs(data[:, 0]).max() < 1e-10

    ov = sc.overlap_scenario(n=31)
    js = tmp_path / "ov.json"
    assert cli.main(["spectrum", "--config", str(write(tmp_path, ov)), "--refine", "--json-summary", str(js)]) == 0
    summary = json.loads(js.read_text())
    assert summary["values"]["feasible"] and summary["checks"]["C_region_stable"]


def test_resolvent_command(tmp_path):
    cfg = replace(sc.counterexample_scenario(n=99), count=40, sigma_max=8.0)
    out = tmp_path / "r.csv"
    js = tmp_path / "r.json"
    assert cli.main(["resolvent", "--config", str(write(tmp_path, cfg)), "--out", str(out), "--json-summary", str(js)]) == 0
    header, data = read_csv(out)
    assert header == ["sigma", "resolvent_norm", "log_norm", "hille_yosida_ratio", "flag"]
    assert np.all(data[:, 3] <= 1 + 1e-8)
    s = json.loads(js.read_text())["values"]
    assert s["peak_norm"] > 100


def test_empty_sweep_range_rejected(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(sc.serialize(sc.overlap_scenario(n=15)).replace("sigma_max = 20.0", "sigma_max = 1.5"))
    assert cli.main(["resolvent", "--config", str(p)]) == 2
    assert "bad.ini:" in capsys.readouterr().err


def test_carleman_command(tmp_path, capsys):
    cfg = replace(sc.overlap_scenario(n=15), mu=(1.0,), lambdas=(2.0, 8.0))
    out = tmp_path / "c.csv"
    assert cli.main(["carleman", "--config", str(write(tmp_path, cfg)), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
    zero = replace(cfg, family="zero")
    assert cli.main(["carleman", "--config", str(write(tmp_path, zero, "z.ini"))]) == 0
    low = replace(cfg, mu=(0.5,))
    assert cli.main(["carleman", "--config", str(write(tmp_path, low, "l.ini"))]) == 2
    assert "b0 < b" in capsys.readouterr().err


def test_counterexample_command_small_ladder(tmp_path):
    res = cli.run_counterexample(tmp_path / "ce.csv", T=1.0, ladder=(99, 199, 399))
    assert res.checks["error_decreasing"] and res.checks["error_below_5pct"]
    header = (tmp_path / "ce.csv").read_text().splitlines()[0]
    assert header == "t,x,y_exact,y_sim,z_exact,z_sim,abs_err"


def test_report_writes_three_csvs(tmp_path):
    cfg = replace(sc.overlap_scenario(n=15, T=2.0), count=10)
    assert cli.main(["report", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path / "rep")]) == 0
    assert sorted(p.name for p in (tmp_path / "rep").iterdir()) == ["resolvent.csv", "simulate.csv", "spectrum.csv"]


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "broken.ini"
    p.write_text("[domain]\nlength = 1\nn = x\n")
    assert cli.main(["simulate", "--config", str(p)]) == 2
    assert "broken.ini:3:5:" in capsys.readouterr().err


def test_missing_config(capsys):
    assert cli.main(["spectrum"]) == 2


def test_failing_check_exits_one(tmp_path):
    # counterexample data with coarse grid: energy drift far above 1e-8
    cfg = sc.counterexample_scenario(n=63, T=5.0)
    assert cli.main(["simulate", "--config", str(write(tmp_path, cfg))]) == 1
