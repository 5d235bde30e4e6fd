import csv
import math
import re
from pathlib import Path

import numpy as np
import pytest

from rdtool.cli import EXIT_BOUND, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from rdtool.config import ExperimentConfig, load_config, parse_config
from rdtool.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs" / "paper"

SIM = """\
command = simulate
model.name = logistic
model.kappa = 1
model.A = 0.5
model.B = 0.4
kernel.order = weak
kernel.tau = 0.5
grid.L = pi
grid.n = 16
d = 0.5
history.type = sine
history.amplitude = 0.1
sim.dt = 0.01
sim.t_end = 2
sim.output_stride = 20
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(tmp_path, command, text, out="out", extra=()):
    return main([command, "--config", write_cfg(tmp_path, text), "--out", str(tmp_path / out), *extra])


def read_table(path):
    lines = Path(path).read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, list(csv.DictReader(body))


# config parsing


def test_parse_reports_line_and_field():
    with pytest.raises(ConfigError, match=r"exp.cfg:2: expected"):
        parse_config("d = 1\nnonsense\n", "exp.cfg")
    with pytest.raises(ConfigError, match=r":3: field 'd' already set on line 1"):
        parse_config("d = 1\n# note\nd = 2\n", "exp.cfg")
    with pytest.raises(ConfigError, match=r"unknown field 'grid.N'"):
        parse_config("grid.N = 4\n", "exp.cfg")


def test_pi_literals():
    cfg = ExperimentConfig(parse_config("grid.L = pi\nkernel.tau = 2*pi\nd = pi/2\n"))
    assert cfg.grid.length == math.pi
    assert cfg.tau == pytest.approx(2 * math.pi)
    assert cfg.d == pytest.approx(math.pi / 2)
    with pytest.raises(ConfigError, match="field 'd'"):
        ExperimentConfig(parse_config("d = tau\n")).d


def test_missing_history_fields_are_named():
    cfg = ExperimentConfig(parse_config("history.type = sine\n"), "x.cfg")
    with pytest.raises(ConfigError, match="history.amplitude"):
        cfg.history
    with pytest.raises(ConfigError, match="history.type"):
        ExperimentConfig(parse_config("d = 1\n"), "x.cfg").history


def test_empty_tau_grid():
    with pytest.raises(ConfigError, match="tau.values"):
        ExperimentConfig(parse_config("tau.values = ,\n")).taus
    with pytest.raises(ConfigError, match="tau.values"):
        ExperimentConfig(parse_config("d = 1\n")).taus
    with pytest.raises(ConfigError, match="tau.count"):
        ExperimentConfig(parse_config("tau.start = 1\ntau.stop = 2\ntau.count = 0\n")).taus


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.cfg")):
        cfg = load_config(path)
        assert cfg.command in {"bif-table", "branch", "simulate", "verify-equivalence", "uniqueness-probe"}
        cfg.model


# exit codes


def test_exit_ok_and_outputs(tmp_path, capsys):
    assert run(tmp_path, "simulate", SIM) == EXIT_OK
    assert re.search(r"verdict=\S+ t=2 ", capsys.readouterr().out)
    for name in ("trajectory.csv", "summary.csv", "heatmap.svg", "profile.svg"):
        assert (tmp_path / "out" / name).is_file()


def test_exit_config_errors(tmp_path, capsys):
    assert run(tmp_path, "simulate", SIM + "grid.N = 3\n") == EXIT_CONFIG
    assert "grid.N" in capsys.readouterr().err
    assert run(tmp_path, "branch", SIM) == EXIT_CONFIG
    assert run(tmp_path, "simulate", SIM.replace("history.amplitude = 0.1\n", "")) == EXIT_CONFIG
    assert "history.amplitude" in capsys.readouterr().err
    assert run(tmp_path, "simulate", SIM.replace("sim.dt = 0.01", "sim.dt = 0.5")) == EXIT_CONFIG
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_exit_numerical_failure(tmp_path, capsys):
    text = SIM + "sim.method = nonlocal\nsim.history_cap = 100\n"
    assert run(tmp_path, "simulate", text) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_exit_bound_violation(tmp_path, capsys):
    text = SIM.replace("command = simulate", "command = verify-equivalence").replace("sim.t_end = 2", "sim.t_end = 0.5")
    text += "verify.ladder = 8:0.02, 16:0.01\nverify.bound = 1e-12\n"
    assert run(tmp_path, "verify-equivalence", text) == EXIT_BOUND
    assert "result=fail" in capsys.readouterr().out


# output format


def test_csv_header_has_units(tmp_path):
    run(tmp_path, "simulate", SIM)
    comments, rows = read_table(tmp_path / "out" / "trajectory.csv")
    assert comments[0] == "# t [time], x [length], u [density], v [density]"
    assert any("history 0.1*sin(pi x/L)" in c for c in comments)
    assert len(rows) == 11 * 16
    assert set(rows[0]) == {"t", "x", "u", "v"}


def test_svg_self_contained(tmp_path):
    run(tmp_path, "simulate", SIM)
    for name in ("heatmap.svg", "profile.svg"):
        text = (tmp_path / "out" / name).read_text()
        assert text.lstrip().startswith("<svg")
        assert "href" not in text
        assert "http" not in text.replace('xmlns="http://www.w3.org/2000/svg"', "")


def test_reruns_are_byte_identical(tmp_path):
    for out in ("a", "b"):
        assert run(tmp_path, "simulate", SIM, out=out) == EXIT_OK
    for name in ("trajectory.csv", "summary.csv", "heatmap.svg", "profile.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# command results


def test_bif_table_nicholson_row(tmp_path):
    out = tmp_path / "bif"
    assert main(["bif-table", "--config", str(CONFIGS / "bif_nicholson.cfg"), "--out", str(out)]) == EXIT_OK
    _, rows = read_table(out / "bif_table.csv")
    row = next(r for r in rows if float(r["tau"]) == 0.5)
    assert abs(float(row["d_star"]) - 0.1362) <= 5e-5
    assert row["direction"] == "supercritical"


def test_bif_table_logistic_constant(tmp_path):
    out = tmp_path / "bif"
    assert main(["bif-table", "--config", str(CONFIGS / "bif_logistic.cfg"), "--out", str(out)]) == EXIT_OK
    _, rows = read_table(out / "bif_table.csv")
    assert len(rows) == 50
    # d* = lambda_1 / lambda_1(continuum) = 1 up to O(h^2)
    vals = np.array([float(r["d_star"]) for r in rows])
    assert np.all(vals == vals[0])
    assert vals[0] == pytest.approx(1.0, abs=1e-3)


def test_branch_logistic(tmp_path):
    text = (CONFIGS / "branch_logistic.cfg").read_text().replace("grid.n = 100", "grid.n = 40")
    assert run(tmp_path, "branch", text) == EXIT_OK
    _, rows = read_table(tmp_path / "out" / "branch.csv")
    d = np.array([float(r["d"]) for r in rows])
    u = np.array([float(r["max_u"]) for r in rows])
    assert np.all(np.diff(d) < 0)
    assert np.all(u <= 2.0)
    assert (tmp_path / "out" / "branch.svg").is_file()


def test_branch_cubic_subcritical(tmp_path, capsys):
    text = (CONFIGS / "branch_cubic_subcritical.cfg").read_text()
    text = re.sub(r"grid.n = \d+", "grid.n = 40", text)
    assert run(tmp_path, "branch", text) == EXIT_OK
    comments, rows = read_table(tmp_path / "out" / "branch.csv")
    d_star = float(re.search(r"d_star (\S+)", " ".join(comments)).group(1))
    assert max(float(r["d"]) for r in rows) > d_star


def test_verify_zero_history_gap_is_zero(tmp_path, capsys):
    text = SIM.replace("command = simulate", "command = verify-equivalence").replace("sim.t_end = 2", "sim.t_end = 0.5")
    text = text.replace("history.type = sine\nhistory.amplitude = 0.1\n", "history.type = constant\nhistory.value = 0\n")
    text += "verify.ladder = 8:0.02, 16:0.01\nverify.bound = 1e-12\n"
    assert run(tmp_path, "verify-equivalence", text) == EXIT_OK
    _, rows = read_table(tmp_path / "out" / "equivalence.csv")
    assert all(float(r["max_gap"]) == 0.0 for r in rows)


def test_uniqueness_probe_command(tmp_path):
    text = (CONFIGS / "uniqueness_logistic.cfg").read_text()
    text = re.sub(r"grid.n = \d+", "grid.n = 32", text)
    assert run(tmp_path, "uniqueness-probe", text, extra=("--seed", "3")) == EXIT_OK
    _, rows = read_table(tmp_path / "out" / "uniqueness.csv")
    assert [r["verdict"] for r in rows] == ["unique"] * 5
