import csv
import json
from pathlib import Path

import pytest

from ratchet_lab.cli import main
from ratchet_lab.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def _run(*args):
    return main([str(a) for a in args])


def test_transport_run_artifacts(tmp_path):
    assert _run("run", CONFIGS / "transport.toml", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"]["direction"] == "left"
    assert summary["chains"]["chain_p"] and summary["chains"]["chain_P"] and summary["chains"]["shift_P_ok"]
    for key in ("S", "a"):
        assert key in summary["verdict"]
    assert {"gamma", "M"} <= set(summary["squeeze"])
    dens = _rows(tmp_path / "densities.csv")
    assert dens[0] == ["x", "p", "P", "Q"]
    assert len(dens) == 1 + summary["grid_n"]
    wells = _rows(tmp_path / "wells.csv")
    assert wells[0] == ["i", "p_hat", "P_hat", "xi"]
    assert _rows(tmp_path / "timeseries.csv")[0][:3] == ["t", "mass", "l1_gap"]


def test_seventeen_significant_digits(tmp_path):
    _run("run", CONFIGS / "squeezing.toml", "--out", tmp_path)
    value = _rows(tmp_path / "wells.csv")[1][1]
    assert float(value) == float(f"{float(value):.17g}")
    assert len(value.replace(".", "").lstrip("0")) == 17


def test_conjugate_wells_equal(tmp_path):
    assert _run("run", CONFIGS / "conjugate.toml", "--out", tmp_path) == 0
    rows = _rows(tmp_path / "wells.csv")[1:]
    k = len(rows)
    for row in rows:
        assert float(row[1]) + float(row[2]) == pytest.approx(1 / k, abs=1e-6)


def test_byte_identical_outputs(tmp_path):
    for d in ("a", "b"):
        assert _run("run", CONFIGS / "transport.toml", "--out", tmp_path / d, "--grid-n", 1001) == 0
    for name in ("summary.json", "densities.csv", "wells.csv", "timeseries.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_byte_identical_across_thread_counts(tmp_path, monkeypatch):
    monkeypatch.setenv("RATCHET_LAB_THREADS", "1")
    assert _run("sweep", CONFIGS / "transport_sweep.toml", "--out", tmp_path / "a", "--grid-n", 801) == 0
    monkeypatch.setenv("RATCHET_LAB_THREADS", "4")
    assert _run("sweep", CONFIGS / "transport_sweep.toml", "--out", tmp_path / "b", "--grid-n", 801) == 0
    for name in ("sweep.csv", "fixture.toml", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_emits_fixture(tmp_path):
    assert _run("sweep", CONFIGS / "transport_sweep.toml", "--out", tmp_path) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert rows[0] == ["sigma", "kappa", "chain_p", "chain_P", "shift_P_ok", "min_margin"]
    assert len(rows) == 81
    first = next(r for r in rows[1:] if r[2:5] == ["true"] * 3)
    cfg = load_config(tmp_path / "fixture.toml")
    params = cfg.params()
    assert (params.sigma, params.kappa) == (float(first[0]), float(first[1]))
    # the frozen transport fixture is this pair
    assert (params.sigma, params.kappa) == (0.1, 1.0)
    out = tmp_path / "replay"
    assert _run("run", tmp_path / "fixture.toml", "--out", out) == 0
    assert json.loads((out / "summary.json").read_text())["chains"]["direction"] == "left"


def test_symmetric_sweep_has_no_pair(tmp_path):
    assert _run("sweep", CONFIGS / "symmetric_sweep.toml", "--out", tmp_path) == 0
    s = json.loads((tmp_path / "summary.json").read_text())["sweep"]
    assert s["first_pair"] is None
    assert abs(s["best_margin"]) < 1e-8
    assert not (tmp_path / "fixture.toml").exists()


def test_reversed_sweep_only_backward(tmp_path):
    assert _run("sweep", CONFIGS / "reversed_sweep.toml", "--out", tmp_path) == 0
    rows = _rows(tmp_path / "sweep.csv")[1:]
    assert all(r[2] == r[3] == r[4] == "false" for r in rows)
    s = json.loads((tmp_path / "summary.json").read_text())["sweep"]
    assert s["reversed_pairs"] > 0 and s["direction"] == "right"


def _write(tmp_path, text):
    p = tmp_path / "bad.toml"
    p.write_text(text)
    return p


def test_malformed_offset_exit_code(tmp_path, capsys):
    text = (CONFIGS / "transport.toml").read_text().replace("a = 0.15", "a = 0.6")
    assert _run("run", _write(tmp_path, text), "--out", tmp_path / "o") == 1
    err = capsys.readouterr().err
    lineno = next(i for i, l in enumerate(text.splitlines(), 1) if l.startswith("a = 0.6"))
    assert f"bad.toml:{lineno}" in err
    assert "0 < a < 1/k" in err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize(
    "old,new,needle",
    [
        ('model = "random-flashing"', 'model = "quantum"', "model must be one of"),
        ("sigma = 0.1", "sigma = -0.1", "positive"),
        ("k = 2", "k = 1", "tooth count"),
        ("width = 0.05", "widht = 0.05", "unknown key"),
        ("[eta]", "[eta", "TOML syntax error"),
    ],
)
def test_config_errors(tmp_path, capsys, old, new, needle):
    text = (CONFIGS / "transport.toml").read_text().replace(old, new)
    assert _run("run", _write(tmp_path, text)) == 1
    assert needle in capsys.readouterr().err


def test_grid_override_validated(tmp_path, capsys):
    assert _run("run", CONFIGS / "transport.toml", "--grid-n", 1000, "--out", tmp_path) == 1
    assert "divisible by 2k" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert _run("run", tmp_path / "nope.toml") == 1


def test_solver_failure_exit_code(tmp_path, capsys):
    text = (CONFIGS / "transport.toml").read_text().replace("record_every = 500", "max_steps = 5")
    assert _run("run", _write(tmp_path, text), "--out", tmp_path / "o") == 2
    assert "ConvergenceError" in capsys.readouterr().err


def test_seed_override_changes_particles(tmp_path):
    text = (CONFIGS / "particles.toml").read_text().replace("n = 100000", "n = 2000").replace(
        "t_end = 6.0", "t_end = 0.2")
    cfg = _write(tmp_path, text)
    assert _run("run", cfg, "--out", tmp_path / "a", "--seed", 1) == 0
    assert _run("run", cfg, "--out", tmp_path / "b", "--seed", 1) == 0
    assert _run("run", cfg, "--out", tmp_path / "c", "--seed", 2) == 0
    a, b, c = ((tmp_path / d / "histogram.csv").read_bytes() for d in "abc")
    assert a == b and a != c
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["particles"]["seed"] == 1


@pytest.mark.parametrize("name", ["deterministic", "collaborative", "diffusive_mean", "squeezing"])
def test_other_models_run(tmp_path, name):
    text = (CONFIGS / f"{name}.toml").read_text().replace("dt = 1e-3", "dt = 1e-2")
    assert _run("run", _write(tmp_path, text), "--out", tmp_path, "--grid-n", 1001) == 0
    assert (tmp_path / "summary.json").exists()


def test_deterministic_model_opposes_random(tmp_path):
    text = (CONFIGS / "deterministic.toml").read_text().replace("dt = 1e-3", "dt = 1e-2")
    assert _run("run", _write(tmp_path, text), "--out", tmp_path, "--grid-n", 1001) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["agree"] is False


def test_sweep_requires_two_state_model():
    assert _run("sweep", CONFIGS / "squeezing.toml") == 1


def test_parse_config_defaults():
    cfg = parse_config((CONFIGS / "transport.toml").read_text())
    assert cfg.model == "random-flashing" and cfg.seed == 0
    assert cfg.params().grid.n == 2001
    assert cfg.sweep_sigmas == ()
    swept = parse_config((CONFIGS / "transport_sweep.toml").read_text())
    assert len(swept.sweep_sigmas) == 10 and len(swept.sweep_kappas) == 8
    assert swept.sweep_sigmas[0] == pytest.approx(0.1) and swept.sweep_kappas[-1] == pytest.approx(200.0)
    with pytest.raises(ConfigError):
        parse_config("model = 3")


def test_selftest_subset_exit_code(capsys):
    from ratchet_lab.cli import main

    assert main(["selftest", "--only", "1", "12"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion  1" in out and "[PASS] criterion 12" in out and "OK" in out
