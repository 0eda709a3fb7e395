import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.io

from neurosort import __version__
from neurosort.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, main

SMALL = ["--set", "synth.spikes_per_class=60", "--set", "snn.restarts=2",
         "--set", "fig6.runs_small=2", "--set", "fig6.runs_large=4",
         "--set", "sweep.levels=0,0.5", "--set", "sweep.trials=2",
         "--set", "fig5.grid=0.5,1", "--set", "scenario.phase1_per_class=40",
         "--set", "scenario.phase2_per_class=40", "--set", "crossbar.rows=300"]


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def body(path):
    return [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]


def heads(path):
    return [ln for ln in open(path).read().splitlines() if ln.startswith("#")]


def test_pipeline_outputs(tmp_path):
    code, out = run(["pipeline", "--seed", "3", *SMALL], tmp_path)
    assert code == EXIT_OK
    spikes = body(out / "pipeline_spikes.csv")
    assert spikes[0] == "index,onset,true_class,kmeans_label,digital_class,crossbar_class"
    summary = dict(ln.split(",", 1) for ln in body(out / "pipeline_summary.csv")[1:])
    n_test = int(summary["n_test"]) if "n_test" in summary else len(spikes) - 1
    assert len(spikes) - 1 == n_test
    h = heads(out / "pipeline_spikes.csv")
    assert h[0] == f"# neurosort {__version__}"
    assert any(x.startswith("# config_hash=") for x in h)
    assert "# seed=3" in h
    assert "# channels=16" in h
    assert (out / "weights.txt").read_text().startswith("300 3\n")


def test_noise_free_pipeline_is_perfect(tmp_path):
    code, out = run(["pipeline", "--set", "synth.noise_sigma=0"], tmp_path)
    assert code == EXIT_OK
    summary = dict(ln.split(",", 1) for ln in body(out / "pipeline_summary.csv")[1:])
    assert float(summary["digital_test_accuracy"]) == 100.0


@pytest.mark.parametrize("cmd,files", [
    ("fig5", ["fig5.csv"]),
    ("fig6", ["fig6_runs2.csv", "fig6_runs4.csv", "fig6_summary.csv"]),
    ("sweep", ["sweep.csv"]),
    ("adapt", ["adapt_trace.csv", "adapt_summary.csv"]),
    ("power", ["power.csv"]),
    ("dump-matrix", ["crossbar.mtx", "crossbar_nodes.csv", "crossbar_rhs.csv"]),
])
def test_commands_write_expected_files(tmp_path, cmd, files):
    code, out = run([cmd, *SMALL], tmp_path)
    assert code == EXIT_OK
    for f in files:
        assert (out / f).exists(), f
        if f.endswith(".csv"):
            assert heads(out / f)[0] == f"# neurosort {__version__}"


def test_fig_shapes(tmp_path):
    _, out = run(["fig5", *SMALL], tmp_path, "a")
    rows = body(out / "fig5.csv")[1:]
    assert len(rows) == 2
    for r in rows:
        _, _, tr, te = r.split(",")
        assert 0 <= float(tr) <= 100 and 0 <= float(te) <= 100
    _, out = run(["fig6", *SMALL], tmp_path, "b")
    assert len(body(out / "fig6_runs2.csv")) == 3
    assert len(body(out / "fig6_runs4.csv")) == 5


def test_power_value(tmp_path):
    _, out = run(["power"], tmp_path)
    rows = dict(ln.split(",", 1) for ln in body(out / "power.csv")[1:])
    assert float(rows["average_power_W"]) == pytest.approx(10.8e-9)
    assert float(rows["reference_kmeans_power_uW"]) == 51.12


def test_dump_matrix_readable(tmp_path):
    _, out = run(["dump-matrix", "--set", "crossbar.rows=5"], tmp_path)
    g = scipy.io.mmread(out / "crossbar.mtx").toarray()
    assert g.shape == (40, 40)
    assert np.allclose(g, g.T)
    nodes = body(out / "crossbar_nodes.csv")
    assert nodes[1] == "0,0,0,row" and nodes[2] == "1,0,0,col"


def test_exit_code_config(tmp_path, capsys):
    code, _ = run(["pipeline", "--set", "snn.bogus=1"], tmp_path)
    assert code == EXIT_CONFIG
    assert "unknown config key" in capsys.readouterr().err
    code, _ = run(["power", "--config", str(tmp_path / "missing.cfg")], tmp_path)
    assert code == EXIT_CONFIG


def test_exit_code_data(tmp_path, capsys):
    bad = tmp_path / "trace.csv"
    bad.write_text("0.1\n0.2\nnot-a-number\n")
    code, _ = run(["pipeline", "--set", f"input.source={bad}"], tmp_path)
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert "line 3" in err and "stage acquire" in err
    code, _ = run(["pipeline", "--set", f"input.source={tmp_path / 'nope.csv'}"], tmp_path)
    assert code == EXIT_DATA


def test_exit_code_numerical(tmp_path, capsys):
    code, _ = run(["pipeline", *SMALL, "--set", "crossbar.g_p=1e12", "--set", "crossbar.g_t=1e-9"], tmp_path)
    assert code == EXIT_NUMERICAL
    assert "numerical error" in capsys.readouterr().err


def test_seed_environment_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("NEUROSORT_SEED", "42")
    _, out = run(["power"], tmp_path, "env")
    assert "# seed=42" in heads(out / "power.csv")
    _, out = run(["power", "--seed", "7"], tmp_path, "flag")
    assert "# seed=7" in heads(out / "power.csv")


def test_same_seed_same_bodies_different_seed_differs(tmp_path):
    _, a = run(["pipeline", *SMALL, "--seed", "1"], tmp_path, "a")
    _, b = run(["pipeline", *SMALL, "--seed", "1"], tmp_path, "b")
    _, c = run(["pipeline", *SMALL, "--seed", "2"], tmp_path, "c")
    assert body(a / "pipeline_spikes.csv") == body(b / "pipeline_spikes.csv")
    assert body(a / "pipeline_spikes.csv") != body(c / "pipeline_spikes.csv")


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "neurosort.cli", "power", "--out", str(tmp_path)],
                         capture_output=True, text=True, env={**os.environ, "NEUROSORT_SEED": ""})
    assert res.returncode == 0
    assert "10.800 nW" in res.stdout
