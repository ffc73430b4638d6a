"""End-to-end runs of every CLI subcommand in temporary directories."""

import json

import numpy as np
import pytest

import symprune.experiments as experiments
from symprune.ansatz import load_ansatz
from symprune.cli import main
from symprune.experiments import desk_config, format_config, load_sweep_rows
from symprune.hamiltonians import ProblemGraph, build_tfim, write_graph
from symprune.training import load_trace


def _write_tiny_sweep_config(path):
    cfg = desk_config(
        n=2, m=0, layer_grid=(1, 2), repeats=1,
        optimizer=experiments.OptimizerConfig(
            kind="gradient_descent", learning_rate=2e-3, max_iters=100,
            loss_stop=5e-7, plateau_delta=0.0))
    path.write_text(format_config(cfg))
    return cfg


# ---------------------------------------------------------------------------
# prune
# ---------------------------------------------------------------------------

def test_prune_writes_stage_files_and_census(tmp_path, capsys):
    assert main(["prune", "--layers", "10", "--out-dir", str(tmp_path)]) == 0
    for label in ("sp0", "sp1", "sp2", "sp3"):
        a = load_ansatz(tmp_path / f"ansatz_{label}.txt")
        assert a.num_qubits == 5 and a.num_layers == 10
    census = (tmp_path / "census.txt").read_text().splitlines()
    assert census[0] == "stage gates free_params d_eff"
    assert census[1:] == ["SP0 340 300 32", "SP1 270 240 16",
                          "SP2 74 70 8", "SP3 74 40 6"]
    out = capsys.readouterr().out
    assert "wrote" in out and "SP3" in out


def test_prune_from_graph_file_adds_mixers(tmp_path):
    k4 = ProblemGraph(4, tuple((u, v) for u in range(4) for v in range(u + 1, 4)))
    gpath = tmp_path / "k4.txt"
    write_graph(k4, gpath)
    assert main(["prune", "--graph-file", str(gpath), "--m", "0",
                 "--layers", "2", "--out-dir", str(tmp_path)]) == 0
    sp2 = load_ansatz(tmp_path / "ansatz_sp2.txt")
    labels = [g.generator.label() for g in sp2.layers[0]]
    assert sum(1 for lb in labels if lb.count("Z") == 2) == 6
    assert sum(1 for lb in labels if lb.count("X") == 1) == 4
    sp3 = load_ansatz(tmp_path / "ansatz_sp3.txt")
    assert sp3.num_free_params == 2 * 2  # one edge + one vertex orbit per layer


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def test_train_writes_loadable_trace(tmp_path, capsys):
    assert main(["train", "--n", "2", "--m", "0", "--stage", "SP3",
                 "--layers", "2", "--max-iters", "30",
                 "--out-dir", str(tmp_path)]) == 0
    trace = load_trace(tmp_path / "trace.txt")
    assert trace.iterations[0] == 0
    assert np.all(trace.loss >= 0)
    out = capsys.readouterr().out
    assert "stop=" in out and "ground=" in out


def test_train_accepts_ansatz_file_and_checks_register(tmp_path):
    assert main(["prune", "--n", "2", "--m", "0", "--layers", "2",
                 "--out-dir", str(tmp_path)]) == 0
    saved = tmp_path / "ansatz_sp3.txt"
    assert main(["train", "--n", "2", "--m", "0", "--ansatz", str(saved),
                 "--max-iters", "10", "--out-dir", str(tmp_path)]) == 0
    with pytest.raises(SystemExit, match="register"):
        main(["train", "--n", "4", "--m", "1", "--ansatz", str(saved),
              "--max-iters", "10", "--out-dir", str(tmp_path)])


# ---------------------------------------------------------------------------
# qntk
# ---------------------------------------------------------------------------

def test_qntk_report(tmp_path):
    assert main(["qntk", "--n", "2", "--m", "0", "--stage", "SP3",
                 "--layers", "2", "--trials", "5", "--seed", "11",
                 "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "qntk.json").read_text())
    assert set(report) == {"trials", "free_params", "mc_mean", "mc_std",
                           "d_eff", "theory_qbar_restricted",
                           "theory_qbar_full_space", "theory_relative_std"}
    assert report["trials"] == 5
    assert report["free_params"] == 4
    assert report["d_eff"] == 2
    assert report["mc_mean"] > 0 and report["mc_std"] > 0
    assert report["theory_qbar_restricted"] == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_end_to_end(tmp_path, capsys):
    cfg_path = tmp_path / "config_in.txt"
    cfg = _write_tiny_sweep_config(cfg_path)
    out_dir = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg_path),
                 "--workers", "2", "--out-dir", str(out_dir)]) == 0
    for name in ("config.txt", "sweep.csv", "summary.json",
                 "kernel_vs_params.svg", "loss_vs_params.svg",
                 "steps_vs_params.svg"):
        assert (out_dir / name).exists()
    rows = load_sweep_rows(out_dir / "sweep.csv")
    assert len(rows) == cfg.num_cells
    # the saved config reproduces the run
    assert experiments.load_config(out_dir / "config.txt") == cfg
    out = capsys.readouterr().out
    assert f"[{cfg.num_cells}/{cfg.num_cells}]" in out
    assert out.count("critical LK") == len(cfg.stage_set)


def test_sweep_exits_nonzero_on_cell_failure(tmp_path, capsys, monkeypatch):
    cfg_path = tmp_path / "config_in.txt"
    _write_tiny_sweep_config(cfg_path)

    def explode(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(experiments, "train", explode)
    code = main(["sweep", "--config", str(cfg_path),
                 "--out-dir", str(tmp_path / "out")])
    assert code == 1
    captured = capsys.readouterr()
    assert "cell(s) failed" in captured.err
    rows = load_sweep_rows(tmp_path / "out" / "sweep.csv")
    assert all(r.status.startswith("error:RuntimeError") for r in rows)


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

def test_dynamics_subcommand(tmp_path, capsys):
    cfg_path = tmp_path / "config_in.txt"
    cfg_path.write_text("n = 3\nm = 0\n")
    assert main(["dynamics", "--config", str(cfg_path), "--stage", "SP3",
                 "--layers", "8", "--inits", "2", "--eta", "1e-3",
                 "--max-iters", "400", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "dynamics_trace.txt").exists()
    fit = json.loads((tmp_path / "dynamics_fit.json").read_text())
    assert fit["stage"] == "SP3" and fit["num_inits"] == 2
    assert fit["lk_free"] == 24
    out = capsys.readouterr().out
    assert "gamma/(eta*qbar)=" in out


# ---------------------------------------------------------------------------
# automorphisms and spectrum
# ---------------------------------------------------------------------------

def test_automorphisms_subcommand(tmp_path, capsys):
    path6 = ProblemGraph(6, tuple((j, j + 1) for j in range(5)))
    gpath = tmp_path / "p6.txt"
    write_graph(path6, gpath)
    assert main(["automorphisms", "--graph-file", str(gpath),
                 "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "automorphisms.txt").read_text().splitlines()
    assert lines[0] == "order 2"
    assert "5 4 3 2 1 0" in lines  # the reversal, listed explicitly
    assert "order 2" in capsys.readouterr().out
    # default problem: the 4-site chain also has only the reversal
    assert main(["automorphisms", "--n", "4", "--m", "0",
                 "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "automorphisms.txt").read_text().splitlines()[0] == \
        "order 2"


def test_spectrum_subcommand(tmp_path, capsys):
    assert main(["spectrum", "--n", "2", "--m", "0", "--levels", "2",
                 "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "spectrum.txt").read_text().splitlines()
    assert lines[0] == "# eigenvalues, ascending"
    got = [float(s) for s in lines[1:]]
    want = np.linalg.eigvalsh(build_tfim(2).to_dense())
    assert np.allclose(got, want, atol=1e-12)
    out = capsys.readouterr().out
    assert "ground=" in out and "gap=" in out


def test_cli_rejects_bad_invocations():
    with pytest.raises(SystemExit):
        main([])
    with pytest.raises(SystemExit):
        main(["transmogrify"])
    with pytest.raises(SystemExit):
        main(["train", "--kind", "sgd"])
