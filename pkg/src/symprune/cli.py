"""Command-line front end.

Subcommands:
  prune          build a circuit, run all pruning stages, write stage files
  train          optimize one ansatz and export its trace
  qntk           sample the kernel at random initializations vs. predictions
  sweep          run the (stage x depth x repeat) convergence sweep
  dynamics       averaged gradient-descent decay with theory overlay
  automorphisms  interaction-graph automorphism group and orbits
  spectrum       exact eigenvalues of the problem Hamiltonian

All subcommands accept --seed, --out-dir, and --full (--full switches the
large preset where one exists and is ignored elsewhere).  The sweep exits
with status 0 only if every requested cell completed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .ansatz import build_hea, load_ansatz, save_ansatz
from .hamiltonians import (
    build_maxcut,
    build_tfim,
    embed_identity,
    interaction_graph,
    read_graph,
)
from .pruning import symmetric_prune
from .quantum_core import PauliSum
from .symmetry_analysis import (
    circuit_seed_state,
    graph_automorphisms,
    invariant_subspace,
    monte_carlo_kernel,
    slot_generators,
    theory_fluctuation,
    theory_qbar,
    theory_qbar_s,
)
from .training import LossSpec, OptimizerConfig, save_trace, train
from .hamiltonians import project_hamiltonian
from . import experiments as exp


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master RNG seed (overrides config/default)")
    p.add_argument("--out-dir", type=Path, default=Path("."),
                   help="directory for output files")
    p.add_argument("--full", action="store_true",
                   help="use the large long-running preset where applicable")


def _add_problem(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=("tfim", "maxcut_er", "maxcut_regular"),
                   default="tfim")
    p.add_argument("--n", type=int, default=4, help="system qubits / vertices")
    p.add_argument("--m", type=int, default=1, help="redundant qubits")
    p.add_argument("--h-field", type=float, default=1.0)
    p.add_argument("--graph-p", type=float, default=0.6)
    p.add_argument("--graph-degree", type=int, default=3)
    p.add_argument("--graph-seed", type=int, default=1)
    p.add_argument("--graph-file", type=Path, default=None,
                   help="read the cut graph from a file instead of sampling")


def _problem_config(args) -> exp.ExperimentConfig:
    base = exp.full_config() if args.full else exp.desk_config()
    cfg = dataclasses.replace(
        base, problem=args.problem, n=args.n, m=args.m, h_field=args.h_field,
        graph_p=args.graph_p, graph_degree=args.graph_degree,
        graph_seed=args.graph_seed)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _effective_hamiltonian(args):
    if args.graph_file is not None:
        return build_maxcut(read_graph(args.graph_file))
    if args.problem == "tfim":
        return build_tfim(args.n, args.h_field)
    cfg = _problem_config(args)
    return exp.problem_hamiltonian(cfg).effective


def _closure_dimension(a) -> int:
    unique = []
    seen = set()
    for g in slot_generators(a):
        strings = g.strings() if isinstance(g, PauliSum) else (g,)
        key = tuple(sorted((p.x_mask, p.z_mask) for p in strings))
        if key not in seen:
            seen.add(key)
            unique.append(g)
    return invariant_subspace(unique, circuit_seed_state(a)).dimension


def _cmd_prune(args) -> int:
    h_eff = _effective_hamiltonian(args)
    emb = embed_identity(h_eff, args.m)
    mixers = args.problem != "tfim" or args.graph_file is not None
    hea = build_hea(emb.num_total_qubits, args.layers)
    stages = symmetric_prune(hea, emb, include_mixers=mixers)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for st in stages:
        path = args.out_dir / f"ansatz_{st.label.lower()}.txt"
        save_ansatz(st.ansatz, path)
        rows.append((st.label, st.ansatz.gate_count, st.free_param_count,
                     _closure_dimension(st.ansatz)))
        print(f"wrote {path}")
    census = args.out_dir / "census.txt"
    with open(census, "w", encoding="utf-8") as fh:
        fh.write("stage gates free_params d_eff\n")
        for label, gates, params, d_eff in rows:
            fh.write(f"{label} {gates} {params} {d_eff}\n")
    print(f"wrote {census}")
    print("stage  gates  free_params  d_eff")
    for label, gates, params, d_eff in rows:
        print(f"{label:5s}  {gates:5d}  {params:11d}  {d_eff:5d}")
    return 0


def _resolve_ansatz(args, cfg):
    if args.ansatz is not None:
        return load_ansatz(args.ansatz)
    return exp.stage_ansatze(cfg, args.layers)[args.stage]


def _cmd_train(args) -> int:
    cfg = _problem_config(args)
    a = _resolve_ansatz(args, cfg)
    emb = exp.problem_hamiltonian(cfg)
    if a.num_qubits != emb.num_total_qubits:
        raise SystemExit("ansatz register does not match the problem")
    opt = OptimizerConfig(kind=args.kind, learning_rate=args.lr,
                          max_iters=args.max_iters, loss_stop=args.loss_stop,
                          plateau_delta=args.plateau_delta)
    rng = np.random.default_rng(cfg.master_seed)
    init = rng.uniform(-np.pi, np.pi, a.num_free_params)
    spec = LossSpec(emb.full)
    trace = train(a, spec, opt, init)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "trace.txt"
    save_trace(trace, path)
    print(f"wrote {path}")
    print(f"iters={trace.iterations[-1]} loss={trace.loss[-1]:.3e} "
          f"residual={trace.residual[-1]:.3e} stop={trace.stop_reason} "
          f"ground={spec.ground_energy:.6f}")
    return 0


def _cmd_qntk(args) -> int:
    cfg = _problem_config(args)
    a = _resolve_ansatz(args, cfg)
    emb = exp.problem_hamiltonian(cfg)
    spec = LossSpec(emb.full)
    mean, std, _ = monte_carlo_kernel(a, spec, args.trials, cfg.master_seed)
    basis = invariant_subspace(slot_generators(a), circuit_seed_state(a))
    h_star = project_hamiltonian(emb.full, basis)
    qbar_s = theory_qbar_s(a.num_free_params, h_star, basis.dimension)
    qbar_full = theory_qbar(a.num_free_params, emb.full)
    fluct = theory_fluctuation(a.num_free_params, h_star, basis.dimension)
    report = {
        "trials": args.trials,
        "free_params": a.num_free_params,
        "mc_mean": mean,
        "mc_std": std,
        "d_eff": basis.dimension,
        "theory_qbar_restricted": qbar_s,
        "theory_qbar_full_space": qbar_full,
        "theory_relative_std": float(np.sqrt(fluct)) / qbar_s,
    }
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "qntk.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"wrote {path}")
    for k, v in report.items():
        print(f"{k}: {v}")
    return 0


def _sweep_config(args) -> exp.ExperimentConfig:
    base = exp.full_config() if args.full else exp.desk_config()
    cfg = exp.load_config(args.config, base=base) if args.config else base
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    exp.save_config(cfg, args.out_dir / "config.txt")
    csv_path = args.out_dir / "sweep.csv"

    def progress(row, done, total):
        print(f"[{done}/{total}] {row.stage} L={row.layers} LK={row.lk_free} "
              f"rep={row.repeat} status={row.status}", flush=True)

    result = exp.run_sweep(cfg, out_path=csv_path, workers=args.workers,
                           progress=progress)
    paths = exp.emit_outputs(result, args.out_dir)
    for p in paths:
        print(f"wrote {p}")
    for stage in cfg.stage_set:
        if len({r.lk_free for r in result.stage_rows(stage)}) >= 2:
            crit = exp.critical_point(result, stage)
            print(f"{stage}: critical LK = "
                  f"{crit if crit is not None else 'not found'}")
    if not result.all_ok:
        bad = [r for r in result.rows if not r.ok]
        print(f"{len(bad)} cell(s) failed", file=sys.stderr)
        return 1
    return 0


def _cmd_dynamics(args) -> int:
    base = exp.full_config() if args.full else exp.desk_config()
    cfg = exp.load_config(args.config, base=base) if args.config else base
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    layers = args.layers if args.layers is not None else (80 if args.full else 40)
    inits = args.inits if args.inits is not None else (30 if args.full else 10)
    iters = args.max_iters if args.max_iters is not None else (1000 if args.full else 250)
    result = exp.dynamics_experiment(cfg, stage=args.stage, layers=layers,
                                     inits=inits, eta=args.eta, max_iters=iters)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for p in exp.save_dynamics(result, args.out_dir):
        print(f"wrote {p}")
    print(f"stage={result.stage} LK={result.lk_free} qbar={result.qbar_theory:.4f}")
    print(f"gamma={result.gamma:.6e} r2={result.r_squared:.4f} "
          f"gamma/(eta*qbar)={result.gamma_over_theory:.4f}")
    return 0


def _cmd_automorphisms(args) -> int:
    if args.graph_file is not None:
        graph = read_graph(args.graph_file)
    else:
        graph = interaction_graph(_effective_hamiltonian(args))
    aut = graph_automorphisms(graph)
    print(f"order {aut.order}")
    print("vertex_orbits", " ".join(",".join(map(str, o))
                                    for o in aut.vertex_orbits))
    print("edge_orbits", " ".join("|".join(f"{u}-{v}" for u, v in o)
                                  for o in aut.edge_orbits))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "automorphisms.txt"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"order {aut.order}\n")
        fh.write("vertex_orbits " + ";".join(",".join(map(str, o))
                                             for o in aut.vertex_orbits) + "\n")
        fh.write("edge_orbits " + ";".join("|".join(f"{u}-{v}" for u, v in o)
                                           for o in aut.edge_orbits) + "\n")
        if aut.order <= 1000:
            for perm in aut.elements:
                fh.write(" ".join(map(str, perm)) + "\n")
    print(f"wrote {path}")
    return 0


def _cmd_spectrum(args) -> int:
    h = _effective_hamiltonian(args)
    vals = np.linalg.eigvalsh(h.to_dense())
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "spectrum.txt"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# eigenvalues, ascending\n")
        for v in vals:
            fh.write(f"{float(v)!r}\n")
    print(f"wrote {path}")
    k = min(args.levels, len(vals))
    print("lowest eigenvalues:", " ".join(f"{v:.6f}" for v in vals[:k]))
    gap = float(vals[1] - vals[0]) if len(vals) > 1 else 0.0
    print(f"ground={vals[0]:.6f} gap={gap:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symprune",
        description="symmetric-pruning workbench for variational circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prune", help="run the pruning pipeline, write stage files")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--layers", type=int, default=10)
    p.set_defaults(fn=_cmd_prune)

    p = sub.add_parser("train", help="optimize one ansatz, export the trace")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--ansatz", type=Path, default=None, help="ansatz file to load")
    p.add_argument("--stage", choices=("SP0", "SP1", "SP2", "SP3"), default="SP3")
    p.add_argument("--layers", type=int, default=20)
    p.add_argument("--kind", choices=("adam", "gradient_descent"), default="adam")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--loss-stop", type=float, default=1e-8)
    p.add_argument("--plateau-delta", type=float, default=0.0)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("qntk", help="kernel statistics at random initializations")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--ansatz", type=Path, default=None)
    p.add_argument("--stage", choices=("SP0", "SP1", "SP2", "SP3"), default="SP3")
    p.add_argument("--layers", type=int, default=40)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(fn=_cmd_qntk)

    p = sub.add_parser("sweep", help="stage x depth x repeat convergence sweep")
    _add_common(p)
    p.add_argument("--config", type=Path, default=None,
                   help="key = value config file overriding the preset")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("dynamics", help="averaged decay of the training residual")
    _add_common(p)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--stage", choices=("SP2", "SP3"), default="SP3")
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--inits", type=int, default=None)
    p.add_argument("--eta", type=float, default=1e-4)
    p.add_argument("--max-iters", type=int, default=None)
    p.set_defaults(fn=_cmd_dynamics)

    p = sub.add_parser("automorphisms", help="graph automorphism group and orbits")
    _add_common(p)
    _add_problem(p)
    p.set_defaults(fn=_cmd_automorphisms)

    p = sub.add_parser("spectrum", help="exact spectrum of the problem Hamiltonian")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--levels", type=int, default=8)
    p.set_defaults(fn=_cmd_spectrum)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
