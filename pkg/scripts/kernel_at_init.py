#!/usr/bin/env python3
"""Kernel statistics at random initialization versus the average predictions.

Samples the kernel for the unpruned circuit and for the fully pruned one and
prints each against its prediction: the full-space average for the former,
the closure-restricted average for the latter.
"""

import argparse

import numpy as np

from symprune import experiments as exp
from symprune.hamiltonians import project_hamiltonian
from symprune.symmetry_analysis import (
    circuit_seed_state,
    invariant_subspace,
    monte_carlo_kernel,
    slot_generators,
    theory_fluctuation,
    theory_qbar,
    theory_qbar_s,
)
from symprune.training import LossSpec


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--m", type=int, default=0)
    ap.add_argument("--layers", type=int, default=40)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20260815)
    args = ap.parse_args()

    cfg = exp.desk_config(n=args.n, m=args.m)
    ansatze = exp.stage_ansatze(cfg, args.layers)
    emb = exp.problem_hamiltonian(cfg)
    spec = LossSpec(emb.full)

    for stage in ("SP0", "SP3"):
        a = ansatze[stage]
        mean, std, _ = monte_carlo_kernel(a, spec, args.trials, args.seed)
        basis = invariant_subspace(slot_generators(a), circuit_seed_state(a))
        h_star = project_hamiltonian(emb.full, basis)
        qbar_s = theory_qbar_s(a.num_free_params, h_star, basis.dimension)
        qbar_full = theory_qbar(a.num_free_params, emb.full)
        rel_std = float(np.sqrt(theory_fluctuation(
            a.num_free_params, h_star, basis.dimension))) / qbar_s
        print(f"{stage}: LK={a.num_free_params} d_eff={basis.dimension}")
        print(f"  sampled   mean={mean:.3f} rel_std={std / mean:.4f}")
        print(f"  predicted full-space={qbar_full:.3f} "
              f"restricted={qbar_s:.3f} rel_std={rel_std:.4f}")
        print(f"  mean ratio vs restricted: {mean / qbar_s:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
