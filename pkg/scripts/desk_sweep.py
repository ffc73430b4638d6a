#!/usr/bin/env python3
"""Run the desk-scale convergence sweep and write all artifacts.

Completes in a few minutes.  The sweep CSV doubles as a checkpoint: rerunning
with the same --out-dir resumes instead of recomputing.
"""

import argparse
import dataclasses
from pathlib import Path

from symprune import experiments as exp


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("results/desk_sweep"))
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    cfg = exp.desk_config()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    exp.save_config(cfg, args.out_dir / "config.txt")

    def progress(row, done, total):
        print(f"[{done}/{total}] {row.stage} L={row.layers} LK={row.lk_free} "
              f"rep={row.repeat} loss={row.final_loss} status={row.status}",
              flush=True)

    result = exp.run_sweep(cfg, out_path=args.out_dir / "sweep.csv",
                           workers=args.workers, progress=progress)
    for p in exp.emit_outputs(result, args.out_dir):
        print("wrote", p)
    for stage in cfg.stage_set:
        crit = exp.critical_point(result, stage)
        if crit is None:
            print(f"{stage}: critical point not found")
        else:
            budget, depth = exp.hardware_metrics(result, stage)
            print(f"{stage}: critical LK={crit} measurements/step={budget} "
                  f"depth={depth}")
    return 0 if result.all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
