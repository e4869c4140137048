"""Seeded Monte-Carlo sweep of segment scans with concavity and u-inequality
checks; prints a summary and writes one JSON record per scan."""

import argparse
import json
import logging
from pathlib import Path

from afgauss.convexity_lab import concavity_sweep
from afgauss.hyperbolic_disk import DiskGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-scans", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-t", type=int, default=17)
    ap.add_argument("--grid", default="96,192,8")
    ap.add_argument("--max-norm", type=float, default=0.45)
    ap.add_argument("--max-degree", type=int, default=4)
    ap.add_argument("--out", default="results/concavity_sweep.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    n_rho, n_theta, rho_max = args.grid.split(",")
    g = DiskGrid(int(n_rho), int(n_theta), float(rho_max))

    def progress(k, scan, report):
        print(f"scan {k:3d}: verdict={report.verdict} d2={report.max_second_difference:+.2e} "
              f"ueq={report.max_ueq_violation:+.2e} tol={report.tol:.2e}")

    records = concavity_sweep(args.n_scans, args.seed, g, n_t=args.n_t,
                              norm_range=(0.05, args.max_norm), max_degree=args.max_degree,
                              on_scan=progress)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(records, indent=2, default=float))
    n_ok = sum(r["verdict"] for r in records)
    print(f"{n_ok}/{len(records)} scans concave; wrote {out}")


if __name__ == "__main__":
    main()
