"""Locate where rays s -> s phi leave the discrete U_1: continuation stall
parameter s* times the C0 norm, for random directions. Compares against the
guaranteed ball (radius 1/2) and the excluded region (radius 1)."""

import argparse
import json
from pathlib import Path

import numpy as np

from afgauss.errors import ContinuationStalled
from afgauss.gauss_solver import SolveParams, continuation_solve
from afgauss.hyperbolic_disk import DiskGrid
from afgauss.quad_diff import c0_norm, random_at_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", default="48,96,8")
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--out", default="results/ray_exit.json")
    args = ap.parse_args()

    n_rho, n_theta, rho_max = args.grid.split(",")
    g = DiskGrid(int(n_rho), int(n_theta), float(rho_max))
    params = SolveParams(continuation_steps=args.steps, max_bisections=10)
    rng = np.random.default_rng(args.seed)
    radii = []
    for k in range(args.n):
        phi = random_at_norm(rng, g, 1.0, 6)
        try:
            continuation_solve(phi, g, params)
            s_star = 1.0
        except ContinuationStalled as exc:
            s_star = exc.s_star
        radii.append(s_star * c0_norm(phi, g))
        print(f"{k:3d} degree={phi.degree} exit radius ~ {radii[-1]:.4f}")
    summary = {"grid": args.grid, "seed": args.seed, "exit_radii": radii,
               "min": min(radii), "max": max(radii)}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(summary, indent=2))
    print(f"exit radii in [{summary['min']:.4f}, {summary['max']:.4f}]; wrote {out}")


if __name__ == "__main__":
    main()
