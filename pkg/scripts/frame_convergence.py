"""Refinement study of the reconstructed immersion: induced metric error,
Hopf round-trip error and holonomy defect for a given differential."""

import argparse
import json

import numpy as np

from afgauss.gauss_solver import solve
from afgauss.hyperbolic_disk import DiskGrid
from afgauss.immersion import (
    holonomy_defect,
    hopf_roundtrip_error,
    induced_metric_error,
    integrate_frame,
)
from afgauss.quad_diff import QuadDiff


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--phi", default="[[1.6, 0]]", help="QuadDiff JSON")
    ap.add_argument("--n-rho", type=int, nargs="+", default=[24, 48, 96, 192])
    ap.add_argument("--rho-max", type=float, default=8.0)
    args = ap.parse_args()

    phi = QuadDiff.from_json(args.phi)
    rows = []
    for n in args.n_rho:
        g = DiskGrid(n, 2 * n, args.rho_max)
        fr = integrate_frame(solve(phi, g).u, phi)
        rows.append([induced_metric_error(fr), hopf_roundtrip_error(fr), holonomy_defect(fr)])
        print(f"n_rho={n:<4} metric={rows[-1][0]:.3e} hopf={rows[-1][1]:.3e} "
              f"holonomy={rows[-1][2]:.3e} constraints={fr.constraint_error():.1e}")
    e = np.array(rows)
    orders = np.log2(e[:-1] / e[1:])
    print(json.dumps({"orders": {"metric": orders[:, 0].round(3).tolist(),
                                 "hopf": orders[:, 1].round(3).tolist(),
                                 "holonomy": orders[:, 2].round(3).tolist()}}, indent=2))


if __name__ == "__main__":
    main()
