#!/usr/bin/env python3
"""Continue all wave families of a pendulum ring and dump branch CSVs.

Usage: python scripts/run_pendulum_branches.py [n] [omega] [outdir]
"""

import sys
from pathlib import Path

import numpy as np

import ringwaves as rw
from ringwaves import continuation as ct


def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    omega = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
    outdir = Path(sys.argv[3]) if len(sys.argv) > 3 else Path("out_pendulum")
    outdir.mkdir(parents=True, exist_ok=True)

    model = rw.build_model(n, rw.pendulum(omega), rw.harmonic())
    inventory = ct.bifurcation_inventory(model)
    print(f"pendulum ring n={n}, omega={omega}")
    for entry in inventory:
        print(f"  k={entry.k}: nu={entry.nu:.6f} {entry.status} families={entry.families}")

    opts = ct.ContinuationOptions(max_amplitude=0.2, step_budget=300)
    for entry in inventory:
        for family in entry.families:
            br = ct.continue_branch(model, entry.k, family, opts)
            rows = np.array([[p.r, p.nu, p.residual, p.sym_residual] for p in br.points])
            path = outdir / f"branch_{family}_k{entry.k}.csv"
            np.savetxt(
                path, rows, delimiter=",", comments="",
                header="r,nu,residual,sym_residual",
            )
            print(
                f"  {family}_k{entry.k}: {len(br.points)} points, "
                f"terminated by {br.termination} -> {path}"
            )


if __name__ == "__main__":
    main()
