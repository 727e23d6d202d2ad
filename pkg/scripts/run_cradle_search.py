#!/usr/bin/env python3
"""Search standing waves of the contact-coupled pendulum ring.

Usage: python scripts/run_cradle_search.py [n] [omega] [seed]
"""

import sys

import numpy as np

import ringwaves as rw
from ringwaves import cradle as cr


def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    omega = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0

    model = rw.build_model(n, rw.pendulum(omega), rw.hertz())
    opts = cr.CradleSearchOptions(seed=seed)
    total = 0
    for label in ("S", "St"):
        group = cr.standing_group(model, label)
        print(f"group {group.describe()}")
        for nu in (0.98 * omega, 1.02 * omega):
            found = cr.critical_points(model, group, nu, opts)
            total += found.count
            print(f"  nu={nu:.4f} ({found.side}): {found.count} distinct orbits")
            for p in found.points:
                print(
                    f"    amplitude={np.linalg.norm(p.u1):.4e} action={p.value:+.4e} "
                    f"residual={p.full_residual:.1e}"
                )
    print(f"total distinct orbits: {total} (guaranteed minimum {max(0, (n - 1) // 2)})")


if __name__ == "__main__":
    main()
