#!/usr/bin/env python3
"""Plot amplitude-frequency diagrams from branch CSVs.

Usage: python scripts/plot_branches.py branch_*.csv [-o plot.png]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("csvs", nargs="+")
    ap.add_argument("-o", "--output", default="branches.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.csvs:
        data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
        label = Path(path).stem.replace("branch_", "")
        ax.plot(data["nu"], np.abs(data["r"]), marker=".", lw=1, label=label)
    ax.set_xlabel("frequency")
    ax.set_ylabel("amplitude |r|")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"-> {args.output}")


if __name__ == "__main__":
    main()
