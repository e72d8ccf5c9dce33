"""Plot a sweep CSV: mean completion time against rate, one line per (policy, B).

Usage: python scripts/plot_sweep.py sweep.csv sweep.png
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(src, dst):
    df = pd.read_csv(src)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (policy, b), g in df.groupby(["policy", "B"]):
        g = g.sort_values("rate")
        line = ax.errorbar(g["rate"], g["mean"], yerr=[g["mean"] - g["ci_low"], g["ci_high"] - g["mean"]],
                           fmt="o", ms=3, label=f"{policy}, B={b}")
        if g["exact"].notna().all():
            ax.plot(g["rate"], g["exact"], "-", color=line[0].get_color(), lw=1)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("service rate")
    ax.set_ylabel("mean completion time")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(dst, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:3])
