"""Plot outputs of `dpswd sensitivity` and `dpswd toy`.

    python docs/plot.py sensitivity OUT_DIR
    python docs/plot.py toy TOY_CSV [TOY_CSV ...]

Needs matplotlib. Figures are written next to the inputs as PNG.
"""
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def sensitivity(out_dir):
    out_dir = Path(out_dir)
    with open(out_dir / "sensitivity_samples.csv", newline="") as f:
        h = [float(r["h"]) for r in csv.DictReader(f)]
    with open(out_dir / "sensitivity_summary.json") as f:
        s = json.load(f)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(h, bins=60, color="0.6")
    ax.axvline(s["empirical_quantile"], color="k", ls=":", label="empirical quantile")
    if s.get("clt") is not None:
        ax.axvline(s["clt"], color="C0", label="CLT bound")
    if s.get("bernstein") is not None:
        ax.axvline(s["bernstein"], color="C3", label="Bernstein bound")
    ax.set_xlabel("sum of squared projections")
    ax.set_title(f"d={s['d']}, k={s['k']}, δ={s['delta']:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "sensitivity.png", dpi=150)


def toy(paths):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, p in enumerate(paths):
        with open(p, newline="") as f:
            rows = list(csv.DictReader(f))
        c = [float(r["c"]) for r in rows]
        for col, ls in (("swd", "-"), ("dpswd", "--")):
            m = [float(r[f"{col}_mean"]) for r in rows]
            sd = [float(r[f"{col}_std"]) for r in rows]
            ax.errorbar(c, m, yerr=sd, ls=ls, color=f"C{i}", capsize=2,
                        label=f"{Path(p).stem} {col}")
    ax.set_xlabel("shift c")
    ax.set_ylabel("distance")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(Path(paths[0]).with_suffix(".png"), dpi=150)


if __name__ == "__main__":
    if len(sys.argv) < 3 or sys.argv[1] not in ("sensitivity", "toy"):
        sys.exit(__doc__)
    if sys.argv[1] == "sensitivity":
        sensitivity(sys.argv[2])
    else:
        toy(sys.argv[2:])
