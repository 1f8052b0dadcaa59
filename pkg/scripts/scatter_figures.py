"""Write first-two-principal-component scatter data for every configured
dataset, before and after one KMFOS pass, and a PNG if matplotlib is present.

usage: python scripts/scatter_figures.py [--config configs/promise.json] [--k 5 --kn 5]
"""

import argparse
import csv
from pathlib import Path

from defectbench.bench import load_config
from defectbench.bench.fetch import ingest
from defectbench.bench.scatter import emit_scatter

ROOT = Path(__file__).resolve().parents[1]


def plot(paths, png):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    fig, axes = plt.subplots(1, len(paths), figsize=(5 * len(paths), 4.5), squeeze=False)
    for ax, (title, path) in zip(axes[0], paths):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        for label, colour in (("0", "tab:blue"), ("1", "tab:red")):
            pts = [(float(r["pc1"]), float(r["pc2"])) for r in rows if r["label"] == label]
            ax.scatter(*zip(*pts), s=4, c=colour, label="defective" if label == "1" else "clean")
        ax.set_title(title)
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        ax.legend()
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return True


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "promise.json")
    p.add_argument("--out", default=ROOT / "results" / "scatter")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--kn", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for entry in cfg.datasets:
        D = ingest(cfg, entry)
        before = emit_scatter(D, "before", out / f"{D.name}_before.csv", cfg.variance_target)
        after = emit_scatter(D, "after", out / f"{D.name}_after.csv", cfg.variance_target,
                             args.k, args.kn, args.seed)
        r0, r1 = after.kmfos.filter.removed_by_class
        print(f"{D.name}: {before.rows} rows before, {after.rows} after "
              f"({len(after.kmfos.synthetic)} synthetic, CLNI removed {r0} clean / {r1} defective)")
        if plot([(f"{D.name} before", before.path), (f"{D.name} after", after.path)],
                out / f"{D.name}_scatter.png"):
            print(f"  plot: {out / (D.name + '_scatter.png')}")


if __name__ == "__main__":
    main()
