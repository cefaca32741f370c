"""Render compare.csv (learning curves) and eval.csv (generalization) as PNGs."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def curves(path: Path, out: Path) -> None:
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    for col in df.columns[1:]:
        style = "-" if col.startswith("curriculum") else "--"
        ax.plot(df["env_step"], df[col], style, label=col)
    ax.set_xlabel("env steps")
    ax.set_ylabel("mean QoE on the target task")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=120)


def generalization(paths: list[Path], out: Path) -> None:
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    for p in paths:
        df = pd.read_csv(p)
        for model, g in df.groupby("model"):
            a.plot(g["num_ues"], g["mean_qoe"], marker="o", label=model)
            b.plot(g["num_ues"], g["dropouts_per_step"], marker="o", label=model)
    a.set_xlabel("UEs")
    a.set_ylabel("mean QoE")
    b.set_xlabel("UEs")
    b.set_ylabel("dropouts per step")
    a.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=120)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--compare", type=Path, help="compare.csv")
    ap.add_argument("--eval", type=Path, nargs="*", default=[], help="eval.csv files")
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    if args.compare:
        curves(args.compare, args.out / "curves.png")
    if args.eval:
        generalization(args.eval, args.out / "generalization.png")


if __name__ == "__main__":
    main()
