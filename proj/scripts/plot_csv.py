#!/usr/bin/env python3
"""Quick look at a qra CSV: first column on x, every other column as a line."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--out", default=None, help="output image (default: <csv>.png)")
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("--logy", action="store_true")
    args = ap.parse_args()

    with open(args.csv) as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]

    x = [float(r[0]) for r in data]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for j in range(1, len(header)):
        y, xs = [], []
        for r, xv in zip(data, x):
            if j < len(r) and r[j] != "":
                xs.append(xv)
                y.append(float(r[j]))
        ax.plot(xs, y, label=header[j], lw=1.2)
    if args.logx:
        ax.set_xscale("log")
    if args.logy:
        ax.set_yscale("log")
    ax.set_xlabel(header[0])
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = args.out or args.csv + ".png"
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
