"""Optional post-processing: ``fracspde-plot report.csv out.png``.

Reads a CSV written by the CLI (comment lines skipped) and plots every
numeric column against the first one. Probe reports, recognized by their
``sigma, n`` columns, are drawn as estimate versus ``n`` per ``sigma`` on
log-log axes. Needs matplotlib (the ``plot`` extra).
"""

from __future__ import annotations

import argparse
import csv
import sys


def read_report(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    cols = {h: [] for h in header}
    for row in reader:
        for h, v in zip(header, row):
            try:
                cols[h].append(float(v))
            except ValueError:
                cols[h].append(float("nan"))
    return header, cols


def plot_report(csv_path, png_path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise SystemExit("fracspde-plot needs matplotlib; install the 'plot' extra") from exc
    header, cols = read_report(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    if header[:2] == ["sigma", "n"]:
        for s in sorted(set(cols["sigma"])):
            idx = [i for i, v in enumerate(cols["sigma"]) if v == s]
            ax.loglog([cols["n"][i] for i in idx], [cols["estimate"][i] for i in idx], "o-", label=f"sigma = {s:g}")
        ax.set_xlabel("n")
        ax.set_ylabel("estimate")
    else:
        x = cols[header[0]]
        for h in header[1:]:
            ax.plot(x, cols[h], label=h)
        ax.set_xlabel(header[0])
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="fracspde-plot", description="plot a fracspde CSV report")
    ap.add_argument("csv")
    ap.add_argument("png")
    args = ap.parse_args(argv)
    plot_report(args.csv, args.png)
    return 0


if __name__ == "__main__":
    sys.exit(main())
