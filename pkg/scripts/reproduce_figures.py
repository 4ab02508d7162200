"""Write the figure data (fig1.csv, fig2.csv, fig3.csv) and print a short summary.

    python3 scripts/reproduce_figures.py --outdir figures
"""
import argparse
import csv
from collections import defaultdict

from gallager_mimo import cli


def summarize(path):
    curves = defaultdict(list)
    with open(path) as fh:
        for row in csv.DictReader(fh):
            curves[row["curve"]].append(row)
    for name, rows in curves.items():
        es = [float(r["E"]) for r in rows if r["E"] not in ("", "nan")]
        if es:
            print(f"  {name:28s} {len(rows):3d} rows  E in [{min(es):.4g}, {max(es):.4g}]")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="figures")
    ap.add_argument("--points", type=int, default=60)
    args = ap.parse_args()
    code = cli.main(["figures", "--outdir", args.outdir, "--points", str(args.points)])
    for name in ("fig1.csv", "fig3.csv"):
        print(name)
        summarize(f"{args.outdir}/{name}")
    print(f"fig2.csv written; exit code {code}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
