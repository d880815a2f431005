#!/usr/bin/env python3
"""Recompute the fitted slope of a study CSV, independently of the package.

Formula (documented in the README): least-squares fit of log(residual)
against log(h) over the last max(2, L-1) rows with positive residual,
capped at 3 rows. Usage: check_slopes.py file.csv
"""
import csv
import math
import sys


def fitted_slope(rows):
    pts = [(float(r["h"]), float(r["residual"])) for r in rows
           if float(r["residual"]) > 0]
    if len(pts) < 2:
        return float("nan")
    take = max(2, min(len(pts) - 1, 3))
    pts = pts[-take:]
    xs = [math.log(h) for h, _ in pts]
    ys = [math.log(e) for _, e in pts]
    n = len(xs)
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    num = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    den = sum((x - xbar) ** 2 for x in xs)
    return num / den


def main():
    with open(sys.argv[1], newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{fitted_slope(rows):.12g}")


if __name__ == "__main__":
    main()
