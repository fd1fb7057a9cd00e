#!/usr/bin/env python3
"""Regenerate data/vps_seed.csv.

Twelve equidistant conveyor runtimes, three repetitions each, for the three
normalized popcorn-plant objectives (energy, processing time, corn amount).
The curves are hand-designed: energy rises with runtime, processing time falls,
corn amount has an interior optimum. Processing time and corn amount conflict
mildly over the middle of the range.
"""
import csv
import math
import pathlib

import numpy as np

LO, HI = 500.0, 7000.0
SETTINGS = 12
REPS = 3
NOISE_SD = 0.02


def energy(u):
    return 0.15 + 0.55 * u + 0.08 * math.sin(5.0 * math.pi * u)


def processing_time(u):
    return 0.10 + 0.75 * math.exp(-3.2 * u) + 0.06 * math.sin(7.0 * math.pi * u + 0.4)


def corn_amount(u):
    return 0.12 + 1.6 * (u - 0.58) ** 2 + 0.07 * math.cos(9.0 * math.pi * u)


def main():
    rng = np.random.default_rng(20210101)
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "vps_seed.csv"
    rows = []
    for rep in range(1, REPS + 1):
        for i in range(SETTINGS):
            x = LO + (HI - LO) * i / (SETTINGS - 1)
            u = (x - LO) / (HI - LO)
            f = [energy(u), processing_time(u), corn_amount(u)]
            f = [min(1.0, max(0.0, v + rng.normal(0.0, NOISE_SD))) for v in f]
            rows.append((x, *f, rep))
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f1", "f2", "f3", "rep"])
        for x, f1, f2, f3, rep in rows:
            w.writerow([f"{x:.6f}", f"{f1:.6f}", f"{f2:.6f}", f"{f3:.6f}", rep])


if __name__ == "__main__":
    main()
