#!/usr/bin/env python3
"""Regenerate the bundled synthetic stand-in datasets.

The three stand-ins mirror the row counts and feature structure of the three
small benchmark datasets (yacht resistance, concrete slump, auto fuel
economy) so the harness and its acceptance gates can run without the
user-supplied real files.  Generation is fully seeded; the CSVs are checked
in, so this script only needs to run when the recipes change.
"""

from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "alrbench" / "data"


def _write(path, header, columns, fmt="%.6g"):
    rows = np.column_stack(columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else fmt % cell
                              for cell in row) + "\n")
    print(f"wrote {path} ({rows.shape[0]} rows)")


def make_resistance(rng):
    """308 rows, 6 numeric features, strongly nonlinear speed response."""
    n = 308
    froude = np.tile(np.linspace(0.125, 0.45, 14), 22)
    lcb = np.repeat(rng.uniform(-5.0, 0.0, 22), 14)
    prismatic = np.repeat(rng.uniform(0.53, 0.6, 22), 14)
    length_disp = np.repeat(rng.uniform(4.34, 5.14, 22), 14)
    beam_draught = np.repeat(rng.uniform(2.81, 5.35, 22), 14)
    length_beam = np.repeat(rng.uniform(2.73, 3.64, 22), 14)
    hull = (0.6 * (prismatic - 0.565) / 0.035
            + 0.25 * (beam_draught - 4.0) / 1.3
            - 0.2 * (length_disp - 4.74) / 0.4
            + 0.1 * lcb / 5.0)
    y = 62.0 * froude ** 3.2 * (1.0 + 0.35 * hull) + 0.4 * froude * np.abs(lcb)
    y = y * (1.0 + 0.08 * rng.normal(size=n)) + 0.05 * rng.normal(size=n)
    _write(DATA_DIR / "synthetic-resistance.csv",
           ["lcb", "prismatic", "length_disp", "beam_draught", "length_beam",
            "froude", "resistance"],
           [lcb, prismatic, length_disp, beam_draught, length_beam, froude, y])


def make_mixture(rng):
    """103 rows, 7 correlated numeric mixture features."""
    n = 103
    cement = rng.uniform(140, 370, n)
    slag = rng.uniform(0, 190, n)
    fly_ash = rng.uniform(0, 260, n)
    water = rng.uniform(160, 240, n) + 0.05 * (cement - 255)
    sp = rng.uniform(4, 19, n)
    coarse = rng.uniform(700, 1050, n) - 0.3 * fly_ash
    fine = rng.uniform(640, 900, n) - 0.2 * slag
    binder = cement + 0.9 * slag + 0.6 * fly_ash
    wb = water / binder
    y = (12.0 + 0.085 * binder - 38.0 * (wb - 0.45)
         + 0.002 * sp * cement / 10.0
         - 0.004 * (coarse - 875) + 8.0 * (wb - 0.45) ** 2)
    y = y + 2.2 * rng.normal(size=n)
    _write(DATA_DIR / "synthetic-mixture.csv",
           ["cement", "slag", "fly_ash", "water", "sp", "coarse_aggr",
            "fine_aggr", "strength"],
           [cement, slag, fly_ash, water, sp, coarse, fine, y])


def make_fuel(rng):
    """392 rows, 6 numeric + one 3-level categorical (origin)."""
    n = 392
    origin = rng.choice(["US", "Europe", "Japan"], size=n, p=[0.62, 0.18, 0.2])
    big = origin == "US"
    cylinders = np.where(big, rng.choice([4, 6, 8], n, p=[0.35, 0.35, 0.3]),
                         rng.choice([4, 6], n, p=[0.85, 0.15])).astype(float)
    displacement = (40.0 * cylinders + rng.uniform(-30, 60, n)
                    + np.where(big, 40.0, 0.0))
    horsepower = 0.45 * displacement + rng.uniform(20, 60, n)
    weight = 1500 + 9.0 * displacement + 2.5 * horsepower + rng.uniform(-200, 200, n)
    acceleration = 28.0 - 0.004 * weight - 0.03 * horsepower + rng.uniform(-2, 2, n)
    model_year = rng.integers(70, 83, n).astype(float)
    origin_bonus = np.select([origin == "Japan", origin == "Europe"],
                             [3.0, 1.5], default=0.0)
    y = (11000.0 / weight * 8.5 + 0.65 * (model_year - 70)
         - 0.025 * horsepower + origin_bonus + 1.2 * rng.normal(size=n))
    cols = [cylinders, displacement, horsepower, weight, acceleration,
            model_year]
    rows = np.column_stack([np.char.mod("%.6g", np.column_stack(cols)),
                            origin[:, None],
                            np.char.mod("%.6g", y[:, None])])
    path = DATA_DIR / "synthetic-fuel.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("cylinders,displacement,horsepower,weight,acceleration,"
                 "model_year,origin,mpg\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(f"wrote {path} ({n} rows)")


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    make_resistance(np.random.default_rng(308))
    make_mixture(np.random.default_rng(103))
    make_fuel(np.random.default_rng(392))
