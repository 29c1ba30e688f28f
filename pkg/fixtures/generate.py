"""Regenerate the synthetic fixture CSVs in this directory.

    python3 fixtures/generate.py

The outputs are committed; this script documents how they were made.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from thermoforge import data as D

HERE = Path(__file__).resolve().parent
GEOMETRIES = np.array(["flat", "threaded"])


def _common(rng, n):
    return {
        D.TOOL_GEOMETRY: GEOMETRIES[rng.integers(0, 2, n)],
        D.TOOL_DIAMETER: rng.choice([38.0, 40.0], n),
        D.POWDER_SIZE: rng.choice([45.0, 90.0], n),
    }


def _write(path, cols):
    n = len(cols[D.RR])
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(D.CSV_COLUMNS) + "\n")
        for i in range(n):
            cells = []
            for name in D.CSV_COLUMNS:
                v = cols[name][i]
                if name == D.TOOL_GEOMETRY:
                    cells.append(str(v))
                elif name == D.DEPOSITION_QUALITY:
                    cells.append(str(int(v)))
                else:
                    cells.append(repr(round(float(v), 9)))
            fh.write(",".join(cells) + "\n")


def regression_fixture(seed=42, n=40):
    """Peak temperature as a smooth nonlinear function of RR, TS and DMFR plus noise."""
    rng = np.random.default_rng(seed)
    rr = rng.uniform(200.0, 600.0, n)
    ts = rng.uniform(60.0, 240.0, n)
    dmfr = rng.uniform(500.0, 2000.0, n)
    u, v, w = (rr - 200.0) / 400.0, (ts - 60.0) / 180.0, (dmfr - 500.0) / 1500.0
    pt = 320.0 + 120.0 * np.sin(math.pi * u / 1.2) - 70.0 * v**2 + 40.0 * w * u + rng.normal(0.0, 6.0, n)
    cols = {D.RR: rr, D.TS: ts, D.DMFR: dmfr, D.PEAK_TEMPERATURE: pt,
            D.DEPOSITION_QUALITY: (pt > np.median(pt)).astype(int)}
    cols.update(_common(rng, n))
    return cols


def classification_fixture(seed=42, n=30):
    """Quality decided by DMFR with a gap between the classes, so a
    hyperplane separates them with margin."""
    rng = np.random.default_rng(seed)
    quality = np.tile([0, 1], n // 2 + 1)[:n]
    rng.shuffle(quality)
    dmfr = np.where(quality == 1, rng.uniform(1300.0, 2000.0, n), rng.uniform(500.0, 1100.0, n))
    cols = {D.RR: rng.uniform(200.0, 600.0, n), D.TS: rng.uniform(60.0, 240.0, n), D.DMFR: dmfr,
            D.PEAK_TEMPERATURE: rng.uniform(250.0, 450.0, n), D.DEPOSITION_QUALITY: quality}
    cols.update(_common(rng, n))
    return cols


def advection_fixture(seed=42, n=30, c=1.0):
    """Targets from u = x - t / c on scaled coordinates.

    RR = 200 + 400 x and TS = 60 + 180 t; the four corners of the unit box
    are included so min-max scaling of the whole fixture recovers (x, t)
    exactly.  The stored temperature is 400 + 100 u, an affine map that
    z-scoring removes.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, n)
    t = rng.uniform(0.0, 1.0, n)
    x[:4] = [0.0, 1.0, 0.0, 1.0]
    t[:4] = [0.0, 0.0, 1.0, 1.0]
    pt = 400.0 + 100.0 * (x - t / c)
    cols = {D.RR: 200.0 + 400.0 * x, D.TS: 60.0 + 180.0 * t, D.DMFR: rng.uniform(500.0, 2000.0, n),
            D.PEAK_TEMPERATURE: pt, D.DEPOSITION_QUALITY: (pt > 400.0).astype(int)}
    cols.update(_common(rng, n))
    return cols


def main():
    _write(HERE / "regression.csv", regression_fixture())
    _write(HERE / "classification.csv", classification_fixture())
    _write(HERE / "advection.csv", advection_fixture())


if __name__ == "__main__":
    main()
