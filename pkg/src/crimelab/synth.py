"""Seeded Gaussian-blob datasets written in the raw incident CSV layout."""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from crimelab.ingest import OFFENSE_CATEGORIES, RAW_FIELDS
from crimelab.rng import make_rng

# Blob dimension i is written to BLOB_COLUMNS[i] as origin + scale * value.
BLOB_COLUMNS = (
    ("geo_lon", -104.95, 0.1),
    ("geo_lat", 39.70, 0.1),
    ("geo_x", 3_140_000.0, 10_000.0),
    ("geo_y", 1_690_000.0, 10_000.0),
)
MAX_DIMS = len(BLOB_COLUMNS)
_FIXED_TIME = dt.datetime(2018, 6, 15, 12, 0, 0)
_TIME_START = dt.datetime(2014, 1, 2)
_TIME_SPAN_HOURS = 5 * 365 * 24


def blobs(counts, dims: int = 2, spread: float = 0.1, seed: int = 0):
    """Gaussian blobs: class ``c`` has ``counts[c]`` rows around a centre in the unit cube.

    Returns ``(X, y)`` with rows grouped by class.
    """
    counts = [int(c) for c in counts]
    if not counts or min(counts) < 1:
        raise ValueError("every class needs at least one row")
    if dims < 1:
        raise ValueError("dims must be >= 1")
    if spread < 0:
        raise ValueError("spread must be non-negative")
    centres = make_rng(seed, 0).uniform(0.0, 1.0, size=(len(counts), dims))
    X = np.vstack([centres[c] + spread * make_rng(seed, 1, c).standard_normal((n, dims))
                   for c, n in enumerate(counts)])
    y = np.repeat(np.arange(len(counts)), counts)
    return X, y


def generate_synthetic(path, counts, dims: int = 2, spread: float = 0.1, seed: int = 0,
                       class_names=None, vary_time: bool = False) -> Path:
    """Write a blob dataset as a raw incident CSV that the ingest chain accepts.

    Blob coordinates land in the geographic columns; every other field is
    constant unless ``vary_time`` draws seeded report times.  Class names
    default to the first ``len(counts)`` offense categories, so codes equal
    blob indices.
    """
    if dims > MAX_DIMS:
        raise ValueError(f"at most {MAX_DIMS} blob dimensions map onto geographic columns")
    names = list(class_names) if class_names is not None else list(OFFENSE_CATEGORIES[:len(counts)])
    if len(names) != len(counts):
        raise ValueError("need one class name per count")
    if sorted(names) != names:
        raise ValueError("class names must be in lexicographic order so codes match blob indices")
    X, y = blobs(counts, dims, spread, seed)
    order = make_rng(seed, 2).permutation(y.size)
    X, y = X[order], y[order]
    if vary_time:
        hours = make_rng(seed, 3).integers(0, _TIME_SPAN_HOURS, size=y.size)
        times = [_TIME_START + dt.timedelta(hours=int(h)) for h in hours]
    else:
        times = [_FIXED_TIME] * y.size

    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_FIELDS)
        for i in range(y.size):
            row = {
                "incident_id": str(i + 1), "offense_id": str(i + 1), "offense_code": "1000",
                "offense_code_extension": "0", "offense_type_id": "synthetic",
                "offense_category_id": names[y[i]],
                "first_occurrence_date": times[i].strftime("%Y-%m-%d %H:%M:%S"),
                "last_occurrence_date": "",
                "reported_date": times[i].strftime("%Y-%m-%d %H:%M:%S"),
                "incident_address": "",
                "geo_x": "3140000.0", "geo_y": "1690000.0", "geo_lon": "-104.95", "geo_lat": "39.7",
                "district_id": "1", "precinct_id": "111", "neighborhood_id": "synthetic",
                "is_crime": "1", "is_traffic": "0",
            }
            for j in range(dims):
                col, origin, scale = BLOB_COLUMNS[j]
                row[col] = repr(float(origin + scale * X[i, j]))
            w.writerow([row[f] for f in RAW_FIELDS])
    return path
