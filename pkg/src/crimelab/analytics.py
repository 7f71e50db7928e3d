"""Descriptive statistics over an encoded table: pivot counts and geographic grid counts."""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crimelab.ingest import DEFAULT_SENTINEL
from crimelab.table import FeatureTable

DEFAULT_CELL = 0.005
# (lat_min, lat_max, lon_min, lon_max) around Denver
DENVER_BBOX = (39.5, 40.0, -105.2, -104.6)
CATEGORY = "category"


@dataclass(frozen=True)
class RowFilter:
    """Conjunction of ``column == value`` tests; ``category`` matches class names."""

    equals: tuple[tuple[str, object], ...] = ()

    @classmethod
    def of(cls, **conds) -> "RowFilter":
        return cls(tuple(sorted(conds.items())))

    def describe(self) -> str:
        return " and ".join(f"{k}={v}" for k, v in self.equals) or "all rows"

    def mask(self, table: FeatureTable) -> np.ndarray:
        keep = np.ones(table.n_rows, dtype=bool)
        for name, value in self.equals:
            keep &= axis_values(table, name) == _coerce(table, name, value)
        return keep


def _coerce(table, name, value):
    if name == CATEGORY and isinstance(value, str):
        if value not in table.class_names:
            raise ValueError(f"unknown category {value!r}")
        return table.class_names.index(value)
    if isinstance(value, str) and name in table.code_maps:
        return table.code_maps[name][value]
    return float(value)


def axis_values(table: FeatureTable, axis: str) -> np.ndarray:
    if axis == CATEGORY:
        return table.labels
    if axis not in table.feature_names:
        raise ValueError(f"unknown axis {axis!r}; expected {CATEGORY!r} or one of {table.feature_names}")
    return table.column(axis)


def _axis_label(table, axis, value):
    if axis == CATEGORY:
        return table.class_names[int(value)]
    if axis in table.code_maps:
        return table.decode(axis, int(value))
    return int(value) if float(value).is_integer() else float(value)


@dataclass(frozen=True)
class PivotTable:
    """Counts (or averages) keyed by row value, optionally split by a column axis.

    ``cells`` maps ``row_key -> value`` without a column axis and
    ``(row_key, col_key) -> value`` with one.
    """

    row_axis: str
    col_axis: str | None
    cells: dict
    filter: str
    n_rows: int
    n_selected: int
    value: str = "count"

    def row_keys(self) -> list:
        keys = {k[0] if self.col_axis else k for k in self.cells}
        return sorted(keys)

    def col_keys(self) -> list:
        return sorted({k[1] for k in self.cells}) if self.col_axis else []

    def marginal(self) -> dict:
        """Totals over the column axis."""
        if not self.col_axis:
            return dict(self.cells)
        out: dict = {}
        for (r, _), v in self.cells.items():
            out[r] = out.get(r, 0) + v
        return out

    def argmax(self):
        m = self.marginal()
        return max(sorted(m), key=lambda k: m[k])

    def argmin(self):
        m = self.marginal()
        return min(sorted(m), key=lambda k: m[k])

    def total(self):
        return sum(self.cells.values())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if self.col_axis:
                cols = self.col_keys()
                w.writerow([self.row_axis, *cols])
                for r in self.row_keys():
                    w.writerow([_fmt(r), *(_fmt(self.cells.get((r, c), 0)) for c in cols)])
            else:
                w.writerow([self.row_axis, self.value])
                for r in self.row_keys():
                    w.writerow([_fmt(r), _fmt(self.cells[r])])

    def metadata(self) -> dict:
        return {"row_axis": self.row_axis, "col_axis": self.col_axis, "filter": self.filter,
                "n_rows": self.n_rows, "n_selected": self.n_selected, "value": self.value}


def _fmt(v):
    if isinstance(v, tuple):
        return "-".join(f"{x:02d}" for x in v)
    if isinstance(v, float):
        return repr(v)
    return v


def pivot_counts(table: FeatureTable, row_axis: str, col_axis: str | None = None,
                 row_filter: RowFilter | None = None) -> PivotTable:
    row_filter = row_filter or RowFilter()
    keep = row_filter.mask(table)
    rows = axis_values(table, row_axis)[keep]
    cells: dict = {}
    if col_axis is None:
        values, counts = np.unique(rows, return_counts=True)
        for v, c in zip(values, counts):
            cells[_axis_label(table, row_axis, v)] = int(c)
    else:
        cols = axis_values(table, col_axis)[keep]
        pairs, counts = np.unique(np.stack([rows, cols.astype(np.float64)], axis=1), axis=0, return_counts=True)
        for (r, c), n in zip(pairs, counts):
            cells[(_axis_label(table, row_axis, r), _axis_label(table, col_axis, c))] = int(n)
    return PivotTable(row_axis, col_axis, cells, row_filter.describe(), table.n_rows, int(keep.sum()))


def _window_years(first: dt.date, last: dt.date, month: int, day: int) -> int:
    n = 0
    for year in range(first.year, last.year + 1):
        try:
            d = dt.date(year, month, day)
        except ValueError:
            continue
        if first <= d <= last:
            n += 1
    return n


def daily_average(table: FeatureTable, row_filter: RowFilter | None = None) -> PivotTable:
    """Mean count per calendar day over the years whose data window contains that day.

    The window runs from the earliest to the latest date in the table, so a
    partial first or last year only contributes the days it covers.  Feb 29 is
    averaged over leap years only.  Days never inside the window are absent;
    window days with no rows are 0.0.
    """
    row_filter = row_filter or RowFilter()
    if table.n_rows == 0:
        return PivotTable("month_day", None, {}, row_filter.describe(), 0, 0, "mean_per_year")
    y = table.column("year").astype(np.int64)
    m = table.column("month").astype(np.int64)
    d = table.column("day").astype(np.int64)
    stamps = y * 10_000 + m * 100 + d
    lo, hi = int(stamps.min()), int(stamps.max())
    first = dt.date(lo // 10_000, lo // 100 % 100, lo % 100)
    last = dt.date(hi // 10_000, hi // 100 % 100, hi % 100)
    keep = row_filter.mask(table)
    md, counts = np.unique((m * 100 + d)[keep], return_counts=True)
    totals = dict(zip(md.tolist(), counts.tolist()))
    cells = {}
    for month in range(1, 13):
        for day in range(1, 32):
            years = _window_years(first, last, month, day)
            if years:
                cells[(month, day)] = totals.get(month * 100 + day, 0) / years
    return PivotTable("month_day", None, cells, row_filter.describe(), table.n_rows, int(keep.sum()),
                      "mean_per_year")


@dataclass(frozen=True)
class GeoGrid:
    bbox: tuple[float, float, float, float]
    cell_size: float
    counts: dict[tuple[int, int], int]
    filter: str
    n_selected: int
    excluded: dict[str, int] = field(default_factory=dict)

    def total(self) -> int:
        return sum(self.counts.values())

    def cell_bounds(self, cell: tuple[int, int]) -> tuple[float, float, float, float]:
        i, j = cell
        s = self.cell_size
        return (i * s, (i + 1) * s, j * s, (j + 1) * s)

    def to_geojson(self) -> dict:
        features = []
        for cell in sorted(self.counts):
            lat0, lat1, lon0, lon1 = self.cell_bounds(cell)
            ring = [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]
            features.append({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"cell": list(cell), "count": self.counts[cell]},
            })
        return {"type": "FeatureCollection", "features": features,
                "properties": {"cell_size": self.cell_size, "bbox": list(self.bbox), "filter": self.filter,
                               "n_selected": self.n_selected, "excluded": dict(sorted(self.excluded.items()))}}

    def write_geojson(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_geojson(), sort_keys=True) + "\n", encoding="utf-8")


def geo_grid_counts(table: FeatureTable, cell_size: float = DEFAULT_CELL, row_filter: RowFilter | None = None,
                    bbox=DENVER_BBOX, sentinel: float = DEFAULT_SENTINEL) -> GeoGrid:
    """Count rows per ``(floor(lat / cell), floor(lon / cell))`` cell.

    Rows with a sentinel or non-finite coordinate, or outside ``bbox``, are
    not counted; ``excluded`` reports how many fell in each bucket.
    """
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    row_filter = row_filter or RowFilter()
    keep = row_filter.mask(table)
    lat = table.column("geo_lat")[keep]
    lon = table.column("geo_lon")[keep]
    missing = (lat == sentinel) | (lon == sentinel) | ~np.isfinite(lat) | ~np.isfinite(lon)
    lat_min, lat_max, lon_min, lon_max = bbox
    inside = ~missing & (lat >= lat_min) & (lat <= lat_max) & (lon >= lon_min) & (lon <= lon_max)
    ci = np.floor(lat[inside] / cell_size).astype(np.int64)
    cj = np.floor(lon[inside] / cell_size).astype(np.int64)
    cells, counts = np.unique(np.stack([ci, cj], axis=1), axis=0, return_counts=True)
    grid = {(int(a), int(b)): int(n) for (a, b), n in zip(cells, counts)}
    excluded = {"missing_or_sentinel": int(missing.sum()), "outside_bbox": int((~missing & ~inside).sum())}
    return GeoGrid(tuple(bbox), cell_size, grid, row_filter.describe(), int(keep.sum()), excluded)


# --- figure exports ----------------------------------------------------------

def figure_exports(table: FeatureTable, traffic_category: str = "traffic-accident") -> dict:
    """The pivot and grid products, keyed by output file stem."""
    has_traffic = traffic_category in table.class_names
    traffic = RowFilter.of(category=traffic_category) if has_traffic else None
    out = {
        "fig1_category_counts": pivot_counts(table, CATEGORY),
        "fig3_district_counts": pivot_counts(table, "district_id", CATEGORY),
        "fig4_month_by_year": pivot_counts(table, "month", "year"),
        "fig5_hour_by_category": pivot_counts(table, "hour", CATEGORY),
        "fig7_daily_average": daily_average(table),
        "fig2_all_incidents": geo_grid_counts(table),
        "fig8_traffic_district3": geo_grid_counts(table, row_filter=RowFilter.of(is_traffic=1, district_id=3)),
        "fig9_traffic_and_crime": geo_grid_counts(table, row_filter=RowFilter.of(is_traffic=1, is_crime=1)),
    }
    if traffic is not None:
        out["fig6_traffic_by_hour"] = pivot_counts(table, "hour", row_filter=traffic)
    return dict(sorted(out.items()))


def write_exports(table: FeatureTable, out_dir) -> list[Path]:
    """Write CSV pivots and GeoJSON grids plus an ``index.json`` of their metadata."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    index = {}
    for stem, product in figure_exports(table).items():
        if isinstance(product, GeoGrid):
            path = out_dir / f"{stem}.geojson"
            product.write_geojson(path)
            index[stem] = {"file": path.name, "filter": product.filter, "total": product.total(),
                           "excluded": product.excluded}
        else:
            path = out_dir / f"{stem}.csv"
            product.to_csv(path)
            meta = product.metadata()
            if product.cells:
                meta["argmax"] = _fmt(product.argmax())
                meta["argmin"] = _fmt(product.argmin())
            index[stem] = {"file": path.name, **meta}
        written.append(path)
    idx = out_dir / "index.json"
    idx.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(idx)
    return written


def hour_of_max(table: FeatureTable) -> int:
    return int(pivot_counts(table, "hour").argmax())


def modal_category(table: FeatureTable) -> tuple[str, int]:
    p = pivot_counts(table, CATEGORY)
    k = p.argmax()
    return k, p.cells[k]


__all__ = [
    "CATEGORY", "DEFAULT_CELL", "DENVER_BBOX", "GeoGrid", "PivotTable", "RowFilter", "axis_values",
    "daily_average", "figure_exports", "geo_grid_counts", "hour_of_max", "modal_category", "pivot_counts",
    "write_exports",
]
