"""Denver incident CSV ingestion: parse, clean, reduce, decompose dates, encode.

The stages are generators so a full snapshot streams through without holding
every raw record in memory.  Row accounting lives in an :class:`IngestCounts`
object that each stage updates; ``malformed + dropped + emitted`` always equals
the number of data rows read.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from crimelab.errors import DataError, SchemaError
from crimelab.table import CATEGORICAL, NUMERIC, FeatureTable

log = logging.getLogger(__name__)

RAW_FIELDS = (
    "incident_id", "offense_id", "offense_code", "offense_code_extension",
    "offense_type_id", "offense_category_id", "first_occurrence_date",
    "last_occurrence_date", "reported_date", "incident_address",
    "geo_x", "geo_y", "geo_lon", "geo_lat",
    "district_id", "precinct_id", "neighborhood_id", "is_crime", "is_traffic",
)

CLEANED_AWAY = ("last_occurrence_date", "incident_address")

SELECTED_FIELDS = (
    "offense_code", "offense_type_id", "offense_category_id", "reported_date",
    "geo_x", "geo_y", "geo_lon", "geo_lat",
    "district_id", "precinct_id", "neighborhood_id", "is_crime", "is_traffic",
)

# Feature column order of the encoded table; reported_date expands in place.
FEATURE_COLUMNS = (
    ("offense_code", NUMERIC),
    ("offense_type_id", CATEGORICAL),
    ("year", NUMERIC),
    ("month", NUMERIC),
    ("day", NUMERIC),
    ("hour", NUMERIC),
    ("geo_x", NUMERIC),
    ("geo_y", NUMERIC),
    ("geo_lon", NUMERIC),
    ("geo_lat", NUMERIC),
    ("district_id", NUMERIC),
    ("precinct_id", NUMERIC),
    ("neighborhood_id", CATEGORICAL),
    ("is_crime", NUMERIC),
    ("is_traffic", NUMERIC),
)

LABEL = "offense_category_id"

# Offense categories in code order (lexicographic, which is also the
# published class numbering 0..14).
OFFENSE_CATEGORIES = (
    "aggravated-assault", "all-other-crimes", "arson", "auto-theft", "burglary",
    "drug-alcohol", "larceny", "murder", "other-crimes-against-persons",
    "public-disorder", "robbery", "sexual-assault", "theft-from-motor-vehicle",
    "traffic-accident", "white-collar-crime",
)

LEAKY_FEATURES = ("offense_code", "offense_type_id")

DEFAULT_SENTINEL = -9999.0

_INT_FIELDS = ("offense_code", "offense_code_extension", "district_id", "precinct_id")
_FLOAT_FIELDS = ("geo_x", "geo_y", "geo_lon", "geo_lat")
_FLAG_FIELDS = ("is_crime", "is_traffic")

_ISO = re.compile(r"^\s*(\d{4})-(\d{1,2})-(\d{1,2})[ T](\d{1,2}):(\d{2})(?::(\d{2}))?(?:\.\d+)?\s*$")
_PORTAL = re.compile(r"^\s*(\d{1,2})/(\d{1,2})/(\d{4}) (\d{1,2}):(\d{2})(?::(\d{2}))?\s*([AaPp][Mm])\s*$")


@dataclass(slots=True)
class IncidentRecord:
    incident_id: str
    offense_id: str
    offense_code: int | None
    offense_code_extension: int | None
    offense_type_id: str | None
    offense_category_id: str | None
    first_occurrence_date: str | None
    last_occurrence_date: str | None
    reported_date: str
    incident_address: str | None
    geo_x: float | None
    geo_y: float | None
    geo_lon: float | None
    geo_lat: float | None
    district_id: int | None
    precinct_id: int | None
    neighborhood_id: str | None
    is_crime: int
    is_traffic: int

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in RAW_FIELDS}


@dataclass(frozen=True)
class CleaningPolicy:
    missing_row_action: str = "drop"
    sentinel_value: float = DEFAULT_SENTINEL

    def __post_init__(self):
        if self.missing_row_action not in ("drop", "sentinel"):
            raise ValueError(f"missing_row_action must be 'drop' or 'sentinel', got {self.missing_row_action!r}")


@dataclass
class IngestCounts:
    input_rows: int = 0
    malformed: int = 0
    dropped_missing: int = 0
    sentinel_filled: int = 0
    emitted: int = 0
    malformed_reasons: dict[str, int] = field(default_factory=dict)

    def flag(self, reason: str) -> None:
        self.malformed += 1
        self.malformed_reasons[reason] = self.malformed_reasons.get(reason, 0) + 1

    def as_dict(self) -> dict[str, int]:
        return {
            "input_rows": self.input_rows,
            "malformed": self.malformed,
            "dropped_missing": self.dropped_missing,
            "sentinel_filled": self.sentinel_filled,
            "emitted": self.emitted,
        }


def parse_timestamp(text: str) -> datetime:
    """Parse ``YYYY-MM-DD HH:MM[:SS]`` or the portal's ``M/D/YYYY H:MM:SS AM``."""
    m = _ISO.match(text)
    if m:
        y, mo, d, h, mi, s = m.groups()
        return datetime(int(y), int(mo), int(d), int(h), int(mi), int(s or 0))
    m = _PORTAL.match(text)
    if m:
        mo, d, y, h, mi, s, ampm = m.groups()
        h = int(h)
        if not 1 <= h <= 12:
            raise ValueError(f"12-hour clock value out of range: {text!r}")
        h = h % 12 + (12 if ampm.lower() == "pm" else 0)
        return datetime(int(y), int(mo), int(d), h, int(mi), int(s or 0))
    raise ValueError(f"unrecognised timestamp {text!r}")


def _opt(text: str) -> str | None:
    text = text.strip()
    return text or None


def _num(text: str, kind):
    text = text.strip()
    if not text:
        return None
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    if kind is int:
        if value != int(value):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(value)
    return value


class _FieldError(ValueError):
    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field_name = field_name


def _record_from_row(row: dict[str, str]) -> IncidentRecord:
    values: dict = {}
    for name in RAW_FIELDS:
        try:
            values[name] = _parse_field(name, row[name] or "")
        except ValueError as exc:
            raise _FieldError(name, str(exc)) from None
    if (values["geo_lat"] is None) != (values["geo_lon"] is None):
        raise _FieldError("geo_lat", "geo_lat and geo_lon must be both present or both missing")
    return IncidentRecord(**values)


def _parse_field(name: str, raw: str):
    if name in _INT_FIELDS:
        return _num(raw, int)
    if name in _FLOAT_FIELDS:
        return _num(raw, float)
    if name in _FLAG_FIELDS:
        flag = _num(raw, int)
        if flag not in (0, 1):
            raise ValueError(f"must be 0 or 1, got {raw!r}")
        return flag
    if name == "reported_date":
        return parse_timestamp(raw).strftime("%Y-%m-%d %H:%M:%S")
    if name in ("incident_id", "offense_id"):
        return raw.strip()
    return _opt(raw)


def parse_incident_csv(path, counts: IngestCounts | None = None) -> Iterator[IncidentRecord]:
    """Stream :class:`IncidentRecord` objects from a Denver-schema CSV.

    The header is checked eagerly (case-insensitive); a missing column raises
    :class:`SchemaError` before any row is read.  Rows that fail to parse are
    counted in ``counts.malformed`` and skipped.
    """
    path = Path(path)
    counts = counts if counts is not None else IngestCounts()
    fh = path.open(newline="", encoding="utf-8-sig")
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty; expected a header row") from None
        lookup = {h.strip().lower(): i for i, h in enumerate(header)}
        missing = [f for f in RAW_FIELDS if f not in lookup]
        if missing:
            raise SchemaError(f"{path}: header is missing column(s) {', '.join(missing)}")
    except BaseException:
        fh.close()
        raise
    positions = [(name, lookup[name]) for name in RAW_FIELDS]

    def rows():
        with fh:
            for line_no, raw in enumerate(reader, start=2):
                if not raw or (len(raw) == 1 and not raw[0].strip()):
                    continue
                counts.input_rows += 1
                if len(raw) != len(header):
                    counts.flag("column_count")
                    log.debug("line %d: expected %d fields, got %d", line_no, len(header), len(raw))
                    continue
                try:
                    rec = _record_from_row({name: raw[i] for name, i in positions})
                except _FieldError as exc:
                    counts.flag(exc.field_name)
                    log.debug("line %d malformed: %s", line_no, exc)
                    continue
                yield rec

    return rows()


def clean_columns(records: Iterable[IncidentRecord], policy: CleaningPolicy = CleaningPolicy(),
                  counts: IngestCounts | None = None) -> Iterator[dict]:
    """Drop the two sparse columns and handle gaps in the modelled fields.

    Missing values are looked for only in the fields that survive attribute
    selection.  A missing label always drops the row, whatever the policy.
    """
    counts = counts if counts is not None else IngestCounts()
    for rec in records:
        row = rec.to_dict() if isinstance(rec, IncidentRecord) else dict(rec)
        for name in CLEANED_AWAY:
            row.pop(name, None)
        gaps = [f for f in SELECTED_FIELDS if row.get(f) is None]
        if gaps:
            if policy.missing_row_action == "drop" or LABEL in gaps:
                counts.dropped_missing += 1
                continue
            for f in gaps:
                row[f] = str(policy.sentinel_value) if f in ("offense_type_id", "neighborhood_id") \
                    else policy.sentinel_value
            counts.sentinel_filled += 1
        yield row


def select_attributes(records: Iterable[dict]) -> Iterator[dict]:
    for row in records:
        yield {name: row[name] for name in SELECTED_FIELDS}


def decompose_reported_date(record: dict) -> dict:
    """Replace ``reported_date`` with 24-hour ``year, month, day, hour``."""
    out = {k: v for k, v in record.items() if k != "reported_date"}
    try:
        ts = parse_timestamp(str(record["reported_date"]))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out.update(year=ts.year, month=ts.month, day=ts.day, hour=ts.hour)
    return out


def _decompose_all(records: Iterable[dict], counts: IngestCounts) -> Iterator[dict]:
    for row in records:
        try:
            yield decompose_reported_date(row)
        except DataError:
            counts.flag("reported_date")


def encode_categoricals(records: Iterable[dict], counts: IngestCounts | None = None) -> FeatureTable:
    """Assemble the FeatureTable; token codes follow lexicographic order."""
    cols: dict[str, list] = {name: [] for name, _ in FEATURE_COLUMNS}
    labels: list[str] = []
    n = 0
    for row in records:
        for name, _ in FEATURE_COLUMNS:
            cols[name].append(row[name])
        labels.append(row[LABEL])
        n += 1
    if counts is not None:
        counts.emitted = n

    distinct = sorted(set(labels))
    if len(distinct) > len(OFFENSE_CATEGORIES):
        extras = [t for t in distinct if t not in OFFENSE_CATEGORIES] or distinct[len(OFFENSE_CATEGORIES):]
        raise SchemaError(f"{len(distinct)} distinct {LABEL} values (max {len(OFFENSE_CATEGORIES)}); "
                          f"unexpected: {', '.join(extras)}")
    label_map = {tok: i for i, tok in enumerate(distinct)}

    code_maps = {LABEL: label_map}
    matrix = np.empty((n, len(FEATURE_COLUMNS)), dtype=np.float64)
    for j, (name, kind) in enumerate(FEATURE_COLUMNS):
        if kind == CATEGORICAL:
            cmap = {tok: i for i, tok in enumerate(sorted(set(cols[name])))}
            code_maps[name] = cmap
            matrix[:, j] = [cmap[t] for t in cols[name]]
        else:
            matrix[:, j] = np.asarray(cols[name], dtype=np.float64)
    y = np.array([label_map[t] for t in labels], dtype=np.int64)
    return FeatureTable(FEATURE_COLUMNS, matrix, y, tuple(distinct), code_maps, LABEL,
                        counts.as_dict() if counts is not None else {})


def ingest_csv(path, policy: CleaningPolicy = CleaningPolicy()) -> FeatureTable:
    """Run the whole ingest chain on a CSV file and return the encoded table."""
    counts = IngestCounts()
    stream = parse_incident_csv(path, counts)
    stream = clean_columns(stream, policy, counts)
    stream = select_attributes(stream)
    stream = _decompose_all(stream, counts)
    table = encode_categoricals(stream, counts)
    total = counts.malformed + counts.dropped_missing + counts.emitted
    if total != counts.input_rows:
        raise AssertionError(f"row accounting broken: {total} != {counts.input_rows}")
    if counts.malformed:
        log.warning("%s: %d malformed rows skipped (%s)", path, counts.malformed, counts.malformed_reasons)
    return table
