"""The encoded feature table shared by every pipeline stage."""

from __future__ import annotations

import csv
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crimelab.errors import SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical-coded"

# Fixed zip timestamp so the binary store is byte-stable across runs.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureTable:
    """Numeric feature matrix plus integer labels and column metadata.

    ``columns`` is an ordered tuple of ``(name, kind)`` pairs, one per matrix
    column.  ``code_maps`` maps each categorical column (and the label column)
    to its ``token -> code`` dictionary.  Arrays are made read-only on
    construction.
    """

    columns: tuple[tuple[str, str], ...]
    matrix: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    code_maps: dict[str, dict[str, int]] = field(default_factory=dict)
    label_name: str = "offense_category_id"
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.columns):
            raise SchemaError(
                f"matrix has shape {matrix.shape} but {len(self.columns)} columns are declared")
        if labels.shape != (matrix.shape[0],):
            raise SchemaError("labels must have one entry per matrix row")
        if not np.all(np.isfinite(matrix)):
            raise SchemaError("feature matrix contains non-finite values")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise SchemaError("label codes outside the class-name range")
        object.__setattr__(self, "columns", tuple((str(n), str(k)) for n, k in self.columns))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.matrix[:, self.feature_names.index(name)]
        except ValueError:
            raise SchemaError(f"no column named {name!r}") from None

    def take(self, indices) -> "FeatureTable":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureTable(self.columns, self.matrix[idx], self.labels[idx], self.class_names,
                            self.code_maps, self.label_name, self.counts)

    def with_matrix(self, matrix, columns=None) -> "FeatureTable":
        return FeatureTable(self.columns if columns is None else columns, matrix, self.labels,
                            self.class_names, self.code_maps, self.label_name, self.counts)

    def drop_columns(self, names) -> "FeatureTable":
        names = set(names)
        missing = names - set(self.feature_names)
        if missing:
            raise SchemaError(f"cannot drop unknown columns {sorted(missing)}")
        keep = [i for i, (n, _) in enumerate(self.columns) if n not in names]
        code_maps = {k: v for k, v in self.code_maps.items() if k not in names}
        return FeatureTable(tuple(self.columns[i] for i in keep), self.matrix[:, keep], self.labels,
                            self.class_names, code_maps, self.label_name, self.counts)

    def decode(self, column: str, code: int) -> str:
        inverse = {v: k for k, v in self.code_maps[column].items()}
        return inverse[int(code)]

    # serialization -----------------------------------------------------

    def metadata(self) -> dict:
        return {
            "columns": [list(c) for c in self.columns],
            "label_name": self.label_name,
            "class_names": list(self.class_names),
            "code_maps": {k: dict(sorted(v.items(), key=lambda kv: kv[1]))
                          for k, v in sorted(self.code_maps.items())},
            "counts": dict(sorted(self.counts.items())),
            "n_rows": self.n_rows,
        }

    def to_csv(self, path) -> Path:
        """Write ``path`` (CSV, label last) and ``path.json`` (metadata sidecar)."""
        path = Path(path)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.feature_names + [self.label_name])
        for row, label in zip(self.matrix.tolist(), self.labels.tolist()):
            writer.writerow([repr(v) for v in row] + [label])
        path.write_text(buf.getvalue(), encoding="utf-8")
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return sidecar

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [r for r in reader]
        expected = [c[0] for c in meta["columns"]] + [meta["label_name"]]
        if header != expected:
            raise SchemaError(f"CSV header {header} does not match sidecar columns {expected}")
        d = len(meta["columns"])
        matrix = np.array([[float(v) for v in r[:d]] for r in rows], dtype=np.float64).reshape(len(rows), d)
        labels = np.array([int(r[d]) for r in rows], dtype=np.int64)
        return cls._from_meta(meta, matrix, labels)

    def save_npz(self, path) -> None:
        """Binary column store: one ``.npy`` member per array plus ``meta.json``."""
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
            for name, arr in (("matrix.npy", self.matrix), ("labels.npy", self.labels)):
                buf = io.BytesIO()
                np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
                zf.writestr(zipfile.ZipInfo(name, date_time=_ZIP_EPOCH), buf.getvalue())
            meta = json.dumps(self.metadata(), sort_keys=True).encode("utf-8")
            zf.writestr(zipfile.ZipInfo("meta.json", date_time=_ZIP_EPOCH), meta)

    @classmethod
    def load_npz(cls, path) -> "FeatureTable":
        with zipfile.ZipFile(path) as zf:
            matrix = np.lib.format.read_array(io.BytesIO(zf.read("matrix.npy")))
            labels = np.lib.format.read_array(io.BytesIO(zf.read("labels.npy")))
            meta = json.loads(zf.read("meta.json"))
        return cls._from_meta(meta, matrix, labels)

    @classmethod
    def _from_meta(cls, meta, matrix, labels) -> "FeatureTable":
        return cls(
            columns=tuple(tuple(c) for c in meta["columns"]),
            matrix=matrix,
            labels=labels,
            class_names=tuple(meta["class_names"]),
            code_maps={k: {t: int(c) for t, c in v.items()} for k, v in meta["code_maps"].items()},
            label_name=meta["label_name"],
            counts={k: int(v) for k, v in meta["counts"].items()},
        )
