"""One entry point for every trainable kind, plus model files on disk."""

from __future__ import annotations

import io
import json
import pickle
import struct
from pathlib import Path

from crimelab.classifiers import MODEL_CLASSES, Classifier, ModelSpec
from crimelab.ensembles import ENSEMBLE_BUILDERS, EnsembleSpec
from crimelab.errors import ConfigError, DataError

MODEL_KINDS = tuple(sorted(MODEL_CLASSES)) + tuple(ENSEMBLE_BUILDERS)
MAGIC = b"CRLBMODL"
FORMAT_VERSION = 1


def build_model(kind: str, params: dict | None = None, seed: int = 0) -> Classifier:
    params = dict(params or {})
    try:
        if kind in MODEL_CLASSES:
            return ModelSpec(kind, params, seed).build()
        if kind in ENSEMBLE_BUILDERS:
            return EnsembleSpec(kind, params, seed).build()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {list(MODEL_KINDS)}")


def save_model(model, path, metadata: dict | None = None) -> Path:
    """Write ``path`` (versioned binary) and ``path.json`` (readable summary)."""
    path = Path(path)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    pickle.dump(model, buf, protocol=4)
    path.write_bytes(buf.getvalue())
    summary = {"format_version": FORMAT_VERSION, "model": model.summary(), "metadata": metadata or {}}
    path.with_name(path.name + ".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                                   encoding="utf-8")
    return path


def load_model(path):
    """Read a model written by :func:`save_model`.  Only load files you trust."""
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise DataError(f"{path} is not a crimelab model file")
    (version,) = struct.unpack("<I", data[len(MAGIC):len(MAGIC) + 4])
    if version != FORMAT_VERSION:
        raise DataError(f"{path} has model format {version}; this build reads {FORMAT_VERSION}")
    model = pickle.loads(data[len(MAGIC) + 4:])
    if not callable(getattr(model, "predict", None)):
        raise DataError(f"{path} does not contain a model")
    return model
