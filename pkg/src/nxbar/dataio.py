"""Datasets and file formats: IDX loading, model persistence, sweep CSVs."""

import gzip
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .nn import Layer, Mlp
from .pca import PcaModel

MODEL_FORMAT = "nxbar-model"
MODEL_VERSION = 1

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DataFormatError(ValueError):
    pass


class BadMagicError(DataFormatError):
    pass


class TruncatedFileError(DataFormatError):
    pass


class CountMismatchError(DataFormatError):
    pass


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # (samples, D), values in [0, 1]
    labels: np.ndarray  # integer class labels
    split: str = "train"

    @property
    def n_samples(self):
        return self.inputs.shape[0]


def _read_bytes(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
        fh.seek(0)
        if head == b"\x1f\x8b":
            return gzip.decompress(fh.read())
        return fh.read()


def _parse_idx(buf, path, expect_magic, n_dims):
    header = 4 * (1 + n_dims)
    if len(buf) < header:
        raise TruncatedFileError("%s: too short for an IDX header" % path)
    magic = struct.unpack(">i", buf[:4])[0]
    if magic != expect_magic:
        raise BadMagicError(
            "%s: magic 0x%08x, expected 0x%08x" % (path, magic, expect_magic)
        )
    dims = struct.unpack(">%di" % n_dims, buf[4:header])
    expected = int(np.prod(dims))
    body = buf[header:]
    if len(body) < expected:
        raise TruncatedFileError(
            "%s: %d payload bytes, expected %d" % (path, len(body), expected)
        )
    data = np.frombuffer(body[:expected], dtype=np.uint8)
    return data.reshape(dims)


def load_mnist_idx(images_path, labels_path, split="train"):
    """Load an IDX image/label file pair; pixels scaled to [0, 1] by /255."""
    images = _parse_idx(_read_bytes(images_path), images_path, IDX_IMAGES_MAGIC, 3)
    labels = _parse_idx(_read_bytes(labels_path), labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            "%d images vs %d labels" % (images.shape[0], labels.shape[0])
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(inputs=flat, labels=labels.astype(np.int64), split=split)


def find_mnist(directory, split="train"):
    """Locate the IDX pair (optionally .gz) for a split inside a directory."""
    img_name, lab_name = MNIST_FILES[split]
    pair = []
    for name in (img_name, lab_name):
        for candidate in (name, name + ".gz"):
            p = os.path.join(directory, candidate)
            if os.path.exists(p):
                pair.append(p)
                break
        else:
            return None
    return tuple(pair)


def xor_dataset():
    """The four-row XOR truth table."""
    inputs = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    labels = np.array([0, 1, 1, 0], dtype=np.int64)
    return Dataset(inputs=inputs, labels=labels, split="train")


def _layer_to_dict(layer):
    return {
        "inputs": layer.weights.shape[1],
        "outputs": layer.weights.shape[0],
        "activation": layer.activation,
        "weights": layer.weights.tolist(),  # row-major, full precision via repr
        "biases": layer.biases.tolist(),
    }


def save_model(path, model, pca_model=None, extras=None):
    """Write a versioned JSON model file (weights round-trip bit-exactly)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layers": [_layer_to_dict(l) for l in model.layers],
    }
    if pca_model is not None:
        doc["pca"] = {
            "mean": pca_model.mean.tolist(),
            "components": pca_model.components.tolist(),
            "explained_variance_ratio": pca_model.explained_variance_ratio.tolist(),
        }
    if extras:
        doc["extras"] = extras
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    """Read a model file; returns (Mlp, PcaModel | None, extras dict)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(
                "%s: not parseable as a model file (line %d column %d: %s)"
                % (path, exc.lineno, exc.colno, exc.msg)
            ) from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("%s: missing %r format tag" % (path, MODEL_FORMAT))
    if doc.get("version") != MODEL_VERSION:
        raise ModelVersionError(
            "%s: file version %r, this build reads version %d"
            % (path, doc.get("version"), MODEL_VERSION)
        )
    layers = []
    for spec in doc["layers"]:
        w = np.array(spec["weights"], dtype=np.float64)
        b = np.array(spec["biases"], dtype=np.float64)
        if w.shape != (spec["outputs"], spec["inputs"]) or b.shape != (spec["outputs"],):
            raise ModelFormatError("%s: layer shape header does not match payload" % path)
        layers.append(Layer(weights=w, biases=b, activation=spec["activation"]))
    pca_model = None
    if "pca" in doc:
        p = doc["pca"]
        pca_model = PcaModel(
            mean=np.array(p["mean"], dtype=np.float64),
            components=np.array(p["components"], dtype=np.float64),
            explained_variance_ratio=np.array(
                p["explained_variance_ratio"], dtype=np.float64
            ),
        )
    return Mlp(layers), pca_model, doc.get("extras", {})


def save_pca(path, model):
    doc = {
        "format": "nxbar-pca",
        "version": MODEL_VERSION,
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "explained_variance_ratio": model.explained_variance_ratio.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_pca(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "nxbar-pca":
        raise ModelFormatError("%s: not a PCA file" % path)
    return PcaModel(
        mean=np.array(doc["mean"], dtype=np.float64),
        components=np.array(doc["components"], dtype=np.float64),
        explained_variance_ratio=np.array(doc["explained_variance_ratio"], dtype=np.float64),
    )


def format_cell(value):
    """CSV cell: full-precision decimal for floats, plain text otherwise."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def write_sweep_csv(path, header, rows):
    """Header plus one comma-separated row per measurement, newline-terminated."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row width %d does not match header %d" % (len(row), len(header)))
        lines.append(",".join(format_cell(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(path, summary):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
