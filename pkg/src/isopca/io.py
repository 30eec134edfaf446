"""Reading and writing mixtures, point sets, partitions and reports."""

import csv
import json
from pathlib import Path

import numpy as np

from .clusterer import PolyhedralPartition
from .mixture import GaussianMixture, LabeledSample


class SchemaError(ValueError):
    """Malformed input file; the message names the offending field."""


def _fmt(x):
    return repr(float(x))


def mixture_to_dict(mix):
    return {
        "k": mix.k,
        "n": mix.n,
        "weights": mix.weights.tolist(),
        "means": mix.means.tolist(),
        "covariances": mix.covariances.tolist(),
    }


def mixture_from_dict(data):
    for key in ("k", "n", "weights", "means", "covariances"):
        if key not in data:
            raise SchemaError(f"mixture: missing field {key!r}")
    k, n = int(data["k"]), int(data["n"])
    try:
        w = np.asarray(data["weights"], dtype=float)
        mu = np.asarray(data["means"], dtype=float)
        cov = np.asarray(data["covariances"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"mixture: non-numeric or ragged array ({exc})") from exc
    if w.shape != (k,):
        raise SchemaError(f"mixture.weights: expected length {k}, got shape {w.shape}")
    if mu.shape != (k, n):
        raise SchemaError(f"mixture.means: expected shape ({k}, {n}), got {mu.shape}")
    if cov.shape != (k, n, n):
        raise SchemaError(f"mixture.covariances: expected shape ({k}, {n}, {n}), got {cov.shape}")
    for i in range(k):
        bad = np.argwhere(np.abs(cov[i] - cov[i].T) > 1e-12 * max(1.0, np.abs(cov[i]).max()))
        if bad.size:
            r, c = bad[0]
            raise SchemaError(f"mixture.covariances[{i}]: not symmetric at [{r}][{c}] vs [{c}][{r}]")
    try:
        return GaussianMixture(w, mu, cov)
    except ValueError as exc:
        raise SchemaError(f"mixture: {exc}") from exc


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def write_mixture(path, mix):
    write_json(path, mixture_to_dict(mix))


def read_mixture(path):
    return mixture_from_dict(read_json(path))


def write_points(path, points, labels=None):
    """CSV with columns x0..x{n-1} and an optional trailing ``label`` column."""
    points = np.atleast_2d(points)
    header = [f"x{j}" for j in range(points.shape[1])]
    if labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(points):
            out = [_fmt(v) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            writer.writerow(out)


def read_points(path):
    """Returns a ``LabeledSample`` if the CSV has a ``label`` column, else an array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, header row required")
    header, body = rows[0], rows[1:]
    has_label = bool(header) and header[-1] == "label"
    width = len(header) - int(has_label)
    if width < 1:
        raise SchemaError(f"{path}: no coordinate columns")
    pts = np.empty((len(body), width))
    labels = np.empty(len(body), dtype=int)
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: line {i} has {len(row)} fields, expected {len(header)}")
        try:
            pts[i - 2] = [float(v) for v in row[:width]]
            if has_label:
                labels[i - 2] = int(row[-1])
        except ValueError as exc:
            raise SchemaError(f"{path}: line {i}: {exc}") from exc
    if has_label:
        return LabeledSample(pts, labels)
    return pts


def write_partition(path, partition):
    write_json(path, partition.to_dict())


def read_partition(path):
    try:
        return PolyhedralPartition.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: {exc}") from exc


def write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
