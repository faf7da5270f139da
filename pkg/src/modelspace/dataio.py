"""CSV and JSON serialization for samples, matrices, and results.

CSV files are RFC-style with a header row, UTF-8, LF line endings; JSON uses
stable (sorted) key order.  Floats are written with Python's shortest
round-trip representation, so read(write(x)) reproduces x bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from .distributions import GaussianModel, Sample
from .exceptions import ValidationError
from .mds import DivergenceMatrix, Embedding
from .model_fit import CandidateSpec, FittedModel, aic, sgf_hat
from .projection import AverageResult, ProjectionResult


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dump_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj: Any, path) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def read_json(path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

def sample_to_csv(sample: Sample) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sample.names)
    for row in sample.data:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_sample_csv(sample: Sample, path) -> None:
    Path(path).write_text(sample_to_csv(sample), encoding="utf-8")


def read_sample_csv(path) -> Sample:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ValidationError(f"{path}: need a header row and at least 2 data rows")
    names = tuple(rows[0])
    try:
        data = np.array([[float(x) for x in row] for row in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})") from exc
    return Sample(data, names)


# ---------------------------------------------------------------------------
# Divergence matrices
# ---------------------------------------------------------------------------

def matrix_to_csv(dm: DivergenceMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name",) + dm.names)
    for name, row in zip(dm.names, dm.values):
        w.writerow([name] + [fmt(x) for x in row])
    return buf.getvalue()


def write_matrix_csv(dm: DivergenceMatrix, path) -> None:
    Path(path).write_text(matrix_to_csv(dm), encoding="utf-8")


def read_matrix_csv(path) -> DivergenceMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["name"]:
        raise ValidationError(f"{path}: expected a 'name' header column")
    names = tuple(rows[0][1:])
    body = rows[1:]
    if [r[0] for r in body] != list(names):
        raise ValidationError(f"{path}: row names do not match header names")
    values = np.array([[float(x) for x in r[1:]] for r in body])
    return DivergenceMatrix(values, names)


# ---------------------------------------------------------------------------
# Fitted models
# ---------------------------------------------------------------------------

def fits_to_dict(fits: list[FittedModel]) -> dict:
    records = []
    for fm in fits:
        records.append({
            "name": fm.spec.name,
            "edges": [list(e) for e in fm.spec.edges],
            "loglik": fm.loglik,
            "k": fm.k,
            "n": fm.n,
            "aic": aic(fm),
            "sgf_hat": sgf_hat(fm),
            "predictive": {
                "mean": fm.predictive.mean,
                "cov": fm.predictive.cov,
            },
        })
    return {"models": records}


def fits_from_dict(payload: dict) -> list[FittedModel]:
    try:
        records = payload["models"]
    except (KeyError, TypeError) as exc:
        raise ValidationError("fits JSON must contain a 'models' array") from exc
    out = []
    for rec in records:
        spec = CandidateSpec(rec["name"], tuple((s, t) for s, t in rec["edges"]))
        predictive = GaussianModel(rec["predictive"]["mean"], rec["predictive"]["cov"])
        out.append(FittedModel(spec, float(rec["loglik"]), int(rec["k"]),
                               int(rec["n"]), predictive))
    return out


# ---------------------------------------------------------------------------
# Embeddings and projection results
# ---------------------------------------------------------------------------

def embedding_to_dict(e: Embedding) -> dict:
    return {
        "coords": e.coords,
        "dim": e.dim,
        "stress": e.stress,
        "stress_percent": 100.0 * e.stress,
        "scale": e.scale,
        "converged": e.converged,
        "restarts_used": e.restarts_used,
        "names": list(e.names) if e.names is not None else None,
    }


def embedding_from_dict(payload: dict) -> Embedding:
    try:
        return Embedding(
            np.asarray(payload["coords"], dtype=float),
            int(payload["dim"]),
            float(payload["stress"]),
            float(payload["scale"]),
            bool(payload["converged"]),
            int(payload["restarts_used"]),
            tuple(payload["names"]) if payload.get("names") else None,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"embedding JSON is missing field {exc}") from exc


def projection_to_dict(proj: ProjectionResult, avg: AverageResult | None = None) -> dict:
    names = proj.names if proj.names is not None else tuple(
        f"f{i + 1}" for i in range(proj.kl_to_g.size)
    )
    out = {
        "m": proj.m,
        "h2": proj.h2,
        "h": float(np.sqrt(proj.h2)),
        "sgg_used": proj.sgg_used,
        "kl_to_g": {name: float(v) for name, v in zip(names, proj.kl_to_g)},
        "objective_value": proj.objective_value,
        "clamped": proj.clamped,
    }
    if avg is not None:
        out["average"] = {
            "weights": {name: float(w) for name, w in zip(names, avg.weights)},
            "location": avg.location,
        }
    return out
