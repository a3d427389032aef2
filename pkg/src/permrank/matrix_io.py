"""Flat-file formats: CSV matrices, observation sidecars, decomposition JSON.

Matrix CSV is one row per line, decimal entries, no header.  Observation
matrices use the literal cell tokens ``0``, ``0.5`` and ``1`` plus a JSON
sidecar recording the observation probability and seed.  Decompositions
serialize as a JSON object with the shape and one record per component.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .matrices import (
    BimonotoneComponent,
    PermRankDecomposition,
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
    as_dense,
)
from .observe import ObservationMatrix
from .project import SOLVER_MONOTONE_TOL

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "matrix_to_csv_text",
    "matrix_from_csv_text",
    "write_observation",
    "read_observation",
    "decomposition_to_json",
    "decomposition_from_json",
    "write_decomposition",
    "read_decomposition",
    "atomic_write_text",
]


def atomic_write_text(path, text: str):
    """Write via a temp file and rename, so readers never see partial files."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def matrix_to_csv_text(matrix) -> str:
    arr = as_dense(matrix)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in arr:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def matrix_from_csv_text(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec:
            continue
        if width is None:
            width = len(rec)
        elif len(rec) != width:
            raise ValueError(
                f"ragged CSV: line {lineno} has {len(rec)} fields, expected {width}"
            )
        try:
            rows.append([float(v) for v in rec])
        except ValueError as exc:
            raise ValueError(f"non-numeric entry on line {lineno}") from exc
    if not rows:
        raise ValueError("empty matrix CSV")
    return as_dense(rows)


def write_matrix_csv(matrix, path):
    atomic_write_text(path, matrix_to_csv_text(matrix))


def read_matrix_csv(path) -> np.ndarray:
    return matrix_from_csv_text(Path(path).read_text())


_OBS_TOKENS = {0.0: "0", 0.5: "0.5", 1.0: "1"}


def write_observation(y: ObservationMatrix, path, seed: int | None = None):
    """Observation CSV with literal 0 / 0.5 / 1 tokens plus a JSON sidecar."""
    path = Path(path)
    lines = [",".join(_OBS_TOKENS[v] for v in row) for row in y.values]
    atomic_write_text(path, "\n".join(lines) + "\n")
    sidecar = {"p_obs": y.p_obs, "seed": seed}
    atomic_write_text(path.with_suffix(path.suffix + ".json"), json.dumps(sidecar))


def read_observation(path) -> tuple[ObservationMatrix, int | None]:
    path = Path(path)
    vals = read_matrix_csv(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return ObservationMatrix(vals, sidecar["p_obs"]), sidecar.get("seed")


def decomposition_to_json(dec: PermRankDecomposition) -> str:
    payload = {
        "shape": list(dec.shape),
        "components": [
            {
                "matrix_csv_inline": matrix_to_csv_text(c.matrix.values),
                "row_perm": list(c.perms.row_perm.mapping),
                "col_perm": list(c.perms.col_perm.mapping),
            }
            for c in dec.components
        ],
    }
    return json.dumps(payload, indent=2)


def decomposition_from_json(text: str) -> PermRankDecomposition:
    payload = json.loads(text)
    shape = tuple(payload["shape"])
    comps = []
    for rec in payload["components"]:
        vals = matrix_from_csv_text(rec["matrix_csv_inline"])
        if vals.shape != shape:
            raise ValueError(f"component shape {vals.shape} != declared {shape}")
        pair = PermutationPair(
            Permutation(rec["row_perm"]), Permutation(rec["col_perm"])
        )
        comps.append(
            BimonotoneComponent(
                UnitIntervalMatrix(vals), pair, tol=SOLVER_MONOTONE_TOL
            )
        )
    return PermRankDecomposition(comps, atol=1e-7)


def write_decomposition(dec: PermRankDecomposition, path):
    atomic_write_text(path, decomposition_to_json(dec))


def read_decomposition(path) -> PermRankDecomposition:
    return decomposition_from_json(Path(path).read_text())
