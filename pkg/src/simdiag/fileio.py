"""ProblemFile: JSON serialization of a matrix set and optional planted truth.

Layout (schema ``simdiag/1``)::

    {"schema": "simdiag/1", "rows": r, "cols": c, "count": L, "symmetric": bool,
     "matrices": [[r*c numbers, row-major], ...],
     "truth": {"U": [[...]], "V": [[...]], "lambdas": [[...]], "eps": x,
               "noises": [[r*c numbers], ...]}}

``V`` and ``noises`` inside ``truth`` are optional, as is ``truth`` itself.
Floats are written with Python's shortest round-trip ``repr``, so
``read(write(x))`` reproduces every double exactly and a second write is
byte-identical to the first.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GroundTruth, MatrixSet
from .errors import SimDiagError

SCHEMA = "simdiag/1"


class ProblemFileError(SimDiagError, ValueError):
    """Malformed or inconsistent ProblemFile content."""


@dataclass
class ProblemFile:
    mset: MatrixSet
    truth: Optional[GroundTruth] = None

    def to_dict(self) -> dict:
        L, r, c = self.mset.matrices.shape
        doc = {
            "schema": SCHEMA,
            "rows": r,
            "cols": c,
            "count": L,
            "symmetric": bool(self.mset.symmetric),
            "matrices": self.mset.matrices.reshape(L, r * c).tolist(),
        }
        if self.truth is not None:
            t = self.truth
            truth = {"U": np.asarray(t.U, dtype=np.float64).tolist()}
            if t.V is not None:
                truth["V"] = np.asarray(t.V, dtype=np.float64).tolist()
            truth["lambdas"] = np.asarray(t.lambdas, dtype=np.float64).tolist()
            truth["eps"] = float(t.eps)
            if t.noises is not None:
                n = np.asarray(t.noises, dtype=np.float64)
                truth["noises"] = n.reshape(n.shape[0], -1).tolist()
            doc["truth"] = truth
        return doc

    def dumps(self) -> str:
        try:
            return json.dumps(self.to_dict(), separators=(",", ":"), allow_nan=False) + "\n"
        except ValueError as exc:
            raise ProblemFileError(f"cannot serialize non-finite values: {exc}") from exc

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, doc) -> "ProblemFile":
        if not isinstance(doc, dict):
            raise ProblemFileError("top level must be a JSON object")
        if doc.get("schema") != SCHEMA:
            raise ProblemFileError(f"schema must be {SCHEMA!r}, got {doc.get('schema')!r}")
        r, c, L = (_positive_int(doc, key) for key in ("rows", "cols", "count"))
        symmetric = doc.get("symmetric")
        if not isinstance(symmetric, bool):
            raise ProblemFileError("'symmetric' must be true or false")
        mats = _flat_stack(doc.get("matrices"), "matrices", L, r * c).reshape(L, r, c)
        try:
            mset = MatrixSet(mats, symmetric=symmetric)
        except ValueError as exc:
            raise ProblemFileError(str(exc)) from exc
        truth = None
        if doc.get("truth") is not None:
            truth = _read_truth(doc["truth"], L, r, c)
        return cls(mset, truth)

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def read(cls, path: str) -> "ProblemFile":
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        return cls.loads(text)


def _positive_int(doc, key):
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ProblemFileError(f"{key!r} must be a positive integer, got {v!r}")
    return v


def _numbers(seq, what):
    if not isinstance(seq, list):
        raise ProblemFileError(f"{what} must be an array")
    for x in seq:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ProblemFileError(f"{what} contains a non-numeric or non-finite entry {x!r}")
    return seq


def _flat_stack(seq, what, count, length):
    if not isinstance(seq, list) or len(seq) != count:
        raise ProblemFileError(f"{what} must hold {count} arrays")
    for n, row in enumerate(seq):
        _numbers(row, f"{what}[{n}]")
        if len(row) != length:
            raise ProblemFileError(f"{what}[{n}] has {len(row)} entries, expected {length}")
    return np.array(seq, dtype=np.float64).reshape(count, length)


def _grid(seq, what, rows=None):
    if not isinstance(seq, list) or not seq:
        raise ProblemFileError(f"{what} must be a non-empty array of rows")
    width = None
    for n, row in enumerate(seq):
        _numbers(row, f"{what}[{n}]")
        if width is None:
            width = len(row)
        if len(row) != width or width == 0:
            raise ProblemFileError(f"{what} rows must have equal non-zero length")
    a = np.array(seq, dtype=np.float64)
    if rows is not None and a.shape[0] != rows:
        raise ProblemFileError(f"{what} has {a.shape[0]} rows, expected {rows}")
    return a


def _read_truth(t, L, r, c) -> GroundTruth:
    if not isinstance(t, dict):
        raise ProblemFileError("'truth' must be an object")
    U = _grid(t.get("U"), "truth.U", r)
    k = U.shape[1]
    V = None
    if t.get("V") is not None:
        V = _grid(t["V"], "truth.V", c)
        if V.shape[1] != k:
            raise ProblemFileError("truth.V and truth.U have different column counts")
    elif r != c:
        raise ProblemFileError("non-square matrices need truth.V")
    lam = _grid(t.get("lambdas"), "truth.lambdas", L)
    if lam.shape[1] != k:
        raise ProblemFileError(f"truth.lambdas must be {L} x {k}")
    eps = t.get("eps", 0.0)
    if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not math.isfinite(eps) or eps < 0:
        raise ProblemFileError("truth.eps must be a non-negative number")
    noises = None
    if t.get("noises") is not None:
        noises = _flat_stack(t["noises"], "truth.noises", L, r * c).reshape(L, r, c)
    return GroundTruth(U=U, lambdas=lam, eps=float(eps), V=V, noises=noises)
