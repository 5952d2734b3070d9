"""Matrix JSON files.

Format::

    {"dim": n, "complex": true, "data": [[re, im], ...]}   # row-major, n*n items
    {"dim": n, "complex": false, "data": [x, ...]}

A real file may also be read with ``"complex": true`` absent. Floats are
written with ``repr`` precision, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError
from .matrix_core import HERMITICITY_RTOL, HermitianMatrix, max_asymmetry


def matrix_to_json(m) -> dict:
    a = np.asarray(m)
    n = a.shape[0]
    flat = a.reshape(-1)
    if np.iscomplexobj(flat) and np.any(flat.imag != 0):
        data = [[float(z.real), float(z.imag)] for z in flat]
        return {"dim": n, "complex": True, "data": data}
    return {"dim": n, "complex": False, "data": [float(x) for x in np.real(flat)]}


def _entry(x, complex_: bool, k: int) -> complex:
    if isinstance(x, bool):
        raise MatrixFormatError(f"entry {k} is not a number")
    if isinstance(x, (int, float)):
        return complex(x, 0.0)
    if complex_ and isinstance(x, list) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise MatrixFormatError(f"entry {k} is malformed: {x!r}")


def matrix_from_json(obj) -> np.ndarray:
    """Parse the JSON object into a complex array (not checked for hermiticity)."""
    if not isinstance(obj, dict) or "dim" not in obj or "data" not in obj:
        raise MatrixFormatError("matrix JSON needs 'dim' and 'data' fields")
    n, data = obj["dim"], obj["data"]
    complex_ = bool(obj.get("complex", False))
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise MatrixFormatError(f"'dim' must be a positive integer, got {n!r}")
    if not isinstance(data, list) or len(data) != n * n:
        got = len(data) if isinstance(data, list) else type(data).__name__
        raise MatrixFormatError(f"'data' must hold dim^2 = {n * n} entries, got {got}")
    values = [_entry(x, complex_, k) for k, x in enumerate(data)]
    if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in values):
        raise MatrixFormatError("matrix has non-finite entries")
    return np.array(values, dtype=np.complex128).reshape(n, n)


def load_matrix(path) -> HermitianMatrix:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: malformed JSON: {exc}") from exc
    a = matrix_from_json(obj)
    worst, (i, j) = max_asymmetry(a)
    if worst > HERMITICITY_RTOL * max(1.0, float(np.max(np.abs(a)))):
        raise MatrixFormatError(
            f"{path}: matrix is not Hermitian: max |X - X*| = {worst:.3e} at entry ({i}, {j})"
        )
    return HermitianMatrix(a)


def save_matrix(path, m) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)) + "\n")
