"""Canonical JSON documents and parsers for the CLI input schemas.

Canonical form: keys sorted, no insignificant whitespace beyond single
spaces after separators, reals printed with 17 significant digits so that
every float survives a round trip bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Optional

import numpy as np

from .credal_core import DiscreteDistribution, EpsContamination, FiniteSpace
from .exceptions import InputError
from .ot_classical.discrete import CostMatrix
from .ot_classical.gaussian import GaussianPair
from .ot_classical.one_d import continuous_from_dict


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise InputError(f"cannot serialize non-finite number {x!r}")
    if x == int(x) and abs(x) < 1e16:
        return f"{int(x)}.0" if x != 0 or math.copysign(1, x) > 0 else "-0.0"
    return format(x, ".17g")


def _emit(obj, out: list) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InputError(f"object keys must be strings, got {key!r}")
            if k:
                out.append(", ")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(": ")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, item in enumerate(obj):
            if k:
                out.append(", ")
            _emit(item, out)
        out.append("]")
    else:
        raise InputError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    out: list = []
    _emit(obj, out)
    return "".join(out) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def require(doc, key: str, where: str = "input"):
    if not isinstance(doc, dict):
        raise InputError(f"{where} must be a JSON object")
    if key not in doc:
        raise InputError(f'{where} is missing the field "{key}"')
    return doc[key]


def _label(x):
    return tuple(x) if isinstance(x, list) else x


def _real_list(values, what: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be numbers") from None
    return arr


def parse_distribution(doc, where: str = "distribution") -> DiscreteDistribution:
    space = require(doc, "space", where)
    mass = require(doc, "mass", where)
    if not isinstance(space, list) or not isinstance(mass, list):
        raise InputError(f'{where}: "space" and "mass" must be arrays')
    if len(space) != len(mass):
        raise InputError(f"{where}: {len(space)} labels but {len(mass)} masses")
    mass = _real_list(mass, f"{where} masses")
    return DiscreteDistribution(FiniteSpace(tuple(_label(s) for s in space)), mass)


def distribution_to_dict(d: DiscreteDistribution) -> dict:
    return {"space": [list(s) if isinstance(s, tuple) else s for s in d.space.labels],
            "mass": d.mass.tolist()}


def parse_contamination(doc, where: str = "contamination",
                        default_epsilon: Optional[float] = None) -> EpsContamination:
    """A contamination document, or a bare distribution taking ``default_epsilon``.

    An ``epsilon`` written in the document always wins over the default.
    """
    if isinstance(doc, dict) and "base" in doc:
        base = parse_distribution(doc["base"], f"{where}.base")
        eps = doc.get("epsilon", default_epsilon)
    else:
        base = parse_distribution(doc, where)
        eps = default_epsilon
    if eps is None:
        eps = 0.0
    if isinstance(eps, bool) or not isinstance(eps, (int, float)):
        raise InputError(f"{where}: epsilon must be a number")
    return EpsContamination(base, float(eps))


def contamination_to_dict(c: EpsContamination) -> dict:
    return {"base": distribution_to_dict(c.base), "epsilon": c.epsilon}


def parse_matrix(doc, where: str = "matrix") -> np.ndarray:
    rows = require(doc, "rows", where)
    cols = require(doc, "cols", where)
    data = require(doc, "data", where)
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in (rows, cols)):
        raise InputError(f'{where}: "rows" and "cols" must be positive integers')
    if not isinstance(data, list) or len(data) != rows or any(
        not isinstance(r, list) or len(r) != cols for r in data
    ):
        raise InputError(f"{where}: data must be a {rows} x {cols} nested array")
    return _real_list(data, f"{where} entries")


def parse_cost(doc, where: str = "cost") -> CostMatrix:
    return CostMatrix(parse_matrix(doc, where))


def matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=float)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": m.tolist()}


def _square(doc, key: str, dim: int) -> np.ndarray:
    value = require(doc, key, "gaussian")
    arr = _real_list(value, f"gaussian {key}")
    if arr.shape != (dim, dim):
        raise InputError(f'gaussian "{key}" must be {dim} x {dim}')
    return arr


def parse_gaussian(doc) -> GaussianPair:
    dim = require(doc, "dim", "gaussian")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError('gaussian "dim" must be a positive integer')
    a = _square(doc, "a", dim) if doc.get("a") is not None else None
    return GaussianPair(_square(doc, "sigma_p", dim), _square(doc, "sigma_q", dim), a)


def gaussian_to_dict(g: GaussianPair) -> dict:
    return {"sigma_p": g.sigma_p.tolist(), "sigma_q": g.sigma_q.tolist(),
            "a": g.a.tolist(), "dim": g.dim}


parse_continuous = continuous_from_dict


def plan_csv(matrix) -> str:
    """``i,j,mass`` rows for every cell of a plan."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "mass"])
    m = np.asarray(matrix, dtype=float)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            w.writerow([i, j, _format_float(float(m[i, j]))])
    return buf.getvalue()


def map_csv(x, y) -> str:
    """``x,T(x)`` rows of a one-dimensional map."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "T(x)"])
    for a, b in zip(np.ravel(x), np.ravel(y)):
        w.writerow([_format_float(float(a)), _format_float(float(b))])
    return buf.getvalue()
