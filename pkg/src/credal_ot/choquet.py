"""Choquet integrals of nonnegative functions on finite spaces.

Three routes are provided and cross-check one another:

* :func:`choquet_sorted` evaluates the survivor integral in closed form,
* :func:`choquet_riemann` approximates it with a midpoint rule,
* :func:`choquet_bounded_coherent` handles the coherent contamination
  envelope through its lower/upper bound decomposition.

Sign-changing integrands are rejected; transport costs are nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .credal_core import (
    Capacity,
    EpsContamination,
    FiniteSpace,
    _frozen,
    lower_coherent,
)
from .exceptions import DomainError, InputError


@dataclass(frozen=True, eq=False)
class AtomFunction:
    """One finite real value per atom of a space."""

    space: FiniteSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.space.n,):
            raise InputError(f"need one value per atom ({self.space.n})")
        if not np.all(np.isfinite(values)):
            raise InputError("function values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_values(cls, values, space: Optional[FiniteSpace] = None) -> "AtomFunction":
        values = np.asarray(values, dtype=float)
        return cls(space or FiniteSpace.of_size(values.size), values)

    def scaled(self, lam: float) -> "AtomFunction":
        return AtomFunction(self.space, lam * self.values)


def _check_nonnegative(f: AtomFunction) -> None:
    if np.any(f.values < 0):
        raise DomainError("Choquet integration here is limited to nonnegative functions")


def _check_space(f: AtomFunction, nu: Capacity) -> None:
    if f.space.n != nu.space.n:
        raise InputError("function and capacity live on spaces of different size")


def choquet_sorted(f: AtomFunction, nu: Capacity) -> float:
    """Closed-form survivor integral ``sum_i (f_(i) - f_(i+1)) nu(A_i)``.

    Atoms are ordered by decreasing value (ties broken by index) and ``A_i``
    is the set of the first ``i`` atoms.  Tied atoms contribute zero-width
    steps, so the result does not depend on how ties are ordered.
    """
    _check_space(f, nu)
    _check_nonnegative(f)
    v = f.values
    order = np.lexsort((np.arange(v.size), -v))
    sorted_v = v[order]
    steps = sorted_v - np.append(sorted_v[1:], 0.0)
    return float(np.dot(steps, nu.chain_values(order)))


def choquet_riemann(f: AtomFunction, nu: Capacity, step: Optional[float] = None) -> float:
    """Midpoint-rule quadrature of ``t -> nu({f >= t})`` over ``[0, max f]``.

    Level sets are recomputed from ``f`` at every node, independently of
    the sorting in :func:`choquet_sorted`.  ``step`` defaults to
    ``max(f) / 1e5``.
    """
    _check_space(f, nu)
    _check_nonnegative(f)
    top = float(f.values.max()) if f.values.size else 0.0
    if top == 0.0:
        if step is not None and not step > 0:
            raise InputError("quadrature step must be positive")
        return 0.0
    if step is None:
        step = top / 1e5
    if not step > 0 or not np.isfinite(step):
        raise InputError("quadrature step must be positive")
    nodes = (np.arange(int(np.ceil(top / step))) + 0.5) * step
    levels = f.values[None, :] >= nodes[:, None]
    if levels.shape[1] <= 62:
        # pack each level set into an integer so unique runs on a flat array
        codes = levels.astype(np.int64) @ (np.int64(1) << np.arange(levels.shape[1], dtype=np.int64))
        _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        distinct = levels[first]
    else:
        distinct, inverse = np.unique(levels, axis=0, return_inverse=True)
    survivor = np.array([nu.value_of_mask(row) if row.any() else 0.0 for row in distinct])
    return float(step * survivor[inverse.ravel()].sum())


def choquet_bounded_coherent(f: AtomFunction, c: EpsContamination) -> float:
    """Choquet integral against the coherent envelope of a contamination.

    Uses ``min f * P'(X) + int_{min f}^{max f} P'({f > t}) dt``.  Between
    consecutive distinct values the set ``{f > t}`` is constant and never the
    whole space, so the integral is a finite sum.  The result equals
    ``(1 - eps) E_P[f] + eps min f``.
    """
    if f.space.n != c.n:
        raise InputError("function and contamination live on spaces of different size")
    _check_nonnegative(f)
    v = f.values
    lo = float(v.min())
    total = lo * lower_coherent(c, c.space.full)
    levels = np.unique(v)
    for t0, t1 in zip(levels[:-1], levels[1:]):
        total += (t1 - t0) * lower_coherent(c, v > t0)
    return float(total)
