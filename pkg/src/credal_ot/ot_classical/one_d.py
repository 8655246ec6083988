"""Atomless distributions on the line and the monotone (quantile) transport map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..credal_core import DiscreteDistribution, FiniteSpace, _frozen
from ..exceptions import InputError


class Continuous1D:
    """Base class: subclasses provide cdf, sf, ppf, isf and a support interval."""

    family = ""

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def ppf(self, u):
        raise NotImplementedError

    def isf(self, u):
        return self.ppf(1.0 - np.asarray(u, dtype=float))

    @property
    def support(self) -> tuple:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params()}


@dataclass(frozen=True)
class Uniform1D(Continuous1D):
    low: float
    high: float
    family = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
            raise InputError(f"uniform needs finite low < high, got [{self.low}, {self.high}]")

    def cdf(self, x):
        return stats.uniform.cdf(x, self.low, self.high - self.low)

    def sf(self, x):
        return stats.uniform.sf(x, self.low, self.high - self.low)

    def ppf(self, u):
        return stats.uniform.ppf(u, self.low, self.high - self.low)

    def isf(self, u):
        return stats.uniform.isf(u, self.low, self.high - self.low)

    @property
    def support(self):
        return (float(self.low), float(self.high))

    def params(self):
        return {"low": float(self.low), "high": float(self.high)}


@dataclass(frozen=True)
class Normal1D(Continuous1D):
    mean: float
    std: float
    family = "normal"

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std) and self.std > 0):
            raise InputError(f"normal needs finite mean and std > 0, got ({self.mean}, {self.std})")

    def cdf(self, x):
        return stats.norm.cdf(x, self.mean, self.std)

    def sf(self, x):
        return stats.norm.sf(x, self.mean, self.std)

    def ppf(self, u):
        return stats.norm.ppf(u, self.mean, self.std)

    def isf(self, u):
        return stats.norm.isf(u, self.mean, self.std)

    @property
    def support(self):
        return (-np.inf, np.inf)

    def params(self):
        return {"mean": float(self.mean), "std": float(self.std)}


@dataclass(frozen=True, eq=False)
class PiecewiseLinear1D(Continuous1D):
    """Continuous cdf interpolating ``(knots[k], cdf[k])`` linearly.

    Flat stretches are allowed; ``ppf`` returns the left end of a flat
    stretch, as the generalized inverse does.
    """

    knots: np.ndarray
    cdf_values: np.ndarray
    family = "piecewise"

    def __post_init__(self):
        x = np.array(self.knots, dtype=float)
        F = np.array(self.cdf_values, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or x.size < 2:
            raise InputError("piecewise cdf needs matching knot and cdf arrays of length >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(F))):
            raise InputError("piecewise cdf values must be finite")
        if np.any(np.diff(x) <= 0):
            raise InputError("knots must be strictly increasing")
        if np.any(np.diff(F) < 0):
            raise InputError("cdf values must be nondecreasing")
        if abs(F[0]) > 1e-12 or abs(F[-1] - 1) > 1e-12:
            raise InputError("piecewise cdf must run from 0 to 1")
        F[0], F[-1] = 0.0, 1.0
        object.__setattr__(self, "knots", _frozen(x))
        object.__setattr__(self, "cdf_values", _frozen(F))

    @classmethod
    def from_density(cls, knots, density) -> "PiecewiseLinear1D":
        """Cdf of a piecewise-constant density given per interval."""
        knots = np.asarray(knots, dtype=float)
        w = np.asarray(density, dtype=float) * np.diff(knots)
        if np.any(w < 0) or w.sum() <= 0:
            raise InputError("density must be nonnegative with positive total")
        F = np.concatenate([[0.0], np.cumsum(w) / w.sum()])
        return cls(knots, F)

    def cdf(self, x):
        return np.interp(x, self.knots, self.cdf_values, left=0.0, right=1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        F, x = self.cdf_values, self.knots
        k = np.clip(np.searchsorted(F, u, side="left"), 1, F.size - 1)
        lo, hi = F[k - 1], F[k]
        width = np.where(hi > lo, hi - lo, 1.0)
        t = np.clip((u - lo) / width, 0.0, 1.0)
        out = x[k - 1] + t * (x[k] - x[k - 1])
        out = np.where(u <= 0, x[0], out)
        out = np.where((u < 0) | (u > 1), np.nan, out)
        return out[()] if out.ndim == 0 else out

    @property
    def support(self):
        return (float(self.knots[0]), float(self.knots[-1]))

    def params(self):
        return {"knots": self.knots.tolist(), "cdf": self.cdf_values.tolist()}


def continuous_from_dict(doc: dict) -> Continuous1D:
    if not isinstance(doc, dict) or "family" not in doc or "params" not in doc:
        raise InputError('a 1-d distribution needs "family" and "params"')
    family, params = doc["family"], doc["params"]
    if not isinstance(params, dict):
        raise InputError('"params" must be an object')
    try:
        if family == "uniform":
            return Uniform1D(float(params["low"]), float(params["high"]))
        if family == "normal":
            return Normal1D(float(params["mean"]), float(params["std"]))
        if family == "piecewise":
            return PiecewiseLinear1D(params["knots"], params["cdf"])
    except KeyError as exc:
        raise InputError(f"missing parameter {exc.args[0]!r} for family {family!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad parameters for family {family!r}: {exc}") from None
    raise InputError(f"unknown family {family!r}")


def monge_map_1d(source: Continuous1D, target: Continuous1D, x):
    """``T(x) = F_Q^{-1}(F_P(x))``, vectorized.

    Upper-tail points go through the survival function and its inverse,
    which keeps full relative precision where ``F_P(x)`` rounds to 1.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = source.support
    if np.any(~np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
        raise InputError(f"evaluation points must lie in the source support [{lo}, {hi}]")
    u = np.asarray(source.cdf(x), dtype=float)
    upper = u > 0.5
    out = np.empty_like(u)
    out[~upper] = target.ppf(u[~upper])
    out[upper] = target.isf(np.asarray(source.sf(x), dtype=float)[upper])
    return out[()] if out.ndim == 0 else out


def default_window(dist: Continuous1D, tail: float = 1e-6) -> tuple:
    lo, hi = dist.support
    if not np.isfinite(lo):
        lo = float(dist.ppf(tail))
    if not np.isfinite(hi):
        hi = float(dist.isf(tail))
    return lo, hi


def discretize(dist: Continuous1D, k: int = 512, *, scheme: str = "grid",
               window=None) -> DiscreteDistribution:
    """``k``-atom approximation whose labels are the atom positions.

    ``scheme="grid"`` uses equal-width cells over ``window`` (the support, or
    the central ``1 - 2e-6`` mass for unbounded families), atoms at cell
    midpoints with the cell probability, renormalized.  ``scheme="quantile"``
    places equal masses at the mid-quantiles ``F^{-1}((i + 1/2) / k)``.
    """
    if k < 1:
        raise InputError("need at least one atom")
    if scheme == "quantile":
        x = np.asarray(dist.ppf((np.arange(k) + 0.5) / k), dtype=float)
        mass = np.full(k, 1.0 / k)
    elif scheme == "grid":
        lo, hi = window if window is not None else default_window(dist)
        edges = np.linspace(lo, hi, k + 1)
        x = 0.5 * (edges[:-1] + edges[1:])
        mass = np.diff(np.asarray(dist.cdf(edges), dtype=float))
        mass = np.clip(mass, 0.0, None)
        mass = mass / mass.sum()
    else:
        raise InputError(f"unknown discretization scheme {scheme!r}")
    return DiscreteDistribution(FiniteSpace(tuple(float(v) for v in x)), mass)


def quantile_map_cost(source: DiscreteDistribution, T_values, pexp: float = 2.0) -> float:
    """``sum_i p_i |x_i - T(x_i)|^pexp`` for a discretized source."""
    x = np.asarray(source.space.labels, dtype=float)
    return float(np.sum(source.mass * np.abs(x - np.asarray(T_values)) ** pexp))
