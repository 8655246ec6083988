"""Closed-form linear transport map between centred Gaussians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..credal_core import _frozen
from ..exceptions import InputError

SYMMETRY_TOL = 1e-10
DET_TOL = 1e-12


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def check_spd(m, name: str = "matrix") -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InputError(f"{name} must be a nonempty square matrix")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    if np.abs(m - m.T).max() > SYMMETRY_TOL:
        raise InputError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(_symmetrize(m)).min() <= 0:
        raise InputError(f"{name} is not positive definite")
    return m


def _spd_power(m: np.ndarray, power: float) -> np.ndarray:
    w, v = np.linalg.eigh(_symmetrize(m))
    return _symmetrize((v * w ** power) @ v.T)


def matrix_sqrt_spd(m) -> np.ndarray:
    """Symmetric positive square root through an eigendecomposition."""
    return _spd_power(check_spd(m), 0.5)


@dataclass(frozen=True, eq=False)
class GaussianPair:
    """Covariances of two centred Gaussians and an invertible matrix ``a``.

    ``a`` enters the cost ``|y - a x|^2 / 2``; the identity gives the usual
    quadratic cost.
    """

    sigma_p: np.ndarray
    sigma_q: np.ndarray
    a: Optional[np.ndarray] = None

    def __post_init__(self):
        sp = check_spd(self.sigma_p, "sigma_p")
        sq = check_spd(self.sigma_q, "sigma_q")
        if sp.shape != sq.shape:
            raise InputError("sigma_p and sigma_q have different dimensions")
        a = np.eye(sp.shape[0]) if self.a is None else np.array(self.a, dtype=float)
        if a.shape != sp.shape or not np.all(np.isfinite(a)):
            raise InputError("a must be a finite square matrix of the covariance dimension")
        if abs(np.linalg.det(a)) <= DET_TOL:
            raise InputError("a must be invertible")
        object.__setattr__(self, "sigma_p", _frozen(sp))
        object.__setattr__(self, "sigma_q", _frozen(sq))
        object.__setattr__(self, "a", _frozen(a))

    @property
    def dim(self) -> int:
        return self.sigma_p.shape[0]


def gaussian_monge_map(g: GaussianPair) -> np.ndarray:
    """Matrix ``T`` of the optimal linear map, so that ``T sigma_p T^T = sigma_q``.

    ``T = a^{-T} Sp^{-1/2} (Sp^{1/2} a^T Sq a Sp^{1/2})^{1/2} Sp^{-1/2}``,
    assembled right to left.
    """
    a = g.a
    root_p = _spd_power(g.sigma_p, 0.5)
    inv_root_p = _spd_power(g.sigma_p, -0.5)
    inner = _symmetrize(root_p @ (a.T @ g.sigma_q @ a) @ root_p)
    middle = _spd_power(inner, 0.5)
    return np.linalg.solve(a.T, inv_root_p @ middle @ inv_root_p)


def map_cost(g: GaussianPair, T: Optional[np.ndarray] = None) -> float:
    """``E |T x - a x|^2 / 2`` for ``x ~ N(0, sigma_p)``."""
    T = gaussian_monge_map(g) if T is None else np.asarray(T, dtype=float)
    D = T - g.a
    return 0.5 * float(np.trace(D @ g.sigma_p @ D.T))


def bures_cost(sigma_p, sigma_q) -> float:
    """Half the squared 2-Wasserstein distance between centred Gaussians."""
    sp = check_spd(sigma_p, "sigma_p")
    sq = check_spd(sigma_q, "sigma_q")
    root = _spd_power(sp, 0.5)
    cross = _spd_power(_symmetrize(root @ sq @ root), 0.5)
    return 0.5 * float(np.trace(sp) + np.trace(sq) - 2.0 * np.trace(cross))


def grid_discretization(sigma, points_per_axis: int = 40, half_width: float = 4.5):
    """Points and weights approximating ``N(0, sigma)``.

    A regular grid on ``[-half_width, half_width]^d`` carries standard-normal
    weights and is mapped through ``sigma^{1/2}``.
    """
    root = matrix_sqrt_spd(sigma)
    d = root.shape[0]
    axis = np.linspace(-half_width, half_width, points_per_axis)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    w = np.exp(-0.5 * np.sum(grid * grid, axis=1))
    return grid @ root.T, w / w.sum()


def random_spd(rng: np.random.Generator, d: int, floor: float = 0.1) -> np.ndarray:
    m = rng.standard_normal((d, d))
    return m @ m.T / d + floor * np.eye(d)


def random_invertible(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        a = rng.standard_normal((d, d)) + 0.5 * np.eye(d)
        if np.linalg.cond(a) < 1e3:
            return a
