"""Monge and Kantorovich problems between discrete distributions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..credal_core import DiscreteDistribution, FiniteSpace, IndexMap, _frozen
from ..exceptions import InputError, SizeError, SolverError
from ._network_simplex import STATUS_OPTIMAL, network_simplex

MARGINAL_TOL = 1e-9
MONGE_MAX_ATOMS = 8
BRUTE_FORCE_MAX_CELLS = 9


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Nonnegative finite transport costs, rows = source atoms."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or 0 in data.shape:
            raise InputError(f"cost matrix must be a nonempty 2-d array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InputError("costs must be finite")
        if np.any(data < 0):
            raise InputError("costs must be nonnegative")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


def as_cost_matrix(c) -> CostMatrix:
    return c if isinstance(c, CostMatrix) else CostMatrix(c)


def as_distribution(p) -> DiscreteDistribution:
    if isinstance(p, DiscreteDistribution):
        return p
    return DiscreteDistribution.from_masses(p)


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """A coupling matrix together with the marginals it must reproduce."""

    matrix: np.ndarray
    source: DiscreteDistribution
    target: DiscreteDistribution

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (self.source.n, self.target.n):
            raise InputError(
                f"plan has shape {mat.shape}, marginals need {(self.source.n, self.target.n)}"
            )
        if np.any(mat < 0) or not np.all(np.isfinite(mat)):
            raise InputError("plan entries must be finite and nonnegative")
        if np.abs(mat.sum(axis=1) - self.source.mass).max() > MARGINAL_TOL:
            raise InputError("plan row sums do not match the source marginal")
        if np.abs(mat.sum(axis=0) - self.target.mass).max() > MARGINAL_TOL:
            raise InputError("plan column sums do not match the target marginal")
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def shape(self):
        return self.matrix.shape

    def cost(self, c) -> float:
        c = as_cost_matrix(c)
        if c.shape != self.shape:
            raise InputError("cost and plan shapes differ")
        return float(np.sum(c.data * self.matrix))

    def is_deterministic(self, atol: float = 0.0) -> bool:
        """At most one positive entry per row."""
        return bool(np.all((self.matrix > atol).sum(axis=1) <= 1))

    def induced_map(self) -> IndexMap:
        """The map ``i -> argmax_j plan[i, j]``; exact for deterministic plans."""
        return IndexMap(self.source.space, self.target.space, self.matrix.argmax(axis=1))

    @classmethod
    def from_map(cls, p: DiscreteDistribution, T: IndexMap) -> "TransportPlan":
        mat = np.zeros((p.n, T.target.n))
        mat[np.arange(p.n), T.assignment] = p.mass
        return cls(mat, p, T.pushforward(p))


def _check_problem(p, q, c):
    p, q, c = as_distribution(p), as_distribution(q), as_cost_matrix(c)
    if c.shape != (p.n, q.n):
        raise InputError(f"cost shape {c.shape} does not match marginals ({p.n}, {q.n})")
    return p, q, c


def solve_kantorovich(p, q, c, *, rule: str = "block", log: bool = False):
    """Exact optimal coupling by network simplex.

    Zero-mass atoms are removed before solving and come back as zero rows or
    columns.  Returns ``(plan, value)``, or ``(plan, value, info)`` with
    ``log=True`` where ``info`` holds the iteration count, dual potentials
    and the duality gap.
    """
    p, q, c = _check_problem(p, q, c)
    if rule not in ("block", "bland"):
        raise InputError(f"unknown pivot rule {rule!r}")
    rows = np.flatnonzero(p.mass > 0)
    cols = np.flatnonzero(q.mass > 0)
    sub_cost = c.data[np.ix_(rows, cols)]
    sub, u, v, iters, status = network_simplex(
        p.mass[rows], q.mass[cols], sub_cost, rule=rule
    )
    if status != STATUS_OPTIMAL:
        raise SolverError(f"network simplex stopped with status {status}")
    mat = np.zeros((p.n, q.n))
    mat[np.ix_(rows, cols)] = sub
    plan = TransportPlan(mat, p, q)
    value = float(np.sum(c.data * mat))
    if not log:
        return plan, value
    dual = float(p.mass[rows] @ u + q.mass[cols] @ v)
    info = {
        "iterations": iters,
        "rule": rule,
        "dual_value": dual,
        "duality_gap": abs(value - dual),
        "min_reduced_cost": float((sub_cost - u[:, None] - v[None, :]).min()),
        "u": u,
        "v": v,
        "support_rows": rows,
        "support_cols": cols,
    }
    return plan, value, info


def _spanning_tree_flows(cells, a, b):
    """Flows on a spanning tree of the bipartite graph, or None if not a tree."""
    n, m = a.size, b.size
    parent = list(range(n + m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in cells:
        ri, rj = find(i), find(n + j)
        if ri == rj:
            return None
        parent[ri] = rj
    supply = np.concatenate([a, b]).astype(float)
    remaining = list(cells)
    flows = {}
    while remaining:
        degree = np.zeros(n + m, dtype=int)
        for i, j in remaining:
            degree[i] += 1
            degree[n + j] += 1
        for k, (i, j) in enumerate(remaining):
            if degree[i] == 1 or degree[n + j] == 1:
                leaf = i if degree[i] == 1 else n + j
                other = n + j if leaf == i else i
                x = supply[leaf]
                flows[(i, j)] = x
                supply[leaf] -= x
                supply[other] -= x
                del remaining[k]
                break
    return flows


def brute_force_kantorovich(p, q, c, *, method: str = "vertices", pitch: float = 1e-3,
                            max_points: int = 2_000_000) -> float:
    """Slow independent optimum of the transport LP for ``n * m <= 9``.

    ``method="vertices"`` enumerates every basic feasible solution (spanning
    trees of the bipartite graph) and is exact.  ``method="grid"`` searches a
    grid over the free entries, deriving the last row and column from the
    marginals; the pitch is coarsened if the grid would exceed
    ``max_points`` points, so its answer is only a band around the optimum.
    """
    p, q, c = _check_problem(p, q, c)
    n, m = p.n, q.n
    if n * m > BRUTE_FORCE_MAX_CELLS:
        raise SizeError(f"brute force is capped at n*m <= {BRUTE_FORCE_MAX_CELLS}")
    a, b, C = p.mass, q.mass, c.data
    if method == "vertices":
        best = np.inf
        all_cells = [(i, j) for i in range(n) for j in range(m)]
        for cells in itertools.combinations(all_cells, n + m - 1):
            flows = _spanning_tree_flows(list(cells), a, b)
            if flows is None or min(flows.values()) < -1e-12:
                continue
            best = min(best, sum(C[i, j] * x for (i, j), x in flows.items()))
        return float(best)
    if method != "grid":
        raise InputError(f"unknown brute force method {method!r}")
    free = [(i, j) for i in range(n - 1) for j in range(m - 1)]
    if not free:
        mat = np.outer(a, b) if n == 1 or m == 1 else None
        return float(np.sum(C * mat))
    per_axis = max(2, int(np.floor(max_points ** (1.0 / len(free)))))
    axes = []
    for i, j in free:
        hi = min(a[i], b[j])
        step = max(pitch, hi / (per_axis - 1))
        axes.append(np.unique(np.append(np.arange(0.0, hi, step), hi)))
    grids = np.meshgrid(*axes, indexing="ij")
    x = np.zeros((grids[0].size, n, m))
    for (i, j), g in zip(free, grids):
        x[:, i, j] = g.ravel()
    for i in range(n - 1):
        x[:, i, m - 1] = a[i] - x[:, i, : m - 1].sum(axis=1)
    for j in range(m - 1):
        x[:, n - 1, j] = b[j] - x[:, : n - 1, j].sum(axis=1)
    x[:, n - 1, m - 1] = a[n - 1] - x[:, n - 1, : m - 1].sum(axis=1)
    feasible = np.all(x.reshape(len(x), -1) >= -1e-12, axis=1)
    if not feasible.any():
        raise SolverError("no feasible grid point; refine the pitch")
    costs = np.einsum("kij,ij->k", x[feasible], C)
    return float(costs.min())


def solve_monge_discrete(p, q, c, *, tol: float = MARGINAL_TOL):
    """Cheapest map ``T`` with ``T_# p = q``, found by exhaustive search.

    Returns ``(IndexMap, value)`` or ``None`` when no map pushes ``p`` onto
    ``q`` (for instance a Dirac source with a spread-out target).  Source
    atoms without mass do not affect feasibility or cost and are sent to
    their cheapest target.
    """
    p, q, c = _check_problem(p, q, c)
    n, m = p.n, q.n
    if n > MONGE_MAX_ATOMS:
        raise SizeError(f"exhaustive Monge search is capped at n <= {MONGE_MAX_ATOMS}")
    C = c.data
    a = p.mass
    assignment = np.argmin(C, axis=1)
    active = [i for i in range(n) if a[i] > 0]
    remaining = q.mass.astype(float).copy()
    current = np.zeros(n, dtype=np.int64)
    best_cost = np.inf
    best = None

    def search(k, acc):
        nonlocal best_cost, best
        if k == len(active):
            if np.all(np.abs(remaining) <= tol) and acc < best_cost:
                best_cost = acc
                best = current.copy()
            return
        i = active[k]
        for j in range(m):
            if a[i] <= remaining[j] + tol:
                remaining[j] -= a[i]
                current[i] = j
                search(k + 1, acc + a[i] * C[i, j])
                remaining[j] += a[i]

    search(0, 0.0)
    if best is None:
        return None
    for i in active:
        assignment[i] = best[i]
    T = IndexMap(p.space, q.space, assignment)
    value = float(np.sum(a * C[np.arange(n), assignment]))
    return T, value


def check_metric(d, tol: float = 1e-9) -> np.ndarray:
    """Validate a distance matrix: symmetric, zero diagonal, triangle inequality."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputError("a distance matrix must be square")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise InputError("distances must be finite and nonnegative")
    if np.abs(d - d.T).max() > tol:
        raise InputError("distance matrix is not symmetric")
    if np.abs(np.diag(d)).max() > tol:
        raise InputError("distance matrix has a nonzero diagonal")
    for j in range(d.shape[0]):
        if np.any(d > d[:, j][:, None] + d[j, :][None, :] + tol):
            raise InputError("distance matrix violates the triangle inequality")
    return d


def wasserstein_p(p, q, d, pexp: float = 1.0) -> float:
    """``W_p`` between two distributions on a common metric space."""
    if not pexp >= 1:
        raise InputError(f"the Wasserstein exponent must be >= 1, got {pexp!r}")
    d = check_metric(d)
    _, value = solve_kantorovich(p, q, d ** pexp)
    return max(value, 0.0) ** (1.0 / pexp)


def euclidean_distances(x, y=None) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 1 and x.ndim == 2 and x.shape[1] > 1 and y is None:
        x = x.T
    y = x if y is None else np.atleast_2d(np.asarray(y, dtype=float))
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def positions_space(x) -> FiniteSpace:
    return FiniteSpace(tuple(float(v) for v in np.asarray(x, dtype=float).ravel()))
