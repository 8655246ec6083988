"""Transport between ε-contaminated lower probabilities.

The lower Monge and restricted lower Kantorovich problems are reduced to
their classical counterparts: with a shared ε every objective is the
classical one scaled by ``1 - ε`` and every constraint is the classical
constraint.  Lower plans are stored as a classical coupling plus ε, and
explicit joint tables are kept for membership checks and conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .choquet import AtomFunction, choquet_sorted
from .credal_core import (
    MAX_ENUM_ATOMS,
    Capacity,
    DiscreteDistribution,
    Envelope,
    EpsContamination,
    FiniteSpace,
    IndexMap,
    event_mask,
    subset_sums,
)
from .exceptions import DomainError, InputError, SizeError
from .ot_classical.discrete import (
    MARGINAL_TOL,
    TransportPlan,
    as_cost_matrix,
    check_metric,
    solve_kantorovich,
    solve_monge_discrete,
)

EPS_TOL = 1e-12
ADDITIVITY_TOL = 1e-10
MAX_TABLE_CELLS = 16


def require_equal_epsilon(cP: EpsContamination, cQ: EpsContamination) -> float:
    if abs(cP.epsilon - cQ.epsilon) > EPS_TOL:
        raise DomainError(
            f"source and target contaminations must share epsilon "
            f"(got {cP.epsilon!r} and {cQ.epsilon!r}); the lower marginal "
            f"constraints cannot hold otherwise"
        )
    return cP.epsilon


def _check_map(cP: EpsContamination, T: IndexMap) -> None:
    if T.source != cP.space:
        raise InputError("map source space differs from the source contamination's space")


def _check_cost(c, n: int, m: int):
    c = as_cost_matrix(c)
    if c.shape != (n, m):
        raise InputError(f"cost shape {c.shape} does not match ({n}, {m})")
    return c


def _product_mask(n: int, m: int, A, B) -> np.ndarray:
    return np.outer(event_mask(n, A), event_mask(m, B))


def _cell_mask(n: int, m: int, event) -> np.ndarray:
    """Product events as an ``n x m`` boolean matrix or an iterable of ``(i, j)``."""
    if isinstance(event, np.ndarray) and event.dtype == bool:
        if event.shape == (n, m):
            return event
        if event.shape == (n * m,):
            return event.reshape(n, m)
        raise InputError(f"product event mask must have shape ({n}, {m})")
    out = np.zeros((n, m), dtype=bool)
    try:
        for i, j in event:
            if not (0 <= i < n and 0 <= j < m):
                raise InputError(f"cell ({i}, {j}) outside a {n} x {m} product space")
            out[i, j] = True
    except (TypeError, ValueError):
        raise InputError("product events are boolean matrices or iterables of (i, j)") from None
    return out


@dataclass(frozen=True, eq=False)
class LowerPlan:
    """The lower joint ``(1 - eps) * G`` for a classical coupling ``G``."""

    base: TransportPlan
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not 0.0 <= eps <= 1.0:
            raise InputError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def shape(self):
        return self.base.shape

    @property
    def matrix(self) -> np.ndarray:
        return self.base.matrix

    def __call__(self, event) -> float:
        n, m = self.shape
        return (1.0 - self.epsilon) * float(self.base.matrix[_cell_mask(n, m, event)].sum())

    def rectangle(self, A, B) -> float:
        n, m = self.shape
        return (1.0 - self.epsilon) * float(self.base.matrix[_product_mask(n, m, A, B)].sum())

    def source_lower(self, A) -> float:
        return (1.0 - self.epsilon) * self.base.source.prob(A)

    def target_lower(self, B) -> float:
        return (1.0 - self.epsilon) * self.base.target.prob(B)

    def capacity(self) -> Capacity:
        """Capacity on the product space, cells flattened row-major."""
        n, m = self.shape
        return Capacity.additive(
            FiniteSpace.of_size(n * m), (1.0 - self.epsilon) * self.base.matrix.ravel()
        )


class JointLowerTable:
    """An explicit lower probability on the events of an ``n x m`` product.

    ``table[bits]`` is the value of the event whose cells are the set bits,
    cell ``(i, j)`` being bit ``i * m + j``.
    """

    def __init__(self, n: int, m: int, table):
        if n * m > MAX_TABLE_CELLS:
            raise SizeError(f"explicit joint tables are capped at n*m <= {MAX_TABLE_CELLS}")
        self.n, self.m = int(n), int(m)
        self.capacity = Capacity.from_table(FiniteSpace.of_size(self.n * self.m), table)

    @property
    def table(self) -> np.ndarray:
        return self.capacity.to_table()

    @classmethod
    def from_lower_plan(cls, plan: LowerPlan) -> "JointLowerTable":
        n, m = plan.shape
        if n * m > MAX_TABLE_CELLS:
            raise SizeError(f"explicit joint tables are capped at n*m <= {MAX_TABLE_CELLS}")
        return cls(n, m, (1.0 - plan.epsilon) * subset_sums(plan.matrix.ravel()))

    @classmethod
    def from_min_of_joints(cls, joints, epsilon: float) -> "JointLowerTable":
        """``E -> (1 - eps) * min_k G_k(E)`` for couplings ``G_k`` of equal shape."""
        mats = [np.asarray(getattr(g, "matrix", g), dtype=float) for g in joints]
        if not mats or any(mat.shape != mats[0].shape for mat in mats):
            raise InputError("need at least one joint, all of the same shape")
        n, m = mats[0].shape
        if n * m > MAX_TABLE_CELLS:
            raise SizeError(f"explicit joint tables are capped at n*m <= {MAX_TABLE_CELLS}")
        tables = np.stack([subset_sums(mat.ravel()) for mat in mats])
        return cls(n, m, (1.0 - epsilon) * tables.min(axis=0))

    def __call__(self, event) -> float:
        return self.capacity.value_of_mask(_cell_mask(self.n, self.m, event).ravel())

    def rectangle(self, A, B) -> float:
        return self.capacity.value_of_mask(_product_mask(self.n, self.m, A, B).ravel())

    def source_lower(self, A) -> float:
        return self.rectangle(A, np.ones(self.m, dtype=bool))

    def target_lower(self, B) -> float:
        return self.rectangle(np.ones(self.n, dtype=bool), B)

    @property
    def shape(self):
        return (self.n, self.m)


Joint = Union[LowerPlan, JointLowerTable]


def lpm_objective(cP: EpsContamination, T: IndexMap, c, envelope=Envelope.INCOHERENT) -> float:
    """Choquet integral of ``x -> c(x, T(x))`` against the source envelope."""
    _check_map(cP, T)
    c = _check_cost(c, cP.n, T.target.n)
    f = AtomFunction(cP.space, c.data[np.arange(cP.n), T.assignment])
    return choquet_sorted(f, cP.capacity(envelope))


def check_pushforward_constraint(cP: EpsContamination, T: IndexMap, cQ: EpsContamination,
                                 tol: float = MARGINAL_TOL) -> bool:
    """Whether ``T_# P_ = Q_`` on every target event.

    The comparison tolerance is ``tol * (1 - eps)`` so that the answer
    matches the classical check ``T_# P = Q`` at tolerance ``tol``.
    """
    eps = require_equal_epsilon(cP, cQ)
    _check_map(cP, T)
    if T.target != cQ.space:
        raise InputError("map target space differs from the target contamination's space")
    pushed = (1.0 - eps) * T.pushforward(cP.base).mass
    wanted = (1.0 - eps) * cQ.base.mass
    band = tol * (1.0 - eps)
    if cQ.n <= MAX_ENUM_ATOMS:
        return bool(np.abs(subset_sums(pushed) - subset_sums(wanted)).max() <= band)
    return bool(np.abs(pushed - wanted).max() <= band)


def solve_lpm(cP: EpsContamination, cQ: EpsContamination, c):
    """Optimal lower Monge map, through the classical Monge problem.

    Returns ``(T, value)`` or ``None`` when no map pushes ``P`` onto ``Q``.
    """
    require_equal_epsilon(cP, cQ)
    c = _check_cost(c, cP.n, cQ.n)
    found = solve_monge_discrete(cP.base, cQ.base, c)
    if found is None:
        return None
    T, _ = found
    return T, lpm_objective(cP, T, c)


def rlpk_objective(plan: LowerPlan, c) -> float:
    """Choquet integral of the cost against the lower plan's product capacity."""
    n, m = plan.shape
    c = _check_cost(c, n, m)
    f = AtomFunction(FiniteSpace.of_size(n * m), c.data.ravel())
    return choquet_sorted(f, plan.capacity())


def solve_rlpk(cP: EpsContamination, cQ: EpsContamination, c, *, log: bool = False):
    """Optimal restricted lower Kantorovich plan via the classical LP.

    Returns ``(LowerPlan, value)``; with ``log=True`` the solver diagnostics
    are appended.
    """
    eps = require_equal_epsilon(cP, cQ)
    c = _check_cost(c, cP.n, cQ.n)
    out = solve_kantorovich(cP.base, cQ.base, c, log=log)
    plan = LowerPlan(out[0], eps)
    value = rlpk_objective(plan, c)
    return (plan, value, out[2]) if log else (plan, value)


def joint_objective(j: Joint, c) -> float:
    """Choquet integral of the cost against any joint lower probability."""
    if isinstance(j, LowerPlan):
        return rlpk_objective(j, c)
    c = _check_cost(c, j.n, j.m)
    return choquet_sorted(AtomFunction(j.capacity.space, c.data.ravel()), j.capacity)


def _table_of(j: Joint, cP: EpsContamination, cQ: EpsContamination) -> np.ndarray:
    if j.shape != (cP.n, cQ.n):
        raise InputError(f"joint has shape {j.shape}, endpoints need ({cP.n}, {cQ.n})")
    if isinstance(j, LowerPlan):
        return None
    return j.table


def gamma_r_membership(j: Joint, cP: EpsContamination, cQ: EpsContamination,
                       tol: float = ADDITIVITY_TOL) -> bool:
    """Whether ``j = (1 - eps) G`` for a coupling ``G`` of ``P`` and ``Q``.

    For tables: divide by ``1 - eps``, read the cell weights off the
    singletons and require every event to be the sum of its cells, the
    weights to be nonnegative, and their marginals to be ``P`` and ``Q``.
    """
    eps = require_equal_epsilon(cP, cQ)
    table = _table_of(j, cP, cQ)
    if table is None:
        if abs(j.epsilon - eps) > EPS_TOL:
            return False
        mat = j.matrix
    else:
        if eps >= 1.0:
            return bool(np.abs(table).max() <= tol)
        scaled = table / (1.0 - eps)
        k = cP.n * cQ.n
        weights = scaled[1 << np.arange(k)]
        if weights.min() < -tol or np.abs(subset_sums(weights) - scaled).max() > tol:
            return False
        mat = weights.reshape(cP.n, cQ.n)
    return bool(
        np.abs(mat.sum(axis=1) - cP.base.mass).max() <= tol
        and np.abs(mat.sum(axis=0) - cQ.base.mass).max() <= tol
    )


def gamma_geom_membership(j: Joint, cP: EpsContamination, cQ: EpsContamination,
                          tol: float = ADDITIVITY_TOL) -> bool:
    """Capacity axioms plus lower marginals ``j(A x Y) = P_(A)``, ``j(X x B) = Q_(B)``."""
    eps = require_equal_epsilon(cP, cQ)
    table = _table_of(j, cP, cQ)
    if table is None:
        if abs(j.epsilon - eps) > EPS_TOL:
            return False
        table = JointLowerTable.from_lower_plan(j).table
    n, m = cP.n, cQ.n
    if abs(table[0]) > tol or table.min() < -tol or table.max() > 1 + tol:
        return False
    cell = np.arange(n * m, dtype=np.int64).reshape(n, m)
    row_bits = (np.int64(1) << cell).sum(axis=1)
    col_bits = (np.int64(1) << cell).sum(axis=0)
    # disjoint bit blocks, so subset sums of the blocks are the event bitmasks
    src = table[subset_sums(row_bits).astype(np.int64)]
    tgt = table[subset_sums(col_bits).astype(np.int64)]
    return bool(
        np.abs(src - (1.0 - eps) * subset_sums(cP.base.mass)).max() <= tol
        and np.abs(tgt - (1.0 - eps) * subset_sums(cQ.base.mass)).max() <= tol
    )


def geometric_condition(j: Joint, A, B) -> float:
    """``j(A x B) / j(X x B)``.

    For a lower plan the ``1 - eps`` factors cancel and the value is
    computed as ``G(A, B) / Q(B)``, so it does not depend on eps.
    """
    n, m = j.shape
    if isinstance(j, LowerPlan):
        if j.epsilon >= 1.0:
            raise DomainError("conditioning on an event of zero lower probability")
        G = j.matrix
        den = float(G[:, event_mask(m, B)].sum())
        num = float(G[_product_mask(n, m, A, B)].sum())
    else:
        den = j.target_lower(B)
        num = j.rectangle(A, B)
    if den <= 0:
        raise DomainError("conditioning on an event of zero lower probability")
    return num / den


def gbc_condition(j: LowerPlan, A, B) -> float:
    """Generalized Bayes rule ``(1 - eps) G(A, B) / ((1 - eps) Q(B) + eps)``."""
    if not isinstance(j, LowerPlan):
        raise InputError("generalized Bayes conditioning needs a LowerPlan")
    n, m = j.shape
    eps = j.epsilon
    G = j.matrix
    num = (1.0 - eps) * float(G[_product_mask(n, m, A, B)].sum())
    den = (1.0 - eps) * float(G[:, event_mask(m, B)].sum()) + eps
    if den <= 0:
        raise DomainError("conditioning on an event of zero upper probability")
    return num / den


def deterministic_lower_plan(cP: EpsContamination, T: IndexMap) -> LowerPlan:
    """Lower plan carried by the graph of ``T``: ``G[i, T(i)] = P(i)``."""
    _check_map(cP, T)
    return LowerPlan(TransportPlan.from_map(cP.base, T), cP.epsilon)


def lower_wasserstein_p(cP: EpsContamination, cQ: EpsContamination, d,
                        pexp: float = 1.0) -> float:
    """``p``-th root of the restricted lower Kantorovich value for cost ``d^p``."""
    require_equal_epsilon(cP, cQ)
    if not pexp >= 1:
        raise InputError(f"the Wasserstein exponent must be >= 1, got {pexp!r}")
    d = check_metric(d)
    if d.shape != (cP.n, cQ.n):
        raise InputError("distance matrix does not match the endpoint spaces")
    _, value = solve_rlpk(cP, cQ, d ** pexp)
    return max(value, 0.0) ** (1.0 / pexp)


def contaminate(d: DiscreteDistribution, epsilon: Optional[float]) -> EpsContamination:
    return EpsContamination(d, 0.0 if epsilon is None else float(epsilon))
