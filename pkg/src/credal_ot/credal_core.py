"""Finite spaces, distributions and epsilon-contaminated credal sets.

Events are subsets of atom indices ``0..n-1``.  Anywhere an event is accepted
you may pass an iterable of indices or a boolean mask of length ``n``.
Exhaustive loops over the powerset use integer bitmasks (bit ``i`` is atom
``i``) and are capped at :data:`MAX_ENUM_ATOMS` atoms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .exceptions import DomainError, InputError, SizeError

MAX_ENUM_ATOMS = 20
MASS_TOL = 1e-12
DOMINANCE_TOL = 1e-12


class Envelope(str, enum.Enum):
    """Which lower envelope of an epsilon-contamination to use.

    ``INCOHERENT`` is ``(1 - eps) P(A)`` on every event, including the full
    space.  ``COHERENT`` agrees with it except that the full space gets 1.
    Both generate the same core.
    """

    INCOHERENT = "incoherent"
    COHERENT = "coherent"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def subset_sums(values: Sequence[float]) -> np.ndarray:
    """Sums of ``values`` over every subset, indexed by bitmask."""
    values = np.asarray(values, dtype=float)
    if values.size > MAX_ENUM_ATOMS:
        raise SizeError(
            f"powerset enumeration needs n <= {MAX_ENUM_ATOMS}, got n={values.size}"
        )
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def mask_to_indices(bits: int, n: int) -> tuple:
    return tuple(i for i in range(n) if bits >> i & 1)


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered set of distinct atom labels."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) == 0:
            raise InputError("a finite space needs at least one atom")
        if len(set(labels)) != len(labels):
            raise InputError("space labels must be unique")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, n: int) -> "FiniteSpace":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"label {label!r} is not an atom of this space") from None

    def event(self, *labels) -> frozenset:
        """Build an index event from atom labels."""
        return frozenset(self.index(lab) for lab in labels)

    @property
    def full(self) -> frozenset:
        return frozenset(range(self.n))

    def mask(self, event) -> np.ndarray:
        """Validate ``event`` and return it as a boolean mask."""
        return event_mask(self.n, event)


def event_mask(n: int, event) -> np.ndarray:
    if isinstance(event, np.ndarray) and event.dtype == bool:
        if event.shape != (n,):
            raise InputError(f"boolean event mask must have shape ({n},)")
        return event
    if isinstance(event, (str, bytes)) or not isinstance(event, Iterable):
        raise InputError(f"events are iterables of atom indices, got {event!r}")
    out = np.zeros(n, dtype=bool)
    for i in event:
        if isinstance(i, (bool, np.bool_)) or not isinstance(i, (int, np.integer)):
            raise InputError(f"event index {i!r} is not an integer")
        if not 0 <= i < n:
            raise InputError(f"event index {i} out of range for a space of {n} atoms")
        out[i] = True
    return out


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability mass function on a :class:`FiniteSpace`."""

    space: FiniteSpace
    mass: np.ndarray

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (self.space.n,):
            raise InputError(
                f"mass has shape {mass.shape}, expected ({self.space.n},)"
            )
        if not np.all(np.isfinite(mass)):
            raise InputError("masses must be finite")
        if np.any(mass < 0):
            raise InputError("masses must be nonnegative")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise InputError(f"masses sum to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", _frozen(mass))

    @classmethod
    def from_masses(cls, mass, labels=None) -> "DiscreteDistribution":
        mass = np.asarray(mass, dtype=float)
        space = FiniteSpace(tuple(range(mass.size)) if labels is None else tuple(labels))
        return cls(space, mass)

    @classmethod
    def uniform(cls, space) -> "DiscreteDistribution":
        if not isinstance(space, FiniteSpace):
            space = FiniteSpace.of_size(int(space))
        return cls(space, np.full(space.n, 1.0 / space.n))

    @classmethod
    def dirac(cls, space: FiniteSpace, index: int) -> "DiscreteDistribution":
        mass = np.zeros(space.n)
        mass[index] = 1.0
        return cls(space, mass)

    @property
    def n(self) -> int:
        return self.space.n

    def prob(self, event) -> float:
        return float(self.mass[self.space.mask(event)].sum())

    def same_as(self, other: "DiscreteDistribution", atol: float = 1e-12) -> bool:
        return self.space == other.space and bool(
            np.allclose(self.mass, other.mass, rtol=0.0, atol=atol)
        )

    def __repr__(self) -> str:
        return f"DiscreteDistribution(n={self.n}, mass={np.round(self.mass, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class EpsContamination:
    """The credal set ``{(1 - eps) P + eps R : R any distribution}``."""

    base: DiscreteDistribution
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not np.isfinite(eps) or not 0.0 <= eps <= 1.0:
            raise InputError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def space(self) -> FiniteSpace:
        return self.base.space

    @property
    def n(self) -> int:
        return self.base.n

    def capacity(self, envelope=Envelope.INCOHERENT) -> "Capacity":
        return Capacity.from_contamination(self, envelope)


def lower_incoherent(c: EpsContamination, event) -> float:
    """``(1 - eps) P(A)`` for every event, the full space included."""
    return (1.0 - c.epsilon) * c.base.prob(event)


def lower_coherent(c: EpsContamination, event) -> float:
    mask = c.space.mask(event)
    if mask.all():
        return 1.0
    return (1.0 - c.epsilon) * float(c.base.mass[mask].sum())


def lower(c: EpsContamination, event, envelope=Envelope.INCOHERENT) -> float:
    if Envelope(envelope) is Envelope.COHERENT:
        return lower_coherent(c, event)
    return lower_incoherent(c, event)


def upper(c: EpsContamination, event) -> float:
    """``(1 - eps) P(A) + eps`` for nonempty ``A`` and 0 on the empty set.

    No normalisation at the full space: with ``eps > 0`` the value there is
    exactly 1 anyway.
    """
    mask = c.space.mask(event)
    if not mask.any():
        return 0.0
    return (1.0 - c.epsilon) * float(c.base.mass[mask].sum()) + c.epsilon


def _check_same_space(candidate: DiscreteDistribution, c: EpsContamination) -> None:
    if candidate.space != c.space:
        raise InputError("candidate and contamination live on different spaces")


def core_membership(
    candidate: DiscreteDistribution, c: EpsContamination, tol: float = DOMINANCE_TOL
) -> bool:
    """Whether ``candidate`` dominates ``(1 - eps) P`` on every event.

    Enumerates the whole powerset, so ``n <= 20``.  Because the coherent and
    incoherent envelopes only differ on the full space, where every
    probability equals 1, this tests membership in both cores at once.
    """
    _check_same_space(candidate, c)
    cand = subset_sums(candidate.mass)
    low = (1.0 - c.epsilon) * subset_sums(c.base.mass)
    return bool(np.all(cand >= low - tol))


def decompose(
    candidate: DiscreteDistribution, c: EpsContamination
) -> Optional[DiscreteDistribution]:
    """Recover ``R`` with ``candidate = (1 - eps) P + eps R``, or ``None``."""
    _check_same_space(candidate, c)
    if c.epsilon == 0.0:
        raise DomainError("decomposition is undefined for epsilon = 0")
    diff = candidate.mass - (1.0 - c.epsilon) * c.base.mass
    if c.n <= MAX_ENUM_ATOMS:
        member = core_membership(candidate, c)
    else:
        # the worst event collects exactly the negative differences
        member = diff[diff < 0].sum() >= -DOMINANCE_TOL
    if not member:
        return None
    r = np.clip(diff / c.epsilon, 0.0, None)
    total = r.sum()
    if abs(total - 1.0) > 1e-9:
        return None
    return DiscreteDistribution(c.space, r / total)


def extreme_points(c: EpsContamination) -> list:
    """The distributions ``(1 - eps) P + eps delta_x``, one per atom, deduplicated."""
    points = []
    seen = set()
    for i in range(c.n):
        mass = (1.0 - c.epsilon) * c.base.mass
        mass[i] += c.epsilon
        key = mass.tobytes()
        if key in seen:
            continue
        seen.add(key)
        points.append(DiscreteDistribution(c.space, mass / mass.sum()))
    return points


class Capacity:
    """A set function on the events of a finite space.

    Three backings are supported: an arbitrary evaluator on boolean masks, an
    explicit table indexed by bitmask, and the additive form
    ``nu(A) = sum of weights over A`` with an optional override on the full
    space (which covers both contamination envelopes and lower plans).
    """

    def __init__(
        self,
        space: FiniteSpace,
        evaluator: Optional[Callable[[np.ndarray], float]] = None,
        *,
        table: Optional[np.ndarray] = None,
        weights: Optional[np.ndarray] = None,
        full_value: Optional[float] = None,
    ):
        if sum(x is not None for x in (evaluator, table, weights)) != 1:
            raise InputError("give exactly one of evaluator, table or weights")
        self.space = space
        self._evaluator = evaluator
        self._table = None
        self._weights = None
        self._full_value = full_value
        if table is not None:
            table = np.array(table, dtype=float)
            if space.n > MAX_ENUM_ATOMS:
                raise SizeError(f"explicit capacity tables need n <= {MAX_ENUM_ATOMS}")
            if table.shape != (1 << space.n,):
                raise InputError(f"capacity table needs {1 << space.n} entries")
            if not np.all(np.isfinite(table)):
                raise InputError("capacity table values must be finite")
            if abs(table[0]) > MASS_TOL:
                raise InputError("a capacity must vanish on the empty set")
            if np.any(table < -MASS_TOL) or np.any(table > 1 + MASS_TOL):
                raise InputError("capacity values must lie in [0, 1]")
            table[0] = 0.0
            self._table = _frozen(table)
        if weights is not None:
            weights = np.array(weights, dtype=float)
            if weights.shape != (space.n,):
                raise InputError(f"weights need shape ({space.n},)")
            if np.any(weights < 0) or weights.sum() > 1 + 1e-9:
                raise InputError("additive capacity weights must be >= 0 with total <= 1")
            self._weights = _frozen(weights)

    @classmethod
    def from_table(cls, space: FiniteSpace, table) -> "Capacity":
        return cls(space, table=table)

    @classmethod
    def additive(cls, space: FiniteSpace, weights, full_value=None) -> "Capacity":
        return cls(space, weights=weights, full_value=full_value)

    @classmethod
    def from_contamination(cls, c: EpsContamination, envelope=Envelope.INCOHERENT):
        weights = (1.0 - c.epsilon) * c.base.mass
        full = 1.0 if Envelope(envelope) is Envelope.COHERENT else None
        return cls(c.space, weights=weights, full_value=full)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def weights(self) -> Optional[np.ndarray]:
        """Atom weights when the capacity is additive (off the full space)."""
        return self._weights

    def value_of_mask(self, mask: np.ndarray) -> float:
        if self._weights is not None:
            if self._full_value is not None and mask.all():
                return float(self._full_value)
            return float(self._weights[mask].sum())
        if self._table is not None:
            bits = int(np.dot(mask.astype(np.int64), 1 << np.arange(self.n, dtype=np.int64)))
            return float(self._table[bits])
        return float(self._evaluator(mask))

    def __call__(self, event) -> float:
        return self.value_of_mask(self.space.mask(event))

    def chain_values(self, order: Sequence[int]) -> np.ndarray:
        """Values on the nested sets ``{order[0]}, {order[0], order[1]}, ...``."""
        order = np.asarray(order, dtype=np.int64)
        if self._weights is not None:
            vals = np.cumsum(self._weights[order])
            if self._full_value is not None and order.size == self.n:
                vals[-1] = self._full_value
            return vals
        if self._table is not None:
            bits = np.cumsum(np.int64(1) << order)
            return self._table[bits].astype(float)
        out = np.empty(order.size)
        mask = np.zeros(self.n, dtype=bool)
        for k, i in enumerate(order):
            mask[i] = True
            out[k] = self._evaluator(mask.copy())
        return out

    def to_table(self) -> np.ndarray:
        if self._table is not None:
            return self._table
        n = self.n
        if n > MAX_ENUM_ATOMS:
            raise SizeError(f"materialising a capacity table needs n <= {MAX_ENUM_ATOMS}")
        if self._weights is not None:
            table = subset_sums(self._weights)
            if self._full_value is not None:
                table[-1] = self._full_value
            return table
        table = np.empty(1 << n)
        for bits in range(1 << n):
            mask = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
            table[bits] = self._evaluator(mask)
        return table


@dataclass(frozen=True, eq=False)
class IndexMap:
    """A total map between the atoms of two finite spaces."""

    source: FiniteSpace
    target: FiniteSpace
    assignment: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.shape != (self.source.n,):
            raise InputError(
                f"assignment needs one target index per source atom ({self.source.n})"
            )
        if a.size and not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.equal(np.mod(a, 1), 0)):
                raise InputError("assignment entries must be integers")
        a = a.astype(np.int64)
        if np.any(a < 0) or np.any(a >= self.target.n):
            raise InputError("assignment points outside the target space")
        object.__setattr__(self, "assignment", _frozen(a))

    @classmethod
    def identity(cls, space: FiniteSpace) -> "IndexMap":
        return cls(space, space, np.arange(space.n))

    @classmethod
    def constant(cls, source: FiniteSpace, target: FiniteSpace, value: int) -> "IndexMap":
        return cls(source, target, np.full(source.n, value))

    def __call__(self, i: int) -> int:
        return int(self.assignment[i])

    def preimage(self, event) -> np.ndarray:
        """Boolean source mask of ``T^{-1}(B)``."""
        return self.target.mask(event)[self.assignment]

    def pushforward(self, d: DiscreteDistribution) -> DiscreteDistribution:
        if d.space != self.source:
            raise InputError("distribution does not live on the map's source space")
        mass = np.bincount(self.assignment, weights=d.mass, minlength=self.target.n)
        return DiscreteDistribution(self.target, mass)

    def __repr__(self) -> str:
        return f"IndexMap({self.assignment.tolist()})"


def pushforward_lower(
    c: EpsContamination, T: IndexMap, event, envelope=Envelope.INCOHERENT
) -> float:
    """``T_# P_(B) = P_(T^{-1}(B))`` for the chosen envelope."""
    if T.source != c.space:
        raise InputError("map source space differs from the contamination's space")
    return lower(c, T.preimage(event), envelope)


def _positions(d: DiscreteDistribution) -> np.ndarray:
    try:
        pos = np.asarray(d.space.labels, dtype=float)
    except (TypeError, ValueError):
        raise InputError("cdf/quantile need real-valued atom labels") from None
    if pos.ndim != 1 or np.any(np.diff(pos) <= 0):
        raise InputError("atom positions must be strictly increasing")
    return pos


def _cumulative(d: DiscreteDistribution) -> np.ndarray:
    cum = np.cumsum(d.mass)
    cum[-1] = 1.0
    return cum


def cdf(d: DiscreteDistribution, x: float) -> float:
    """Right-continuous distribution function of atoms placed at their labels."""
    pos = _positions(d)
    k = np.searchsorted(pos, x, side="right")
    return 0.0 if k == 0 else float(_cumulative(d)[k - 1])


def quantile(d: DiscreteDistribution, u: float) -> float:
    """Generalised inverse ``inf{x : F(x) >= u}``; ``u = 0`` gives the first atom."""
    if not 0.0 <= u <= 1.0:
        raise InputError(f"quantile level must lie in [0, 1], got {u!r}")
    pos = _positions(d)
    k = int(np.searchsorted(_cumulative(d), u, side="left"))
    return float(pos[min(k, d.n - 1)])
