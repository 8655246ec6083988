"""Randomized invariant suites behind ``credal-ot verify``.

Every trial draws from ``numpy.random.default_rng([seed, salt, trial])``,
so results do not depend on the order in which trials run.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .choquet import AtomFunction, choquet_bounded_coherent, choquet_riemann, choquet_sorted
from .credal_core import (
    Capacity,
    DiscreteDistribution,
    Envelope,
    EpsContamination,
    FiniteSpace,
    IndexMap,
    core_membership,
    decompose,
    extreme_points,
    subset_sums,
)
from .exceptions import InputError
from .ot_classical.discrete import (
    TransportPlan,
    brute_force_kantorovich,
    solve_kantorovich,
    solve_monge_discrete,
)
from .ot_classical.gaussian import (
    GaussianPair,
    gaussian_monge_map,
    grid_discretization,
    random_invertible,
    random_spd,
)
from .ot_lower import (
    JointLowerTable,
    LowerPlan,
    check_pushforward_constraint,
    deterministic_lower_plan,
    gamma_geom_membership,
    gamma_r_membership,
    gbc_condition,
    geometric_condition,
    lpm_objective,
    rlpk_objective,
    solve_lpm,
    solve_rlpk,
)

log = logging.getLogger(__name__)

EPS_GRID = (0.0, 0.1, 0.5, 0.9)


@dataclass
class Check:
    name: str
    tolerance: float
    residual: float = 0.0
    trials: int = 0
    failures: int = 0
    notes: Dict[str, float] = field(default_factory=dict)

    def record(self, residual: float, ok: Optional[bool] = None) -> None:
        residual = float(residual)
        self.trials += 1
        if not np.isfinite(residual):
            self.failures += 1
            self.residual = float("inf")
            return
        self.residual = max(self.residual, residual)
        if ok is None:
            ok = residual <= self.tolerance
        if not ok:
            self.failures += 1

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.failures == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "max_residual": self.residual,
                "tolerance": self.tolerance, "trials": self.trials,
                "failures": self.failures, "notes": dict(self.notes)}


def trial_rng(seed: int, salt: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), salt, trial])


def random_distribution(rng, n: int, zeros: bool = False) -> DiscreteDistribution:
    w = rng.dirichlet(np.ones(n))
    if zeros and n > 1 and rng.random() < 0.3:
        w[rng.integers(n)] = 0.0
        w /= w.sum()
    return DiscreteDistribution.from_masses(w)


def random_map(rng, n: int, m: int) -> IndexMap:
    return IndexMap(FiniteSpace.of_size(n), FiniteSpace.of_size(m), rng.integers(0, m, n))


def _scale(default: float, override: Optional[float]) -> float:
    return default if override is None else float(override)


def suite_monge_equiv(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    checks = []
    constraint = Check("pushforward constraint: lower <=> classical (n, m <= 4)", 0.0)
    for eps in EPS_GRID:
        value = Check(f"lpm value = (1-eps) * monge value, eps={eps:g}", _scale(1e-12, tol))
        ratios = []
        for t in range(trials):
            rng = trial_rng(seed, 1, t + 1000 * int(eps * 10))
            n = int(rng.integers(1, 6))
            P = random_distribution(rng, n)
            Q = random_map(rng, n, n).pushforward(P)
            c = rng.random((n, n))
            cP, cQ = EpsContamination(P, eps), EpsContamination(Q, eps)
            T, lv = solve_lpm(cP, cQ, c)
            _, mv = solve_monge_discrete(P, Q, c)
            value.record(abs(lv - (1 - eps) * mv))
            if mv > 1e-9:
                ratios.append(lv / mv)
            if t % 10 == 0:
                k = int(rng.integers(1, 5))
                m = int(rng.integers(1, 5))
                P2 = random_distribution(rng, k)
                Q2 = random_map(rng, k, m).pushforward(P2)
                c2P, c2Q = EpsContamination(P2, eps), EpsContamination(Q2, eps)
                for assign in itertools.product(range(m), repeat=k):
                    T2 = IndexMap(P2.space, Q2.space, np.array(assign))
                    classical = np.abs(T2.pushforward(P2).mass - Q2.mass).max() <= 1e-9
                    agree = check_pushforward_constraint(c2P, T2, c2Q) == classical
                    constraint.record(0.0 if agree else 1.0, agree)
        if ratios:
            value.notes["mean_ratio"] = float(np.mean(ratios))
            value.notes["expected_ratio"] = 1 - eps
        checks.append(value)
    checks.append(constraint)
    return checks


def suite_kantorovich_equiv(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    checks = []
    brute = Check("lp value = vertex enumeration (n*m <= 9)", _scale(1e-9, tol))
    band = Check("lp value within grid search band 1e-2*max(c)", 1e-2)
    for eps in EPS_GRID:
        value = Check(f"rlpk value = (1-eps) * lp value, eps={eps:g}", _scale(1e-12, tol))
        for t in range(trials):
            rng = trial_rng(seed, 2, t + 1000 * int(eps * 10))
            n, m = (int(v) for v in rng.integers(1, 33, 2))
            P = random_distribution(rng, n, zeros=True)
            Q = random_distribution(rng, m, zeros=True)
            c = rng.random((n, m))
            _, rv = solve_rlpk(EpsContamination(P, eps), EpsContamination(Q, eps), c)
            _, lp = solve_kantorovich(P, Q, c)
            value.record(abs(rv - (1 - eps) * lp))
            if eps == 0.0:
                k = int(rng.integers(1, 4))
                l = int(rng.integers(1, 9 // k + 1))
                Ps, Qs = random_distribution(rng, k), random_distribution(rng, l)
                cs = rng.random((k, l))
                _, v = solve_kantorovich(Ps, Qs, cs)
                brute.record(abs(v - brute_force_kantorovich(Ps, Qs, cs)))
                if (k - 1) * (l - 1) <= 2:
                    g = brute_force_kantorovich(Ps, Qs, cs, method="grid")
                    band.record(abs(v - g) / cs.max())
        checks.append(value)
    return checks + [brute, band]


def suite_coincide(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    plan_level = Check("deterministic plan objective = lpm objective", _scale(1e-12, tol))
    optimal = Check("deterministic lp optimum: rlpk = lpm of induced map", _scale(1e-12, tol))
    for t in range(trials):
        rng = trial_rng(seed, 3, t)
        eps = float(rng.choice(EPS_GRID))
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        P = random_distribution(rng, n)
        cP = EpsContamination(P, eps)
        c = rng.random((n, m))
        T = random_map(rng, n, m)
        plan_level.record(abs(rlpk_objective(deterministic_lower_plan(cP, T), c)
                              - lpm_objective(cP, T, c)))
        # equal uniform marginals make every vertex a permutation
        U = DiscreteDistribution.uniform(FiniteSpace.of_size(n))
        cU = EpsContamination(U, eps)
        cs = rng.random((n, n))
        plan, rv = solve_rlpk(cU, cU, cs)
        if plan.base.is_deterministic():
            optimal.record(abs(rv - lpm_objective(cU, plan.base.induced_map(), cs)))
    optimal.notes["deterministic_trials"] = optimal.trials
    return [plan_level, optimal]


def suite_conditioning(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    dominance = Check("gbc <= geometric", _scale(1e-12, tol))
    hand = Check("uniform 2x2, eps=0.2: gbc = 1/3, geometric = 1/2", 1e-15)
    witness = Check("min-of-two-joints table: geometric marginals, not in Gamma_R", 0.0)
    for t in range(trials):
        rng = trial_rng(seed, 4, t)
        n, m = (int(v) for v in rng.integers(1, 6, 2))
        G = rng.dirichlet(np.ones(n * m)).reshape(n, m)
        eps = float(rng.uniform(1e-6, 1 - 1e-6))
        plan = LowerPlan(TransportPlan(G, DiscreteDistribution.from_masses(G.sum(1)),
                                       DiscreteDistribution.from_masses(G.sum(0))), eps)
        A = rng.random(n) < 0.5
        B = rng.random(m) < 0.5
        B[rng.integers(m)] = True
        gap = gbc_condition(plan, A, B) - geometric_condition(plan, A, B)
        dominance.record(max(gap, 0.0), gap <= dominance.tolerance)
    U = DiscreteDistribution.from_masses([0.5, 0.5])
    prod = LowerPlan(TransportPlan(np.full((2, 2), 0.25), U, U), 0.2)
    hand.record(max(abs(gbc_condition(prod, [0], [0]) - 1 / 3),
                    abs(geometric_condition(prod, [0], [0]) - 0.5)))
    cU = EpsContamination(U, 0.2)
    table = superadditive_witness(0.2)
    ok = gamma_geom_membership(table, cU, cU) and not gamma_r_membership(table, cU, cU)
    witness.record(0.0 if ok else 1.0, ok)
    return [dominance, hand, witness]


def superadditive_witness(eps: float) -> JointLowerTable:
    """Lower envelope of the identity and swap couplings of two fair coins."""
    return JointLowerTable.from_min_of_joints(
        [np.diag([0.5, 0.5]), np.array([[0.0, 0.5], [0.5, 0.0]])], eps
    )


def gaussian_grid_check(rng, epsilon: float = 0.0, points_per_axis: int = 40,
                        samples: int = 200_000) -> dict:
    """Grid LP, closed-form map cost by Monte Carlo, and the lower-plan chain (d=2, a=I)."""
    sigma_p, sigma_q = random_spd(rng, 2, 0.3), random_spd(rng, 2, 0.3)
    pair = GaussianPair(sigma_p, sigma_q)
    T = gaussian_monge_map(pair)
    x, wx = grid_discretization(sigma_p, points_per_axis)
    y, wy = grid_discretization(sigma_q, points_per_axis)
    P, Q = DiscreteDistribution.from_masses(wx), DiscreteDistribution.from_masses(wy)
    cost = 0.5 * ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1)
    _, lp = solve_kantorovich(P, Q, cost)
    draws = rng.multivariate_normal(np.zeros(2), sigma_p, size=samples)
    mc = float(0.5 * np.mean(np.sum((draws @ T.T - draws) ** 2, axis=1)))
    # lower plan carried by the discretized map: x_i -> T x_i
    cP = EpsContamination(P, epsilon)
    moved = FiniteSpace.of_size(len(x))
    Tmap = IndexMap(P.space, moved, np.arange(len(x)))
    c_map = np.full((len(x), len(x)), 0.0)
    np.fill_diagonal(c_map, 0.5 * np.sum((x @ T.T - x) ** 2, axis=1))
    lower_value = rlpk_objective(deterministic_lower_plan(cP, Tmap), c_map)
    discretized = float(np.sum(P.mass * np.diag(c_map)))
    return {"lp": lp, "monte_carlo": mc, "lower_map_value": lower_value,
            "discretized_map_cost": discretized, "epsilon": epsilon}


def suite_gaussian(seed: int, trials: int, tol: Optional[float] = None,
                   grid_check: bool = True) -> List[Check]:
    push = Check("T sigma_p T^T = sigma_q (Frobenius), d in {2,3,5}", _scale(1e-8, tol))
    slope = Check("scalar case slope = sign(a) sigma_q / sigma_p", _scale(1e-12, tol))
    for d in (2, 3, 5):
        for t in range(trials):
            rng = trial_rng(seed, 5, 1000 * d + t)
            pair = GaussianPair(random_spd(rng, d), random_spd(rng, d), random_invertible(rng, d))
            T = gaussian_monge_map(pair)
            push.record(np.linalg.norm(T @ pair.sigma_p @ T.T - pair.sigma_q))
    for t in range(trials):
        rng = trial_rng(seed, 6, t)
        sp, sq = rng.uniform(0.1, 3, 2)
        a = rng.choice([-1, 1]) * rng.uniform(0.2, 3)
        T = gaussian_monge_map(GaussianPair([[sp ** 2]], [[sq ** 2]], [[a]]))
        slope.record(abs(T[0, 0] - np.sign(a) * sq / sp))
    checks = [push, slope]
    if grid_check:
        mc = Check("monte carlo map cost vs 40x40 grid lp (relative)", 5e-2)
        chain = Check("lower plan of discretized map = (1-eps) * discretized cost",
                      _scale(1e-12, tol))
        out = gaussian_grid_check(trial_rng(seed, 7, 0), epsilon=0.5)
        mc.record(abs(out["monte_carlo"] - out["lp"]) / out["lp"])
        mc.notes.update(lp=out["lp"], monte_carlo=out["monte_carlo"])
        chain.record(abs(out["lower_map_value"] - 0.5 * out["discretized_map_cost"]))
        lp_band = Check("discretized map cost vs grid lp (relative)", 5e-2)
        lp_band.record(abs(out["discretized_map_cost"] - out["lp"]) / out["lp"])
        checks += [mc, chain, lp_band]
    return checks


def random_capacity(rng, n: int):
    """A contamination envelope or a random belief function on ``n`` atoms."""
    kind = rng.integers(3)
    if kind < 2:
        c = EpsContamination(random_distribution(rng, n), float(rng.random()))
        env = Envelope.INCOHERENT if kind == 0 else Envelope.COHERENT
        return c.capacity(env)
    focal = rng.integers(1, 1 << n, size=int(rng.integers(1, 6)))
    mass = rng.dirichlet(np.ones(focal.size))
    bits = np.arange(1 << n)
    table = np.zeros(1 << n)
    for f, w in zip(focal, mass):
        table[(bits & f) == f] += w
    return Capacity.from_table(FiniteSpace.of_size(n), np.clip(table, 0, 1))


def suite_choquet_oracles(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    quad = Check("sorted sum vs midpoint rule within 2*step*n*max(f)", 1.0)
    scaling = Check("incoherent choquet = (1-eps) E_P[f]", _scale(1e-12, tol))
    gap = Check("bounded coherent - incoherent = eps * min(f)", _scale(1e-12, tol))
    homog = Check("positive homogeneity", _scale(1e-12, tol))
    ties = Check("tie order independence", _scale(1e-12, tol))
    for t in range(trials):
        rng = trial_rng(seed, 8, t)
        n = int(rng.integers(1, 13))
        nu = random_capacity(rng, n)
        f = AtomFunction.from_values(rng.random(n) * rng.uniform(0.1, 10))
        top = float(f.values.max())
        step = top / 2000
        bound = 2 * step * n * top
        diff = abs(choquet_sorted(f, nu) - choquet_riemann(f, nu, step))
        quad.record(diff / bound if bound > 0 else diff, diff <= bound)
        c = EpsContamination(random_distribution(rng, n), float(rng.random()))
        inc = choquet_sorted(f, c.capacity(Envelope.INCOHERENT))
        scaling.record(abs(inc - (1 - c.epsilon) * float(c.base.mass @ f.values)))
        gap.record(abs(choquet_bounded_coherent(f, c) - inc - c.epsilon * f.values.min()))
        lam = float(rng.uniform(0, 5))
        homog.record(abs(choquet_sorted(f.scaled(lam), nu) - lam * choquet_sorted(f, nu)))
        tied = AtomFunction.from_values(np.round(f.values))
        perm = rng.permutation(n)
        # relabel atoms: the capacity and the function move together
        moved = Capacity(nu.space, lambda mask, p=perm, nu=nu: nu.value_of_mask(mask[np.argsort(p)]))
        moved_f = AtomFunction.from_values(tied.values[perm])
        ties.record(abs(choquet_sorted(moved_f, moved) - choquet_sorted(tied, nu)))
    quad.notes["ratio_to_bound"] = quad.residual
    return [quad, scaling, gap, homog, ties]


def suite_core(seed: int, trials: int, tol: Optional[float] = None) -> List[Check]:
    equiv = Check("incoherent domination <=> coherent domination (n <= 10)", 0.0)
    roundtrip = Check("decompose round trip (1-eps)P + eps R = candidate", _scale(1e-12, tol))
    extremes = Check("extreme points lie in the core", 0.0)
    envelope = Check("pushforward lower = min over extreme points (n, m <= 5)", _scale(1e-12, tol))
    for t in range(trials):
        rng = trial_rng(seed, 9, t)
        n = int(rng.integers(1, 11))
        eps = float(rng.uniform(0.01, 1.0))
        c = EpsContamination(random_distribution(rng, n), eps)
        R = random_distribution(rng, n)
        mix = (1 - eps) * c.base.mass + eps * R.mass
        pick = rng.integers(3)
        if pick == 0:
            cand = random_distribution(rng, n)
        elif pick == 1:
            cand = DiscreteDistribution.from_masses(mix)
        else:
            # nudge a core element across the boundary of the core
            nudged = np.clip(mix + rng.normal(0, 0.05, n), 0, None) + 1e-15
            cand = DiscreteDistribution.from_masses(nudged / nudged.sum())
        sums = subset_sums(cand.mass)
        base = (1 - eps) * subset_sums(c.base.mass)
        coherent = base.copy()
        coherent[-1] = 1.0
        inc = bool(np.all(sums >= base - 1e-12))
        coh = bool(np.all(sums >= coherent - 1e-12))
        equiv.record(0.0 if inc == coh else 1.0, inc == coh and inc == core_membership(cand, c))
        R = decompose(cand, c)
        if (R is None) != (not core_membership(cand, c)):
            roundtrip.record(float("inf"))
        elif R is not None:
            roundtrip.record(np.abs((1 - eps) * c.base.mass + eps * R.mass - cand.mass).max())
        for e in extreme_points(c):
            ok = core_membership(e, c)
            extremes.record(0.0 if ok else 1.0, ok)
        if t % 5 == 0:
            envelope.record(_envelope_residual(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6))))
    return [equiv, roundtrip, extremes, envelope]


def _envelope_residual(rng, n: int, m: int) -> float:
    """Largest gap between pushforward lowers and extreme-point minima over all T and B."""
    c = EpsContamination(random_distribution(rng, n), float(rng.random()))
    ext = np.array([e.mass for e in extreme_points(c)])
    worst = 0.0
    target = FiniteSpace.of_size(m)
    for assign in itertools.product(range(m), repeat=n):
        T = IndexMap(c.space, target, np.array(assign))
        pushed = np.array([np.bincount(T.assignment, weights=row, minlength=m) for row in ext])
        ext_min = np.array([subset_sums(row) for row in pushed]).min(axis=0)
        inc = (1 - c.epsilon) * subset_sums(T.pushforward(c.base).mass)
        full_pre = subset_sums(np.bincount(T.assignment, minlength=m).astype(float)) == n
        coh = np.where(full_pre, 1.0, inc)
        worst = max(worst, float(np.abs(inc - ext_min)[~full_pre].max(initial=0.0)),
                    float(np.abs(coh - ext_min).max()))
    return worst


SUITES: Dict[str, tuple] = {
    "monge-equiv": (suite_monge_equiv, 100),
    "kantorovich-equiv": (suite_kantorovich_equiv, 100),
    "coincide": (suite_coincide, 100),
    "conditioning": (suite_conditioning, 500),
    "gaussian": (suite_gaussian, 50),
    "choquet-oracles": (suite_choquet_oracles, 200),
    "core": (suite_core, 100),
}


def run_suites(suite: str, seed: int = 0, trials: Optional[int] = None,
               tol: Optional[float] = None) -> List[dict]:
    names = list(SUITES) if suite == "all" else [suite]
    report = []
    for name in names:
        if name not in SUITES:
            raise InputError(f"unknown suite {name!r}")
        fn, default = SUITES[name]
        n_trials = default if trials is None else int(trials)
        log.info("running suite %s with %d trials", name, n_trials)
        for check in fn(seed, n_trials, tol):
            entry = check.to_dict()
            entry["suite"] = name
            report.append(entry)
    return report
