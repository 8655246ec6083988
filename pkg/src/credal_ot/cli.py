"""Batch command line: ``credal-ot <command> --input problem.json``.

Exit codes: 0 success, 2 bad input, 3 domain error, 4 size cap exceeded,
1 anything else.  Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import metadata
from typing import Optional

import numpy as np

from . import io as cio
from .choquet import AtomFunction, choquet_bounded_coherent, choquet_riemann, choquet_sorted
from .credal_core import Capacity, DiscreteDistribution, Envelope, FiniteSpace
from .exceptions import CredalOTError, InputError
from .ot_classical.discrete import (
    TransportPlan,
    solve_kantorovich,
    solve_monge_discrete,
    wasserstein_p,
)
from .ot_classical.gaussian import gaussian_monge_map, map_cost
from .ot_classical.one_d import default_window, discretize, monge_map_1d, quantile_map_cost
from .ot_lower import (
    LowerPlan,
    check_pushforward_constraint,
    gbc_condition,
    geometric_condition,
    lower_wasserstein_p,
    solve_lpm,
    solve_rlpk,
)
from .verify import SUITES, run_suites

log = logging.getLogger("credal_ot")

COMMANDS = ("choquet", "kantorovich", "monge", "monge1d", "gauss-map", "lower-kantorovich",
            "lower-monge", "condition", "wasserstein", "verify")


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - uninstalled source tree
        return "0+unknown"


def _endpoints(doc, args):
    cP = cio.parse_contamination(cio.require(doc, "p"), "p", args.epsilon)
    cQ = cio.parse_contamination(cio.require(doc, "q"), "q", args.epsilon)
    return cP, cQ


def _classical_endpoints(doc):
    return (cio.parse_distribution(cio.require(doc, "p"), "p"),
            cio.parse_distribution(cio.require(doc, "q"), "q"))


def _solver_diagnostics(info: dict) -> dict:
    return {"iterations": info["iterations"], "duality_gap": info["duality_gap"],
            "min_reduced_cost": info["min_reduced_cost"]}


def _plan_residual(plan: TransportPlan) -> float:
    m = plan.matrix
    return float(max(np.abs(m.sum(1) - plan.source.mass).max(),
                     np.abs(m.sum(0) - plan.target.mass).max()))


def cmd_choquet(doc, args) -> dict:
    values = cio.require(doc, "function")
    if isinstance(values, dict):
        values = cio.require(values, "values", "function")
    f = AtomFunction.from_values(cio._real_list(values, "function values"))
    envelope = Envelope(doc.get("envelope", "incoherent"))
    method = doc.get("method", "sorted")
    if "capacity" in doc:
        table = cio.require(doc["capacity"], "table", "capacity")
        nu = Capacity.from_table(FiniteSpace.of_size(f.space.n), cio._real_list(table, "table"))
        c = None
    else:
        c = cio.parse_contamination(cio.require(doc, "contamination"), "contamination",
                                    args.epsilon)
        if c.n != f.space.n:
            raise InputError("function and contamination have different sizes")
        nu = c.capacity(envelope)
    step = doc.get("step")
    routes = {"sorted": choquet_sorted(f, nu), "riemann": choquet_riemann(f, nu, step)}
    if c is not None:
        routes["bounded-coherent"] = choquet_bounded_coherent(f, c)
    if method not in routes:
        raise InputError(f"unknown or unavailable method {method!r}")
    return {"value": routes[method], "diagnostics": {"routes": routes, "method": method}}


def cmd_kantorovich(doc, args) -> dict:
    p, q = _classical_endpoints(doc)
    cost = cio.parse_cost(cio.require(doc, "cost"))
    plan, value, info = solve_kantorovich(p, q, cost, log=True)
    diag = _solver_diagnostics(info)
    diag["marginal_residual"] = _plan_residual(plan)
    return {"value": value, "plan": plan.matrix, "diagnostics": diag}


def _map_doc(T) -> list:
    return T.assignment.tolist()


def cmd_monge(doc, args) -> dict:
    p, q = _classical_endpoints(doc)
    cost = cio.parse_cost(cio.require(doc, "cost"))
    found = solve_monge_discrete(p, q, cost)
    if found is None:
        return {"value": None, "diagnostics": {"feasible": False}}
    T, value = found
    return {"value": value, "map": _map_doc(T),
            "plan": TransportPlan.from_map(p, T).matrix, "diagnostics": {"feasible": True}}


def cmd_monge1d(doc, args) -> dict:
    source = cio.parse_continuous(cio.require(doc, "source"))
    target = cio.parse_continuous(cio.require(doc, "target"))
    num = int(doc.get("num", 512))
    if num < 1:
        raise InputError('"num" must be a positive integer')
    pexp = args.p_exponent if args.p_exponent is not None else 2.0
    if "points" in doc:
        x = cio._real_list(doc["points"], "points")
    else:
        lo, hi = default_window(source)
        x = np.linspace(lo, hi, num)
    y = monge_map_1d(source, target, x)
    grid = discretize(source, num)
    gx = np.asarray(grid.space.labels, dtype=float)
    value = quantile_map_cost(grid, monge_map_1d(source, target, gx), pexp)
    return {"value": value, "map": {"x": np.ravel(x), "T": np.ravel(y)},
            "diagnostics": {"p_exponent": pexp, "cost_atoms": num}}


def cmd_gauss_map(doc, args) -> dict:
    pair = cio.parse_gaussian(doc)
    T = gaussian_monge_map(pair)
    diag = {"pushforward_residual": float(np.linalg.norm(T @ pair.sigma_p @ T.T - pair.sigma_q))}
    samples = int(doc.get("samples", 0))
    if samples > 0:
        rng = np.random.default_rng(args.seed)
        x = rng.multivariate_normal(np.zeros(pair.dim), pair.sigma_p, size=samples)
        diag["monte_carlo_cost"] = float(0.5 * np.mean(np.sum((x @ (T - pair.a).T) ** 2, axis=1)))
    out = {"value": map_cost(pair, T), "map": T, "diagnostics": diag}
    if pair.dim == 1:
        lo = -3.0 * float(np.sqrt(pair.sigma_p[0, 0]))
        xs = np.linspace(lo, -lo, 61)
        out["plot_map"] = (xs, T[0, 0] * xs)
    return out


def cmd_lower_kantorovich(doc, args) -> dict:
    cP, cQ = _endpoints(doc, args)
    cost = cio.parse_cost(cio.require(doc, "cost"))
    plan, value, info = solve_rlpk(cP, cQ, cost, log=True)
    diag = _solver_diagnostics(info)
    diag.update(epsilon=plan.epsilon, classical_value=plan.base.cost(cost),
                marginal_residual=_plan_residual(plan.base))
    return {"value": value, "plan": plan.matrix, "diagnostics": diag}


def cmd_lower_monge(doc, args) -> dict:
    cP, cQ = _endpoints(doc, args)
    cost = cio.parse_cost(cio.require(doc, "cost"))
    found = solve_lpm(cP, cQ, cost)
    if found is None:
        return {"value": None, "diagnostics": {"feasible": False, "epsilon": cP.epsilon}}
    T, value = found
    tol = args.tolerance if args.tolerance is not None else 1e-9
    return {"value": value, "map": _map_doc(T),
            "plan": TransportPlan.from_map(cP.base, T).matrix,
            "diagnostics": {"feasible": True, "epsilon": cP.epsilon,
                            "constraint_holds": check_pushforward_constraint(cP, T, cQ, tol)}}


def _event(doc, key: str, n: int):
    raw = cio.require(doc, key)
    if not isinstance(raw, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in raw
    ):
        raise InputError(f'"{key}" must be an array of atom indices')
    mask = np.zeros(n, dtype=bool)
    for i in raw:
        if not 0 <= i < n:
            raise InputError(f'"{key}" index {i} out of range')
        mask[i] = True
    return mask


def cmd_condition(doc, args) -> dict:
    G = cio.parse_matrix(cio.require(doc, "plan"), "plan")
    eps = doc.get("epsilon", args.epsilon)
    eps = 0.0 if eps is None else eps
    if isinstance(eps, bool) or not isinstance(eps, (int, float)):
        raise InputError("epsilon must be a number")
    total = G.sum()
    if np.any(G < 0) or abs(total - 1) > 1e-9:
        raise InputError("plan entries must be nonnegative and sum to 1")
    base = TransportPlan(G, DiscreteDistribution.from_masses(G.sum(1)),
                         DiscreteDistribution.from_masses(G.sum(0)))
    plan = LowerPlan(base, float(eps))
    n, m = G.shape
    A, B = _event(doc, "A", n), _event(doc, "B", m)
    rule = doc.get("rule", "geometric")
    values = {"gbc": gbc_condition(plan, A, B)}
    try:
        values["geometric"] = geometric_condition(plan, A, B)
    except CredalOTError:
        if rule == "geometric":
            raise
    if rule not in values:
        raise InputError(f"unknown conditioning rule {rule!r}")
    diag = dict(values)
    if "geometric" in values:
        diag["dominance_gap"] = values["geometric"] - values["gbc"]
    return {"value": values[rule], "diagnostics": diag}


def cmd_wasserstein(doc, args) -> dict:
    cP, cQ = _endpoints(doc, args)
    d = cio.parse_matrix(cio.require(doc, "distance"), "distance")
    pexp = args.p_exponent if args.p_exponent is not None else 1.0
    value = lower_wasserstein_p(cP, cQ, d, pexp)
    classical = wasserstein_p(cP.base, cQ.base, d, pexp)
    return {"value": value, "diagnostics": {"classical": classical, "p_exponent": pexp,
                                            "epsilon": cP.epsilon}}


HANDLERS = {
    "choquet": cmd_choquet,
    "kantorovich": cmd_kantorovich,
    "monge": cmd_monge,
    "monge1d": cmd_monge1d,
    "gauss-map": cmd_gauss_map,
    "lower-kantorovich": cmd_lower_kantorovich,
    "lower-monge": cmd_lower_monge,
    "condition": cmd_condition,
    "wasserstein": cmd_wasserstein,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="credal-ot",
        description="Optimal transport between ε-contaminated lower probabilities.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", metavar="PATH", help="problem document (JSON)")
    common.add_argument("--output", metavar="PATH", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--epsilon", type=float,
                        help="contamination level for endpoints that do not set their own")
    common.add_argument("--p-exponent", type=float, dest="p_exponent")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--emit-plot-data", metavar="PATH", dest="plot_path")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
            p.add_argument("--trials", type=int)
    return parser


def _plot_csv(result: dict) -> Optional[str]:
    if "plot_map" in result:
        return cio.map_csv(*result["plot_map"])
    if isinstance(result.get("map"), dict):
        return cio.map_csv(result["map"]["x"], result["map"]["T"])
    if result.get("plan") is not None:
        return cio.plan_csv(result["plan"])
    return None


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _read_input(path: Optional[str]):
    if path is None:
        raise InputError("--input is required for this command")
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8") from None
    return cio.loads(text), raw


def _provenance(raw: bytes, args) -> dict:
    return {"input_sha256": cio.sha256_hex(raw), "seed": args.seed, "version": tool_version()}


def _result_document(kind: str, result: dict, prov: dict) -> dict:
    doc = {"kind": kind, "value": result["value"], "diagnostics": result["diagnostics"],
           "provenance": prov}
    if result.get("plan") is not None:
        doc["plan"] = cio.matrix_to_dict(result["plan"])
    if result.get("map") is not None:
        m = result["map"]
        if isinstance(m, dict):
            doc["map"] = {"x": np.asarray(m["x"]).tolist(), "T": np.asarray(m["T"]).tolist()}
        elif isinstance(m, np.ndarray):
            doc["map"] = cio.matrix_to_dict(m)
        else:
            doc["map"] = m
    return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _render(doc: dict, fmt: str, result: Optional[dict]) -> str:
    if fmt == "json":
        return cio.canonical_dumps(_jsonable(doc))
    if result is not None:
        csv_text = _plot_csv(result)
        if csv_text is not None:
            return csv_text
    value = doc.get("value")
    return "kind,value\n{},{}\n".format(
        doc["kind"], "" if value is None else cio._format_float(float(value)))


def run_verify(args) -> int:
    report = run_suites(args.suite, seed=args.seed, trials=args.trials, tol=args.tolerance)
    ok = all(entry["passed"] for entry in report)
    for entry in report:
        status = "PASS" if entry["passed"] else "FAIL"
        print(f"{status} [{entry['suite']}] {entry['name']}: max residual "
              f"{entry['max_residual']:.3e} (tolerance {entry['tolerance']:.1e}, "
              f"{entry['trials']} trials)", file=sys.stderr)
    prov = {"input_sha256": None, "seed": args.seed, "version": tool_version()}
    doc = {"kind": "verify", "value": 1.0 if ok else 0.0,
           "diagnostics": {"suite": args.suite, "checks": report, "passed": ok},
           "provenance": prov}
    if args.format == "csv":
        lines = ["suite,name,passed,max_residual,tolerance,trials"]
        for e in report:
            name = e["name"].replace('"', "'")
            lines.append(f'{e["suite"]},"{name}",{str(e["passed"]).lower()},'
                         f'{cio._format_float(e["max_residual"]) if np.isfinite(e["max_residual"]) else "inf"},'
                         f'{cio._format_float(e["tolerance"])},{e["trials"]}')
        _write(args.output, "\n".join(lines) + "\n")
    else:
        _write(args.output, cio.canonical_dumps(_jsonable(doc)))
    return 0 if ok else 1


def _configure_logging() -> None:
    level = os.environ.get("CREDAL_OT_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(exc: BaseException, code: int, kind: str) -> int:
    message = " ".join(str(exc).split()) or type(exc).__name__
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": message},
                                sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.epsilon is not None and not 0.0 <= args.epsilon <= 1.0:
            raise InputError(f"--epsilon must lie in [0, 1], got {args.epsilon}")
        if args.p_exponent is not None and not args.p_exponent >= 1:
            raise InputError(f"--p-exponent must be >= 1, got {args.p_exponent}")
        if args.command == "verify":
            return run_verify(args)
        doc, raw = _read_input(args.input)
        log.info("running %s on %s", args.command, args.input)
        result = HANDLERS[args.command](doc, args)
        out = _result_document(args.command, result, _provenance(raw, args))
        _write(args.output, _render(out, args.format, result))
        if args.plot_path is not None:
            csv_text = _plot_csv(result)
            if csv_text is None:
                raise InputError("this result has no plan or map to plot")
            _write(args.plot_path, csv_text)
        return 0
    except CredalOTError as exc:
        log.debug("failure", exc_info=True)
        return _fail(exc, exc.exit_code, exc.kind)
    except ValueError as exc:
        log.debug("failure", exc_info=True)
        return _fail(exc, 2, "input-error")
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        log.debug("failure", exc_info=True)
        return _fail(exc, 1, "internal-error")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
