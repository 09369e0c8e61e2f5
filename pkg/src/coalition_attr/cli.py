"""Command-line front end: build or load a game, run an allocation, and
write a reproducible JSON (or CSV) report.

Subcommands: attribute, dividends, verify, paper-bench.
Exit codes: 0 ok, 1 verification failure, 2 config error, 3 data/format
error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .allocations import (
    WeightSystem,
    harsanyi_allocate,
    pme,
    proportional_value,
    shapley_direct,
    shapley_dividends,
    shapley_permutation,
    weber_allocate,
    weber_monte_carlo,
)
from .dividends import dividends_fast, dividends_recursive, zeta_reconstruct
from .expr import ExprError
from .games import Allocation, Game, GameError, dual_game, efficiency_gap
from .gaussian import GaussianSpec
from .orderings import Explicit, Uniform, causal_orderings_from_json
from .value_functions import (
    Model,
    conditional_gaussian_game,
    conditional_mc_game,
    marginal_game,
    sobol_closed_game,
    sobol_total_game,
    variance_fixture_spec,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

EXACT_METHODS = {"shapley", "shapley-perm", "shapley-div", "weber", "harsanyi", "pv", "pme"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("COALITION_ATTR_THREADS", "1")))
    except ValueError:
        return 1


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}", EXIT_DATA) from e


def _load_game(path: str) -> Game:
    try:
        return Game.from_json(_read_file(path))
    except (json.JSONDecodeError, GameError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, CliError):
            raise
        raise CliError(f"bad game file {path}: {e}", EXIT_DATA) from e


def _load_csv_matrix(path: str) -> np.ndarray:
    text = _read_file(path)
    try:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty file")
        start = 0
        try:  # optional header row
            [float(c) for c in rows[0]]
        except ValueError:
            start = 1
        data = np.array([[float(c) for c in row] for row in rows[start:] if row])
        if data.size == 0:
            raise ValueError("no data rows")
        return data
    except ValueError as e:
        raise CliError(f"bad CSV {path}: {e}", EXIT_DATA) from e


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(c) for c in text.split(",")])
    except ValueError as e:
        raise CliError(f"bad vector {text!r}: {e}", EXIT_CONFIG) from e


def _build_game(args) -> tuple[Game, dict]:
    sources = [s for s in (args.game, args.model) if s]
    if len(sources) != 1:
        raise CliError("exactly one of --game or --model is required", EXIT_CONFIG)
    if args.game:
        return _load_game(args.game), {"game": args.game}
    if not args.value_fn:
        raise CliError("--model requires --value-fn", EXIT_CONFIG)
    if args.d is None and not args.x and not args.gaussian:
        raise CliError("--model needs --d, --x, or --gaussian to fix the feature count", EXIT_CONFIG)

    spec = None
    if args.gaussian:
        try:
            spec = GaussianSpec.from_json(_read_file(args.gaussian))
        except (json.JSONDecodeError, GameError, KeyError, ValueError) as e:
            if isinstance(e, CliError):
                raise
            raise CliError(f"bad Gaussian spec {args.gaussian}: {e}", EXIT_DATA) from e
    x = _parse_vector(args.x) if args.x else None
    d = args.d or (spec.d if spec is not None else len(x))
    try:
        model = Model.from_expression(args.model, d)
    except ExprError as e:
        raise CliError(f"bad model expression: {e}", EXIT_CONFIG) from e

    vf = args.value_fn
    echo = {"model": args.model, "value_fn": vf, "d": d}
    try:
        if vf == "marginal":
            if not args.data or x is None:
                raise CliError("marginal value function needs --data and --x", EXIT_CONFIG)
            return marginal_game(model, _load_csv_matrix(args.data), x), echo
        if spec is None:
            raise CliError(f"value function {vf} needs --gaussian", EXIT_CONFIG)
        if vf == "cond-gauss":
            if x is None:
                raise CliError("cond-gauss needs --x", EXIT_CONFIG)
            return conditional_gaussian_game(model, spec, x), echo
        if vf == "cond-mc":
            if x is None:
                raise CliError("cond-mc needs --x", EXIT_CONFIG)
            _require_seed(args)
            return conditional_mc_game(model, spec, x, args.n, args.seed), echo
        if vf == "sobol":
            mc = None
            if model.monos is None or model.degree > 2:
                _require_seed(args)
                mc = (args.n, args.seed)
            return sobol_closed_game(model, spec, normalize=not args.unnormalized, mc=mc), echo
        if vf == "sobol-total":
            mc = None
            if model.monos is None or model.degree > 2:
                _require_seed(args)
                mc = (args.n, args.seed)
            return sobol_total_game(model, spec, normalize=not args.unnormalized, mc=mc), echo
    except GameError as e:
        raise CliError(str(e), EXIT_NUMERICAL) from e
    raise CliError(f"unknown value function {vf!r}", EXIT_CONFIG)


def _require_seed(args):
    if args.seed is None:
        raise CliError("Monte Carlo paths require --seed", EXIT_CONFIG)


def _allocate(g: Game, args) -> Allocation:
    method = args.method
    try:
        if method == "shapley":
            return shapley_direct(g)
        if method == "shapley-perm":
            return shapley_permutation(g)
        if method == "shapley-div":
            return shapley_dividends(g)
        if method == "weber":
            p = Uniform()
            if args.pmf:
                p = Explicit.from_json(_read_file(args.pmf))
            elif args.dag:
                p = causal_orderings_from_json(g.d, _read_file(args.dag))
            return weber_allocate(g, p)
        if method == "weber-mc":
            _require_seed(args)
            p = Uniform()
            if args.pmf:
                p = Explicit.from_json(_read_file(args.pmf))
            elif args.dag:
                p = causal_orderings_from_json(g.d, _read_file(args.dag))
            return weber_monte_carlo(g, p, args.n, args.seed, threads=_threads())
        if method == "harsanyi":
            w = WeightSystem()
            if args.weights:
                w = WeightSystem.from_json(_read_file(args.weights))
            return harsanyi_allocate(g, w)
        if method == "pv":
            return proportional_value(g)
        if method == "pme":
            return pme(g)
    except json.JSONDecodeError as e:
        raise CliError(f"bad JSON input: {e}", EXIT_DATA) from e
    except GameError as e:
        raise CliError(str(e), EXIT_NUMERICAL) from e
    raise CliError(f"unknown method {args.method!r}", EXIT_CONFIG)


def _write_report(report: dict, args) -> None:
    if getattr(args, "format", "json") == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["player", "payoff"] + (["stderr"] if report.get("stderr") else []))
        for i, p in enumerate(report["payoffs"], start=1):
            row = [i, p]
            if report.get("stderr"):
                row.append(report["stderr"][i - 1])
            writer.writerow(row)
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_attribute(args) -> int:
    g, echo = _build_game(args)
    # pme dualizes internally; --on-dual dualizes any other method explicitly
    target = dual_game(g) if (args.on_dual and args.method != "pme") else g
    alloc = _allocate(target, args)
    gap = efficiency_gap(dual_game(target) if args.method == "pme" else target, alloc)
    if args.method in ("shapley", "shapley-perm", "shapley-div", "weber", "harsanyi", "pv") \
            and abs(gap) > 1e-10:
        raise CliError(f"efficiency gap {gap} exceeds 1e-10 for exact method", EXIT_NUMERICAL)
    report = {
        "method": alloc.method,
        "players": list(range(1, target.d + 1)),
        "payoffs": [float(p) for p in alloc.payoffs],
        "efficiency_gap": gap,
        "v_empty": target.v_empty,
        "v_full": target.v_full,
        "allocated_game": "dual" if (args.on_dual or args.method == "pme") else "primal",
        "config": {**echo, "method": args.method, "on_dual": bool(args.on_dual)},
        "seed": args.seed,
    }
    if alloc.stderr is not None:
        report["stderr"] = [float(s) for s in alloc.stderr]
    _write_report(report, args)
    return EXIT_OK


def cmd_dividends(args) -> int:
    g = _load_game(args.game)
    t = dividends_fast(g)
    report = {
        "d": g.d,
        "dividends": [float(x) for x in t.dividends],
        "checksum": float(np.sum(t.dividends)),
        "v_full": g.v_full,
    }
    _write_report(report, args)
    return EXIT_OK


def verify_game(g: Game, seed: int = 0, _corrupt_dividends: bool = False) -> list[tuple[str, bool]]:
    """Consistency checks bundling the efficiency and equivalence results."""
    rng = np.random.default_rng(seed)
    checks: list[tuple[str, bool]] = []

    routes = [shapley_direct(g), shapley_dividends(g), harsanyi_allocate(g, WeightSystem())]
    if g.d <= 8:
        routes.append(shapley_permutation(g))
        routes.append(weber_allocate(g, Uniform()))
    base = routes[0].payoffs
    checks.append((
        "cross-route shapley equality",
        all(np.max(np.abs(r.payoffs - base)) <= 1e-10 for r in routes[1:]),
    ))

    t = dividends_fast(g)
    div = t.dividends.copy()
    if _corrupt_dividends:
        div[-1] += 1.0  # fault-injection hook for the exit-code contract
    back = zeta_reconstruct(type(t)(t.d, div))
    scale = max(1.0, float(np.max(np.abs(g.values))))
    checks.append((
        "moebius round-trip",
        float(np.max(np.abs(back.values - g.values))) / scale <= 1e-12,
    ))
    checks.append(("dividend total equals grand worth",
                   abs(float(np.sum(t.dividends)) - g.v_full) / scale <= 1e-12))

    from .allocations import marginal_vector  # local, avoids cycle at import

    ok = True
    for _ in range(5):
        order = tuple(int(j) for j in rng.permutation(g.d))
        ok = ok and abs(float(np.sum(marginal_vector(g, order))) - (g.v_full - g.v_empty)) <= 1e-12
    checks.append(("telescoping along random orderings", ok))

    for label, alloc in [
        ("egalitarian dividends", harsanyi_allocate(g, WeightSystem("egalitarian"))),
        ("min-owner dividends", harsanyi_allocate(g, WeightSystem("min-owner"))),
        ("uniform random orders", shapley_direct(g)),
    ]:
        checks.append((f"efficiency: {label}", abs(efficiency_gap(g, alloc)) <= 1e-10))
    return checks


def cmd_verify(args) -> int:
    g = _load_game(args.game)
    checks = verify_game(g, _corrupt_dividends=bool(getattr(args, "corrupt_dividends", False)))
    all_ok = True
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        all_ok = all_ok and ok
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


def bench_rows() -> list[dict]:
    """Compare computed allocations to the bundled closed-form references."""
    rows = []
    # prediction-decomposition example: f = x1 + x2 + x1*x2, correlated pair
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        spec = GaussianSpec(np.zeros(2), np.array([[1.0, rho], [rho, 1.0]]))
        model = Model.from_expression("x1 + x2 + x1*x2", 2)
        worst = 0.0
        for x1 in (-2.0, -1.0, 0.0, 1.0, 2.0):
            for x2 in (-2.0, -1.0, 0.0, 1.0, 2.0):
                g = conditional_gaussian_game(model, spec, np.array([x1, x2]))
                got = shapley_direct(g).payoffs
                want = np.array([
                    x1 + rho / 2 * (x1 + x1**2 - x2 - x2**2 - 1) + x1 * x2 / 2,
                    x2 + rho / 2 * (x2 + x2**2 - x1 - x1**2 - 1) + x1 * x2 / 2,
                ])
                worst = max(worst, float(np.max(np.abs(got - want))))
        rows.append({"case": f"cond-gauss shapley rho={rho}", "max_dev": worst, "tol": 1e-8})
    # variance-decomposition example: f = x1 + x2 with a spurious correlated x3
    model3 = Model.from_expression("x1 + x2", 3)
    for rho in (0.0, 0.3, 0.5, 0.9):
        g = sobol_closed_game(model3, variance_fixture_spec(rho), normalize=True)
        w = dual_game(g)
        shap = shapley_direct(w).payoffs
        want = np.array([0.5 * (1 - rho**2 / 2), 0.5, rho**2 / 4])
        rows.append({
            "case": f"dual-sobol shapley rho={rho}",
            "max_dev": float(np.max(np.abs(shap - want))),
            "tol": 1e-8,
        })
        p = pme(g).payoffs
        rows.append({
            "case": f"pme rho={rho}",
            "max_dev": float(np.max(np.abs(p - np.array([0.5, 0.5, 0.0])))),
            "tol": 1e-4,
        })
    return rows


def cmd_paper_bench(args) -> int:
    rows = bench_rows()
    all_ok = True
    for row in rows:
        ok = row["max_dev"] <= row["tol"]
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {row['case']:34s} max dev {row['max_dev']:.3e} "
              f"(tol {row['tol']:.0e})")
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"rows": rows, "pass": all_ok}, fh, indent=2)
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coalition-attr",
        description="Game-theoretic feature attribution with efficient allocations.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    at = sub.add_parser("attribute", help="build or load a game and allocate it")
    at.add_argument("--game", help="game JSON file")
    at.add_argument("--model", help="model expression over x1..xd")
    at.add_argument("--value-fn", choices=["marginal", "cond-gauss", "cond-mc", "sobol", "sobol-total"])
    at.add_argument("--data", help="background dataset CSV")
    at.add_argument("--gaussian", help="Gaussian spec JSON")
    at.add_argument("--x", help="instance, comma-separated")
    at.add_argument("--d", type=int, help="feature count (when not implied)")
    at.add_argument("--method", required=True,
                    choices=["shapley", "shapley-perm", "shapley-div", "weber", "weber-mc",
                             "harsanyi", "pv", "pme"])
    at.add_argument("--pmf", help="explicit random-order pmf JSON")
    at.add_argument("--weights", help="weight system JSON")
    at.add_argument("--dag", help="causal DAG JSON")
    at.add_argument("--n", type=int, default=10000, help="Monte Carlo sample count")
    at.add_argument("--seed", type=int)
    at.add_argument("--on-dual", action="store_true", help="allocate the dual game")
    at.add_argument("--unnormalized", action="store_true", help="skip variance normalization")
    at.add_argument("--out", help="report path (default stdout)")
    at.add_argument("--format", choices=["json", "csv"], default="json")
    at.set_defaults(func=cmd_attribute)

    dv = sub.add_parser("dividends", help="dividend table of a game file")
    dv.add_argument("--game", required=True)
    dv.add_argument("--out")
    dv.set_defaults(func=cmd_dividends, format="json")

    vf = sub.add_parser("verify", help="run consistency checks on a game file")
    vf.add_argument("--game", required=True)
    vf.add_argument("--corrupt-dividends", action="store_true", help=argparse.SUPPRESS)
    vf.set_defaults(func=cmd_verify)

    pb = sub.add_parser("paper-bench", help="reproduce the bundled closed-form examples")
    pb.add_argument("--out")
    pb.set_defaults(func=cmd_paper_bench)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if (e.code or 0) != 0 else EXIT_OK
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ExprError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GameError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
