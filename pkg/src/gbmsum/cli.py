"""Command-line interface: reproducible batch runs emitting CSV and JSON.

Every command writes its data files plus a manifest (command, parameters,
version, seeds, timestamps, sha256 digests).  Data files are deterministic
given the full flag set; exit codes: 0 ok, 2 infeasible parameters,
3 non-convergence, 4 accuracy problem under --strict.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__, distributions, moments, pricing, solver, tails
from .errors import AccuracyWarning, ConvergenceError, ParameterError
from .mc import (
    FixedHorizon,
    GeneralHorizon,
    GeometricHorizon,
    McConfig,
    simulate_sum,
)
from .params import ReducedParams

_EXIT_OK = 0
_EXIT_INFEASIBLE = 2
_EXIT_NO_CONVERGENCE = 3
_EXIT_ACCURACY = 4


class _Outputs:
    """Collects written files and emits one manifest per command run."""

    def __init__(self, out_dir: str, prefix: str):
        self.out_dir = out_dir
        self.prefix = prefix
        self.files: list[str] = []
        self.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, self.prefix + name)

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> str:
        path = self.path(name)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self.files.append(path)
        return path

    def write_json(self, name: str, payload: dict) -> str:
        path = self.path(name)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        self.files.append(path)
        return path

    def manifest(self, command: str, params: dict, seeds: list[int] | None = None):
        digests = {}
        for path in self.files:
            with open(path, "rb") as fh:
                digests[os.path.basename(path)] = hashlib.sha256(fh.read()).hexdigest()
        payload = {
            "command": command,
            "parameters": params,
            "version": __version__,
            "seeds": seeds or [],
            "started": self.started,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": digests,
        }
        path = self.path(command + ".manifest.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v)!r}")


def _report_dict(report: solver.SolveReport) -> dict:
    return {
        "iterations": report.iterations,
        "final_delta": report.final_delta,
        "normalization_drift": report.normalization_drift,
        "quadrature_bound": report.quadrature_bound,
        "delta_trace": report.delta_trace,
    }


def _solve(rp: ReducedParams, args) -> tuple[solver.GridDensity, solver.SolveReport]:
    kwargs = dict(tol=args.tol, max_iter=args.max_iter, h=args.h, u_max=args.umax)
    if rp.p > 0.0:
        return solver.solve_geometric(rp, **kwargs)
    init = getattr(args, "init", "inverse-gamma").replace("-", "_")
    return solver.solve_infinite(rp, init=init, **kwargs)


# -- commands --------------------------------------------------------------------


def cmd_density(args, out: _Outputs) -> int:
    rp = ReducedParams(beta=args.beta, rho=args.rho, p=args.p)
    density, report = _solve(rp, args)
    u = density.grid.u()
    x = density.grid.x()
    if rp.p > 0.0:
        limit = np.asarray(
            distributions.yor_pdf(np.maximum(x, 1e-300), math.sqrt(rp.beta), rp.rho, rp.p)
        )
    else:
        limit = np.asarray(distributions.inv_gamma_pdf(x, math.sqrt(rp.beta), rp.rho))
    rows = [
        [u[j], x[j], density.values[j], density.values[j], limit[j]]
        for j in range(density.grid.n_points)
    ]
    out.write_csv("density.csv", ["u", "x", "F", "f", "f_continuous_limit"], rows)
    payload = {
        "parameters": {"beta": rp.beta, "rho": rp.rho, "p": rp.p},
        "grid": {"h": density.grid.h, "n_points": density.grid.n_points,
                 "u_max": density.grid.u_max},
        "tail": None if density.tail is None else {
            "exponent": density.tail.exponent,
            "constant": density.tail.constant,
            "regime": density.tail.regime,
        },
        "report": _report_dict(report),
    }
    out.write_json("density_report.json", payload)
    out.manifest("density", _args_dict(args))
    return _EXIT_OK


def cmd_asian(args, out: _Outputs) -> int:
    spec = pricing.AsianSpec(
        s0=args.s0, strike=args.strike, rate=args.rate, dividend=args.div,
        sigma=args.sigma, maturity=args.maturity, n_fixings=args.fixings,
    )
    prices = pricing.asian_prices(spec)
    header = ["n", "s0", "price"]
    row = [spec.n_fixings, spec.s0, prices["call"]]
    if args.put:
        header.append("put_price")
        row.append(prices["put"])
    out.write_csv("asian.csv", header, [row])
    diag = {
        "spec": _args_dict(args),
        "call": prices["call"],
        "put": prices["put"],
        "parity_gap_discrete": (prices["call"] - prices["put"])
        - math.exp(-spec.rate * spec.maturity)
        * (spec.s0 * prices["exact_mean"] / spec.n_fixings - spec.strike),
        "parity_gap_continuous_average": pricing.put_call_parity_gap(
            spec, convention="continuous_average"
        ),
        "mean_rel_err": prices["mean_rel_err"],
        "grid": {"h": prices["h"], "u_max": prices["u_max"], "n_points": prices["n_points"]},
    }
    seeds = []
    if args.mc_check:
        cfg = McConfig(n_paths=args.mc_check, seed=args.seed, antithetic=True,
                       horizon=FixedHorizon(spec.n_fixings))
        kappa = spec.n_fixings * spec.strike / spec.s0
        disc = math.exp(-spec.rate * spec.maturity) * spec.s0 / spec.n_fixings
        est = simulate_sum(spec.reduced(), cfg,
                           lambda xs: disc * np.maximum(xs - kappa, 0.0))
        diag["mc_check"] = {"value": est.value, "std_error": est.std_error,
                            "n_paths": est.n_paths, "seed": args.seed}
        seeds = [args.seed]
    out.write_json("asian_report.json", diag)
    out.manifest("asian", _args_dict(args), seeds)
    return _EXIT_OK


def _annuity_rows(rp: ReducedParams, q_list, var_level, args):
    density, report = _solve(rp, args)
    mean = math.exp(rp.rho) / (1.0 - (1.0 - rp.p) * math.exp(rp.rho))
    rows = []
    for q in q_list:
        disc = tails.shortfall_probability(density, mean, q)
        cont = tails.shortfall_continuous(math.sqrt(rp.beta), rp.rho, rp.p, mean, q)
        rows.append([rp.beta, rp.rho, rp.p, mean, q, (1.0 + q) * mean, disc, cont])
    exponent = tails.exponent_geometric(rp) if 0.0 < rp.p < 1.0 else tails.exponent_infinite(rp)
    constant = (
        tails.tail_constant_geometric(density, rp)
        if 0.0 < rp.p < 1.0
        else tails.tail_constant_infinite(density, rp)
    )
    var = tails.value_at_risk(
        tails.TailAsymptote(exponent, constant,
                            "geometric_sum" if rp.p > 0 else "infinite_sum"),
        var_level, density=density,
    )
    record = tails.risk_record(exponent, constant, rows[0][6], var)
    record["report"] = _report_dict(report)
    record["mean"] = mean
    return rows, record


_ANNUITY_HEADER = ["beta", "rho", "p", "mean", "q", "threshold",
                   "shortfall", "shortfall_continuous"]


def cmd_annuity(args, out: _Outputs) -> int:
    rp = ReducedParams(beta=args.beta, rho=args.rho, p=args.p)
    q_list = [float(v) for v in args.q_list.split(",") if v != ""]
    rows, record = _annuity_rows(rp, q_list, args.var_level, args)
    out.write_csv("annuity.csv", _ANNUITY_HEADER, rows)
    out.write_json("annuity_report.json", record)
    out.manifest("annuity", _args_dict(args))
    return _EXIT_OK


def cmd_calibrate(args, out: _Outputs) -> int:
    method = args.method.replace("-", "_")
    p = pricing.makeham_match_p(args.age, method)
    out.write_csv("calibrate.csv", ["age", "method", "p"], [[args.age, args.method, p]])
    out.write_json("calibrate_report.json", {"age": args.age, "method": args.method, "p": p})
    out.manifest("calibrate", _args_dict(args))
    return _EXIT_OK


def cmd_moments(args, out: _Outputs) -> int:
    rp = ReducedParams(beta=args.beta, rho=args.rho, p=args.p)
    mm = moments.gbm_multiplier_moments(rp)
    rows = []
    for k in range(1, args.kmax + 1):
        if moments.moment_exists(k, mm, rp.p):
            value = moments.moments_geometric(k, mm, rp.p)[-1]
            rows.append([k, True, value])
        else:
            rows.append([k, False, ""])
    out.write_csv("moments.csv", ["k", "exists", "value"], rows)
    out.write_json(
        "moments_report.json",
        {"beta": rp.beta, "rho": rp.rho, "p": rp.p,
         "moments": [{"k": r[0], "exists": r[1], "value": r[2] if r[1] else None}
                     for r in rows]},
    )
    out.manifest("moments", _args_dict(args))
    return _EXIT_OK


def _parse_horizon(text: str):
    kind, _, arg = text.partition(":")
    if kind == "fixed":
        return FixedHorizon(int(arg))
    if kind == "geometric":
        return GeometricHorizon(float(arg))
    if kind == "general":
        with open(arg) as fh:
            return GeneralHorizon(tuple(json.load(fh)))
    raise ParameterError(f"horizon must be fixed:N, geometric:P or general:FILE, got {text!r}")


def _parse_statistic(text: str):
    kind, _, arg = text.partition(":")
    if kind == "mean":
        return lambda x: x
    if kind == "moment":
        k = int(arg)
        return lambda x: x**k
    if kind == "survival":
        level = float(arg)
        return lambda x: (x > level).astype(float)
    raise ParameterError(f"statistic must be mean, moment:K or survival:X, got {text!r}")


def cmd_mc(args, out: _Outputs) -> int:
    rp = ReducedParams(beta=args.beta, rho=args.rho)
    cfg = McConfig(n_paths=args.paths, seed=args.seed, antithetic=args.antithetic,
                   horizon=_parse_horizon(args.horizon))
    est = simulate_sum(rp, cfg, _parse_statistic(args.statistic))
    out.write_json(
        "mc_report.json",
        {"value": est.value, "std_error": est.std_error, "n_paths": est.n_paths,
         "beta": rp.beta, "rho": rp.rho, "seed": args.seed,
         "antithetic": args.antithetic, "horizon": args.horizon,
         "statistic": args.statistic},
    )
    out.manifest("mc", _args_dict(args), [args.seed])
    return _EXIT_OK


def cmd_batch(args, out: _Outputs) -> int:
    with open(args.config) as fh:
        scenarios = json.load(fh)
    if not isinstance(scenarios, list):
        raise ParameterError("batch config must be a JSON array of scenario objects")
    asian_rows, annuity_rows, envelope = [], [], []
    solve_cache: dict = {}
    ns = argparse.Namespace(tol=args.tol, max_iter=args.max_iter, h=None, umax=None)
    for i, sc in enumerate(scenarios):
        kind = sc.get("type")
        if kind == "asian":
            spec = pricing.AsianSpec(
                s0=sc["s0"], strike=sc["strike"], rate=sc["rate"],
                dividend=sc.get("div", 0.0), sigma=sc["sigma"],
                maturity=sc["maturity"], n_fixings=sc["fixings"],
            )
            prices = pricing.asian_prices(spec)
            asian_rows.append([spec.n_fixings, spec.s0, prices["call"]])
            envelope.append({"index": i, "type": "asian", "call": prices["call"],
                             "put": prices["put"], "mean_rel_err": prices["mean_rel_err"]})
        elif kind == "annuity":
            rp = ReducedParams(beta=sc["beta"], rho=sc["rho"], p=sc["p"])
            key = (rp.beta, rp.rho, rp.p)
            if key not in solve_cache:
                solve_cache[key] = _annuity_rows(
                    rp, [float(q) for q in sc.get("q_list", [0.0])],
                    sc.get("var_level", 0.01), ns,
                )
            rows, record = solve_cache[key]
            annuity_rows.extend(rows)
            envelope.append({"index": i, "type": "annuity", **{
                k: v for k, v in record.items() if k != "report"}})
        else:
            raise ParameterError(f"scenario {i} has unknown type {kind!r}")
    if asian_rows:
        out.write_csv("asian.csv", ["n", "s0", "price"], asian_rows)
    if annuity_rows:
        out.write_csv("annuity.csv", _ANNUITY_HEADER, annuity_rows)
    out.write_json("batch_report.json", {"scenarios": envelope})
    out.manifest("batch", _args_dict(args))
    return _EXIT_OK


# -- argument parsing --------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbmsum",
        description="Distributions, moments, tails and pricing of discrete GBM sums",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="output directory "
                       "(default: $GBMSUM_OUT or current directory)")
        p.add_argument("--prefix", default="", help="output filename prefix")
        p.add_argument("--strict", action="store_true",
                       help="escalate accuracy warnings to exit code 4")

    def add_solver(p):
        p.add_argument("--h", type=float, default=None, help="grid step in u")
        p.add_argument("--umax", type=float, default=None, help="grid span in u")
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=500, dest="max_iter")

    p = sub.add_parser("density", help="solve for a stationary density")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--init", choices=["inverse-gamma", "lognormal"],
                   default="inverse-gamma")
    add_solver(p)
    add_common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("asian", help="price a discretely monitored Asian option")
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--div", type=float, default=0.0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--fixings", type=int, required=True)
    p.add_argument("--put", action="store_true", help="also report the put price")
    p.add_argument("--mc-check", type=int, default=0, dest="mc_check",
                   help="cross-check with this many Monte Carlo paths")
    p.add_argument("--seed", type=int, default=20160520)
    add_common(p)
    p.set_defaults(func=cmd_asian)

    p = sub.add_parser("annuity", help="shortfall probabilities and VaR")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q-list", default="0", dest="q_list",
                   help="comma-separated capital buffers, e.g. 0,0.5")
    p.add_argument("--var-level", type=float, default=0.01, dest="var_level")
    add_solver(p)
    add_common(p)
    p.set_defaults(func=cmd_annuity)

    p = sub.add_parser("calibrate", help="match geometric mortality to Makeham")
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--method", choices=["life-expectancy", "hazard-rate"],
                   required=True)
    add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("moments", help="closed-form positive moments")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--kmax", type=int, required=True)
    add_common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("mc", help="Monte Carlo oracle estimate")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--horizon", required=True,
                   help="fixed:N | geometric:P | general:FILE")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--statistic", default="mean",
                   help="mean | moment:K | survival:X")
    add_common(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("batch", help="run a JSON scenario list")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500, dest="max_iter")
    add_common(p)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = args.out or os.environ.get("GBMSUM_OUT", ".")
    out = _Outputs(out_dir, args.prefix)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = args.func(args, out)
        except ParameterError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return _EXIT_INFEASIBLE
        except ConvergenceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return _EXIT_NO_CONVERGENCE
    accuracy_issues = [w for w in caught if issubclass(w.category, AccuracyWarning)]
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if accuracy_issues and args.strict:
        return _EXIT_ACCURACY
    return code


if __name__ == "__main__":
    sys.exit(main())
