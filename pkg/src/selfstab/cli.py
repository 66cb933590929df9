"""Batch front end: validate models, trace curves, solve, simulate.

Subcommands
-----------
validate        check a model config, print derived constants
curve           CSV of (m, chi0, chi_eps) for a quadratic interaction
find-invariant  JSON report of invariant means (linear) or moment vectors
cramer          JSON report of the first-order correction system
condition       JSON report of the outlying-existence condition
simulate        particle run; CSV moment series + histogram + manifest
laplace-check   CSV convergence table for the expansion formulas

Config files are JSON or TOML documents with ``V.coeffs`` and ``F.coeffs``.
Exit codes: 0 success, 1 model violation, 2 I/O or parse error,
3 solver non-convergence.  ``SELFSTAB_THREADS`` (the only honored
environment variable) bounds the number of concurrently solved branches.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, polys
from .errors import InvalidModel, NotConverged, SelfStabError
from .general_case import (cramer_tau, find_outlying_moments, mirror_report,
                           predicted_outlying_moments, symmetric_invariant)
from .laplace import global_minimizer, laplace_integral_o2
from .linear_case import (REFERENCE_QUARTIC, LinearCaseConfig, chi, chi0,
                          example_closed_forms, find_invariant_means,
                          first_order_mean)
from .model import ModelSpec, build_model, model_from_config, outlying_condition
from .particle import SimConfig, simulate
from .quadrature import gibbs_quadrature

EXIT_OK = 0
EXIT_MODEL = 1
EXIT_IO = 2
EXIT_SOLVER = 3


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _thread_budget() -> int:
    try:
        return max(1, int(os.environ.get("SELFSTAB_THREADS", "1")))
    except ValueError:
        return 1


def load_config(path: str) -> dict:
    """Parse a JSON or TOML model document (sniffed, extension-independent)."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"{path}: neither valid JSON nor valid TOML: {exc}") from exc


def _manifest(command: str, config: dict, seeds=None) -> dict:
    return {
        "schema": 1,
        "command": command,
        "config": config,
        "tool_version": __version__,
        "seeds": seeds,
        "threads": _thread_budget(),
        "created_at": _now(),
    }


def _spec_config(spec: ModelSpec) -> dict:
    return {"V": {"coeffs": list(spec.V.coeffs)}, "F": {"coeffs": list(spec.F.coeffs)}}


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_spec(path: str) -> ModelSpec:
    return model_from_config(load_config(path))


# ---------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    doc = load_config(args.config)
    try:
        spec = model_from_config(doc)
    except InvalidModel as exc:
        print("model rejected:")
        for v in exc.violations:
            print(f"  - {v}")
        return EXIT_MODEL
    print(f"model ok: a={_fmt(spec.a)} theta={_fmt(spec.theta)} "
          f"alpha={_fmt(spec.alpha)} n={spec.n}")
    return EXIT_OK


def cmd_curve(args) -> int:
    spec = _load_spec(args.config)
    if args.alpha is not None:
        spec = build_model(list(spec.V.coeffs), [0.0, 0.0, args.alpha / 2.0])
    if spec.n != 1 or spec.alpha <= 0.0:
        print("curve needs a quadratic interaction with alpha > 0 "
              "(pass --alpha to override F)", file=sys.stderr)
        return EXIT_MODEL
    cfg = LinearCaseConfig(spec=spec, epsilon=args.epsilon)
    is_reference = np.allclose(np.asarray(spec.V.coeffs[:5]),
                               np.asarray(REFERENCE_QUARTIC), atol=1e-14) \
        and len([c for c in spec.V.coeffs[5:] if c != 0.0]) == 0

    mmax = spec.a + 1.0
    grid = np.linspace(-mmax, mmax, args.grid if args.grid % 2 == 1 else args.grid + 1)
    lines = ["m,chi0,chi_eps"]
    for m in grid:
        if abs(m) < 1e-14:
            c0, ce = 0.0, 0.0
        else:
            if is_reference:
                c0 = example_closed_forms(spec.alpha, float(m)).chi0_value
            else:
                c0 = chi0(cfg, abs(float(m))) * (1.0 if m > 0 else -1.0)
            ce = chi(cfg, float(m))
        lines.append(f"{_fmt(m)},{_fmt(c0)},{_fmt(ce)}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    if args.out:
        manifest = _manifest("curve", {**_spec_config(spec), "alpha": spec.alpha,
                                       "epsilon": args.epsilon, "grid": args.grid})
        Path(args.out).with_suffix(".manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def _linear_report(spec: ModelSpec, epsilon: float) -> dict:
    cfg = LinearCaseConfig(spec=spec, epsilon=epsilon)
    mean_set = find_invariant_means(cfg)
    fo = first_order_mean(spec)
    return {
        "mode": "linear",
        "epsilon": epsilon,
        "means": list(mean_set.means),
        "stability": list(mean_set.stability),
        "warnings": list(mean_set.warnings),
        "near_roots": list(mean_set.near_roots),
        "predictions": {"tau0": fo.tau0, "first_order_mean": fo.predict(epsilon)},
        "condition": vars(outlying_condition(spec)),
    }


def _general_report(spec: ModelSpec, epsilon: float) -> tuple[dict, bool]:
    jobs = {
        "symmetric": lambda: symmetric_invariant(spec, epsilon),
        "plus": lambda: find_outlying_moments(spec, epsilon, branch="plus"),
    }
    threads = _thread_budget()
    results = {}
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {name: pool.submit(fn) for name, fn in jobs.items()}
            results = {name: fut.result() for name, fut in futs.items()}
    else:
        results = {name: fn() for name, fn in jobs.items()}
    results["minus"] = mirror_report(spec, epsilon, results["plus"])

    tau = cramer_tau(spec)
    branches = {}
    all_ok = True
    for name, rep in results.items():
        branches[name] = {
            "moments": [float(v) for v in rep.m_star],
            "residual": rep.residual,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "warnings": list(rep.warnings),
            "localization": rep.meta or None,
        }
        all_ok = all_ok and rep.converged
    report = {
        "mode": "general",
        "epsilon": epsilon,
        "branches": branches,
        "condition": vars(outlying_condition(spec)),
        "predictions": {
            "tau": [float(v) for v in tau.closed_form],
            "outlying_moments": [float(v) for v in predicted_outlying_moments(spec, epsilon)],
        },
    }
    return report, all_ok


def cmd_find_invariant(args) -> int:
    spec = _load_spec(args.config)
    if args.linear and spec.n != 1:
        print("--linear needs a quadratic interaction (deg F = 2)", file=sys.stderr)
        return EXIT_MODEL
    if args.general or (spec.n > 1 and not args.linear):
        report, ok = _general_report(spec, args.epsilon)
    else:
        report, ok = _linear_report(spec, args.epsilon), True
    report["manifest"] = _manifest("find-invariant",
                                   {**_spec_config(spec), "epsilon": args.epsilon,
                                    "general": bool(args.general)})
    _write_or_print(json.dumps(report, indent=2), args.out)
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_cramer(args) -> int:
    spec = _load_spec(args.config)
    rep = cramer_tau(spec)
    out = {
        "tau": [float(v) for v in rep.tau],
        "closed_form": [float(v) for v in rep.closed_form],
        "max_discrepancy": rep.max_discrepancy,
        "manifest": _manifest("cramer", _spec_config(spec)),
    }
    _write_or_print(json.dumps(out, indent=2), args.out)
    return EXIT_OK


def cmd_condition(args) -> int:
    spec = _load_spec(args.config)
    rep = outlying_condition(spec)
    out = {"lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds,
           "manifest": _manifest("condition", _spec_config(spec))}
    _write_or_print(json.dumps(out, indent=2), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    spec = model_from_config(doc)
    cfg = SimConfig(N=args.N, epsilon=args.epsilon, T=args.T, x0=args.x0,
                    seed=args.seed, dt=args.dt, burn_in=args.burn_in, spec=spec)
    out = simulate(cfg)

    prefix = args.out
    n_mom = out.moment_series.shape[1]
    header = "t," + ",".join(f"m{k}" for k in range(1, n_mom + 1))
    rows = [header]
    for t, mom in zip(out.times, out.moment_series):
        rows.append(",".join([_fmt(t)] + [_fmt(v) for v in mom]))
    Path(f"{prefix}_moments.csv").write_text("\n".join(rows) + "\n")

    rows = ["bin_left,bin_right,count"]
    for left, right, count in zip(out.histogram_edges[:-1], out.histogram_edges[1:],
                                  out.histogram_counts):
        rows.append(f"{_fmt(left)},{_fmt(right)},{int(count)}")
    Path(f"{prefix}_histogram.csv").write_text("\n".join(rows) + "\n")

    manifest = _manifest("simulate",
                         {**_spec_config(spec), "N": cfg.N, "epsilon": cfg.epsilon,
                          "T": cfg.T, "dt": cfg.resolved_dt,
                          "burn_in": cfg.resolved_burn_in, "x0": args.x0},
                         seeds=[args.seed])
    manifest["stationary_moments"] = [float(v) for v in out.stationary_moments]
    manifest["stderr"] = [float(v) for v in out.stderr]
    Path(f"{prefix}_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {prefix}_moments.csv, {prefix}_histogram.csv, {prefix}_manifest.json")
    return EXIT_OK


def _laplace_suite(kind: str):
    """(name, U coefficients, f coefficients) cases for the convergence table."""
    P = np.polynomial.Polynomial
    cases = [
        ("gauss-const", P([0, 0, 0.5]), P([1.0])),
        ("gauss-x2", P([0, 0, 0.5]), P([0, 0, 1.0])),
        ("well-at-1", P([0.5, -1.0, 0.5]) + 1e-3 * P([0, 0, 0, 0, 1.0]), P([1.0])),
        ("double-well", P([0, 0, -0.5, 0, 0.25]), P([1.0])),  # degenerate on purpose
    ]
    if kind == "random":
        rng = np.random.Generator(np.random.Philox(20240817))
        made = 0
        while made < 16:
            c = rng.uniform(-1.0, 1.0, size=4)
            u = P([0.0, c[0], 0.5 + c[1] ** 2, c[2], 0.25 + c[3] ** 2])
            rep = global_minimizer(u)
            if rep.degenerate:
                continue
            # a second well within 0.5 of the minimum contaminates the
            # expansion at the largest epsilon and muddies the slope column
            crit_vals = sorted(float(u(x)) for x in polys.distinct_real_roots(u.deriv()))
            if len(crit_vals) > 1 and crit_vals[1] - crit_vals[0] < 0.5:
                continue
            f = P(rng.uniform(-1.0, 1.0, size=3))
            cases.append((f"random-{made}", u, f))
            made += 1
    else:
        shifts = [0.3, 0.7, 1.1, 1.6]
        tilts = [0.2, 0.5, 0.9, 1.3, 1.7]
        k = 0
        for s in shifts:
            for t in tilts:
                u = P([0, 0, -0.5, 0, 0.25]) + P([0, t, 0.25 / s])
                if global_minimizer(u).degenerate:
                    continue
                # keep f bounded away from 0 near the minimizers: a vanishing
                # f(x0) suppresses the leading term and the relative residual
                # then decays only one order
                f = P([1.5, 1.0, 0.25 * (k % 3)])
                cases.append((f"tilted-{k}", u, f))
                k += 1
    return cases


def cmd_laplace_check(args) -> int:
    epsilons = [float(e) for e in args.epsilons.split(",")]
    if len(epsilons) < 3:
        print("need at least three epsilons for a slope fit", file=sys.stderr)
        return EXIT_IO
    rows = ["case,flag,slope," + ",".join(f"resid_eps_{_fmt(e)}" for e in epsilons)]
    for name, u, f in _laplace_suite(args.suite):
        rep = global_minimizer(u)
        if rep.degenerate:
            rows.append(f"{name},degenerate,," + ",".join("" for _ in epsilons))
            continue
        resid = []
        for eps in epsilons:
            # shift U by its minimum so neither side can over/underflow
            quad = gibbs_quadrature(u, eps, kmax=max(0, len(f.coef) - 1), tol=1e-12)
            exp = laplace_integral_o2(u - quad.wmin, f, eps)
            exact = float(np.dot(f.coef, quad.shifted[:len(f.coef)]))
            scale = max(abs(exp.leading), abs(exact), 1e-300)
            resid.append(abs(exact - exp.value) / scale)
        if max(resid) <= 1e-12:
            # a slope fit on rounding noise means nothing
            rows.append(f"{name},exact,," + ",".join(_fmt(r) for r in resid))
            continue
        # asymptotic order: fit the smallest epsilons so a cancellation dip
        # at the large-eps end cannot drag the slope
        tail = min(4, len(epsilons))
        slope, _ = np.polyfit(np.log(epsilons[-tail:]),
                              np.log(np.maximum(resid[-tail:], 1e-18)), 1)
        rows.append(f"{name},ok,{_fmt(slope)}," + ",".join(_fmt(r) for r in resid))
    _write_or_print("\n".join(rows) + "\n", args.out)
    if args.out:
        manifest = _manifest("laplace-check", {"suite": args.suite,
                                               "epsilons": epsilons})
        Path(args.out).with_suffix(".manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selfstab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model config")
    p.add_argument("config")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("curve", help="CSV of (m, chi0, chi_eps)")
    p.add_argument("config")
    p.add_argument("--alpha", type=float, default=None,
                   help="replace F by a quadratic with this curvature")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("find-invariant", help="solve for invariant measures")
    p.add_argument("config")
    p.add_argument("--epsilon", type=float, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--general", action="store_true",
                      help="use the moment-space solver even for n = 1")
    mode.add_argument("--linear", action="store_true",
                      help="require the scalar mean solver (n = 1 only)")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_find_invariant)

    p = sub.add_parser("cramer", help="first-order correction coefficients")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_cramer)

    p = sub.add_parser("condition", help="outlying-existence condition report")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_condition)

    p = sub.add_parser("simulate", help="interacting particle run")
    p.add_argument("config")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=float, default=None)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("laplace-check", help="expansion-vs-quadrature slopes")
    p.add_argument("--suite", choices=("default", "random"), default="default")
    p.add_argument("--epsilons", default="0.1,0.05,0.025,0.0125,0.00625")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_laplace_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InvalidModel as exc:
        print(f"model rejected: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NotConverged as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SelfStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
