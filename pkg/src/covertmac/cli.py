"""Command-line front end.

Subcommands: profile, region, curve, simulate, verify-asymptotics, sizing.
Every CSV/report starts with a manifest header line so outputs are
reproducible: same artifact version + same manifest -> same data rows.

Exit codes: 0 ok, 2 usage, 3 input validation, 4 infeasible constraints,
5 budget/enumeration cap exhausted.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .channel import ChannelFormatError, load_channel, paper_channel
from .infotheory import (capacity_x3, chi_square, divergence_profile,
                         mixture_kl, unit_factor)
from .region import (Constraints, InfeasibleError, OptBudget, PhasePlan,
                     curve_r2_vs_k2, max_r2, rate_tuple, theorem1_sizing,
                     trace_r2_R3)
from .simulator import EnumerationCapError, SimConfig, exact_delta, run_trials

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_BUDGET = 5


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH lets callers reproduce outputs byte for byte
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _manifest(args, d, extra: dict | None = None) -> str:
    fields = {
        "subcommand": args.command,
        "channel": d.digest(),
        "unit": args.unit,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": _timestamp(),
    }
    if extra:
        fields.update(extra)
    body = " ".join(f"{k}={v}" for k, v in fields.items() if v is not None)
    return f"# {body}"


def _emit(args, lines) -> None:
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if args.channel == "paper":
        return paper_channel()
    return load_channel(args.channel)


def _budget(args) -> OptBudget:
    return OptBudget(restarts=args.restarts, max_iter=args.max_iter,
                     seed=args.seed, max_phases=args.max_phases,
                     workers=args.threads)


def _budget_fields(b: OptBudget) -> dict:
    return {"restarts": b.restarts, "max_iter": b.max_iter,
            "max_phases": b.max_phases}


def _parse_grid(spec: str):
    """Either comma-separated values or start:stop:count."""
    if ":" in spec:
        a, b, c = spec.split(":")
        return np.linspace(float(a), float(b), int(c)).tolist()
    return [float(v) for v in spec.split(",")]


def cmd_profile(args) -> int:
    d = _load(args)
    prof = divergence_profile(d, args.unit)
    lines = [_manifest(args, d),
             "x3,d_y1,d_y2,d_z1,d_z2,d_zy1,d_zy2"]
    for row in prof.rows():
        lines.append(",".join(f"{v:.12g}" for v in row))
    lines.append("# chi-square at mixing ratios lambda = rho1/(rho1+rho2)")
    lines.append("x3,lambda,chi2")
    for x3 in range(d.x3_size):
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            try:
                c = chi_square(d, lam, 1.0 - lam, x3)
            except ValueError:
                c = float("nan")
            lines.append(f"{x3},{lam},{c:.12g}")
    if d.ac_violations:
        lines.append(f"# absolute-continuity violations at x3: "
                     f"{list(d.ac_violations)}")
    _emit(args, lines)
    return EXIT_OK


def cmd_region(args) -> int:
    d = _load(args)
    cap, _ = capacity_x3(d, unit=args.unit)
    grid = _parse_grid(args.r3_grid) if args.r3_grid else \
        np.linspace(0.0, cap, args.grid_points).tolist()
    pts = trace_r2_R3(d, args.r1, args.k1_max, args.k2_max, grid,
                      _budget(args), args.unit)
    extra = {"r1": args.r1, "k1_max": args.k1_max, "k2_max": args.k2_max,
             **_budget_fields(_budget(args))}
    lines = [_manifest(args, d, extra), "r2,R3"]
    lines += [f"{r2:.12g},{r3:.12g}" for r2, r3 in pts]
    _emit(args, lines)
    return EXIT_OK


def cmd_curve(args) -> int:
    d = _load(args)
    mode = "optimize" if args.fix_x3 is None else ("fix", args.fix_x3)
    grid = _parse_grid(args.k2_grid)
    pts = curve_r2_vs_k2(d, args.r1, args.k1_max, grid, mode,
                         _budget(args), args.unit)
    extra = {"r1": args.r1, "k1_max": args.k1_max,
             "x3_mode": "optimize" if args.fix_x3 is None else f"fix{args.fix_x3}",
             **_budget_fields(_budget(args))}
    lines = [_manifest(args, d, extra), "k2,r2"]
    lines += [f"{k2:.12g},{r2:.12g}" for k2, r2 in pts]
    _emit(args, lines)
    return EXIT_OK


def _load_plan(args) -> PhasePlan:
    with open(args.plan) as f:
        plan = PhasePlan.from_dict(json.load(f))
    plan.validate()
    return plan


def cmd_simulate(args) -> int:
    d = _load(args)
    plan = _load_plan(args)
    cfg = SimConfig(n=args.n, plan=plan, m1=args.m1, m2=args.m2, m3=args.m3,
                    k1=args.k1, k2=args.k2, omega_n=args.omega,
                    trials=args.trials, seed=args.seed,
                    exact_divergence=args.exact_delta,
                    fixed_codebook=args.fixed_codebook)
    rep = run_trials(cfg, d)
    doc = {
        "manifest": _manifest(args, d, {"n": args.n, "trials": args.trials}),
        "pe0_hat": rep.pe0_hat, "pe0_interval": rep.pe0_interval,
        "pe1_hat": rep.pe1_hat, "pe1_interval": rep.pe1_interval,
        "stage_errors": rep.stage_errors,
        "delta_exact_nats": rep.delta_exact,
        "delta_bound_ratio": rep.delta_bound_ratio,
        "codebook_mode": rep.codebook_mode,
        "clip_warnings": list(rep.clip_warnings),
        "trials_run": rep.trials_run,
        "wall_time_s": round(rep.wall_time, 3),
    }
    _emit(args, [json.dumps(doc, indent=1)])
    return EXIT_OK


def cmd_verify_asymptotics(args) -> int:
    d = _load(args)
    alphas = [float(a) for a in args.alpha.split(",")]
    rng = np.random.default_rng(args.seed)
    cases = []
    if args.rho1 is not None:
        cases.append((args.rho1, args.rho2, args.x3))
    else:
        for _ in range(args.random):
            cases.append((float(rng.uniform(0.1, 1.5)),
                          float(rng.uniform(0.1, 1.5)),
                          int(rng.integers(d.x3_size))))
    lines = [_manifest(args, d), "rho1,rho2,x3,alpha,ratio"]
    for rho1, rho2, x3 in cases:
        c2 = chi_square(d, rho1, rho2, x3)
        for a in alphas:
            # second-order identity is natural-log based; ratio is unit-free
            num = mixture_kl(d, rho1, rho2, x3, a, unit="nats")
            ratio = num / ((a * (rho1 + rho2)) ** 2 / 2 * c2)
            lines.append(f"{rho1:.6g},{rho2:.6g},{x3},{a:g},{ratio:.9f}")
    _emit(args, lines)
    return EXIT_OK


def cmd_sizing(args) -> int:
    d = _load(args)
    plan = _load_plan(args)
    xi = [float(v) for v in args.xi.split(",")]
    if len(xi) == 1:
        xi = xi * 6
    omega = args.omega if args.omega is not None else float(args.n) ** -0.25
    sz = theorem1_sizing(d, plan, args.n, omega, xi, args.unit)
    rt = rate_tuple(d, plan, args.unit)
    doc = {
        "manifest": _manifest(args, d, {"n": args.n, "omega_n": omega}),
        "phi1": sz.phi1, "phi2": sz.phi2, "swapped": sz.swapped,
        "log_m1": sz.log_m1, "log_m2": sz.log_m2, "log_m3": sz.log_m3,
        "log_k1": sz.log_k1, "log_k2": sz.log_k2,
        "divergence_bound": sz.divergence_bound,
        "asymptotic_rates": {"r1": rt.r1, "r2": rt.r2, "R3": rt.R3,
                             "k1": rt.k1, "k2": rt.k2},
        "unit": args.unit,
    }
    _emit(args, [json.dumps(doc, indent=1)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="covertmac",
        description="Covert/non-covert MAC rate regions and simulation")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, budget=False):
        p.add_argument("--channel", required=True,
                       help="channel JSON file, or 'paper' for the shipped example")
        p.add_argument("--unit", choices=("bits", "nats"), default="bits")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        if budget:
            p.add_argument("--restarts", type=int, default=64)
            p.add_argument("--max-iter", type=int, default=4000)
            p.add_argument("--max-phases", type=int, default=6)

    p = sub.add_parser("profile", help="divergence profile and chi-square table")
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("region", help="trace the (r2, R3) boundary")
    common(p, budget=True)
    p.add_argument("--r1", type=float, default=0.5)
    p.add_argument("--k1-max", type=float, default=0.8)
    p.add_argument("--k2-max", type=float, default=0.8)
    p.add_argument("--r3-grid", default=None, help="comma list or a:b:count")
    p.add_argument("--grid-points", type=int, default=21)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("curve", help="max r2 as a function of the k2 cap")
    common(p, budget=True)
    p.add_argument("--r1", type=float, default=0.1)
    p.add_argument("--k1-max", type=float, default=0.8)
    p.add_argument("--k2-grid", default="0:1:21")
    p.add_argument("--optimize", action="store_true", default=True,
                   help="optimize the x3 distribution (default)")
    p.add_argument("--fix-x3", type=int, default=None,
                   help="pin every phase to this x3 symbol")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="finite-blocklength Monte-Carlo run")
    common(p)
    p.add_argument("--plan", required=True, help="phase-plan JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--omega", type=float, default=None)
    for name in ("m1", "m2", "m3", "k1", "k2"):
        p.add_argument(f"--{name}", type=int, default=2 if name.startswith("m") else 1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exact-delta", action="store_true")
    p.add_argument("--fixed-codebook", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-asymptotics",
                       help="small-signal KL/chi-square convergence table")
    common(p)
    p.add_argument("--alpha", default="1e-2,1e-3,1e-4")
    p.add_argument("--rho1", type=float, default=None)
    p.add_argument("--rho2", type=float, default=0.0)
    p.add_argument("--x3", type=int, default=0)
    p.add_argument("--random", type=int, default=20,
                   help="number of random (rho1, rho2, x3) cases")
    p.set_defaults(func=cmd_verify_asymptotics)

    p = sub.add_parser("sizing", help="finite-blocklength message/key sizing")
    common(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--xi", default="0.1", help="one value or six comma values")
    p.set_defaults(func=cmd_sizing)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ChannelFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EnumerationCapError as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
