"""Command-line orchestration.

    besov-lab simulate         --config cfg.json --out runs/a [--seed 7]
    besov-lab decompose        --config cfg.json --out runs/b
    besov-lab paraproduct-audit --config cfg.json --out runs/c
    besov-lab calculus 1/4 2 [--beta 7/4] [--p 2] [--out plan.json]
    besov-lab verify-all       [--config cfg.json] --out runs/d

Exit codes: 0 pass, 1 audit fail, 2 config error, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, drift, exponents, paraproduct, persist, solver, synthetic, verify
from .config import ConfigError, RunConfig, default_desk_config, load_config
from .dyadic import BesovIndex, DyadicDecomposition, besov_report
from .fields import FieldError, apply_dealias, forward_transform

EXIT_PASS = 0
EXIT_AUDIT_FAIL = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ABORT = 3


def _config_for(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_desk_config()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _manifest(cfg: RunConfig, extra: dict) -> dict:
    blob = json.dumps(cfg.raw, sort_keys=True).encode()
    return {
        "config": cfg.raw,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": cfg.seed,
        "versions": {
            "besovlab": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        **extra,
    }


def cmd_simulate(args) -> int:
    cfg = _config_for(args)
    out = args.out or "besovlab-run"
    grid = cfg.build_grid()
    theta0 = synthetic.build_initial_condition(grid, cfg.initial, cfg.seed)
    traj = solver.run(theta0, cfg.build_solver_config())
    persist.atomic_write_text(os.path.join(out, "trajectory.csv"),
                              persist.trajectory_csv(traj))
    for i, (t, snap) in enumerate(traj.snapshots):
        persist.save_field(os.path.join(out, "snapshots", f"snap_{i:04d}.bsvf"), snap)
    manifest = _manifest(cfg, {
        "aborted": traj.aborted,
        "mean_removed": traj.mean_removed,
        "t_final": traj.interval[1],
        "snapshots": [{"index": i, "t": t} for i, (t, _) in enumerate(traj.snapshots)],
    })
    persist.atomic_write_text(os.path.join(out, "manifest.json"), persist.dump_json(manifest))
    if traj.aborted:
        print(f"CFL abort at t = {traj.interval[1]:g}; partial outputs in {out}")
        return EXIT_RUNTIME_ABORT
    print(f"trajectory with {traj.times.size} samples written to {out}")
    return EXIT_PASS


def cmd_decompose(args) -> int:
    cfg = _config_for(args)
    out = args.out or "besovlab-decompose"
    grid = cfg.build_grid()
    decomp = DyadicDecomposition(grid)
    theta = apply_dealias(forward_transform(
        synthetic.build_initial_condition(grid, cfg.initial, cfg.seed)))
    persist.atomic_write_text(os.path.join(out, "shell_norms.csv"),
                              persist.shell_norms_csv(decomp, theta, cfg.p_list))
    indices = cfg.besov_indices or ((1.0, 2.0, 2.0),)
    reports = [besov_report(theta, BesovIndex(*idx), decomp) for idx in indices]
    persist.atomic_write_text(os.path.join(out, "besov.json"), persist.dump_json(reports))
    print(f"shell norms and {len(reports)} Besov reports written to {out}")
    return EXIT_PASS


def cmd_paraproduct_audit(args) -> int:
    cfg = _config_for(args)
    out = args.out or "besovlab-paraproduct"
    grid = cfg.build_grid()
    decomp = DyadicDecomposition(grid)
    theta = apply_dealias(forward_transform(
        synthetic.build_initial_condition(grid, cfg.initial, cfg.seed)))
    law = cfg.build_law()
    u = drift.velocity_from_theta(theta, law)
    analyzer = paraproduct.BonyAnalyzer(u, theta, decomp)
    recon = {
        j: paraproduct.reconstruction_error(u, theta, j, decomp, analyzer)
        for j in decomp.shells()
    }
    pp = cfg.paraproduct
    suite = paraproduct.certificate_suite(theta, law, q=pp["q"], p=pp["p"],
                                          alpha=pp["alpha"], decomp=decomp)
    payload = {
        "reconstruction_relative_error": {str(j): v for j, v in recon.items()},
        "interior_pass": all(v <= 1e-10 for j, v in recon.items()
                             if j in decomp.interior_shells()),
        "certificates": [
            {"j": c.j, "q": c.q, "p": c.p, "alpha": c.alpha,
             "J": list(c.measured), "RHS": list(c.envelope),
             "ratios": list(c.ratios), "edge_flag": c.edge}
            for c in suite["certificates"]
        ],
        "ratio_spreads": list(suite["spreads"]),
        "certificates_pass": suite["passed"],
    }
    persist.atomic_write_text(os.path.join(out, "paraproduct.json"), persist.dump_json(payload))
    ok = payload["interior_pass"] and payload["certificates_pass"]
    print(f"paraproduct audit {'pass' if ok else 'FAIL'}; report in {out}")
    return EXIT_PASS if ok else EXIT_AUDIT_FAIL


def cmd_calculus(args) -> int:
    try:
        alpha = Fraction(args.alpha)
    except (ValueError, ZeroDivisionError):
        print(f"error: alpha must be a rational 'num/den', got {args.alpha!r}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        if args.beta is not None:
            plan = exponents.mqg_plan(alpha, Fraction(args.beta),
                                      Fraction(args.p) if args.p else Fraction(2))
            payload = exponents.plan_jsonable(plan)
            payload["kind"] = "mqg"
        else:
            effective, branch = exponents.effective_alpha(alpha)
            if branch == "low-alpha":
                plan = exponents.bootstrap_schedule(effective, args.d)
            else:
                plan = exponents.high_alpha_plan(effective, args.d)
            payload = exponents.plan_jsonable(plan)
            payload["kind"] = "bootstrap"
            payload["requested_alpha"] = exponents.fraction_jsonable(alpha)
            payload["effective_alpha"] = exponents.fraction_jsonable(effective)
    except exponents.DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    text = persist.dump_json(payload)
    if args.out:
        persist.atomic_write_text(os.path.join(args.out, "plan.json"), text)
    sys.stdout.write(text)
    return EXIT_PASS


def cmd_verify_all(args) -> int:
    cfg = _config_for(args)
    report = verify.run_suite(selected=cfg.audits or None, n=cfg.grid_n, seed=cfg.seed,
                              law_spec=cfg.law)
    out = args.out or "besovlab-verify"
    persist.atomic_write_text(os.path.join(out, "report.json"), persist.dump_json(report))
    for entry in report["audits"]:
        status = "pass" if entry["pass"] else "FAIL"
        print(f"{status:4s}  {entry['name']:24s} [{entry['anchor']}]")
    summary = report["suite"]
    print(f"{summary['total']} audits, "
          f"{'all pass' if summary['pass'] else 'FAILED: ' + ', '.join(summary['failed'])} "
          f"({summary['runtime_s']}s); report in {out}")
    return EXIT_PASS if summary["pass"] else EXIT_AUDIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="besov-lab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    common(sub.add_parser("simulate", help="integrate and persist a trajectory"))
    common(sub.add_parser("decompose", help="shell norms and Besov reports of the initial field"))
    common(sub.add_parser("paraproduct-audit", help="reconstruction and bound certificates"))
    common(sub.add_parser("verify-all", help="run the full audit suite"))
    calc = sub.add_parser("calculus", help="exact exponent plan as JSON")
    calc.add_argument("alpha", help="rational Holder exponent, e.g. 1/4")
    calc.add_argument("d", type=int, choices=(2, 3), help="spatial dimension")
    calc.add_argument("--beta", help="modified SQG dissipation order (rational)")
    calc.add_argument("--p", help="starting integrability for the mqg window")
    calc.add_argument("--out", help="output directory")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "decompose": cmd_decompose,
    "paraproduct-audit": cmd_paraproduct_audit,
    "calculus": cmd_calculus,
    "verify-all": cmd_verify_all,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FieldError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except solver.CflError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ABORT


if __name__ == "__main__":
    sys.exit(main())
