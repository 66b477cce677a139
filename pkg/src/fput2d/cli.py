"""Command-line front end.

    fput2d coeffs   --config cfg.yaml [--set key=value ...]
    fput2d simulate --config cfg.yaml --out dir [--set ...]
    fput2d sweep    --config cfg.yaml --out dir [--set ...]
    fput2d residual --config cfg.yaml --out dir [--set ...]

Exit codes: 0 success, 1 config error, 2 inadmissible carrier, 3 solver
error, 4 acceptance/order-fit failure.  FPUT2D_THREADS caps the worker pool.
All outputs land under --out together with a manifest.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ansatz import FootprintExceeded, MissingB, nls_problem_for, residual_norm
from .config import SCHEMA, ConfigError, config_hash, load_config, to_plan
from .dispersion import Resonant, ZeroFrequency, nls_coefficients
from .harness import (
    DegenerateFit,
    NonResonantCarrierRequired,
    fit_order,
    run_single,
    run_sweep,
)
from .io import DiagnosticsCsv, write_manifest, write_snapshot
from .lattice import UnstableStep
from .nls import EnvelopeBlowup, evolve, gaussian_field

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CARRIER = 2
EXIT_SOLVER = 3
EXIT_ACCEPTANCE = 4

SOLVER_ERRORS = (EnvelopeBlowup, UnstableStep, FootprintExceeded, MissingB, Resonant)


def _schema_epilog() -> str:
    lines = ["config keys (file or --set key=value):"]
    for key, (default, tag, help_text) in SCHEMA.items():
        lines.append(f"  {key:28s} {tag:10s} default={default!r}  {help_text}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fput2d",
        description="2D cubic FPUT lattice vs NLS wave-packet approximation laboratory",
        epilog=_schema_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("coeffs", "print carrier dispersion data and envelope coefficients as JSON"),
        ("simulate", "run one eps: snapshots, diagnostics, summary"),
        ("sweep", "run the eps sweep and fit the convergence order"),
        ("residual", "measure residual norms over the eps sweep and fit orders"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", default=None, help="JSON or YAML config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
        if name != "coeffs":
            p.add_argument("--out", default="out", help="output directory")
    return parser


def cmd_coeffs(cfg) -> int:
    try:
        data = nls_coefficients_from(cfg)
    except ZeroFrequency as e:
        print(json.dumps({"error": "ZeroFrequency", "message": str(e)}))
        return EXIT_CARRIER
    payload = {
        "omega0": data.omega0,
        "cx": data.group_velocity[0],
        "cy": data.group_velocity[1],
        "hess": [list(map(float, row)) for row in data.hessian],
        "gamma_a_im": None if data.gamma_a is None else data.gamma_a.imag,
        "gamma_b_im": None if data.gamma_b is None else data.gamma_b.imag,
        "gamma_q_im": data.gamma_q.imag,
        "nonresonant": data.nonresonant,
        "axis_degenerate_k": data.axis_degenerate_k,
        "axis_degenerate_l": data.axis_degenerate_l,
    }
    print(json.dumps(payload, indent=2))
    if not data.nonresonant:
        print("carrier violates the non-resonance condition", file=sys.stderr)
        return EXIT_CARRIER
    return EXIT_OK


def nls_coefficients_from(cfg):
    from .dispersion import WaveVector

    return nls_coefficients(WaveVector(cfg.carrier_k, cfg.carrier_l), cfg.delta_res)


def cmd_simulate(cfg, out_dir: Path) -> int:
    plan = to_plan(cfg)
    eps = cfg.eps
    n_snap = max(int(cfg.snapshots), 0)
    snap_idx = tuple(
        sorted({int(round(f)) for f in np.linspace(0, plan.sample_count - 1, n_snap)})
    ) if n_snap else ()
    record = run_single(plan, eps, keep_state_indices=snap_idx)
    states = record.pop("_states", {})
    env_final = record.pop("_env_final", None)
    files = []
    if cfg.write_snapshots:
        for i, st in sorted(states.items()):
            path = out_dir / f"state_{i:03d}.snap"
            write_snapshot(path, st)
            files.append(path.name)
        if env_final is not None:
            path = out_dir / "envelope_final.snap"
            write_snapshot(path, env_final)
            files.append(path.name)
    if cfg.write_csv:
        path = out_dir / "lattice_diag.csv"
        nan = float("nan")
        with DiagnosticsCsv(path, ["t", "energy", "compat_defect", "max_amp"]) as csv_out:
            for t, e, d, amp in record["lattice_diag"]:
                csv_out.write(t, e if e is not None else nan,
                              d if d is not None else nan, amp)
        files.append(path.name)
        path = out_dir / "envelope_diag.csv"
        with DiagnosticsCsv(path, ["T", "mass", "h4proxy", "max_amp"]) as csv_out:
            for row in record["envelope_diag"]:
                csv_out.write(*row)
        files.append(path.name)
    summary = out_dir / "summary.json"
    summary.write_text(json.dumps(record, indent=2, default=float))
    files.append(summary.name)
    write_manifest(out_dir, "simulate", config_hash(cfg), files + ["manifest.json"])
    print(f"simulate: eps={eps} max_sup_error={record['max_sup_error']:.6e} "
          f"-> {summary}")
    return EXIT_OK


def cmd_sweep(cfg, out_dir: Path) -> int:
    if cfg.synthetic_errors:
        # self-test path: fit precomputed errors, no runs
        try:
            slope, ci, fit_res = fit_order(cfg.eps_list, cfg.synthetic_errors)
            passed = slope >= cfg.pass_threshold
            degenerate = False
        except DegenerateFit:
            slope, ci, fit_res = None, None, None
            passed = all(e <= 1e-10 for e in cfg.synthetic_errors)
            degenerate = True
        report = {
            "plan": {"synthetic": True, "eps_list": list(cfg.eps_list)},
            "per_eps": [{"eps": e, "max_sup_error": err}
                        for e, err in zip(cfg.eps_list, cfg.synthetic_errors)],
            "fitted_order": slope,
            "fit_interval_95": ci,
            "fit_residual": fit_res,
            "degenerate_fit": degenerate,
            "pass": bool(passed),
            "metadata": {"config_hash": config_hash(cfg)},
        }
    else:
        report = run_sweep(to_plan(cfg))
    files = []
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, default=float))
    files.append(report_path.name)
    tsv = out_dir / "order_fit.tsv"
    with open(tsv, "w") as fh:
        fh.write("log_eps\tlog_maxerr\n")
        for rec in report["per_eps"]:
            if rec["max_sup_error"] > 0:
                fh.write(f"{np.log(rec['eps'])!r}\t{np.log(rec['max_sup_error'])!r}\n")
    files.append(tsv.name)
    if cfg.write_csv:
        for rec in report["per_eps"]:
            if "times" not in rec:
                continue
            path = out_dir / f"errors_eps_{rec['eps']:g}.csv"
            with DiagnosticsCsv(path, ["t", "sup_error"]) as csv_out:
                for t, e in zip(rec["times"], rec["sup_errors"]):
                    csv_out.write(t, e)
            files.append(path.name)
    write_manifest(out_dir, "sweep", config_hash(cfg), files + ["manifest.json"])
    order = report["fitted_order"]
    print(f"sweep: fitted_order={order if order is None else round(order, 4)} "
          f"pass={report['pass']} -> {report_path}")
    if report["degenerate_fit"] and not report["pass"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK if report["pass"] else EXIT_ACCEPTANCE


def cmd_residual(cfg, out_dir: Path) -> int:
    plan = to_plan(cfg)
    disp = nls_coefficients_from(cfg)
    env_variant = "displacement" if cfg.variant == "displacement" else "strain_u"
    rows = []
    for eps in plan.eps_list:
        n = plan.n_side(eps)
        box = eps * n
        env0 = gaussian_field(box, plan.grid_side, plan.amplitude, plan.sigma,
                              variant=env_variant)
        slow_times = [f * plan.t0 for f in plan.residual_fractions]
        envs = evolve(env0, nls_problem_for(disp, env_variant, plan.dt_slow),
                      plan.t0, sample_times=slow_times,
                      blowup_guard=plan.blowup_guard)
        per_time = {"with": [], "without": []}
        for env in envs:
            t = env.slow_time / eps**2
            for label, flag in (("with", True), ("without", False)):
                per_time[label].append(
                    residual_norm(env, disp, eps, t, n, cfg.variant, flag,
                                  method=plan.envelope_eval)
                )
        rows.append({
            "eps": eps,
            "with_corrections": max(per_time["with"]),
            "without_corrections": max(per_time["without"]),
            "per_time": per_time,
        })
    eps_values = [r["eps"] for r in rows]
    report = {"per_eps": rows, "metadata": {"config_hash": config_hash(cfg)}}
    code = EXIT_OK
    try:
        for label, bar_key in (("with_corrections", "residual_order_min_with"),
                               ("without_corrections", "residual_order_min_without")):
            slope, ci, _ = fit_order(eps_values, [r[label] for r in rows])
            bar = cfg.values[bar_key]
            report[f"order_{label}"] = slope
            report[f"pass_{label}"] = bool(slope >= bar)
            if slope < bar:
                code = EXIT_ACCEPTANCE
    except DegenerateFit as e:
        report["degenerate_fit"] = str(e)
        code = EXIT_ACCEPTANCE
    path = out_dir / "residual_report.json"
    path.write_text(json.dumps(report, indent=2, default=float))
    write_manifest(out_dir, "residual", config_hash(cfg), [path.name, "manifest.json"])
    print(f"residual: orders with={report.get('order_with_corrections')} "
          f"without={report.get('order_without_corrections')} -> {path}")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "coeffs":
        try:
            return cmd_coeffs(cfg)
        except SOLVER_ERRORS as e:
            print(json.dumps({"error": type(e).__name__, "message": str(e)}))
            return EXIT_SOLVER

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "sweep":
            if not cfg.synthetic_errors:
                if len(cfg.eps_list) < 3:
                    print("config error: sweep needs at least 3 eps values",
                          file=sys.stderr)
                    return EXIT_CONFIG
                try:
                    data = nls_coefficients_from(cfg)
                except ZeroFrequency as e:
                    print(f"carrier error: {e}", file=sys.stderr)
                    return EXIT_CARRIER
                if not data.nonresonant:
                    print("carrier violates the non-resonance condition; refusing to run",
                          file=sys.stderr)
                    return EXIT_CARRIER
            return cmd_sweep(cfg, out_dir)
        if args.command == "residual":
            return cmd_residual(cfg, out_dir)
    except NonResonantCarrierRequired as e:
        print(f"carrier error: {e}", file=sys.stderr)
        return EXIT_CARRIER
    except ZeroFrequency as e:
        print(f"carrier error: {e}", file=sys.stderr)
        return EXIT_CARRIER
    except SOLVER_ERRORS as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}),
              file=sys.stderr)
        return EXIT_SOLVER
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
