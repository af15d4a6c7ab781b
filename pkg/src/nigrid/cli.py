"""Command-line entry points: ``verify``, ``simulate`` and ``reproduce-paper``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenario import (EXIT_CERTIFICATE, EXIT_DIVERGED, EXIT_OK, EXIT_VALIDATION, CertificateFailure,
                       ConfigError, cmd_reproduce_paper, cmd_simulate, cmd_verify, load_config)


def _load(path):
    try:
        return load_config(path)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
    except ConfigError as exc:
        for issue in exc.issues:
            print(issue, file=sys.stderr)
    return None


def _summary(report, out=sys.stderr):
    t1, p1 = report.theorem1, report.prop1
    print(f"lambda_max(QQ^T) = {report.laplacian_max:.12g}", file=out)
    print(f"DC-gain product {p1['plant_dc_max']:.6g} x {p1['controller_dc_max']:.6g} = "
          f"{p1['product']:.6g} vs 1/lambda_max = {p1['inverse_laplacian_max']:.6g} "
          f"-> {'holds' if p1['holds'] else 'inconclusive'}", file=out)
    side = ", ".join(t1["failed_side_conditions"]) or "ok"
    print(f"lambda_max(Q^T G(0) Q Gc(0)) = {t1['value']:.6g}; side conditions: {side}; "
          f"certificate {'PASS' if t1['holds'] else 'FAIL'}", file=out)
    print(f"closed loop max Re(eig) = {report.closed_loop['max_real']:.6g} "
          f"({'Hurwitz' if report.hurwitz else 'not Hurwitz'})", file=out)


def _write_report(report, path):
    if path:
        Path(path).write_text(report.to_json(), encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nigrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check NI properties and stability certificates")
    p.add_argument("config")
    p.add_argument("--report", help="write the JSON report here instead of stdout")

    p = sub.add_parser("simulate", help="inject a fault and simulate the closed loop")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plots", help="directory for SVG plots")
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true", help="simulate even if the certificate fails")
    p.add_argument("--report", help="JSON report path")

    p = sub.add_parser("reproduce-paper", help="run the built-in 4-bus scenario")
    p.add_argument("--out", default="reference_run", help="output directory")

    args = parser.parse_args(argv)

    if args.command == "reproduce-paper":
        _, report = cmd_reproduce_paper(args.out)
        _summary(report)
        print(f"wrote {args.out}/", file=sys.stderr)
        return EXIT_OK if report.certified else EXIT_CERTIFICATE

    config = _load(args.config)
    if config is None:
        return EXIT_VALIDATION

    if args.command == "verify":
        report = cmd_verify(config)
        _summary(report)
        if args.report:
            _write_report(report, args.report)
        else:
            sys.stdout.write(report.to_json())
        return EXIT_OK if report.certified else EXIT_CERTIFICATE

    try:
        traj, report = cmd_simulate(config, args.out, args.plots, args.seed, args.force)
    except CertificateFailure as exc:
        _summary(exc.report)
        print("refusing to simulate an uncertified loop (use --force)", file=sys.stderr)
        return EXIT_CERTIFICATE
    _write_report(report, args.report)
    if traj is None:
        print(f"simulation diverged at t = {report.divergence_time_s:.6g} s", file=sys.stderr)
        return EXIT_DIVERGED
    conv = report.convergence
    print(f"terminal max |f - f0| = {conv['terminal_max_freq_dev_hz']:.3g} Hz, "
          f"settling time = {conv['settling_time_s']}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
