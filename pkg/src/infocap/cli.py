"""Command-line interface: run scenario configs, sweep capacity over the
sample rank, and verify the acceptance battery.

Exit codes: 0 all checks pass, 1 numerical check failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .acceptance import RUNTIME_BUDGET_SECONDS, run_all
from .config import ConfigError, load_config
from .scenarios import run_scenario, write_report


def _default_out() -> str:
    return os.environ.get("INFOCAP_OUT", ".")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infocap",
        description="Channel information capacity scenarios: Fisher/CR/Stam "
                    "chains, kinematic and Fourier capacity forms.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario config")
    run_p.add_argument("config", help="path to a TOML scenario config")
    run_p.add_argument("--out", default=None, help="output directory "
                       "(default: $INFOCAP_OUT or '.')")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="'csv' additionally writes tabular output")

    sweep_p = sub.add_parser("sweep", help="tabulate capacity for N = 1..K")
    sweep_p.add_argument("config", help="path to a sweep-kind TOML config")
    sweep_p.add_argument("--n-max", type=int, default=None,
                         help="largest sample rank (overrides [sweep].n_max)")
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--format", choices=("json", "csv"), default="csv")

    verify_p = sub.add_parser("verify", help="run the acceptance battery")
    verify_p.add_argument("--filter", default=None,
                          help="only run criteria whose tag contains this")
    verify_p.add_argument("--out", default=None)
    return parser


def _emit(report: dict, config_path: str, out_dir: str, fmt: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(config_path).stem
    output = report["scenario"].get("output", {})
    json_path = out / output.get("json", f"{stem}.report.json")
    csv_path = None
    if fmt == "csv" or "csv" in output:
        csv_path = out / output.get("csv", f"{stem}.table.csv")
    write_report(report, json_path, csv_path)
    print(f"report: {json_path}")
    if csv_path is not None:
        print(f"table:  {csv_path}")


def _print_checks(report: dict) -> None:
    for check in report["checks"]:
        mark = "PASS" if check["pass"] else "FAIL"
        print(f"[{mark}] {check['name']}: lhs={check['lhs']:.6g} "
              f"rhs={check['rhs']:.6g} tol={check['tolerance']:.3g} "
              f"margin={check['margin']:.3g}")
    for finding in report["findings"]:
        extra = {k: v for k, v in finding.items() if k != "name"}
        print(f"[NOTE] {finding['name']}: {extra}")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind == "sweep":
        raise ConfigError("sweep configs run through 'infocap sweep'")
    report = run_scenario(cfg, seed_override=args.seed)
    _print_checks(report)
    passed = report["passed"]
    _emit(report, args.config, args.out or _default_out(), args.format)
    if not passed:
        failed = [c["name"] for c in report["checks"] if not c["pass"]]
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind != "sweep":
        raise ConfigError(f"'infocap sweep' needs a sweep-kind config, "
                          f"got {cfg.kind!r}")
    report = run_scenario(cfg, seed_override=args.seed, n_max=args.n_max)
    for row in report["results"]["rows"]:
        per = " ".join(f"{v:+.6g}" for v in row["per_channel"])
        print(f"N={row['channels']:>3d}  I={row['capacity']:+.8g}  [{per}]")
    mono = report["results"]["monotone"]
    print("monotone in N:", "not applicable" if mono is None else mono)
    passed = report["passed"]
    _emit(report, args.config, args.out or _default_out(), args.format)
    return 0 if passed else 1


def _cmd_verify(args) -> int:
    outcomes, total, runtime_ok = run_all(args.filter)
    if not outcomes:
        print(f"no criteria match filter {args.filter!r}", file=sys.stderr)
        return 2
    all_ok = True
    for oc in outcomes:
        mark = "PASS" if oc.passed else "FAIL"
        worst = oc.worst
        print(f"[{mark}] {oc.criterion.number:02d} "
              f"{oc.criterion.tag:<20s} {len(oc.checks):>2d} checks  "
              f"worst({worst.name}) margin={worst.margin:+.3e}  "
              f"{oc.elapsed:.2f}s")
        all_ok &= oc.passed
    budget_mark = "PASS" if runtime_ok else "FAIL"
    print(f"[{budget_mark}] battery runtime {total:.1f}s "
          f"(budget {RUNTIME_BUDGET_SECONDS:.0f}s)")
    all_ok &= runtime_ok
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "total_seconds": total,
        "runtime_ok": runtime_ok,
        "criteria": [{
            "number": oc.criterion.number,
            "tag": oc.criterion.tag,
            "title": oc.criterion.title,
            "passed": oc.passed,
            "elapsed": oc.elapsed,
            "checks": [{"name": c.name, "value": c.value, "bound": c.bound,
                        "margin": c.margin, "pass": c.passed, "note": c.note}
                       for c in oc.checks],
        } for oc in outcomes],
        "passed": bool(all_ok),
    }
    path = out / "verify.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"summary: {path}")
    if not all_ok:
        failed = [f"{oc.criterion.number:02d}:{oc.criterion.tag}"
                  for oc in outcomes if not oc.passed]
        if not runtime_ok:
            failed.append("runtime-budget")
        print(f"FAILED criteria: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
