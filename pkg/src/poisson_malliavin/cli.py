"""Command-line entry point: run verification suites, simulate, emit reports.

Reports are JSON lines (or CSV with --format csv); every line carries the
seed and a hash of the effective configuration, and report files are
byte-identical across --threads settings.  Exit code 0 when every check
passes, 2 on any check failure, 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import jsonschema
import numpy as np

from .configuration import Window
from .errors import ConfigError, PoissonMalliavinError
from .expansions import (
    chaotic_sum,
    co_residual_suite,
    pco_residual_suite,
    projection_probes,
    pseudo_chaotic_sum,
    windowed_pco_convergence,
)
from .malliavin import count_functional
from .measure import derive_seed, sample_poisson
from .montecarlo import draw_batch, ibp_check, isometry_check, mecke_check
from .processes import expected_count_oracle, ground_intensity, simulate_hawkes
from .registry import (
    DEFAULT_FUNCTIONALS,
    DEFAULT_KERNELS,
    build_functional,
    build_hawkes,
    build_kernel,
    build_rho,
    build_windows,
    default_config,
)

ENV_SEED = "POISSON_MALLIAVIN_SEED"

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "T": {"type": "number", "exclusiveMinimum": 0},
        "marks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["interval", "discrete"]},
                "M": {"type": "number"},
                "density": {"type": "string"},
                "mass": {"type": "number"},
                "points": {"type": "array", "items": {"type": "number"}},
                "weights": {"type": "array", "items": {"type": "number"}},
            },
        },
        "windows": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "t": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
                    "x": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
                    "values": {"type": "array", "items": {"type": "number"}},
                },
            },
        },
        "hawkes": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mu": {"type": "number"},
                "kernel": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "type": {"enum": ["exp", "const"]},
                        "alpha": {"type": "number"},
                        "beta": {"type": "number"},
                        "height": {"type": "number"},
                        "width": {"type": "number"},
                    },
                },
                "T": {"type": "number"},
                "theta_cap": {"type": "number"},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 2},
        "threads": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "z_max": {"type": "number", "exclusiveMinimum": 0},
        "functionals": {"type": "array", "items": {"type": "string"}},
        "kernels": {"type": "array", "items": {"type": "string"}},
    },
}


class _Parser(argparse.ArgumentParser):
    # Usage errors exit with 1 (argparse defaults to 2, which is the
    # check-failure code here).
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="poisson-malliavin",
                     description="Verification suites for pathwise Poisson calculus.")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="base seed (u64)")
    parser.add_argument("--samples", type=int, default=None, help="replication count")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--tolerance", type=float, default=None, help="residual tolerance")
    parser.add_argument("--out", type=str, default=None, help="report file (default stdout)")
    parser.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-pco", help="pathwise uncompensated representation residuals")
    p.add_argument("--functional", action="append", default=None)

    p = sub.add_parser("expand", help="per-order expansion tables")
    p.add_argument("--functional", action="append", default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--paths", type=int, default=3)

    p = sub.add_parser("verify-mecke", help="Mecke identity z-tests")
    p.add_argument("--k", type=int, default=None, help="restrict to kernels of this order")
    p.add_argument("--F", action="append", default=None)
    p.add_argument("--h", action="append", default=None)

    p = sub.add_parser("verify-ibp", help="integration-by-parts z-tests")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--F", action="append", default=None)
    p.add_argument("--h", action="append", default=None)

    p = sub.add_parser("verify-isometry", help="second-moment constants of I_n")
    p.add_argument("--kernel", action="append", default=None)

    p = sub.add_parser("verify-co", help="compensated representation residuals + probes")
    p.add_argument("--functional", action="append", default=None)
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--probe-reps", type=int, default=400)

    p = sub.add_parser("simulate-hawkes", help="thinning simulation vs renewal oracle")
    p.add_argument("--paths", type=int, default=None)

    p = sub.add_parser("windows-demo", help="nested-window convergence table")
    p.add_argument("--windows", type=int, default=4)
    return parser


def load_config(path: str | None) -> dict:
    config = default_config()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        try:
            jsonschema.validate(user, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
        for key, value in user.items():
            config[key] = value
    return config


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _emit(lines: list[dict], fmt: str, out_path: str | None) -> None:
    if fmt == "jsonl":
        text = "".join(json.dumps(line, sort_keys=True) + "\n" for line in lines)
    else:
        fields: list[str] = []
        for line in lines:
            for key in line:
                if key not in fields:
                    fields.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, restval="")
        writer.writeheader()
        for line in lines:
            writer.writerow({k: _csv_cell(v) for k, v in line.items()})
        text = buf.getvalue()
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _csv_cell(v):
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def _functional_specs(args, config):
    if getattr(args, "functional", None):
        return list(args.functional)
    return list(config.get("functionals", list(DEFAULT_FUNCTIONALS)))


def _kernel_specs(args, config, attr="h"):
    given = getattr(args, attr, None)
    if given:
        return list(given)
    return list(config.get("kernels", list(DEFAULT_KERNELS)))


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        seed = args.seed if args.seed is not None else config.get(
            "seed", int(os.environ.get(ENV_SEED, "0")))
        samples = args.samples if args.samples is not None else config.get("samples", 10_000)
        threads = args.threads if args.threads is not None else config.get(
            "threads", os.cpu_count() or 1)
        tol = args.tolerance if args.tolerance is not None else config.get("tolerance", 1e-9)
        z_max = config.get("z_max", 4.0)
        effective = dict(config)
        effective.update({"seed": seed, "samples": samples, "tolerance": tol})
        stamp = {"seed": seed, "config_hash": _config_hash(effective)}
        rho = build_rho(config)
        windows = build_windows(config, rho)

        lines: list[dict] = []
        ok = True

        if args.command == "verify-pco":
            for spec in _functional_specs(args, config):
                F, rho_override = build_functional(spec, windows, rho, config)
                report = pco_residual_suite(F, rho_override or rho, samples, seed, tol=tol)
                lines.append({**report.to_json(), **stamp})
                ok &= report.passed

        elif args.command == "expand":
            for spec in _functional_specs(args, config):
                F, rho_override = build_functional(spec, windows, rho, config)
                use_rho = rho_override or rho
                for p in range(args.paths):
                    omega = sample_poisson(use_rho, derive_seed(seed, p))
                    top = args.order if args.order is not None else len(omega)
                    rep = pseudo_chaotic_sum(F, omega, n_max=top, tol=tol)
                    lines.append({**rep.to_json(), "path": p, **stamp})
                    ok &= rep.exact_order is not None
                    if F.chaos_kernel is not None and F.chaos_mean is not None:
                        crep = chaotic_sum(F, omega, use_rho, n_max=min(top, 6), tol=tol)
                        lines.append({**crep.to_json(), "path": p, **stamp})

        elif args.command in ("verify-mecke", "verify-ibp"):
            check = mecke_check if args.command == "verify-mecke" else ibp_check
            batch = draw_batch(rho, samples, seed, threads)
            kernels = [build_kernel(s, windows, rho) for s in _kernel_specs(args, config)]
            if args.k is not None:
                kernels = [k for k in kernels if k.order == args.k]
            fnames = args.F if getattr(args, "F", None) else \
                ["one"] + _functional_specs(args, config)
            n_checks = 0
            for fname in fnames:
                F, rho_override = build_functional(fname, windows, rho, config)
                if rho_override is not None:
                    raise ConfigError(
                        f"{fname!r} carries its own intensity; not valid in this suite")
                for h in kernels:
                    report = check(F, h, rho, samples, seed, threads=threads,
                                   z_max=z_max, batch=batch)
                    lines.append({**report.to_json(), **stamp})
                    ok &= report.passed
                    n_checks += 1
            # multiple-testing note: expected false alarms across the suite
            per_check = math.erfc(z_max / math.sqrt(2.0))
            lines.append({"check": "suite_note", "suite": args.command,
                          "checks": n_checks, "z_max": z_max,
                          "per_check_false_alarm": per_check,
                          "expected_false_alarms": per_check * n_checks, **stamp})

        elif args.command == "verify-isometry":
            batch = draw_batch(rho, samples, seed, threads)
            specs = args.kernel if args.kernel else ["ind:A", "tensor_ind:A"]
            for s in specs:
                f = build_kernel(s, windows, rho)
                report = isometry_check(f, rho, samples, seed, threads=threads,
                                        z_max=z_max, batch=batch)
                lines.append({**report.to_json(), **stamp})
                ok &= report.passed
            per_check = math.erfc(z_max / math.sqrt(2.0))
            lines.append({"check": "suite_note", "suite": args.command,
                          "checks": len(specs), "z_max": z_max,
                          "per_check_false_alarm": per_check,
                          "expected_false_alarms": per_check * len(specs), **stamp})

        elif args.command == "verify-co":
            specs = args.functional if args.functional else ["count:A", "count_squared:A"]
            for spec in specs:
                F, rho_override = build_functional(spec, windows, rho, config)
                if rho_override is not None:
                    raise ConfigError(f"{spec!r} has no closed-form projection")
                report = co_residual_suite(F, rho, samples, seed, tol=max(tol, 1e-8))
                lines.append({**report.to_json(), **stamp})
                ok &= report.passed
                for row in projection_probes(F, rho, args.probes, args.probe_reps,
                                             derive_seed(seed, 977), z_max=z_max):
                    lines.append({"check": f"co_probe[{F.name}]", **row, **stamp})
                    ok &= row["pass"]

        elif args.command == "simulate-hawkes":
            model = build_hawkes(config)
            paths = args.paths if args.paths is not None else samples
            rho_g = ground_intensity(model)
            counts = np.empty(paths)
            overflow = 0
            for i in range(paths):
                path = simulate_hawkes(model, derive_seed(seed, i), rho_g)
                counts[i] = path.count
                overflow += int(path.overflow)
            oracle = expected_count_oracle(model)
            mean = float(np.mean(counts))
            se = float(np.std(counts, ddof=1) / math.sqrt(paths))
            z = (mean - oracle) / se if se > 0 else 0.0
            passed = abs(z) <= z_max and overflow / paths < 1e-3
            lines.append({
                "check": "hawkes_mean", "paths": paths, "mean": mean, "stderr": se,
                "oracle": oracle, "z": z, "overflow_fraction": overflow / paths,
                "pass": bool(passed), **stamp,
            })
            ok &= passed

        elif args.command == "windows-demo":
            nwin = args.windows
            marks = rho.marks
            if not hasattr(marks, "M"):
                raise ConfigError("windows-demo needs an interval mark space")
            F = count_functional(Window(0.0, rho.T, 0.0, marks.M), rho, name="count:full")
            nested = [Window(0.0, rho.T, 0.0, marks.M * (j + 1) / nwin) for j in range(nwin)]
            rows = windowed_pco_convergence(F, nested, rho, samples, seed)
            prev = math.inf
            for row in rows:
                target = row.excluded_mass
                z = ((row.mean_abs_diff - target) / row.stderr) if row.stderr > 0 else (
                    0.0 if abs(row.mean_abs_diff - target) <= 1e-12 * (1 + target) else math.inf)
                passed = abs(z) <= z_max and row.max_residual < tol \
                    and row.mean_abs_diff <= prev + 4 * row.stderr
                prev = row.mean_abs_diff
                lines.append({**row.to_json(), "target_excluded_mass": target,
                              "z": z, "pass": bool(passed), **stamp})
                ok &= passed

        _emit(lines, args.format, args.out)
        return 0 if ok else 2
    except (ConfigError, PoissonMalliavinError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
