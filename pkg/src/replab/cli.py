"""Single executable exposing every operation.

Subcommands: check-fei, horizon, construct, verify, simulate,
bound-outside-option, bound-sweep, phase-sweep.

Model inputs come from --config (TOML or JSON) and/or flags; flags win.
Artifact-producing commands write their outputs plus a run manifest under
--out. CSV files use '.' decimals and 17 significant digits so doubles
round-trip exactly; JSON uses Python's shortest round-trip float repr.
Sweep cells run on a worker pool capped by REPLAB_THREADS, with rows
emitted in grid order regardless of completion order.

Exit codes: 0 success, 2 validation/config error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import __version__, bounds, equilibria, fei, verifier
from .errors import ConfigParse, ReplabError, ValidationError
from .model import GameParams, MonitoringStructure
from .simulate import (
    SimulationConfig,
    analytic_long_run_effort,
    martingale_diagnostic,
    simulate as run_simulation,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_VERIFY_FAILED = 3


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, bool):
        return "true" if value else "false"
    return "" if value is None else str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _canonical_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seed, outputs: list[str]):
    import numpy
    import scipy

    manifest = {
        "command": command,
        "config_hash": _canonical_hash(config),
        "config": config,
        "seed": seed,
        "versions": {
            "replab": __version__,
            "python": sys.version.split()[0],
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": outputs,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config(path: str) -> dict:
    raw = Path(path).read_bytes()
    try:
        if path.endswith(".toml"):
            try:
                import tomllib  # py >= 3.11
            except ImportError:
                import tomli as tomllib
            return tomllib.loads(raw.decode())
        return json.loads(raw.decode())
    except Exception as exc:
        raise ConfigParse(f"could not parse config {path!r}: {exc}") from exc


def _resolve_model(args) -> tuple[GameParams, MonitoringStructure, dict]:
    """Merge --config and flags into (params, monitoring) plus the resolved
    config dict used for hashing."""
    cfg: dict = {}
    if getattr(args, "config", None):
        cfg.update(_load_config(args.config))
    for key, flag in (
        ("kappa", "kappa"),
        ("delta", "delta"),
        ("pi0", "pi0"),
        ("c", "c"),
        ("binary_precision", "binary_precision"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val

    if "signals" in cfg and "binary_precision" not in cfg:
        sigs = cfg["signals"]
        monitoring = MonitoringStructure(
            signals=tuple(s["name"] for s in sigs),
            f0=tuple(float(s["f0"]) for s in sigs),
            f1=tuple(float(s["f1"]) for s in sigs),
        )
    elif "binary_precision" in cfg:
        monitoring = MonitoringStructure.binary(float(cfg["binary_precision"]))
    else:
        raise ConfigParse("specify --binary-precision or a config with signals")

    params = GameParams(
        kappa=float(cfg.get("kappa", 0.2)),
        delta=float(cfg.get("delta", 0.5)),
        pi0=float(cfg.get("pi0", 0.5)),
        c=float(cfg.get("c", 0.0)),
    )
    resolved = {
        "kappa": params.kappa,
        "delta": params.delta,
        "pi0": params.pi0,
        "c": params.c,
        "signals": [
            {"name": s, "f0": monitoring.f0[i], "f1": monitoring.f1[i]}
            for i, s in enumerate(monitoring.signals)
        ],
    }
    return params, monitoring, resolved


def _parse_range(spec: str) -> list[float]:
    """'a:b:step' (inclusive endpoints) or a single scalar."""
    if ":" not in spec:
        return [float(spec)]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigParse(f"bad range {spec!r}; expected a:b:step")
    a, b, step = (float(p) for p in parts)
    if step <= 0:
        raise ConfigParse("range step must be positive")
    out = []
    k = 0
    while True:
        v = a + k * step
        if v > b + step * 1e-9:
            break
        out.append(min(v, b))
        k += 1
    return out


def _grid_list(spec: str) -> list[float]:
    return [float(tok) for tok in spec.split(",") if tok]


def _pool_size() -> int:
    cap = os.environ.get("REPLAB_THREADS")
    if cap:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


def _out_dir(args) -> Optional[Path]:
    if getattr(args, "out", None) is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- subcommand bodies -------------------------------------------------------

def _cmd_check_fei(args) -> int:
    params, monitoring, cfg = _resolve_model(args)
    if args.sweep:
        axis, spec = args.sweep.split("=", 1)
        if axis != "delta":
            raise ConfigParse("check-fei sweeps support delta=a:b:step")
        rows = []
        for d in _parse_range(spec):
            cert = fei.check_fei(
                GameParams(params.kappa, d, params.pi0, params.c), monitoring
            )
            w = cert.witness
            rows.append(
                [d, cert.holds, w.slack if w else None, w.v_bar if w else None]
            )
        out = _out_dir(args)
        if out is not None:
            _write_csv(out / "fei_sweep.csv", ["delta", "holds", "slack", "v_bar"], rows)
            _write_manifest(out, "check-fei", cfg, None, ["fei_sweep.csv"])
        else:
            print(",".join(["delta", "holds", "slack", "v_bar"]))
            for row in rows:
                print(",".join(_fmt(v) for v in row))
        return EXIT_OK
    cert = fei.check_fei(params, monitoring)
    print(json.dumps(cert.to_dict(), indent=2, sort_keys=True))
    out = _out_dir(args)
    if out is not None:
        (out / "fei_certificate.json").write_text(
            json.dumps(cert.to_dict(), indent=2, sort_keys=True) + "\n"
        )
        _write_manifest(out, "check-fei", cfg, None, ["fei_certificate.json"])
    return EXIT_OK


def _cmd_horizon(args) -> int:
    params, monitoring, cfg = _resolve_model(args)
    refutation = fei.uniform_failure_horizon(params, monitoring)
    print(json.dumps(refutation.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_construct(args) -> int:
    params, monitoring, cfg = _resolve_model(args)
    if args.kind == "fe":
        automaton = equilibria.construct_full_effort(params, monitoring)
    else:
        automaton, _ = equilibria.construct_non_efe(
            params, monitoring, a0_override=args.a0, max_depth=args.depth
        )
    payload = equilibria.automaton_to_dict(automaton, params, monitoring)
    out = _out_dir(args) or Path(".")
    name = f"automaton-{args.kind}.json"
    (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, "construct", cfg, None, [name])
    print(f"wrote {out / name} ({len(automaton.states)} states)")
    return EXIT_OK


def _cmd_verify(args) -> int:
    payload = json.loads(Path(args.automaton).read_text())
    automaton, params, monitoring = equilibria.automaton_from_dict(payload)
    report = verifier.verify(automaton, params, monitoring, tol=args.tol, depth=args.depth)
    d = report.to_dict()
    print(
        f"{'PASSED' if report.passed else 'FAILED'} "
        f"(politician {d['max_politician_residual']:.3e}, "
        f"voter {d['max_voter_residual']:.3e}, "
        f"bayes {d['max_bayes_residual']:.3e}, tol {report.tol:g})"
    )
    out = _out_dir(args)
    if out is not None:
        (out / "verification.json").write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
        _write_manifest(out, "verify", {"automaton": args.automaton}, None, ["verification.json"])
    else:
        print(json.dumps(d, indent=2, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def _cmd_simulate(args) -> int:
    payload = json.loads(Path(args.automaton).read_text())
    automaton, params, monitoring = equilibria.automaton_from_dict(payload)
    config = SimulationConfig(
        horizon=args.horizon, paths=args.paths, master_seed=args.seed
    )
    stats = run_simulation(automaton, params, monitoring, config)
    analytic = analytic_long_run_effort(automaton, params, monitoring)
    summary = {
        "long_run_effort": stats.long_run_effort,
        "long_run_se": stats.long_run_se,
        "analytic_long_run_effort": analytic.to_dict(),
        "martingale_z": martingale_diagnostic(stats),
        "favorable_replacements": stats.favorable_total,
        "seed": args.seed,
        "paths": args.paths,
        "horizon": args.horizon,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    out = _out_dir(args)
    if out is not None:
        (out / "simulation_stats.json").write_text(stats.to_json() + "\n")
        outputs = ["simulation_stats.json"]
        if args.per_period_csv:
            rows = [
                [
                    t,
                    stats.mean_effort[t],
                    stats.replace_rate[t],
                    stats.mean_belief[t],
                    int(stats.favorable_replacements[t]),
                ]
                for t in range(stats.horizon)
            ]
            _write_csv(
                out / "per_period.csv",
                ["t", "mean_effort", "replace_rate", "mean_belief", "favorable_replacements"],
                rows,
            )
            outputs.append("per_period.csv")
        _write_manifest(
            out, "simulate", {"automaton": args.automaton, "horizon": args.horizon,
                              "paths": args.paths}, args.seed, outputs,
        )
    return EXIT_OK


def _cmd_bound(args) -> int:
    params, monitoring, cfg = _resolve_model(args)
    result = bounds.outside_option_bound(params, monitoring)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    out = _out_dir(args)
    if out is not None:
        _write_csv(
            out / "bound.csv",
            ["pi0", "c", "T", "eta_star", "bound"],
            [[params.pi0, params.c, result.horizon_T, result.eta_star, result.bound_value]],
        )
        _write_manifest(out, "bound-outside-option", cfg, None, ["bound.csv"])
    return EXIT_OK


def _cmd_bound_sweep(args) -> int:
    params, monitoring, cfg = _resolve_model(args)
    rows = bounds.bound_sweep(
        params, monitoring, _grid_list(args.pi0_grid), _grid_list(args.c_grid)
    )
    header = ["pi0", "c", "T", "eta_star", "bound"]
    table = [[r["pi0"], r["c"], r["T"], r["eta_star"], r["bound"]] for r in rows]
    out = _out_dir(args)
    if out is not None:
        _write_csv(out / "bound_sweep.csv", header, table)
        _write_manifest(out, "bound-sweep", cfg, None, ["bound_sweep.csv"])
    else:
        print(",".join(header))
        for row in table:
            print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def _phase_cell(job):
    precision, kappa, delta, pi0, c, tol, depth = job
    monitoring = MonitoringStructure.binary(precision)
    params = GameParams(kappa, delta, pi0, c)
    cert = fei.check_fei(params, monitoring)
    fe_ok = non_efe_ok = None
    bound_value = None
    if cert.holds:
        fe = equilibria.construct_full_effort(params, monitoring)
        fe_ok = verifier.verify(fe, params, monitoring, tol=tol, depth=depth).passed
        bad, _ = equilibria.construct_non_efe(params, monitoring, max_depth=depth)
        non_efe_ok = verifier.verify(bad, params, monitoring, tol=tol, depth=depth).passed
    else:
        bound_value = bounds.outside_option_bound(params, monitoring).bound_value
    return [precision, kappa, delta, pi0, c, cert.holds, fe_ok, non_efe_ok, bound_value]


def _cmd_phase_sweep(args) -> int:
    pi0 = args.pi0 if args.pi0 is not None else 0.3
    c = args.c if args.c is not None else 0.0
    precisions = _parse_range(args.binary_precision)
    kappas = _parse_range(args.kappa)
    deltas = _parse_range(args.delta)
    jobs = [
        (p, k, d, pi0, c, args.tol, args.depth)
        for p in precisions
        for k in kappas
        for d in deltas
    ]
    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        rows = list(pool.map(_phase_cell, jobs))
    header = [
        "binary_precision", "kappa", "delta", "pi0", "c",
        "fei_holds", "fe_construction_verified", "non_efe_construction_verified",
        "outside_option_bound",
    ]
    out = _out_dir(args)
    if out is not None:
        _write_csv(out / "phase_sweep.csv", header, rows)
        _write_manifest(
            out, "phase-sweep",
            {"binary_precision": args.binary_precision, "kappa": args.kappa,
             "delta": args.delta, "pi0": pi0, "c": c},
            None, ["phase_sweep.csv"],
        )
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(_fmt(v) for v in row))
    return EXIT_OK


# --- argument parsing --------------------------------------------------------

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON model config")
    p.add_argument("--binary-precision", dest="binary_precision", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--pi0", type=float)
    p.add_argument("--c", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replab",
        description="Replacement-and-reputation accountability game toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-fei", help="decide full-effort incentives")
    _add_model_flags(p)
    p.add_argument("--sweep", help="delta=a:b:step emits a CSV sweep")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_check_fei)

    p = sub.add_parser("horizon", help="uniform-failure horizon T")
    _add_model_flags(p)
    p.set_defaults(func=_cmd_horizon)

    p = sub.add_parser("construct", help="build an equilibrium automaton")
    _add_model_flags(p)
    p.add_argument("--kind", choices=["fe", "non-efe"], required=True)
    p.add_argument("--a0", type=float, help="override the initial effort probability")
    p.add_argument("--depth", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("verify", help="certify an automaton file")
    p.add_argument("--automaton", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--depth", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("simulate", help="seeded Monte Carlo careers")
    p.add_argument("--automaton", required=True)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-period-csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bound-outside-option", help="outside-option ceiling")
    _add_model_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("bound-sweep", help="bound table over (pi0, c) grids")
    _add_model_flags(p)
    p.add_argument("--pi0-grid", dest="pi0_grid", required=True, help="comma list")
    p.add_argument("--c-grid", dest="c_grid", required=True, help="comma list")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bound_sweep)

    p = sub.add_parser("phase-sweep", help="dichotomy table over parameter grids")
    p.add_argument("--binary-precision", dest="binary_precision", required=True,
                   help="scalar or a:b:step")
    p.add_argument("--kappa", required=True, help="scalar or a:b:step")
    p.add_argument("--delta", required=True, help="scalar or a:b:step")
    p.add_argument("--pi0", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--depth", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_phase_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConfigParse) as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except ReplabError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
