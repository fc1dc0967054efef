"""Batch front-end: build immersions from a config, run identity suites and
energy reports, emit JSON, CSV, or fixed-width tables.

Reports are byte-deterministic for a fixed config and seed: keys are sorted,
floats use repr, files are UTF-8 and newline-terminated, and every random
choice flows from the single config seed.

Exit status: 0 all requested checks passed, 1 a check failed, 2 config error,
3 immersion construction error, 4 evaluation error (e.g. a non-Lagrangian
immersion detected during geometry evaluation).
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import cpn  # noqa: F401  (registers the CP^n families)
from .geometry import DegenerateMetricError, NonLagrangianError
from .identities import run_identity_suite
from .immersions import FAMILY_REGISTRY, OutOfDomainError, parse_immersion_config
from .quadrature import energy_report, rule_for

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_CONSTRUCTION_ERROR = 3
EXIT_EVALUATION_ERROR = 4


class ConfigError(ValueError):
    pass


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = {}
    if path:
        try:
            cfg = parse_immersion_config(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def build_immersion(cfg: dict):
    imm_cfg = cfg.get("immersion", None)
    if imm_cfg is None:
        imm_cfg = {k: v for k, v in cfg.items() if k not in RUN_KEYS}
    family = imm_cfg.get("family")
    if family not in FAMILY_REGISTRY:
        raise ConfigError(f"unknown or missing immersion family: {family!r}")
    params = {k: v for k, v in imm_cfg.items() if k != "family"}
    try:
        return FAMILY_REGISTRY[family](params)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConstructionError(f"cannot construct {family}: {exc}") from exc


class ConstructionError(ValueError):
    pass


RUN_KEYS = {
    "immersion",
    "samples",
    "seed",
    "tol_scale",
    "degree",
    "heavy",
    "out",
    "format",
    "scan_param",
    "values",
}


def sample_points(imm, count: int, seed: int):
    rng = np.random.default_rng(seed)
    return imm.atlas.random_points(rng, count)


def write_text(path: str | None, text: str):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def render_table(doc: dict) -> str:
    kind = doc.get("kind", "?")
    lines = [f"{kind} report: {doc.get('immersion', '?')}  (schema {doc.get('schema')})"]
    if kind == "identities":
        lines.append(f"{'check':34s} {'max residual':>14s} {'tolerance':>12s} {'pass':>6s}")
        for c in doc["checks"]:
            lines.append(
                f"{c['name']:34s} {c['max_residual']:14.3e} {c['tolerance']:12.1e} "
                f"{'ok' if c['pass'] else 'FAIL':>6s}"
            )
        lines.append(f"all_pass: {doc['all_pass']}")
    elif kind == "energy":
        lines.append(f"{'functional':20s} {'value':>24s}")
        for name, value in doc["entries"].items():
            lines.append(f"{name:20s} {value:24.15e}")
        lines.append(f"r2_limit: {doc['r2_limit']} ({doc['r2_limit_note']})")
    else:
        lines.append(json.dumps(doc, sort_keys=True, indent=2))
    return "\n".join(lines) + "\n"


def emit(doc: dict, out: str | None, fmt: str, csv_text: str | None = None):
    if fmt == "json":
        write_text(out, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    elif fmt == "csv":
        if csv_text is None:
            raise ConfigError("csv format is not available for this report")
        write_text(out, csv_text)
    elif fmt == "table":
        write_text(out, render_table(doc))
    else:
        raise ConfigError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_identities(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "tol_scale": args.tol_scale})
    imm = build_immersion(cfg)
    seed = int(cfg.get("seed", 0))
    samples = int(cfg.get("samples", 20))
    tol_scale = float(cfg.get("tol_scale", 1.0))
    heavy = bool(cfg.get("heavy", True))
    points = sample_points(imm, samples, seed)
    report = run_identity_suite(imm, points, tol_scale=tol_scale, seed=seed, heavy=heavy)
    emit(report.to_dict(), args.out or cfg.get("out"), args.format or cfg.get("format", "json"))
    return EXIT_OK if report.all_pass else EXIT_CHECK_FAILED


def cmd_energy(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed})
    imm = build_immersion(cfg)
    rule = rule_for(imm, int(cfg.get("degree", 30)))
    rep = energy_report(imm, rule)
    emit(
        rep.to_dict(),
        args.out or cfg.get("out"),
        args.format or cfg.get("format", "json"),
        csv_text=rep.to_csv(),
    )
    return EXIT_OK


def _set_scan_param(imm_cfg: dict, key: str, value):
    if "." in key:
        base, idx = key.split(".", 1)
        seq = list(imm_cfg[base])
        seq[int(idx)] = value
        imm_cfg[base] = seq
    else:
        imm_cfg[key] = value


def cmd_scan(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed})
    key = cfg.get("scan_param")
    values = cfg.get("values")
    if not key or values is None:
        raise ConfigError("scan needs 'scan_param' and a finite 'values' list")
    values = sorted(float(v) for v in values)
    rows = ["param,volume,int_hhat_n,int_hhat_sq,int_h_sq,int_H_sq"]
    for v in values:
        sub = copy.deepcopy(cfg)
        imm_cfg = sub.get("immersion", sub)
        _set_scan_param(imm_cfg, key, v)
        imm = build_immersion(sub)
        rep = energy_report(imm, rule_for(imm, int(cfg.get("degree", 30))))
        e = rep.entries
        rows.append(
            f"{v!r},{e['volume']!r},{e['int_hhat_n']!r},{e['int_hhat_sq']!r},"
            f"{e['int_h_sq']!r},{e['int_H_sq']!r}"
        )
    write_text(args.out or cfg.get("out"), "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.report_file).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report: {exc}") from exc
    write_text(args.out, render_table(doc))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lagcheck",
        description="identity residuals and energy functionals of Lagrangian immersions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or key=value config file")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=["json", "csv", "table"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol-scale", dest="tol_scale", type=float, default=None)

    common(sub.add_parser("identities", help="run the identity residual suite"))
    common(sub.add_parser("energy", help="compute the energy functionals"))
    common(sub.add_parser("scan", help="energy functionals along a parameter range"))
    rep = sub.add_parser("report", help="pretty-print a JSON report")
    rep.add_argument("report_file")
    rep.add_argument("--out")

    args = parser.parse_args(argv)
    handlers = {
        "identities": cmd_identities,
        "energy": cmd_energy,
        "scan": cmd_scan,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ConstructionError as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION_ERROR
    except (NonLagrangianError, DegenerateMetricError, OutOfDomainError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
