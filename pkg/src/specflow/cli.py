"""Batch entry point.

    specflow <command> --scenario KEY [--param k=v ...] [--config file.json]
                       [--out DIR] [--seed N]
    specflow list

Every run writes ``report.json`` and ``eigenflow.csv`` into ``--out``.
Exit codes: 0 ok, 2 invalid input, 3 computation failed, 4 an identity
that should hold exactly did not.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import bifurcation as bif
from .errors import InputError, SpecflowError
from .ktheory import DEFAULT_WINDING_TOL, chern_winding
from .paths import FAMILIES, ClutchedLoop, ScalarField, sample_path, validate_clutch
from .sflow import Method, doubling_pair, spectral_flow_counting, spectral_flow_crossing, spectral_flow_loop

COMMANDS = ("sf", "sf-loop", "chern", "bif-locate", "bif-scan", "verify")
TOLERANCE_KEYS = ("kernel_tol", "clutch_tol", "winding_tol", "locate_tol")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_IDENTITY = 0, 2, 3, 4

# required top-level keys of report.json per command
REPORT_KEYS = {
    "sf": ("command", "scenario", "params", "seed", "sf", "counting", "planted", "agree"),
    "sf-loop": ("command", "scenario", "params", "seed", "value", "convention", "method", "crossings", "window"),
    "chern": ("command", "scenario", "params", "seed", "chern", "sf", "agree", "closure_defect", "window"),
    "bif-locate": ("command", "scenario", "params", "seed", "loop", "sf", "bracket", "witness", "exponent_fit"),
    "bif-scan": ("command", "scenario", "params", "seed", "grid", "flagged_cells", "certified_cells",
                 "candidate_only_cells", "box_dimension", "box_counts", "wraps_generator",
                 "complement_connected", "loops", "consistent"),
    "verify": ("command", "scenario", "params", "seed", "checks", "passed"),
}


def _registry() -> dict[str, tuple[str, str, dict, Any]]:
    """key -> (kind, description, param schema, builder) over both registries."""
    out = {}
    for key, (doc, schema, build) in FAMILIES.items():
        out[key] = ("path", doc, schema, build)
    for key, (doc, schema, build) in bif.SCENARIOS.items():
        out[key] = ("functional", doc, schema, build)
    return dict(sorted(out.items()))


def list_scenarios() -> str:
    lines = []
    for key, (kind, doc, schema, _) in _registry().items():
        lines.append(f"{key} [{kind}]: {doc}")
        for name, p in schema.items():
            lines.append(f"    {name} ({p.kind.__name__}, default {p.default!r}): {p.doc}")
    return "\n".join(lines) + "\n"


@dataclass
class RunConfig:
    command: str
    scenario: str
    params: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: Path = Path("specflow-out")
    seed: int = 0

    def validate(self) -> dict[str, Any]:
        """Check keys and types; return the full parameter set with defaults filled in."""
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        reg = _registry()
        if self.scenario not in reg:
            raise InputError(f"unknown scenario {self.scenario!r}; run 'specflow list'")
        for k in self.tolerances:
            if k not in TOLERANCE_KEYS:
                raise InputError(f"unknown tolerance {k!r}")
            if not (isinstance(self.tolerances[k], (int, float)) and self.tolerances[k] > 0):
                raise InputError(f"tolerance {k} must be a positive number")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InputError("seed must be an integer")
        schema = reg[self.scenario][2]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise InputError(f"unknown parameter(s) for {self.scenario}: {', '.join(unknown)}")
        resolved = {}
        for name, p in schema.items():
            if name in self.params and self.params[name] is not None:
                try:
                    resolved[name] = p.parse(self.params[name])
                except (TypeError, ValueError) as exc:
                    raise InputError(f"parameter {name}: {exc}") from exc
            else:
                resolved[name] = p.default
        return resolved


# --------------------------------------------------------------------------
# output


def _plain(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_report(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def render_eigenflow(grid, eigenvalues) -> str:
    eigenvalues = np.asarray(eigenvalues)
    m = eigenvalues.shape[1]
    rows = [",".join(["t"] + [f"lambda_{i}" for i in range(1, m + 1)])]
    for t, w in zip(grid, eigenvalues):
        rows.append(",".join(repr(float(x)) for x in (t, *w)))
    return "\n".join(rows) + "\n"


def validate_report(command: str, report: dict) -> None:
    """Raise ValueError unless ``report`` carries every key documented for ``command``."""
    missing = [k for k in REPORT_KEYS[command] if k not in report]
    if missing:
        raise ValueError(f"{command} report lacks {', '.join(missing)}")


# --------------------------------------------------------------------------
# commands


def _loop_of(kind: str, built, tol: dict) -> tuple[ClutchedLoop, Any]:
    if kind == "functional":
        hp = bif.hessian_family(built)
        loop = hp.loop
    else:
        if built.loop is None:
            raise InputError(f"scenario {built.key} is a path, not a clutched loop")
        loop = built.loop
    if "clutch_tol" in tol:
        loop = dataclasses.replace(loop, clutch_tol=tol["clutch_tol"])
    return loop


def _path_of(kind: str, built):
    return bif.hessian_family(built).path if kind == "functional" else built.path


def _cmd_sf(kind, built, tol):
    path = _path_of(kind, built)
    s = sample_path(path, kernel_tol=tol.get("kernel_tol"))
    crossing = spectral_flow_crossing(path, sampling=s)
    counting = spectral_flow_counting(path, sampling=s)
    planted = built.planted.get("sf") if kind == "path" else None
    agree = crossing.value == counting.value and (planted is None or planted == crossing.value)
    report = {"sf": crossing.to_json(), "counting": counting.value, "planted": planted, "agree": agree}
    return report, s, agree


def _cmd_sf_loop(kind, built, tol):
    loop = _loop_of(kind, built, tol)
    res = spectral_flow_loop(loop, Method.CROSSING_FORM, kernel_tol=tol.get("kernel_tol"))
    report = res.to_json()
    report["window"] = loop.window
    return report, res.sampling, True


def _cmd_chern(kind, built, tol):
    loop = _loop_of(kind, built, tol)
    sf = spectral_flow_loop(loop, kernel_tol=tol.get("kernel_tol"))
    w = chern_winding(loop, winding_tol=tol.get("winding_tol", DEFAULT_WINDING_TOL),
                      kernel_tol=tol.get("kernel_tol"))
    agree = w.value == sf.value
    report = {"chern": w.value, "sf": sf.value, "agree": agree,
              "closure_defect": w.closure_defect, "window": loop.window}
    return report, sf.sampling, agree


def _require_functional(kind, key):
    if kind != "functional":
        raise InputError(f"scenario {key} is not a functional family")


def _cmd_bif_locate(kind, built, tol, key):
    _require_functional(kind, key)
    kw = {"locate_tol": tol["locate_tol"]} if "locate_tol" in tol else {}
    loop = built.generator_loop()
    cert = bif.certify(built, loop, **kw)
    x = cert.witness.x
    report = {
        "loop": cert.loop,
        "sf": cert.sf,
        "bracket": [cert.bracket.lo, cert.bracket.hi],
        "witness": {"x": list(x) if isinstance(x, tuple) else x,
                    "norm_u": cert.witness.amplitude, "residual": cert.witness.residual},
        "exponent_fit": cert.branch.exponent,
    }
    s = sample_path(bif.hessian_family(built, loop).path)
    return report, s, True


def _cmd_bif_scan(kind, built, tol, key):
    _require_functional(kind, key)
    if not isinstance(built.parameter_space, bif.TorusGrid):
        raise InputError(f"scenario {key} is not parameterized by a torus")
    scan = bif.bif_set_scan(built, kernel_tol=tol.get("kernel_tol"))
    consistent = all(lp["intersects"] for lp in scan.loops if lp["sf"] != 0)
    report = {
        "grid": list(scan.flagged.shape),
        "flagged_cells": int(scan.flagged.sum()),
        "certified_cells": int(scan.certified.sum()),
        "candidate_only_cells": int(scan.candidate_only.sum()),
        "box_dimension": scan.box_dimension,
        "box_counts": [[s, c] for s, c in scan.box_counts],
        "wraps_generator": {"t": scan.wraps_generator[0], "phi": scan.wraps_generator[1]},
        "complement_connected": scan.complement_connected,
        "loops": scan.loops,
        "consistent": consistent,
    }
    s = sample_path(bif.hessian_family(built).path)
    return report, s, consistent


def _cmd_verify(kind, built, tol):
    checks = {}
    if kind == "functional":
        br = bif.verify_trivial_branch(built)
        checks["trivial_branch"] = {"max_residual": br.max_residual, "passed": br.passed}
        path = bif.hessian_family(built).path
        loop = _loop_of(kind, built, tol)
    else:
        path = built.path
        loop = _loop_of(kind, built, tol) if built.loop is not None else None
    if loop is not None:
        rep = validate_clutch(loop)
        checks["clutch"] = {"max_defect": rep.max_defect, "passed": rep.passed}
    if path.scalar_field is ScalarField.REAL:
        s_r, realdim, complexdim = doubling_pair(path, kernel_tol=tol.get("kernel_tol"))
        checks["doubling"] = {"real": s_r, "complexified_realdim": realdim,
                              "complexified_complexdim": complexdim,
                              "passed": realdim == 2 * s_r and complexdim == s_r}
    passed = all(c["passed"] for c in checks.values())
    return {"checks": checks, "passed": passed}, sample_path(path), passed


def run(config: RunConfig) -> int:
    """Execute one configured run; always leaves a report.json behind."""
    out = Path(config.output_dir)
    try:
        params = config.validate()
        kind, _, _, build = _registry()[config.scenario]
        built = build(params, config.seed)
        tol = dict(config.tolerances)
        cmd = config.command
        if cmd == "sf":
            payload, sampling, ok = _cmd_sf(kind, built, tol)
        elif cmd == "sf-loop":
            payload, sampling, ok = _cmd_sf_loop(kind, built, tol)
        elif cmd == "chern":
            payload, sampling, ok = _cmd_chern(kind, built, tol)
        elif cmd == "bif-locate":
            payload, sampling, ok = _cmd_bif_locate(kind, built, tol, config.scenario)
        elif cmd == "bif-scan":
            payload, sampling, ok = _cmd_bif_scan(kind, built, tol, config.scenario)
        else:
            payload, sampling, ok = _cmd_verify(kind, built, tol)
    except InputError as exc:
        _atomic_write(out / "report.json", render_report({"error": {"kind": exc.kind, "detail": str(exc)}}))
        return EXIT_INPUT
    except SpecflowError as exc:
        _atomic_write(out / "report.json", render_report({"error": {"kind": exc.kind, "detail": str(exc)}}))
        return EXIT_COMPUTE

    report = {"command": config.command, "scenario": config.scenario, "params": params, "seed": config.seed}
    report.update(payload)
    validate_report(config.command, report)
    _atomic_write(out / "report.json", render_report(report))
    _atomic_write(out / "eigenflow.csv", render_eigenflow(sampling.grid, sampling.eigenvalues.real))
    return EXIT_OK if ok else EXIT_IDENTITY


def _parse_kv(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--param expects k=v, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specflow", description="Spectral flow, odd Chern numbers and bifurcation certificates.")
    parser.add_argument("command", choices=COMMANDS + ("list",))
    parser.add_argument("--scenario", help="registry key, see 'specflow list'")
    parser.add_argument("--param", action="append", metavar="K=V", help="scenario parameter (repeatable)")
    parser.add_argument("--config", type=Path, help="JSON file with scenario, params, tolerances, seed, out")
    parser.add_argument("--out", type=Path, help="output directory (default specflow-out)")
    parser.add_argument("--seed", type=int, help="run seed (default 0)")
    for key in TOLERANCE_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", type=float, dest=key, help=f"override {key}")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge the optional JSON config with command-line flags; flags win."""
    base: dict[str, Any] = {}
    if args.config is not None:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise InputError("config file must hold a JSON object")
        extra = sorted(set(base) - {"command", "scenario", "params", "tolerances", "seed", "out"})
        if extra:
            raise InputError(f"unknown config key(s): {', '.join(extra)}")
    params = dict(base.get("params") or {})
    params.update(_parse_kv(args.param))
    tolerances = dict(base.get("tolerances") or {})
    for key in TOLERANCE_KEYS:
        if getattr(args, key) is not None:
            tolerances[key] = getattr(args, key)
    scenario = args.scenario or base.get("scenario")
    if not scenario:
        raise InputError("--scenario is required")
    out = args.out or Path(base.get("out", "specflow-out"))
    seed = args.seed if args.seed is not None else base.get("seed", 0)
    return RunConfig(args.command, scenario, params, tolerances, Path(out), seed)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command == "list":
        sys.stdout.write(list_scenarios())
        return EXIT_OK
    try:
        config = config_from_args(args)
    except InputError as exc:
        out = args.out or Path("specflow-out")
        _atomic_write(Path(out) / "report.json", render_report({"error": {"kind": exc.kind, "detail": str(exc)}}))
        print(f"specflow: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code = run(config)
    report = json.loads((config.output_dir / "report.json").read_text(encoding="utf-8"))
    if "error" in report:
        print(f"specflow: {report['error']['kind']}: {report['error']['detail']}", file=sys.stderr)
    else:
        print(f"{config.command} {config.scenario}: exit {code}, report in {config.output_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
