"""Command-line front end.

Subcommands: ``verify-identities``, ``clt``, ``expectation-scan``,
``conjecture-probe`` and ``tau-clt``.  Exit code 0 on success, 1 on a usage
error, 2 when the identity suite fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .montecarlo import (
    ExperimentConfig,
    ExperimentReport,
    conjecture_probe,
    expectation_scan,
    run_experiment,
)

__all__ = ["COMMANDS", "SAMPLES_HEADER", "RunManifest", "UsageError", "parse_args", "emit_report", "main"]

logger = logging.getLogger(__name__)

COMMANDS = ("verify-identities", "clt", "expectation-scan", "conjecture-probe", "tau-clt")
SAMPLES_HEADER = ["path_id", "h", "q", "r", "s_q", "r_qh", "t_q", "limit_scale", "limit_sample"]
FORMATS = ("csv", "json", "both")

# flag dest -> ExperimentConfig field
_FLAG_FIELDS = {
    "q": "q",
    "r": "r",
    "t": "t",
    "tau_start": "besq_start",
    "tau_extent": "tau_extent",
    "dt": "dt",
    "bin": "bin_width",
    "h": "h_list",
    "paths": "n_paths",
    "seed": "master_seed",
    "workers": "workers",
}
_FIXED_ONLY = {"t", "dt"}
_TAU_ONLY = {"besq_start", "tau_extent"}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: ExperimentConfig | None
    output_dir: Path
    format: str = "both"
    identity_paths: int = 100
    identity_seed: int = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _h_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --h list {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loctime", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out", default="loctime-out", help="output directory")
    common.add_argument("--format", choices=FORMATS, default="both")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    ident = sub.add_parser("verify-identities", parents=[common], help="exact identity suite")
    ident.add_argument("--paths", type=int, default=100, help="random paths per check")

    for name in COMMANDS[1:]:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", type=Path, help="flat JSON file of ExperimentConfig fields")
        p.add_argument("--q", type=int, default=argparse.SUPPRESS)
        p.add_argument("--r", type=int, default=argparse.SUPPRESS)
        p.add_argument("--t", type=float, default=argparse.SUPPRESS)
        p.add_argument("--dt", type=float, default=argparse.SUPPRESS)
        p.add_argument("--tau-start", type=float, default=argparse.SUPPRESS)
        p.add_argument("--tau-extent", type=float, default=argparse.SUPPRESS)
        p.add_argument("--bin", type=float, default=argparse.SUPPRESS)
        p.add_argument("--h", type=_h_list, default=argparse.SUPPRESS, help="comma-separated lags")
        p.add_argument("--paths", type=int, default=argparse.SUPPRESS)
        p.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"--config: {path} must hold a flat JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise UsageError(f"--config: unknown keys {unknown}")
    for key, value in data.items():
        if isinstance(value, (dict, list)) and key != "h_list":
            raise UsageError(f"--config: key {key!r} must be a scalar")
    return data


def parse_args(argv: list[str] | None = None) -> RunManifest:
    ns = _build_parser().parse_args(argv)
    out = Path(ns.out)
    if ns.command == "verify-identities":
        return RunManifest(ns.command, None, out, ns.format, ns.paths, getattr(ns, "seed", 0))

    mode = "tau" if ns.command == "tau-clt" else "fixed-time"
    values = _load_config_file(ns.config) if ns.config else {}
    if values.get("mode", mode) != mode:
        raise UsageError(f"config file mode {values['mode']!r} conflicts with command {ns.command}")
    given = {}
    for dest, key in _FLAG_FIELDS.items():
        if hasattr(ns, dest):
            given[key] = getattr(ns, dest)
    clash = (_TAU_ONLY if mode == "fixed-time" else _FIXED_ONLY) & set(given)
    if clash:
        flags = ", ".join("--" + d.replace("_", "-") for d, k in _FLAG_FIELDS.items() if k in clash)
        raise UsageError(f"{flags} conflicts with {mode} command {ns.command}")
    values.update(given)
    values["mode"] = mode
    if ns.command == "expectation-scan":
        values.setdefault("q", 2)
    if ns.command == "conjecture-probe":
        values.setdefault("q", 4)
    try:
        config = ExperimentConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))
    if ns.command == "expectation-scan" and (config.q != 2 or config.r != 0):
        raise UsageError("expectation-scan needs --q 2 --r 0")
    if ns.command == "conjecture-probe" and config.q < 4:
        raise UsageError("conjecture-probe needs --q >= 4")
    return RunManifest(ns.command, config, out, ns.format)


def _fmt(x: float) -> str:
    """Positional decimal with exactly 17 significant digits (no exponent)."""
    x = float(x)
    if x == 0.0:
        return "0.0"
    if not math.isfinite(x):
        return repr(x)
    mantissa, exp = f"{abs(x):.16e}".split("e")
    digits, e = mantissa.replace(".", ""), int(exp)
    if e >= 0:
        whole = digits[: e + 1].ljust(e + 1, "0")
        frac = digits[e + 1 :] or "0"
    else:
        whole, frac = "0", "0" * (-e - 1) + digits
    return ("-" if x < 0 else "") + whole + "." + frac


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _dump_json(obj, path: Path) -> None:
    text = json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8", newline="\n")


def summary_document(report: ExperimentReport) -> dict:
    return {
        "config": report.config.to_dict(),
        "master_seed": report.config.master_seed,
        "per_h": [asdict(s) for s in report.summaries],
        "path_seeds": list(report.seeds),
        "versions": {"loctime": __version__, "numpy": np.__version__},
    }


def emit_report(report: ExperimentReport, manifest: RunManifest, extra: dict | None = None) -> list[Path]:
    """Write ``samples.csv`` and/or ``summary.json`` into ``manifest.output_dir``."""
    out = manifest.output_dir
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if manifest.format in ("csv", "both"):
            path = out / "samples.csv"
            cfg = report.config
            limit = report.limit_sample
            with path.open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(SAMPLES_HEADER)
                for row, pid in enumerate(report.path_ids):
                    for j, h in enumerate(cfg.h_list):
                        writer.writerow([
                            int(pid), _fmt(h), cfg.q, cfg.r,
                            _fmt(report.s_q[row, j]), _fmt(report.r_qh[row, j]),
                            _fmt(report.t_q[row, j]), _fmt(report.limit_scale[row, j]),
                            _fmt(limit[row, j]),
                        ])
            written.append(path)
        if manifest.format in ("json", "both"):
            doc = summary_document(report)
            if extra:
                doc.update(extra)
            path = out / "summary.json"
            _dump_json(doc, path)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {exc.filename or out}: {exc.strerror or exc}") from exc
    return written


def _write_table(rows: list, path: Path) -> None:
    dicts = [asdict(r) for r in rows]
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dicts[0]))
        for d in dicts:
            writer.writerow([_fmt(v) for v in d.values()])


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = parse_args(argv)
    except UsageError as exc:
        print(f"loctime: usage error: {exc}", file=sys.stderr)
        return 1

    if manifest.command == "verify-identities":
        from .verification import run_identity_suite

        results = run_identity_suite(n_paths=manifest.identity_paths, seed=manifest.identity_seed)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
        _dump_json({"checks": [asdict(r) for r in results]}, manifest.output_dir / "identities.json")
        return 0 if all(r.passed for r in results) else 2

    config = manifest.config
    report = run_experiment(config)
    extra = {}
    if manifest.command == "expectation-scan":
        rows = expectation_scan(config, report)
        extra["expectation"] = [asdict(r) for r in rows]
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
        _write_table(rows, manifest.output_dir / "expectation.csv")
    elif manifest.command == "conjecture-probe":
        rows = conjecture_probe(config, report)
        extra["probe"] = [asdict(r) for r in rows]
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
        _write_table(rows, manifest.output_dir / "probe.csv")
    for path in emit_report(report, manifest, extra):
        print(path)
    for s in report.summaries:
        print(f"h={s.h:g} ks={s.ks_stat:.4f} var_ratio={s.var_ratio:.4f} mean_T={s.mean_T:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
