"""Command line runner.

    rtnlab run --config exp.toml [--seed S] [--trials N] [--threads T] [--out DIR] [--kmax K] [--dry-run]
    rtnlab predict --config exp.toml
    rtnlab oracle --config exp.toml
    rtnlab metric-check [--config exp.toml] [--kmax K] [--seed S]

Exit codes: 0 all tolerances met, 1 tolerance failure, 2 bad config, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRecord,
    oracle_check,
    predict,
    run_experiment,
)
from .netgraph import CutCeilingExceeded
from .replicaoracle import BudgetExceeded
from .rtncore import DimensionOverflowError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
N_QUANTILES = 1000


def read_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    # graph paths are relative to the config file
    g = data.get("graph")
    if isinstance(g, str) and not g.lstrip().startswith("{"):
        gp = Path(g)
        if not gp.is_absolute():
            data["graph"] = str((path.parent / gp).resolve())
    return data


def _config_from_args(args, default_kind: str | None = None) -> ExperimentConfig:
    data = read_config(args.config) if args.config else {}
    if default_kind and "kind" not in data:
        data["kind"] = default_kind
    for key in ("seed", "trials", "threads", "kmax", "out"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if "graph" in data and isinstance(data["graph"], str) and not data["graph"].lstrip().startswith("{"):
        if not Path(data["graph"]).exists():
            raise ConfigError(f"graph file not found: {data['graph']}")
    return ExperimentConfig.from_dict(data)


def _header(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.provenance(), sort_keys=True)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_outputs(rec: ResultRecord, cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(cfg)

    (out / "results.json").write_text(json.dumps(rec.to_dict(), sort_keys=True, indent=2, default=str) + "\n")

    buf = io.StringIO()
    buf.write(f"# config: {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["D", "k", "measured", "stderr", "target", "target_exact"])
    for row in rec.moments:
        w.writerow([row.get("D", ""), row.get("k"), _fmt(row.get("measured")), _fmt(row.get("stderr")), _fmt(row.get("target")), row.get("target_exact", "")])
    (out / "moments.csv").write_text(buf.getvalue())

    buf = io.StringIO()
    buf.write(f"# config: {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    probs = (np.arange(N_QUANTILES) + 0.5) / N_QUANTILES
    cols, series = ["probability"], [probs]
    if rec.histogram is not None:
        cols.append("position")
        series.append(rec.histogram.quantiles(probs))
    if rec.target_histogram is not None:
        cols.append("target_position")
        series.append(rec.target_histogram.quantiles(probs))
    w.writerow(cols)
    if len(series) > 1:
        for vals in zip(*series):
            w.writerow([repr(float(v)) for v in vals])
    (out / "histogram.csv").write_text(buf.getvalue())

    lines = [f"# config: {header}", f"kind: {rec.kind}", f"seed: {cfg.seed}", ""]
    for c in rec.comparisons:
        se = "" if c.stderr is None else f" se={c.stderr:.4g}"
        lines.append(
            f"{'PASS' if c.passed else 'FAIL'}  {c.name}: measured={c.measured:.6g} target={c.target:.6g}{se} ({c.mode}, tol={c.tolerance})"
        )
    for note in rec.notes:
        lines.append(f"note: {note}")
    for key in sorted(rec.extra):
        if key != "reports":
            lines.append(f"{key}: {rec.extra[key]}")
    if "reports" in rec.extra:
        for i, rep in enumerate(rec.extra["reports"]):
            lines.append(
                f"spectrum {i}: triples={rep['n_triples']} violations={rep['violations']} "
                f"equality_mismatches={rep['equality_mismatches']} max_violation={rep['max_violation']:.3g}"
            )
    lines.append("")
    lines.append("overall: " + ("PASS" if rec.passed else "FAIL"))
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtnlab", description="Random tensor network spectra experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "Monte Carlo experiment with comparison to exact predictions"),
        ("predict", "exact predictions only"),
        ("oracle", "replica-trick oracle values, optionally checked by Monte Carlo"),
        ("metric-check", "triangle inequality check of the spectral metric on S_k"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=name not in ("metric-check",))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out")
        sp.add_argument("--kmax", type=int)
        sp.add_argument("--dry-run", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "metric-check":
            cfg = _config_from_args(args, "metric-check")
            if args.kmax is not None:
                cfg.degree = args.kmax
        else:
            cfg = _config_from_args(args)
        if args.command == "oracle" and cfg.kind != "oracle-check":
            cfg.kind = "oracle-check"
            cfg.validate()
        if args.dry_run:
            print(f"config ok: kind={cfg.kind} seed={cfg.seed}")
            return EXIT_OK
        if args.command == "predict":
            rec = predict(cfg)
        elif args.command == "oracle":
            rec = oracle_check(cfg, predict_only=args.trials is None)
        else:
            rec = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, DimensionOverflowError, CutCeilingExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = write_outputs(rec, cfg)
    print((out / "report.txt").read_text(), end="")
    return EXIT_OK if rec.passed else EXIT_TOLERANCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
