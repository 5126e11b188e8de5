"""Command-line entry point.

Exit codes: 0 on success, 1 on runtime errors (I/O, parse, numerics),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .calibration import DEFAULT_GRID_STEPS, DEFAULT_N, AutoExtent, ClassifierKind, Metric, Scope
from .core import InputError, ThresholdMap, evaluate
from .data_io import (
    REPORT_EXTRA,
    REPORT_HEADER,
    ParseError,
    SyntheticSpec,
    generate_split,
    load_scored_triples,
    render_report_markdown,
    report_rows,
    write_report_csv,
    write_scored_triples,
)
from .experiments import MethodConfig, load_sweep_config, run_n_ablation, run_sweep
from .kernels import KernelSpec

_SELECT_FLAG = {"random": "rndm", "density": "dens", "uncertainty": "unc", "dwu": "dwu"}


class ThresholdFileError(InputError):
    pass


# --- threshold files -------------------------------------------------------


def format_threshold(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_threshold_file(thresholds: ThresholdMap, path) -> None:
    lines = [f"#default\t{format_threshold(thresholds.default)}\n"]
    for rel in sorted(thresholds.per_relation, key=lambda r: r.encode("utf-8")):
        lines.append(f"{rel}\t{format_threshold(thresholds.per_relation[rel])}\n")
    text = "".join(lines)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _parse_threshold_value(tok: str, line_no: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise ThresholdFileError(f"threshold file line {line_no}: bad value {tok!r}") from None
    if math.isnan(value):
        raise ThresholdFileError(f"threshold file line {line_no}: NaN threshold")
    return value


def read_threshold_file(path) -> ThresholdMap:
    default = 0.0
    per_relation: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ThresholdFileError(f"threshold file line {line_no}: expected 2 columns")
            if cols[0] == "#default":
                if line_no != 1:
                    raise ThresholdFileError("#default must be the first line")
                default = _parse_threshold_value(cols[1], line_no)
                continue
            if cols[0].startswith("#") or not cols[0]:
                raise ThresholdFileError(f"threshold file line {line_no}: bad relation {cols[0]!r}")
            if cols[0] in per_relation:
                raise ThresholdFileError(f"threshold file line {line_no}: duplicate relation {cols[0]!r}")
            per_relation[cols[0]] = _parse_threshold_value(cols[1], line_no)
    return ThresholdMap(per_relation, default)


# --- commands --------------------------------------------------------------


def _kernel_from_args(args) -> KernelSpec:
    return KernelSpec(kind=args.kernel, length_scale=args.length_scale, nu=args.nu, alpha=args.alpha)


def method_from_args(args) -> MethodConfig:
    if args.method != "actc":
        label = args.method + ("-uni" if args.scope == "uniform" and args.method != "global-f1" else "")
        return MethodConfig.parse(label, grid_steps=args.grid_steps)
    parts = ["actc", args.classifier, _SELECT_FLAG[args.select]]
    if args.metric == "f1":
        parts.append("f1")
    if args.scope == "uniform":
        parts.append("uni")
    if args.labels == "soft":
        parts.append("soft")
    if args.auto == "all":
        parts.append("all")
    if args.strict_pseudocode:
        parts.append("strict")
    return MethodConfig.parse("-".join(parts), _kernel_from_args(args), args.inv_reg_c,
                              args.grid_steps, args.density_order)


def cmd_calibrate(args) -> int:
    dataset = load_scored_triples(args.calib)
    method = method_from_args(args)
    thresholds, n_warn = method.calibrate(dataset, args.budget, args.n, args.seed)
    write_threshold_file(thresholds, args.out)
    if n_warn:
        print(f"{n_warn} warning(s) during calibration", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    thresholds = read_threshold_file(args.thresholds)
    dataset = load_scored_triples(args.test)
    m = evaluate(thresholds, dataset)
    print(f"Acc {m.accuracy * 100:.1f} F1 {m.f1 * 100:.1f}")
    if args.csv:
        path = Path(args.csv)
        new = not path.exists() or path.stat().st_size == 0
        with open(path, "a", encoding="utf-8") as fh:
            if new:
                fh.write("accuracy,f1,tp,fp,tn,fn\n")
            fh.write(f"{m.accuracy:.6f},{m.f1:.6f},{m.tp},{m.fp},{m.tn},{m.fn}\n")
    return 0


def _ratio(pos: int, neg: int) -> str:
    if pos == 0 or neg == 0:
        return f"{pos}:{neg}"
    r = Fraction(pos, neg)
    return f"{r.numerator}:{r.denominator}"


def cmd_inspect(args) -> int:
    dataset = load_scored_triples(args.file)
    labeled = int(dataset.is_labeled.sum())
    pos = int((dataset.labels & dataset.is_labeled).sum())
    print(f"triples: {len(dataset)}")
    print(f"relations: {len(dataset.relations)}")
    print(f"labeled: {labeled}")
    print(f"unlabeled: {len(dataset) - labeled}")
    print(f"positive:negative: {_ratio(pos, labeled - pos)}")
    return 0


def cmd_sweep(args) -> int:
    cfg, raw = load_sweep_config(args.config)
    base = Path(args.config).parent
    calib = args.calib or (base / raw["calibration"] if "calibration" in raw else None)
    test = args.test or (base / raw["test"] if "test" in raw else None)
    if calib is None or test is None:
        raise InputError("sweep needs calibration and test files (config keys or --calib/--test)")
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    report = (run_n_ablation if args.ablation == "n" else run_sweep)(cfg, calib, test)
    if args.format == "md":
        text = render_report_markdown(report)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    elif args.out:
        write_report_csv(report, args.out)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(REPORT_HEADER + REPORT_EXTRA)
        writer.writerows(report_rows(report))
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticSpec.uniform(
        args.relations, args.pos, args.neg, args.mu_pos, args.mu_neg, args.sigma, args.seed
    )
    calib, test, info = generate_split(spec)
    prefix = Path(args.prefix)
    write_scored_triples(calib, f"{prefix}.calib.tsv")
    write_scored_triples(test, f"{prefix}.test.tsv")
    bayes = next(iter(info.accuracies.values()))
    print(f"wrote {prefix}.calib.tsv and {prefix}.test.tsv; Bayes accuracy {bayes * 100:.1f}")
    return 0


# --- parser ----------------------------------------------------------------


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("calibration")
    g.add_argument("--method", choices=["actc", "local-acc", "local-f1", "global-f1"], default="actc")
    g.add_argument("--budget", type=int, default=10, help="annotation budget (default 10)")
    g.add_argument("--n", type=int, default=DEFAULT_N, help=f"minimal decision-set size (default {DEFAULT_N})")
    g.add_argument("--scope", choices=[s.value for s in Scope], default="relation")
    g.add_argument("--metric", choices=[m.value for m in Metric], default="acc")
    g.add_argument("--auto", choices=[a.value for a in AutoExtent], default="topup",
                   help="auto-label a top-up to n, or the whole unlabeled pool")
    g.add_argument("--grid-steps", type=int, default=DEFAULT_GRID_STEPS, help="GlobalOpt grid size")
    g.add_argument("--seed", type=int, default=12345)
    g.add_argument("--strict-pseudocode", action="store_true",
                   help="search thresholds over gold points only, first strict maximum")
    s = p.add_argument_group("selection")
    s.add_argument("--select", choices=list(_SELECT_FLAG), default="random")
    s.add_argument("--density-order", choices=["max", "min"], default="max")
    c = p.add_argument_group("classifier")
    c.add_argument("--classifier", choices=[k.value for k in ClassifierKind], default="lr")
    c.add_argument("--kernel", choices=["rbf", "matern", "rq"], default="matern")
    c.add_argument("--length-scale", type=float, default=0.1)
    c.add_argument("--nu", type=float, default=1.5, help="Matern smoothness (default 1.5)")
    c.add_argument("--alpha", type=float, default=1.0, help="RationalQuadratic mixture (default 1.0)")
    c.add_argument("--labels", choices=["hard", "soft"], default="hard")
    c.add_argument("--inv-reg-c", type=float, default=100.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threshcal", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="estimate thresholds from a labeled calibration file", allow_abbrev=False)
    p.add_argument("calib", help="scored-triple TSV whose labels act as the oracle")
    p.add_argument("-o", "--out", default="-", help="threshold file to write (default stdout)")
    _add_method_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="score a labeled test file against a threshold file", allow_abbrev=False)
    p.add_argument("thresholds")
    p.add_argument("test")
    p.add_argument("--csv", help="append a metrics row to this CSV file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a budget sweep from a key = value config", allow_abbrev=False)
    p.add_argument("--config", required=True)
    p.add_argument("--calib", help="overrides the config's calibration key")
    p.add_argument("--test", help="overrides the config's test key")
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("--ablation", choices=["none", "n"], default="none", help="'n' runs the n-ablation")
    p.add_argument("--workers", type=int, help="parallel worker processes (default: THRESHCAL_THREADS or CPU count)")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic calibration/test TSV pair", allow_abbrev=False)
    p.add_argument("prefix", help="output prefix; writes PREFIX.calib.tsv and PREFIX.test.tsv")
    p.add_argument("--relations", type=int, default=42)
    p.add_argument("--pos", type=int, default=50, help="positives per relation")
    p.add_argument("--neg", type=int, default=50, help="negatives per relation")
    p.add_argument("--mu-pos", type=float, default=2.0)
    p.add_argument("--mu-neg", type=float, default=-2.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=12345)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="print dataset statistics", allow_abbrev=False)
    p.add_argument("file")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, InputError, ParseError, ArithmeticError, RuntimeError) as exc:
        print(f"threshcal: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
