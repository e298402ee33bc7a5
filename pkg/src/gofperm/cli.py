"""Command-line front end.

Subcommands::

    gofperm run      test a model fitted to a CSV file (or a bundled dataset)
    gofperm study    run a Monte-Carlo size/power study from a scenario JSON
    gofperm datasets list the bundled datasets

Failures exit nonzero and print ``{"error": ..., "message": ...}`` to
stderr.  Artifacts are written to temporary files and only moved into
place once all of them were produced.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .engine import STATISTICS, TestSpec, envelope, run_tests
from .exceptions import GofError, InvalidParams, MissingValue, ParseError, UnknownColumn
from .linreg import Dataset
from .nullgen import parse_method
from .process import parse_ordering
from .simlab import FAMILIES, ScenarioSpec, run_study

SCHEMA_VERSION = 1

BUNDLED = {
    "steam": ("steam.csv", "steam", ["days", "temperature"]),
}


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise InvalidParams(f"unknown bundled dataset {name!r}; have {sorted(BUNDLED)}", "dataset")
    return Path(str(resources.files("gofperm") / "data" / BUNDLED[name][0]))


def load_csv(path, response: str, covariates) -> Dataset:
    """Read a UTF-8 CSV with a header row into a :class:`Dataset`.

    An intercept column is prepended to the selected covariates and the
    row order is preserved.  Empty cells in selected columns raise
    :class:`MissingValue`; nothing is dropped silently.
    """
    covariates = list(covariates)
    wanted = [response] + covariates
    if len(set(wanted)) != len(wanted):
        raise InvalidParams("response and covariate columns must be distinct", "covariates")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for col in wanted:
            if col not in header:
                raise UnknownColumn(f"{path}: no column {col!r} (have {header})")
        pos = [header.index(c) for c in wanted]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            vals = []
            for col, j in zip(wanted, pos):
                cell = row[j].strip() if j < len(row) else ""
                if cell == "" or cell.upper() in ("NA", "NAN"):
                    raise MissingValue(f"{path}: missing value at line {lineno}, column {col!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: cannot parse {cell!r} at line {lineno}, column {col!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}: non-finite {cell!r} at line {lineno}, column {col!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return Dataset.from_covariates(arr[:, 0], arr[:, 1:].reshape(len(rows), -1), covariates)


# ------------------------------------------------------------------ #
# artifact writing
# ------------------------------------------------------------------ #


class _Artifacts:
    """Collects temp files and moves them into place on commit."""

    def __init__(self):
        self.pending: list[tuple[str, Path]] = []

    def open(self, target):
        target = Path(target)
        fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
        os.close(fd)
        self.pending.append((tmp, target))
        return tmp

    def commit(self):
        for tmp, target in self.pending:
            os.replace(tmp, target)
        self.pending.clear()

    def discard(self):
        for tmp, _ in self.pending:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
        self.pending.clear()


def write_trace_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("replicate_id,key,cum\n")
        for rid, k, c in zip(table["replicate_id"], table["key"], table["cum"]):
            fh.write(f"{int(rid)},{k:.17g},{c:.17g}\n")


def write_svg(results: dict, path, xlabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    first = next(iter(results.values()))
    fig, ax = plt.subplots(figsize=(6, 4))
    for proc in first.replicate_traces:
        ax.step(*_step_xy(proc), where="post", color="0.7", lw=0.5, alpha=0.5)
    ax.step(*_step_xy(first.observed_process), where="post", color="red", lw=1.5)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("W(t)")
    ax.set_title(", ".join(f"p({s.upper()}) = {r.p_value:.3f}" for s, r in results.items()))
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _step_xy(proc):
    x = np.concatenate([[proc.keys[0]], proc.keys])
    y = np.concatenate([[0.0], proc.cum])
    return x, y


# ------------------------------------------------------------------ #
# subcommands
# ------------------------------------------------------------------ #


def _statistics(arg: str) -> tuple[str, ...]:
    if arg == "both":
        return STATISTICS
    if arg not in STATISTICS:
        raise InvalidParams(f"statistic must be ks, cvm or both, got {arg!r}", "statistic")
    return (arg,)


def cmd_run(args) -> dict:
    if args.dataset:
        path = bundled_path(args.dataset)
        _, resp, covs = BUNDLED[args.dataset]
        response = args.response or resp
        covariates = args.covariates.split(",") if args.covariates else covs
    else:
        if not args.input:
            raise InvalidParams("either --input or --dataset is required", "input")
        if not (args.response and args.covariates):
            raise InvalidParams("--response and --covariates are required with --input", "response")
        path, response, covariates = args.input, args.response, args.covariates.split(",")
    covariates = [c.strip() for c in covariates]
    data = load_csv(path, response, covariates)
    ordering = parse_ordering(args.target, data.column_names)
    stats = _statistics(args.statistic)
    if args.perms < 1:
        raise InvalidParams("--perms must be >= 1", "perms")
    traces = args.traces
    if (args.trace_csv or args.svg) and traces == 0:
        traces = min(1000, args.perms)
    spec = TestSpec(
        ordering=ordering,
        statistic=stats[0],
        method=parse_method(args.method),
        n_perms=args.perms,
        master_seed=args.seed,
        collect_traces=traces,
        reorder_by_original=args.reorder_by_original,
    )
    results = run_tests(data, spec, stats)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "response": response,
        "covariates": covariates,
        "n": data.n,
        "p": data.p,
        "target": args.target,
        "method": args.method,
        "K": args.perms,
        "seed": args.seed,
        "statistics": {
            s: {"t_observed": r.t_observed, "p_value": r.p_value} for s, r in results.items()
        },
    }
    arts = _Artifacts()
    try:
        if args.json:
            with open(arts.open(args.json), "w") as fh:
                json.dump(summary, fh, indent=2)
                fh.write("\n")
        if args.trace_csv:
            write_trace_csv(envelope(next(iter(results.values()))), arts.open(args.trace_csv))
        if args.svg:
            write_svg(results, arts.open(args.svg), ordering.label(data.column_names))
        arts.commit()
    finally:
        arts.discard()
    return summary


def cmd_study(args) -> dict:
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as err:
        raise ParseError(f"{args.scenario}: invalid JSON ({err})") from None
    if not isinstance(cfg, dict):
        raise InvalidParams("scenario file must hold a JSON object", "scenario")
    scenario = ScenarioSpec.from_dict(cfg)
    test_cfg = cfg.get("test", {})
    target = args.target or test_cfg.get("target", "full")
    method = args.method or test_cfg.get("method", "perm")
    perms = args.perms or int(test_cfg.get("perms", 200))
    n_reps = args.reps or int(cfg.get("n_reps", 1000))
    alphas = (
        [float(a) for a in args.alphas.split(",")]
        if args.alphas
        else [float(a) for a in cfg.get("alphas", (0.01, 0.05, 0.1))]
    )
    k = FAMILIES[scenario.family][0]
    names = ("(Intercept)",) + tuple(f"x{j}" for j in range(1, k + 1))
    test = TestSpec(ordering=parse_ordering(target, names), method=parse_method(method), n_perms=perms)
    result = run_study(scenario, test, n_reps, alphas)
    summary = result.summary()
    arts = _Artifacts()
    try:
        if args.csv:
            result.to_csv(arts.open(args.csv))
        if args.json:
            result.to_json(arts.open(args.json))
        arts.commit()
    finally:
        arts.discard()
    return summary


def cmd_datasets(args) -> dict:
    return {
        name: {"file": str(bundled_path(name)), "response": r, "covariates": c}
        for name, (_, r, c) in BUNDLED.items()
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gofperm", description="Permutation goodness-of-fit tests for linear regression."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="test a linear model fitted to CSV data")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV file with a header row")
    src.add_argument("--dataset", help="bundled dataset name (see `gofperm datasets`)")
    run.add_argument("--response", help="response column")
    run.add_argument("--covariates", help="comma-separated covariate columns, in model order")
    run.add_argument("--target", default="full", help="full | covariate:<name> | subset:<a,b,...>")
    run.add_argument("--statistic", default="both", help="ks | cvm | both")
    run.add_argument("--method", default="perm", help="perm | rawperm | sw | wild[:mammen] | residboot")
    run.add_argument("--perms", type=int, default=10000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--traces", type=int, default=0, help="replicate processes to keep for plots")
    run.add_argument("--reorder-by-original", action="store_true",
                     help="order replicate residuals by the observed fit's keys")
    run.add_argument("--json", help="write result JSON here")
    run.add_argument("--trace-csv", help="write replicate_id,key,cum traces here")
    run.add_argument("--svg", help="write the envelope plot here")
    run.set_defaults(func=cmd_run)

    st = sub.add_parser("study", help="Monte-Carlo rejection-rate study")
    st.add_argument("scenario", help="scenario JSON file")
    st.add_argument("--reps", type=int)
    st.add_argument("--perms", type=int)
    st.add_argument("--alphas", help="comma-separated significance levels")
    st.add_argument("--target")
    st.add_argument("--method")
    st.add_argument("--csv", help="write rates CSV here")
    st.add_argument("--json", help="write summary JSON here")
    st.set_defaults(func=cmd_study)

    ds = sub.add_parser("datasets", help="list bundled datasets")
    ds.set_defaults(func=cmd_datasets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except (GofError, OSError) as err:
        payload = {"error": type(err).__name__, "message": str(err)}
        field = getattr(err, "field", None)
        if field:
            payload["field"] = field
        print(json.dumps(payload), file=sys.stderr)
        return 2 if isinstance(err, GofError) else 1
    print(json.dumps(out, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
