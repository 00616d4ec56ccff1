"""Command-line interface: ``python3 -m nlfreg <command> ...``.

Predictor files are CSV with a header row ``id,<name>,...`` and numeric
Euclidean coordinates.  Response files are binned histograms (``edges``
header) or raw samples (one row ``id,v1,...,vm`` per subject).
Exit status: 0 success, 1 numerical failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import ingest_binned, loo_predict, residual_maps
from .errors import ConvergenceError, DegenerateSampleError, FrechetError, ParseError
from .kernel import EPSILON_GRID, KernelSpec
from .metric import ProbGrid, empirical_quantiles
from .regression import fit, gcv_tune, predict_many
from .simulate import ScenarioSpec, run_scenario

log = logging.getLogger("nlfreg")


class UsageError(Exception):
    pass


def _epsilon(text):
    if text == "gcv":
        return text
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive number or 'gcv'") from None
    if not val > 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return val


def _positive_int(text):
    val = int(text)
    if val < 2:
        raise argparse.ArgumentTypeError("must be an integer >= 2")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--grid-size", type=_positive_int, default=100, metavar="M",
                        help="probability grid size for quantile objects")
    common.add_argument("--epsilon", type=_epsilon, default="gcv",
                        help="regularization constant, or 'gcv' to tune")
    common.add_argument("--kernel", choices=("gaussian", "laplacian", "linear"), default="gaussian")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--predictors", required=True, help="CSV: id,x1,...,xp")
    data.add_argument("--responses", required=True, help="binned or samples CSV")
    data.add_argument("--response-format", choices=("binned", "samples"), default="binned")

    p = argparse.ArgumentParser(prog="nlfreg", description="Nonlinear global Frechet regression.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common, data], help="fit and print a JSON model summary")
    pr = sub.add_parser("predict", parents=[common, data], help="predict quantiles at new predictors")
    pr.add_argument("--new", required=True, help="CSV of new predictors: id,x1,...,xp")
    sub.add_parser("tune", parents=[common, data], help="emit the GCV table")
    sim = sub.add_parser("simulate", parents=[common], help="run a scenario and emit an MPE report")
    sim.add_argument("--config", help="scenario file with 'key = value' lines "
                                      "(default: bundled Model I.1 setting)")
    sim.add_argument("--replicates", type=int, default=None, help="override B")
    sub.add_parser("residuals", parents=[common, data],
                   help="leave-one-out fits and residual transport maps")
    return p


# ---------------------------------------------------------------------------
# file reading


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def read_predictors(path):
    rows = [r for r in csv.reader(io.StringIO(_read(path))) if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: line 1: need a header and at least one row")
    width = len(rows[0])
    ids, X = [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise ParseError(f"{path}: line {lineno}: expected {width} fields, got {len(r)}")
        try:
            X.append([float(v) for v in r[1:]])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        ids.append(r[0])
    return ids, np.array(X)


def read_responses(path, fmt, grid):
    if fmt == "binned":
        if not Path(path).exists():
            raise UsageError(f"cannot read {path}: no such file")
        return ingest_binned(path, grid)
    ids, objs = [], []
    for lineno, r in enumerate(csv.reader(io.StringIO(_read(path))), start=1):
        if not r:
            continue
        try:
            vals = np.array([float(v) for v in r[1:] if v.strip()])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        if vals.size == 0:
            raise ParseError(f"{path}: line {lineno}: row {r[0]!r} is empty")
        ids.append(r[0])
        objs.append(empirical_quantiles(vals, grid))
    return ids, objs


def _load_pair(args, grid):
    pid, X = read_predictors(args.predictors)
    rid, Y = read_responses(args.responses, args.response_format, grid)
    if pid != rid:
        raise ParseError("predictor and response files list different subject ids (or order)")
    return pid, X, Y


def _kernel(args):
    return KernelSpec(args.kernel)


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args, grid):
    ids, X, Y = _load_pair(args, grid)
    model = fit(list(X), Y, _kernel(args), args.epsilon)
    summary = {
        "n": model.n,
        "kernel": model.kernel.kind,
        "gamma": model.kernel.gamma,
        "epsilon": model.epsilon,
        "grid_size": len(grid),
        "effective_df": model.gram.hat_trace(),
        "gcv_table": [row.__dict__ for row in model.gcv_table],
    }
    return json.dumps(summary, indent=2, default=float) + "\n"


def _quantile_csv(ids, objs, grid):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", *(f"u={_fmt(u)}" for u in grid.points)])
    for i, q in zip(ids, objs):
        w.writerow([i, *(_fmt(v) for v in q.values)])
    return buf.getvalue()


def cmd_predict(args, grid):
    _, X, Y = _load_pair(args, grid)
    new_ids, Xnew = read_predictors(args.new)
    if Xnew.shape[1] != X.shape[1]:
        raise ParseError(f"{args.new}: expected {X.shape[1]} predictor columns, got {Xnew.shape[1]}")
    model = fit(list(X), Y, _kernel(args), args.epsilon)
    return _quantile_csv(new_ids, predict_many(model, list(Xnew)), grid)


def cmd_tune(args, grid):
    _, X, Y = _load_pair(args, grid)
    model = fit(list(X), Y, _kernel(args), EPSILON_GRID[0])
    best, rows = gcv_tune(model, EPSILON_GRID)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "mean_sq_error", "trace", "denominator", "gcv", "selected"])
    for r in rows:
        w.writerow([_fmt(r.epsilon), _fmt(r.mean_sq_error), _fmt(r.trace), _fmt(r.denominator),
                    _fmt(r.gcv), int(r.epsilon == best)])
    return buf.getvalue()


def bundled_config() -> str:
    return resources.files("nlfreg").joinpath("data/model_I1.cfg").read_text()


def cmd_simulate(args, grid):
    text = _read(args.config) if args.config else bundled_config()
    try:
        spec = ScenarioSpec.from_config(text)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{args.config or 'bundled config'}: {exc}") from None
    overrides = {"grid_size": len(grid)}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replicates is not None:
        overrides["B"] = args.replicates
    from dataclasses import replace

    try:
        spec = replace(spec, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return run_scenario(spec).to_csv()


def cmd_residuals(args, grid):
    ids, X, Y = _load_pair(args, grid)
    loo = loo_predict(list(X), Y, _kernel(args), args.epsilon)
    a, maps, mean = residual_maps(Y, loo.predictions)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["abscissa", "identity", "mean_map", *ids])
    for j in range(a.size):
        w.writerow([_fmt(a[j]), _fmt(a[j]), _fmt(mean[j]), *(_fmt(v) for v in maps[:, j])])
    return buf.getvalue()


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "tune": cmd_tune,
    "simulate": cmd_simulate,
    "residuals": cmd_residuals,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        grid = ProbGrid.midpoint(args.grid_size)
        text = COMMANDS[args.command](args, grid)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text)
    except (UsageError, ParseError) as exc:
        print(f"nlfreg: input error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateSampleError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"nlfreg: numerical error: {exc}", file=sys.stderr)
        return 1
    except (FrechetError, ValueError) as exc:
        print(f"nlfreg: invalid data: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nlfreg: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
