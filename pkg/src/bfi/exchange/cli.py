"""Command-line driver: ``bfi fit``, ``bfi combine`` and ``bfi simulate``.

Centers run ``fit`` on their own data and ship the resulting message file;
the coordinating site runs ``combine`` once on all received files. Moving
the files between sites is left to the user.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ..combine.rules import combine
from ..combine.structure import CombinedLayout, StructureSpec
from ..glm.model import Family
from ..inference import credible_intervals, largest_center, single_center_estimate, wav_estimate
from ..mapfit import NotPositiveDefiniteError, build_prior, check_curvature, map_estimate
from ..simbench import full_grid, get_scenario, run_scenario, summarize, write_csv
from .csvio import dataset_from_csv
from .message import FitMessageError, read_fit, validate_compatibility, write_fit


class CliError(Exception):
    pass


def _split(text):
    return [t.strip() for t in str(text).split(",") if t.strip() != ""]


def _coord(tok):
    return int(tok) if tok.lstrip("-").isdigit() else tok


def _parse_levels(items):
    levels = {}
    for item in items or ():
        if "=" not in item:
            raise CliError(f"--levels expects col=level1|level2|..., got {item!r}")
        col, lv = item.split("=", 1)
        levels[col.strip()] = [v.strip() for v in lv.split("|")]
    return levels


def _parse_lambda(text):
    try:
        vals = [float(v) for v in _split(text)]
    except ValueError:
        raise CliError(f"--lambda must be a number, a comma-separated list or a file, got {text!r}") from None
    if not vals:
        raise CliError("--lambda is empty")
    return vals


# -- fit -------------------------------------------------------------------------


def cmd_fit(args) -> int:
    try:
        family = Family.from_tag(args.family)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    data = dataset_from_csv(args.data, args.outcome, _split(args.covariates), args.center_id, _parse_levels(args.levels))
    layout = data.layout(family)
    lam = _parse_lambda(args.__dict__["lambda"])
    prior = build_prior(layout, lam if len(lam) > 1 else lam[0])
    fit = map_estimate(family, data, prior)
    if args.stratified_intercept:
        fit.strat_hint = (0,)
    write_fit(fit, args.out)
    if not fit.converged:
        print(f"warning: fit for center {fit.center_id} did not converge "
              f"(gradient norm {fit.gradient_norm:.3g}); written with converged=false", file=sys.stderr)
        return 3
    return 0


# -- combine -----------------------------------------------------------------------


def _read_labels(path):
    labels = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            row = [c.strip() for c in row]
            if not row or not any(row):
                continue
            if len(row) < 2:
                raise CliError(f"{path}: each line needs center_id,cluster")
            center, lab = row[0], row[1]
            if not labels and not lab.lstrip("-").isdigit() and center.lower() in ("center", "center_id"):
                continue  # header
            labels[center] = int(lab) if lab.lstrip("-").isdigit() else lab
    if not labels:
        raise CliError(f"{path}: no cluster labels")
    return labels


def _structure(mode, fits):
    if mode is None:
        hints = {f.strat_hint for f in fits}
        if len(hints) == 1 and next(iter(hints)):
            return StructureSpec.stratified(next(iter(hints)))
        return StructureSpec.homogeneous()
    if mode == "homogeneous":
        return StructureSpec.homogeneous()
    kind, _, rest = mode.partition(":")
    lay = fits[0].layout
    if kind == "stratified":
        coords = [lay.index(_coord(t)) for t in _split(rest or "0")]
        return StructureSpec.stratified(coords) if coords else StructureSpec.homogeneous()
    if kind == "clustered":
        if not rest:
            raise CliError("clustered mode needs a label file: clustered:<file>")
        return StructureSpec.clustered(_read_labels(rest), (0,))
    raise CliError(f"unknown mode {mode!r}")


def _combined_prior(text, fits, structure):
    lay = CombinedLayout.build(fits[0].layout.names(), structure, [f.center_id for f in fits])
    if os.path.exists(text):
        M = np.loadtxt(text, delimiter=None if not text.endswith(".csv") else ",", ndmin=1)
        if M.ndim == 2 and M.shape[0] == M.shape[1] and M.shape[0] == lay.dim:
            return M
        vec = M.reshape(-1)
    else:
        vec = np.array(_parse_lambda(text))
    local = fits[0].layout
    n_groups = len(lay.groups) or None
    mode = "clustered" if structure.mode == "clustered" else None
    try:
        return build_prior(local, vec if vec.size > 1 else vec[0], strat=structure.specific or None,
                           n_groups=n_groups, mode=mode).Lambda
    except ValueError as exc:
        raise CliError(f"--lambda: {exc}") from None


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def cmd_combine(args) -> int:
    paths = _split(args.fits)
    if not paths:
        raise CliError("--fits is empty")
    fits = [read_fit(p, force=args.force) for p in paths]
    report = validate_compatibility(fits)
    if not report.ok:
        for v in report.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2
    bad = [f.center_id for f in fits if not f.converged]
    if bad and not args.force:
        raise CliError(f"fits from centers {bad} did not converge; pass --force to combine them anyway")
    structure = _structure(args.mode, fits)
    Lam = _combined_prior(args.__dict__["lambda"], fits, structure)
    result = combine(fits, Lam, structure)
    ints = credible_intervals(result, args.alpha)
    single = None
    if not structure.specific:
        cid = largest_center(fits, args.single_center)
        single = {"center": cid, "theta": _floats(single_center_estimate(fits, structure, cid))}
    rep = check_curvature(result.A)
    doc = {
        "schema_version": 1,
        "mode": structure.mode,
        "family": result.family.tag,
        "centers": result.centers,
        "n": result.n,
        "names": result.names,
        "theta_bfi": _floats(result.theta),
        "sd": _floats(result.sd),
        "A_bfi": _floats(result.A),
        "intervals": [
            {"name": iv.name, "estimate": iv.estimate, "lo": iv.lo, "hi": iv.hi, "level": iv.level} for iv in ints
        ],
        "wav": _floats(wav_estimate(fits, structure)),
        "single_center": single,
        "diagnostics": {
            "curvature_pd": rep.is_pd,
            "min_eigen_bound": rep.min_eigen_bound,
            "condition_estimate": rep.condition_estimate,
            "nonconverged_centers": bad,
            "local_gradient_norms": {f.center_id: float(f.gradient_norm) for f in fits},
            "alpha": args.alpha,
        },
    }
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return 0


# -- simulate ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        base = get_scenario(args.scenario)
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    if args.full:
        scenarios = list(full_grid(args.scenario))
    else:
        sc = base
        if args.n:
            sc = sc.with_n([int(v) for v in _split(args.n)])
        if args.__dict__["lambda"] or args.lambda_combined:
            lam = _parse_lambda(args.__dict__["lambda"]) if args.__dict__["lambda"] else list(sc.lam)
            sc = sc.with_lambda(lam, args.lambda_combined)
        scenarios = [sc]
    rows = []
    for sc in scenarios:
        results = run_scenario(sc, args.reps, args.seed, args.workers, args.single_center)
        rows += summarize(sc.name, results)
        failed = sum(r.failed for r in results)
        if failed:
            print(f"{sc.name}: {failed} of {len(results)} replicates failed and were excluded", file=sys.stderr)
    write_csv(rows, args.out)
    return 0


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bfi", description="One-shot federated inference for GLMs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit one center's data and write its message file")
    f.add_argument("--data", required=True, help="CSV file with a header row")
    f.add_argument("--outcome", required=True)
    f.add_argument("--covariates", default="", help="comma-separated covariate columns")
    f.add_argument("--family", required=True, help="gaussian | gaussian-fixed:<s2> | binomial")
    f.add_argument("--lambda", required=True, help="prior precision: one value or one per coordinate")
    f.add_argument("--stratified-intercept", action="store_true",
                   help="mark the intercept as center-specific for the combine step")
    f.add_argument("--center-id", required=True)
    f.add_argument("--levels", action="append", help="declare categorical levels: col=ref|b|c (repeatable)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("combine", help="combine message files into one estimate")
    c.add_argument("--fits", required=True, help="comma-separated message files")
    c.add_argument("--lambda", required=True, help="combined prior precision: value, list, or file")
    c.add_argument("--mode", default=None, help="homogeneous | stratified:<coords> | clustered:<labelfile>")
    c.add_argument("--alpha", type=float, default=0.025)
    c.add_argument("--single-center", default=None, help="center used by the single-center estimate")
    c.add_argument("--force", action="store_true", help="accept non-PD or non-converged fits")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_combine)

    s = sub.add_parser("simulate", help="run a simulation design and write MSE summaries")
    s.add_argument("--scenario", required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--n", default=None, help="per-center sample sizes (comma-separated)")
    s.add_argument("--lambda", default=None, help="per-center prior precision (one value or one per center)")
    s.add_argument("--lambda-combined", type=float, default=None)
    s.add_argument("--single-center", default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--full", action="store_true", help="run every sample-size and prior setting of the design")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CliError, FitMessageError, NotPositiveDefiniteError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
