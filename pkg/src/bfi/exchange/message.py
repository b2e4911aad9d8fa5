"""Canonical text encoding of a center's local fit.

A message is a JSON document with a fixed key order. Matrices are flat
row-major lists; the prior precision may use ``{"diagonal": [...]}``
when it is diagonal. Floats are written in Python's shortest
round-trip form, so parsing restores every value bit for bit.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..combine.structure import natural_key
from ..glm.model import Family, ParamLayout
from ..mapfit import LocalFit, NotPositiveDefiniteError, check_curvature

SCHEMA_VERSION = 1
SYMMETRY_TOL = 1e-9


class FitMessageError(ValueError):
    """A message is malformed or fails validation."""


class CurvatureWarning(UserWarning):
    """A forced message carries a curvature that is not positive definite."""


def _floats(a, what):
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise FitMessageError(f"{what} contains non-finite values")
    return [float(v) for v in a]


def _mirror_upper(A):
    U = np.triu(A)
    return U + np.triu(A, 1).T


def _asymmetry(A) -> float:
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    return float(np.max(np.abs(A - A.T), initial=0.0)) / scale


def serialize_local_fit(fit: LocalFit) -> str:
    """Encode ``fit`` canonically; equal fits give byte-identical text."""
    lay = fit.layout
    d = lay.dim
    A = np.asarray(fit.A_hat, dtype=float)
    Lam = np.asarray(fit.Lambda, dtype=float)
    th = np.asarray(fit.theta_hat, dtype=float)
    if th.shape != (d,) or A.shape != (d, d) or Lam.shape != (d, d):
        raise FitMessageError("fit arrays do not match its layout dimension")
    if _asymmetry(A) > SYMMETRY_TOL:
        raise FitMessageError("A_hat is not symmetric")
    if _asymmetry(Lam) > SYMMETRY_TOL:
        raise FitMessageError("Lambda is not symmetric")
    A, Lam = _mirror_upper(A), _mirror_upper(Lam)
    if np.count_nonzero(Lam - np.diag(np.diag(Lam))) == 0:
        lam_doc = {"diagonal": _floats(np.diag(Lam), "Lambda")}
    else:
        lam_doc = {"dense": _floats(Lam, "Lambda")}
    gn = float(fit.gradient_norm)
    if not np.isfinite(gn):
        raise FitMessageError("gradient_norm is not finite")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "center_id": str(fit.center_id),
        "family": fit.family.tag,
        "layout": {
            "intercepts": list(lay.intercept_labels),
            "covariates": list(lay.covariates),
            "nuisance": int(lay.nuisance),
            "names": lay.names(),
        },
        "n": int(fit.n),
        "theta_hat": _floats(th, "theta_hat"),
        "A_hat": _floats(A, "A_hat"),
        "lambda": lam_doc,
        "converged": bool(fit.converged),
        "gradient_norm": gn,
        "iterations": int(fit.iterations),
        "stratified": [int(i) for i in fit.strat_hint],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def _field(doc, key, kind):
    if key not in doc:
        raise FitMessageError(f"missing field {key!r}")
    v = doc[key]
    if kind is float:
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    elif kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, kind)
    if not ok:
        raise FitMessageError(f"field {key!r} has the wrong type")
    return v


def _array(values, length, what):
    if not isinstance(values, list) or len(values) != length:
        got = len(values) if isinstance(values, list) else type(values).__name__
        raise FitMessageError(f"{what} has {got} entries, layout needs {length}")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise FitMessageError(f"{what} contains non-numeric entries")
    a = np.array(values, dtype=float)
    if not np.all(np.isfinite(a)):
        raise FitMessageError(f"{what} contains non-finite values")
    return a


def _reject_constant(name):
    raise FitMessageError(f"non-finite number {name} in message")


def deserialize_local_fit(text, force: bool = False) -> LocalFit:
    """Parse and validate a message.

    A curvature that is not positive definite raises
    :class:`~bfi.mapfit.NotPositiveDefiniteError` unless ``force`` is set,
    in which case a :class:`CurvatureWarning` is issued and the fit is
    returned.
    """
    raw = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    try:
        s = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FitMessageError(f"message is not UTF-8 (byte offset {exc.start})") from None
    try:
        doc = json.loads(s, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        offset = len(s[: exc.pos].encode("utf-8"))
        raise FitMessageError(f"parse error at byte offset {offset}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FitMessageError("message must be a JSON object")
    version = _field(doc, "schema_version", int)
    if version != SCHEMA_VERSION:
        raise FitMessageError(f"unsupported schema_version {version}; this reader supports {SCHEMA_VERSION}")
    center = _field(doc, "center_id", str)
    try:
        family = Family.from_tag(_field(doc, "family", str))
    except ValueError as exc:
        raise FitMessageError(str(exc)) from None
    ldoc = _field(doc, "layout", dict)
    intercepts = _field(ldoc, "intercepts", list)
    covariates = _field(ldoc, "covariates", list)
    nuisance = _field(ldoc, "nuisance", int)
    if not all(isinstance(x, str) for x in intercepts + covariates):
        raise FitMessageError("layout labels must be strings")
    if nuisance != family.nuisance_count:
        raise FitMessageError(f"layout nuisance count {nuisance} does not match family {family.tag}")
    try:
        layout = ParamLayout(tuple(intercepts), tuple(covariates), nuisance)
    except ValueError as exc:
        raise FitMessageError(str(exc)) from None
    if "names" in ldoc and ldoc["names"] != layout.names():
        raise FitMessageError("layout names disagree with intercepts/covariates/nuisance")
    d = layout.dim
    n = _field(doc, "n", int)
    if n < 1:
        raise FitMessageError("n must be at least 1")
    theta = _array(_field(doc, "theta_hat", list), d, "theta_hat")
    A = _array(_field(doc, "A_hat", list), d * d, "A_hat").reshape(d, d)
    lam_doc = _field(doc, "lambda", dict)
    if set(lam_doc) == {"diagonal"}:
        Lam = np.diag(_array(lam_doc["diagonal"], d, "lambda.diagonal"))
    elif set(lam_doc) == {"dense"}:
        Lam = _array(lam_doc["dense"], d * d, "lambda.dense").reshape(d, d)
    else:
        raise FitMessageError("lambda must hold exactly one of 'diagonal' or 'dense'")
    for M, what in ((A, "A_hat"), (Lam, "lambda")):
        asym = _asymmetry(M)
        if asym > SYMMETRY_TOL:
            raise FitMessageError(f"{what} is not symmetric (relative asymmetry {asym:.3g})")
    A, Lam = _mirror_upper(A), _mirror_upper(Lam)
    converged = _field(doc, "converged", bool)
    gnorm = float(_field(doc, "gradient_norm", float))
    iterations = int(doc.get("iterations", 0))
    strat = doc.get("stratified", [])
    if not isinstance(strat, list) or any(not isinstance(i, int) or not 0 <= i < d for i in strat):
        raise FitMessageError("stratified must list valid coordinate indices")
    for M, what in ((A, "A_hat"), (Lam, "lambda")):
        rep = check_curvature(M)
        if not rep.is_pd:
            msg = f"center {center}: {what} is not positive definite (min eigenvalue {rep.min_eigen_bound:.3g})"
            if not force:
                raise NotPositiveDefiniteError(msg + "; pass force to accept it")
            warnings.warn(msg, CurvatureWarning, stacklevel=2)
    return LocalFit(
        center_id=center,
        family=family,
        layout=layout,
        n=n,
        theta_hat=theta,
        A_hat=A,
        Lambda=Lam,
        converged=converged,
        gradient_norm=gnorm,
        iterations=iterations,
        strat_hint=tuple(strat),
    )


def write_fit(fit: LocalFit, path) -> None:
    Path(path).write_text(serialize_local_fit(fit), encoding="utf-8")


def read_fit(path, force: bool = False) -> LocalFit:
    try:
        return deserialize_local_fit(Path(path).read_bytes(), force=force)
    except FitMessageError as exc:
        raise FitMessageError(f"{path}: {exc}") from None


@dataclass
class CompatibilityReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_compatibility(fits) -> CompatibilityReport:
    """List every reason why ``fits`` cannot be combined (empty when they can)."""
    fits = list(fits)
    report = CompatibilityReport()
    if not fits:
        report.violations.append("no fits given")
        return report
    ref = fits[0]
    for f in fits[1:]:
        who = f"center {f.center_id}"
        if f.family != ref.family:
            report.violations.append(f"{who}: family {f.family.tag} differs from {ref.family.tag}")
        if tuple(f.layout.covariates) != tuple(ref.layout.covariates):
            if sorted(f.layout.covariates) == sorted(ref.layout.covariates):
                report.violations.append(f"{who}: covariate order {list(f.layout.covariates)} differs from {list(ref.layout.covariates)}")
            else:
                report.violations.append(f"{who}: covariates {list(f.layout.covariates)} differ from {list(ref.layout.covariates)}")
        if f.layout.nuisance != ref.layout.nuisance:
            report.violations.append(f"{who}: nuisance flag {f.layout.nuisance} differs from {ref.layout.nuisance}")
        if tuple(f.layout.intercept_labels) != tuple(ref.layout.intercept_labels):
            report.violations.append(f"{who}: intercept blocks differ")
    seen = {}
    for f in sorted(fits, key=lambda f: natural_key(f.center_id)):
        seen[f.center_id] = seen.get(f.center_id, 0) + 1
    for cid, count in seen.items():
        if count > 1:
            report.violations.append(f"duplicate center_id {cid!r} ({count} fits)")
    return report
