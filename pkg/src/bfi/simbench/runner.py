"""Monte Carlo replications of a scenario."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..combine.rules import combine
from ..glm.data import Dataset
from ..inference import single_center_estimate, upper_quantile, wav_estimate
from ..mapfit import NotPositiveDefiniteError, build_prior, map_estimate
from . import rng as _rng
from .scenarios import Scenario

log = logging.getLogger(__name__)

ESTIMATORS = ("bfi", "wav", "single", "combined")


def generate_center_data(scenario: Scenario, center_index: int, rep: int, seed: int = 0) -> Dataset:
    """Data of one center in one replicate; a pure function of its arguments."""
    if not 0 <= center_index < scenario.L:
        raise IndexError(f"center index {center_index} out of range for L={scenario.L}")
    n = scenario.n[center_index]
    g = _rng.generator(seed, rep, center_index, _rng.COVARIATES)
    X = np.column_stack([s.draw(g, n) for s in scenario.specs[center_index]])
    th = scenario.local_theta(center_index)
    eta = th[0] + X @ th[1 : 1 + len(scenario.coefs)]
    h = _rng.generator(seed, rep, center_index, _rng.OUTCOMES)
    if scenario.family.link == "logit":
        y = (h.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    else:
        s2 = scenario.family.sigma2 if scenario.family.sigma2 is not None else scenario.sigma2
        y = eta + np.sqrt(s2) * h.standard_normal(n)
    return Dataset(y, X, scenario.covariates, center_id=scenario.center_ids[center_index])


@dataclass
class RepResult:
    """Estimates of one replicate, all in the combined layout.

    ``single`` is None when the single-center estimator is undefined
    (center- or cluster-specific parameters).
    """

    rep: int
    names: list[str]
    truth: np.ndarray
    bfi: np.ndarray | None = None
    bfi_sd: np.ndarray | None = None
    wav: np.ndarray | None = None
    single: np.ndarray | None = None
    combined: np.ndarray | None = None
    failed: bool = False
    reason: str = ""

    def estimate(self, tag: str):
        if tag not in ESTIMATORS:
            raise KeyError(f"unknown estimator {tag!r}; choose from {ESTIMATORS}")
        return getattr(self, tag)


def pooled_dataset(scenario: Scenario, data) -> Dataset:
    """All centers' data with intercept blocks matching the combined layout."""
    lay = scenario.combined_layout()
    st = scenario.structure()
    y = np.concatenate([d.y for d in data])
    X = np.vstack([d.X for d in data])
    if not lay.specific:
        return Dataset(y, X, scenario.covariates, center_id="pooled")
    labels = tuple(lay.names()[lay.group_slice(g)][0] for g in lay.groups)
    groups = np.concatenate([np.full(d.n, lay.groups.index(st.group_of(d.center_id))) for d in data])
    return Dataset(y, X, scenario.covariates, center_id="pooled", intercept_labels=labels, groups=groups)


def run_replication(scenario: Scenario, rep: int, seed: int = 0, single_center=None) -> RepResult:
    """Fit every center, combine, and fit the pooled data for reference."""
    lay = scenario.combined_layout()
    names = lay.names()
    out = RepResult(rep, names, scenario.truth())
    fam = scenario.family
    local_layout = scenario.local_layout()
    data = [generate_center_data(scenario, c, rep, seed) for c in range(scenario.L)]
    fits = []
    for c, d in enumerate(data):
        fit = map_estimate(fam, d, build_prior(local_layout, scenario.lam[c]))
        if not fit.converged:
            out.failed, out.reason = True, f"center {d.center_id} did not converge"
        fits.append(fit)
    st = scenario.structure()
    n_groups = len(lay.groups)
    lam_c = scenario.combined_lambda
    prior_c = build_prior(local_layout, lam_c, strat=st.specific or None, n_groups=n_groups or None,
                          mode="clustered" if scenario.mode == "clustered" else None)
    try:
        res = combine(fits, prior_c, st)
        out.bfi, out.bfi_sd = res.theta, res.sd
    except NotPositiveDefiniteError as exc:
        out.failed, out.reason = True, f"combine failed: {exc}"
    out.wav = wav_estimate(fits, st)
    if not st.specific:
        out.single = single_center_estimate(fits, None, single_center)

    pooled = pooled_dataset(scenario, data)
    com = map_estimate(fam, pooled, np.eye(pooled.layout(fam).dim) * lam_c)
    if not com.converged:
        out.failed, out.reason = True, "pooled fit did not converge"
    pos = {nm: i for i, nm in enumerate(com.layout.names())}
    out.combined = com.theta_hat[[pos[nm] for nm in names]]
    if out.failed:
        log.warning("replicate %d flagged: %s", rep, out.reason)
    return out


def _run_chunk(args):
    scenario, reps, seed, single_center = args
    return [run_replication(scenario, r, seed, single_center) for r in reps]


def run_scenario(scenario: Scenario, B: int, seed: int = 0, workers: int | None = None,
                 single_center=None) -> list[RepResult]:
    """``B`` replicates, returned in ascending replicate order.

    With ``workers > 1`` replicates run in a process pool; the output is
    identical to a serial run because every replicate owns its streams.
    """
    if B < 1:
        raise ValueError("need at least one replicate")
    reps = list(range(B))
    if not workers or workers <= 1:
        results = _run_chunk((scenario, reps, seed, single_center))
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = ex.map(_run_chunk, [(scenario, ch, seed, single_center) for ch in chunks if ch])
            results = [r for part in parts for r in part]
    return sorted(results, key=lambda r: r.rep)


@dataclass
class CoverageResult:
    names: list[str]
    coverage: np.ndarray
    B_used: int
    B_failed: int


def coverage_from_results(results, alpha: float = 0.025) -> CoverageResult:
    xi = upper_quantile(alpha)
    ok = [r for r in results if not r.failed]
    if not ok:
        raise ValueError("no usable replicates")
    hits = np.array([np.abs(r.bfi - r.truth) <= xi * r.bfi_sd for r in ok], dtype=float)
    return CoverageResult(list(ok[0].names), hits.mean(axis=0), len(ok), len(results) - len(ok))


def coverage_experiment(scenario: Scenario, B: int, alpha: float = 0.025, seed: int = 0,
                        workers: int | None = None) -> CoverageResult:
    """Fraction of replicates whose BFI credible interval covers the truth."""
    return coverage_from_results(run_scenario(scenario, B, seed, workers), alpha)
