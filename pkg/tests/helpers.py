"""Random problem generators and independent oracles shared by the tests."""

from __future__ import annotations

import numpy as np

from bfi.combine import StructureSpec
from bfi.glm import Dataset, Family
from bfi.mapfit import LocalFit, build_prior, map_estimate


def simulate(family: Family, n: int, p: int, rng, center_id="c1", beta=None, intercept=0.3):
    """Dataset with ``p`` standard-normal covariates."""
    X = rng.normal(size=(n, p))
    beta = rng.normal(scale=0.7, size=p) if beta is None else np.asarray(beta, float)
    eta = intercept + X @ beta
    if family.link == "logit":
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    else:
        s2 = family.sigma2 if family.sigma2 is not None else 1.3
        y = eta + np.sqrt(s2) * rng.normal(size=n)
    return Dataset(y, X, center_id=center_id)


def ridge(D, y, sigma2, Lam):
    """Closed-form MAP of a linear model with known variance: (D'D/s2 + Lam)^-1 D'y/s2."""
    return np.linalg.solve(D.T @ D / sigma2 + Lam, D.T @ y / sigma2)


def random_structure(rng, mode, L, d):
    """Structure plus the center -> group map used to build pooled designs."""
    ids = [f"c{i + 1}" for i in range(L)]
    if mode == "homogeneous":
        return ids, StructureSpec.homogeneous(), {c: None for c in ids}
    k = int(rng.integers(1, min(2, d - 1) + 1))
    coords = tuple(sorted(rng.choice(d, size=k, replace=False).tolist()))
    if mode == "stratified":
        return ids, StructureSpec.stratified(coords), {c: c for c in ids}
    K = int(rng.integers(1, L + 1))
    labels = list(range(1, K + 1)) + rng.integers(1, K + 1, size=L - K).tolist()
    rng.shuffle(labels)
    cmap = dict(zip(ids, labels))
    return ids, StructureSpec.clustered(cmap, coords), cmap


def combined_prior_diag(rng, structure, local_dim, groups):
    """Random positive diagonal for the combined layout (shared block, then each group)."""
    shared = local_dim - len(structure.specific)
    return np.diag(rng.uniform(0.05, 2.0, size=shared + len(groups) * len(structure.specific)))


def fit_centers(family, data, lam_values):
    fits = []
    for d, lam in zip(data, lam_values):
        lay = d.layout(family)
        fits.append(map_estimate(family, d, build_prior(lay, lam)))
    return fits


def pooled_design(data, structure, group_of, groups):
    """Pooled design in the combined layout, built column by column.

    Shared local columns are stacked over all centers. Each group gets its
    own copy of every specific column, zero outside that group's rows.
    """
    Ds = [d.design() for d in data]
    q = Ds[0].shape[1]
    spec = list(structure.specific)
    shared = [j for j in range(q) if j not in spec]
    blocks = []
    for d, D in zip(data, Ds):
        row = [D[:, shared]]
        for g in groups:
            row.append(D[:, spec] if group_of[d.center_id] == g else np.zeros((d.n, len(spec))))
        blocks.append(np.hstack(row))
    return np.vstack(blocks)


def gaussian_instance(rng, mode, L=None, p=None, sigma2=None):
    """Random known-variance problem plus its pooled ridge solution in the combined layout."""
    L = int(rng.integers(1, 6)) if L is None else L
    p = int(rng.integers(1, 8)) if p is None else p  # local dim = p + 1 <= 8
    sigma2 = float(rng.uniform(0.3, 3.0)) if sigma2 is None else sigma2
    fam = Family.gaussian_fixed(sigma2)
    ids, st, gmap = random_structure(rng, mode, L, p + 1)
    data = [simulate(fam, int(rng.integers(p + 3, 60)), p, rng, cid, intercept=rng.normal()) for cid in ids]
    fits = fit_centers(fam, data, rng.uniform(0.01, 1.0, size=L))
    groups = _groups(st, ids)
    Lam = combined_prior_diag(rng, st, p + 1, groups)
    D = pooled_design(data, st, gmap, groups)
    y = np.concatenate([d.y for d in data])
    return fits, st, Lam, ridge(D, y, sigma2, Lam)


def _groups(st, ids):
    """Group labels in combined-layout order (ids here are c1..c5, so plain sort is natural)."""
    if not st.specific:
        return ()
    if st.mode == "stratified":
        return tuple(sorted(ids, key=lambda c: int(c[1:])))
    return tuple(sorted(set(st.cluster_of_center.values())))


def logistic_instance(rng, mode, L=None, p=None):
    L = int(rng.integers(2, 6)) if L is None else L
    p = int(rng.integers(1, 6)) if p is None else p
    fam = Family.binomial()
    ids, st, _ = random_structure(rng, mode, L, p + 1)
    data = [simulate(fam, int(rng.integers(40, 200)), p, rng, cid, intercept=rng.normal(scale=0.5)) for cid in ids]
    fits = fit_centers(fam, data, rng.uniform(0.01, 1.0, size=L))
    Lam = combined_prior_diag(rng, st, p + 1, _groups(st, ids))
    return fits, st, Lam


def random_fit(rng, d=None, family=None) -> LocalFit:
    """Arbitrary (not necessarily fitted) message content with an SPD curvature."""
    from bfi.glm import ParamLayout

    family = family or [Family.binomial(), Family.gaussian(), Family.gaussian_fixed(float(rng.uniform(0.1, 5)))][
        int(rng.integers(0, 3))
    ]
    d = int(rng.integers(1, 8)) if d is None else d
    n_cov = d - 1 - family.nuisance_count
    if n_cov < 0:
        n_cov, d = 0, 1 + family.nuisance_count
    layout = ParamLayout(covariates=tuple(f"v{j}" for j in range(n_cov)), nuisance=family.nuisance_count)
    d = layout.dim
    scale = 10.0 ** rng.uniform(-3, 3)
    M = rng.normal(size=(d, d)) * scale
    A = M @ M.T + np.eye(d) * scale
    A = 0.5 * (A + A.T)
    lam = rng.uniform(1e-4, 10, size=d)
    Lam = np.diag(lam) if rng.random() < 0.7 else _spd(rng, d)
    return LocalFit(
        center_id=f"site-{int(rng.integers(0, 10**6))}",
        family=family,
        layout=layout,
        n=int(rng.integers(1, 10**6)),
        theta_hat=rng.normal(size=d) * 10.0 ** rng.uniform(-5, 5, size=d),
        A_hat=A,
        Lambda=Lam,
        converged=bool(rng.random() < 0.9),
        gradient_norm=float(10.0 ** rng.uniform(-16, -8)),
        iterations=int(rng.integers(0, 100)),
    )


def _spd(rng, d):
    M = rng.normal(size=(d, d))
    S = M @ M.T + d * np.eye(d)
    return 0.5 * (S + S.T)


def fits_equal(a: LocalFit, b: LocalFit) -> bool:
    """Field-for-field equality with bitwise comparison of float arrays."""
    same_arrays = all(
        np.asarray(x).tobytes() == np.asarray(y).tobytes() and np.asarray(x).shape == np.asarray(y).shape
        for x, y in ((a.theta_hat, b.theta_hat), (a.A_hat, b.A_hat), (a.Lambda, b.Lambda))
    )
    return (
        same_arrays
        and a.center_id == b.center_id
        and a.family == b.family
        and a.layout == b.layout
        and a.n == b.n
        and a.converged == b.converged
        and np.float64(a.gradient_norm).tobytes() == np.float64(b.gradient_norm).tobytes()
        and a.iterations == b.iterations
        and tuple(a.strat_hint) == tuple(b.strat_hint)
    )
