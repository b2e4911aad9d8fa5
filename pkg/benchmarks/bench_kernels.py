"""Compare the compiled and numpy GLM kernels.

Times one fused log-likelihood/score/curvature evaluation and one full
MAP fit per family and problem size, for every available backend.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from bfi.glm import Dataset, Family
from bfi.glm import kernels as K
from bfi.mapfit import build_prior, map_estimate

FAMILIES = {"gaussian_fixed": Family.gaussian_fixed(1.0), "gaussian": Family.gaussian(), "binomial": Family.binomial()}
SIZES = ((200, 4), (2000, 8), (20000, 16))


def make_data(family, n, p, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p - 1))
    eta = 0.3 + X @ rng.normal(scale=0.5, size=p - 1)
    if family.link == "logit":
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    else:
        y = eta + rng.normal(size=n)
    return Dataset(y, X)


def fit_with(backend, family, data, prior):
    saved = K.loglik, K.loglik_grad_hess
    K.loglik, K.loglik_grad_hess = backend.loglik, backend.loglik_grad_hess
    try:
        return map_estimate(family, data, prior)
    finally:
        K.loglik, K.loglik_grad_hess = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    print(f"backends: {', '.join(K.BACKENDS)}")
    print(f"{'family':>15} {'n':>6} {'d':>3} {'backend':>7} {'eval [us]':>11} {'fit [ms]':>9}")
    for fname, fam in FAMILIES.items():
        for n, p in SIZES:
            data = make_data(fam, n, p)
            D = data.design()
            lay = data.layout(fam)
            theta = np.full(lay.dim, 0.1)
            prior = build_prior(lay, 0.01)
            for bname, mod in K.BACKENDS.items():
                t_eval = min(timeit.repeat(lambda: mod.loglik_grad_hess(fam.code, data.y, D, theta, fam.sigma2 or 1.0),
                                           number=args.repeat, repeat=3)) / args.repeat
                t_fit = min(timeit.repeat(lambda: fit_with(mod, fam, data, prior), number=3, repeat=3)) / 3
                print(f"{fname:>15} {n:>6} {lay.dim:>3} {bname:>7} {t_eval * 1e6:>11.1f} {t_fit * 1e3:>9.2f}")


if __name__ == "__main__":
    main()
