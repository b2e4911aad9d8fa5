import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfi.combine import (
    BfiAccumulator,
    CombinedLayout,
    IncompatibleFitsError,
    QuadraticSurrogate,
    StructureSpec,
    combine,
    combine_clustered,
    combine_homogeneous,
    combine_stratified,
    fit_center_covariate,
    natural_key,
    surrogate_for,
)
from bfi.glm import Family
from bfi.mapfit import LocalFit, NotPositiveDefiniteError, build_prior, map_estimate
from helpers import fit_centers, gaussian_instance, logistic_instance, simulate

MODES = ["homogeneous", "stratified", "clustered"]


def _logistic_fits(L=3, p=2, seed=0, lam=0.1):
    rng = np.random.default_rng(seed)
    fam = Family.binomial()
    data = [simulate(fam, 80, p, rng, f"c{i + 1}") for i in range(L)]
    return fit_centers(fam, data, [lam] * L)


def _shuffled(fits, rng):
    return [fits[i] for i in rng.permutation(len(fits))]


class TestNaturalKey:
    def test_numeric_order(self):
        assert sorted(["c10", "c2", "c1"], key=natural_key) == ["c1", "c2", "c10"]
        assert sorted(["10", "9", "1"], key=natural_key) == ["1", "9", "10"]


class TestCombinedLayout:
    def test_stratified_names(self):
        lay = CombinedLayout.build(["(Intercept)", "x"], StructureSpec.stratified([0]), ["c2", "c10", "c1"])
        assert lay.names() == ["x", "(Intercept)[c1]", "(Intercept)[c2]", "(Intercept)[c10]"]
        assert lay.local_to_combined("c2") == [2, 0]

    def test_clustered_names(self):
        st_ = StructureSpec.clustered({"a": 2, "b": 1, "c": 2})
        lay = CombinedLayout.build(["(Intercept)", "x"], st_)
        assert lay.names() == ["x", "(Intercept)[1]", "(Intercept)[2]"]

    def test_homogeneous(self):
        lay = CombinedLayout.build(["(Intercept)", "x"], StructureSpec.homogeneous(), ["a"])
        assert lay.names() == ["(Intercept)", "x"] and lay.dim == 2


class TestStructureSpec:
    def test_homogeneous_cannot_have_specific(self):
        with pytest.raises(ValueError):
            StructureSpec("homogeneous", (0,))

    def test_clustered_needs_map(self):
        with pytest.raises(ValueError):
            StructureSpec("clustered", (0,))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            StructureSpec("random_effects")

    def test_unlabelled_center(self):
        with pytest.raises(KeyError):
            StructureSpec.clustered({"a": 1}).group_of("b")


class TestHomogeneous:
    def test_single_fit_is_returned(self):
        (fit,) = _logistic_fits(L=1)
        res = combine_homogeneous([fit], fit.Lambda)
        np.testing.assert_allclose(res.theta, fit.theta_hat, rtol=1e-13, atol=1e-14)
        np.testing.assert_array_equal(res.A, fit.A_hat)

    def test_identical_fits(self):
        (fit,) = _logistic_fits(L=1)
        twin = LocalFit(**{**fit.__dict__, "center_id": "c2"})
        res = combine_homogeneous([fit, twin], 2 * fit.Lambda)
        np.testing.assert_allclose(res.theta, fit.theta_hat, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(res.A, 2 * fit.A_hat, rtol=1e-14)

    def test_pooled_ridge_three_centers(self):
        rng = np.random.default_rng(1)
        fits, st_, Lam, pooled = gaussian_instance(rng, "homogeneous", L=3)
        np.testing.assert_allclose(combine(fits, Lam, st_).theta, pooled, rtol=0, atol=1e-8)

    def test_sd_positive(self):
        fits = _logistic_fits(L=4)
        res = combine_homogeneous(fits, fits[0].Lambda)
        assert np.all(res.sd > 0)
        np.testing.assert_allclose(res.sd, np.sqrt(np.diag(np.linalg.inv(res.A))), rtol=1e-12)


class TestStratified:
    def test_single_fit(self):
        (fit,) = _logistic_fits(L=1)
        res = combine_stratified([fit], fit.Lambda[np.ix_([1, 2, 0], [1, 2, 0])], [0])
        np.testing.assert_allclose(res.theta, fit.theta_hat[[1, 2, 0]], rtol=1e-12, atol=1e-14)

    def test_empty_specific_set_is_homogeneous(self):
        fits = _logistic_fits(L=3, seed=2)
        a = combine_stratified(fits, fits[0].Lambda, [])
        b = combine_homogeneous(fits, fits[0].Lambda)
        np.testing.assert_allclose(a.theta, b.theta, rtol=0, atol=1e-10)

    def test_small_instance_matches_dense_solve(self):
        fits = _logistic_fits(L=3, p=3, seed=3)
        st_ = StructureSpec.stratified([0])
        Lam = build_prior(fits[0].layout, 0.1, strat=[0], n_groups=3).Lambda
        res = combine(fits, Lam, st_)
        oracle = QuadraticSurrogate(fits, Lam, res.layout, st_).maximizer()
        np.testing.assert_allclose(res.theta, oracle, rtol=0, atol=1e-10)

    def test_pooled_dummy_design(self):
        rng = np.random.default_rng(4)
        fits, st_, Lam, pooled = gaussian_instance(rng, "stratified", L=4)
        np.testing.assert_allclose(combine(fits, Lam, st_).theta, pooled, rtol=0, atol=1e-8)

    def test_group_values(self):
        fits = _logistic_fits(L=3, seed=5)
        Lam = build_prior(fits[0].layout, 0.1, strat=[0], n_groups=3).Lambda
        res = combine_stratified(fits, Lam, [0])
        vals = res.group_values(0)
        assert list(vals) == ["c1", "c2", "c3"]
        assert vals["c2"] == res.theta[res.index("(Intercept)[c2]")]


class TestClustered:
    def test_one_cluster_is_homogeneous(self):
        fits = _logistic_fits(L=4, seed=6)
        a = combine_clustered(fits, fits[0].Lambda, {f.center_id: 1 for f in fits}, K=1)
        b = combine_homogeneous(fits, fits[0].Lambda)
        assert a.names[-1] == "(Intercept)[1]"
        np.testing.assert_allclose(a.theta[[2, 0, 1]], b.theta, rtol=0, atol=1e-10)
        np.testing.assert_allclose(a.A[np.ix_([2, 0, 1], [2, 0, 1])], b.A, rtol=1e-14)

    def test_one_cluster_per_center_is_stratified(self):
        fits = _logistic_fits(L=4, seed=7)
        Lam = build_prior(fits[0].layout, 0.1, strat=[0], n_groups=4).Lambda
        a = combine_clustered(fits, Lam, {f"c{i}": i for i in range(1, 5)}, K=4)
        b = combine_stratified(fits, Lam, [0])
        np.testing.assert_allclose(a.theta, b.theta, rtol=0, atol=1e-10)

    def test_small_instance_matches_dense_solve(self):
        fits = _logistic_fits(L=4, seed=8)
        cmap = {"c1": 1, "c2": 2, "c3": 2, "c4": 1}
        Lam = build_prior(fits[0].layout, 0.1, strat=[0], n_groups=2, mode="clustered").Lambda
        res = combine_clustered(fits, Lam, cmap, K=2)
        oracle = QuadraticSurrogate(fits, Lam, res.layout, res.structure).maximizer()
        np.testing.assert_allclose(res.theta, oracle, rtol=0, atol=1e-10)

    def test_empty_cluster(self):
        fits = _logistic_fits(L=2, seed=9)
        with pytest.raises(ValueError, match="empty cluster"):
            combine_clustered(fits, np.eye(5), {"c1": 1, "c2": 3}, K=3)

    def test_label_outside_range(self):
        fits = _logistic_fits(L=2, seed=9)
        with pytest.raises(ValueError):
            combine_clustered(fits, np.eye(4), {"c1": 1, "c2": 5}, K=2)

    def test_unlabelled_center(self):
        fits = _logistic_fits(L=2, seed=9)
        with pytest.raises(ValueError, match="without cluster label"):
            combine_clustered(fits, np.eye(4), {"c1": 1})

    def test_label_for_absent_center_is_empty_cluster(self):
        fits = _logistic_fits(L=2, seed=9)
        st_ = StructureSpec.clustered({"c1": 1, "c2": 1, "c9": 2})
        with pytest.raises(ValueError, match="empty cluster"):
            combine(fits, np.eye(4), st_)


@pytest.mark.parametrize("mode", MODES)
class TestProperties:
    def test_exact_on_quadratic_posteriors(self, mode):
        rng = np.random.default_rng(10)
        for _ in range(15):
            fits, st_, Lam, pooled = gaussian_instance(rng, mode)
            np.testing.assert_allclose(combine(fits, Lam, st_).theta, pooled, rtol=0, atol=1e-8)

    def test_surrogate_stationary(self, mode):
        rng = np.random.default_rng(11)
        for _ in range(15):
            fits, st_, Lam = logistic_instance(rng, mode)
            res = combine(fits, Lam, st_)
            sur = surrogate_for(res, fits, Lam)
            assert np.max(np.abs(sur.gradient(res.theta))) < 1e-8
            np.testing.assert_allclose(sur.hessian(), res.A, rtol=1e-12, atol=1e-12 * np.abs(res.A).max())

    def test_permutation_invariance(self, mode):
        rng = np.random.default_rng(12)
        for _ in range(10):
            fits, st_, Lam = logistic_instance(rng, mode)
            a = combine(fits, Lam, st_)
            b = combine(_shuffled(fits, rng), Lam, st_)
            assert np.array_equal(a.theta, b.theta) and np.array_equal(a.A, b.A)

    def test_incremental_update(self, mode):
        rng = np.random.default_rng(13)
        for _ in range(10):
            fits, st_, Lam = logistic_instance(rng, mode, L=4)
            acc = BfiAccumulator(st_)
            for f in fits[:2]:
                acc.add(f)
            first = acc.result(Lam) if mode == "homogeneous" else None
            for f in fits[2:]:
                acc.add(f)
            late = acc.result(Lam)
            full = combine(fits, Lam, st_)
            np.testing.assert_allclose(late.theta, full.theta, rtol=0, atol=1e-12 * max(1, np.abs(full.theta).max()))
            if first is not None:
                assert not np.allclose(first.theta, full.theta)


class TestErrors:
    def test_empty(self):
        with pytest.raises(ValueError, match="no fits"):
            combine([], np.eye(2))

    def test_family_mismatch(self):
        rng = np.random.default_rng(14)
        a = map_estimate(Family.binomial(), d := simulate(Family.binomial(), 30, 1, rng, "a"),
                         build_prior(d.layout(Family.binomial()), 1.0))
        g = Family.gaussian_fixed(1.0)
        b = map_estimate(g, e := simulate(g, 30, 1, rng, "b"), build_prior(e.layout(g), 1.0))
        with pytest.raises(IncompatibleFitsError, match="family"):
            combine([a, b], np.eye(2))

    def test_layout_mismatch(self):
        rng = np.random.default_rng(15)
        fam = Family.binomial()
        a = map_estimate(fam, d := simulate(fam, 30, 1, rng, "a"), build_prior(d.layout(fam), 1.0))
        b = map_estimate(fam, e := simulate(fam, 30, 2, rng, "b"), build_prior(e.layout(fam), 1.0))
        with pytest.raises(IncompatibleFitsError, match="layout"):
            combine([a, b], np.eye(2))

    def test_duplicate_center(self):
        (fit,) = _logistic_fits(L=1)
        with pytest.raises(IncompatibleFitsError, match="duplicate"):
            combine([fit, fit], fit.Lambda)

    def test_prior_dimension(self):
        fits = _logistic_fits(L=2)
        with pytest.raises(ValueError, match="dimension"):
            combine(fits, np.eye(4))

    def test_non_block_diagonal_prior(self):
        fits = _logistic_fits(L=2)
        Lam = np.eye(4)
        Lam[0, 2] = Lam[2, 0] = 0.1
        with pytest.raises(ValueError, match="block diagonal"):
            combine(fits, Lam, StructureSpec.stratified([0]))

    def test_non_pd_names_direction(self):
        # each local prior exceeds its curvature along the intercept
        fits = []
        for f in _logistic_fits(L=2):
            Lam = f.A_hat.copy()
            Lam[0, 0] += 10.0
            fits.append(LocalFit(**{**f.__dict__, "Lambda": Lam}))
        with pytest.raises(NotPositiveDefiniteError, match=r"smallest eigenvalue .* '\(Intercept\)'"):
            combine(fits, 1e-3 * np.eye(3))

    def test_specific_out_of_range(self):
        fits = _logistic_fits(L=2)
        with pytest.raises(ValueError):
            combine(fits, np.eye(3), StructureSpec.stratified([5]))


class TestFitCenterCovariate:
    def test_collinear(self):
        assert fit_center_covariate([2.0, 4.0, 6.0], [1.0, 2.0, 3.0]) == (0.0, 2.0)

    def test_constant(self):
        with pytest.raises(ValueError, match="constant center covariate"):
            fit_center_covariate([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])

    def test_too_few(self):
        with pytest.raises(ValueError):
            fit_center_covariate([1.0], [2.0])

    def test_dict_input(self):
        nu0, nu1 = fit_center_covariate({"a": 1.0, "b": 3.0}, {"a": 0.0, "b": 1.0})
        assert (nu0, nu1) == (1.0, 2.0)

    def test_normal_equations(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            z, b = rng.normal(size=10), rng.normal(size=10)
            X = np.column_stack([np.ones(10), z])
            ref = np.linalg.solve(X.T @ X, X.T @ b)
            np.testing.assert_allclose(fit_center_covariate(b, z), ref, rtol=0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from(MODES))
def test_exactness_property(seed, mode):
    fits, st_, Lam, pooled = gaussian_instance(np.random.default_rng(seed), mode)
    np.testing.assert_allclose(combine(fits, Lam, st_).theta, pooled, rtol=0, atol=1e-8 * max(1, np.abs(pooled).max()))
