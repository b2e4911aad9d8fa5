import numpy as np
import pytest

from bfi.glm import Family, kernels
from bfi.glm import _kernels_py
from helpers import simulate

compiled = kernels.BACKENDS.get("cython")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

FAMILIES = [Family.gaussian_fixed(0.8), Family.gaussian(), Family.binomial()]


def _args(fam, n, p, seed):
    rng = np.random.default_rng(seed)
    d = simulate(fam, n, p, rng)
    theta = rng.normal(scale=0.5, size=d.layout(fam).dim)
    return fam.code, d.y, d.design(), theta, fam.sigma2 or 1.0


class TestBackendSelection:
    def test_active_backend_is_registered(self):
        assert kernels.BACKEND in kernels.BACKENDS

    def test_numpy_fallback_always_available(self):
        assert kernels.BACKENDS["numpy"] is _kernels_py


@needs_compiled
class TestCompiledParity:
    @pytest.mark.parametrize("fam", FAMILIES)
    @pytest.mark.parametrize("n,p", [(1, 0), (1, 3), (17, 2), (500, 6)])
    def test_loglik(self, fam, n, p):
        args = _args(fam, n, p, n * 7 + p)
        a, b = compiled.loglik(*args), _kernels_py.loglik(*args)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("fam", FAMILIES)
    @pytest.mark.parametrize("n,p", [(1, 0), (1, 3), (17, 2), (500, 6)])
    def test_fused(self, fam, n, p):
        args = _args(fam, n, p, n * 11 + p)
        ll_c, g_c, H_c = compiled.loglik_grad_hess(*args)
        ll_p, g_p, H_p = _kernels_py.loglik_grad_hess(*args)
        assert ll_c == pytest.approx(ll_p, rel=1e-12, abs=1e-12)
        scale = max(1.0, np.abs(H_p).max())
        np.testing.assert_allclose(g_c, g_p, rtol=1e-11, atol=1e-11 * scale)
        np.testing.assert_allclose(H_c, H_p, rtol=1e-11, atol=1e-11 * scale)
        assert np.array_equal(H_c, H_c.T)

    def test_extreme_linear_predictor(self):
        fam = Family.binomial()
        y = np.array([0.0, 1.0])
        D = np.array([[1.0, 800.0], [1.0, -800.0]])
        theta = np.array([0.0, 1.0])
        ll_c, g_c, H_c = compiled.loglik_grad_hess(fam.code, y, D, theta, 1.0)
        ll_p, g_p, H_p = _kernels_py.loglik_grad_hess(fam.code, y, D, theta, 1.0)
        assert np.isfinite(ll_c) and ll_c == pytest.approx(ll_p, rel=1e-14)
        np.testing.assert_allclose(g_c, g_p, rtol=1e-14)
        np.testing.assert_allclose(H_c, H_p, atol=1e-300)
