"""Pure-numpy GLM kernels (fallback when the compiled extension is unavailable).

Kind codes: 0 gaussian with fixed variance, 1 gaussian with ``rho = log
sigma^2`` as last coordinate, 2 binomial with logit link. ``D`` is the full
design matrix (intercept indicators included).
"""

import numpy as np

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _log1pexp(eta):
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def _expit(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def loglik(kind, y, D, theta, sigma2):
    q = D.shape[1]
    eta = D @ theta[:q]
    if kind == 2:
        return float(np.sum(y * eta - _log1pexp(eta)))
    if kind == 1:
        logs2 = theta[q]
    else:
        logs2 = np.log(sigma2)
    r = y - eta
    # exp(-rho) may overflow during a line search; -inf is the right answer then.
    with np.errstate(over="ignore", invalid="ignore"):
        return float(-len(y) * (_HALF_LOG_2PI + 0.5 * logs2) - 0.5 * np.sum(r * r) * np.exp(-logs2))


def loglik_grad_hess(kind, y, D, theta, sigma2):
    """Return ``(loglik, score, neg_hessian)`` in one pass."""
    n, q = D.shape
    eta = D @ theta[:q]
    if kind == 2:
        p = _expit(eta)
        ll = float(np.sum(y * eta - _log1pexp(eta)))
        grad = D.T @ (y - p)
        H = (D * (p * (1.0 - p))[:, None]).T @ D
    elif kind == 0:
        r = y - eta
        ll = float(-n * (_HALF_LOG_2PI + 0.5 * np.log(sigma2)) - 0.5 * np.sum(r * r) / sigma2)
        grad = D.T @ r / sigma2
        H = D.T @ D / sigma2
    else:
        rho = theta[q]
        with np.errstate(over="ignore"):
            w = np.exp(-rho)
        r = y - eta
        rss = float(np.sum(r * r))
        ll = float(-n * (_HALF_LOG_2PI + 0.5 * rho) - 0.5 * rss * w)
        Dr = D.T @ r
        grad = np.empty(q + 1)
        grad[:q] = Dr * w
        grad[q] = -0.5 * n + 0.5 * rss * w
        H = np.empty((q + 1, q + 1))
        H[:q, :q] = D.T @ D * w
        H[:q, q] = Dr * w
        H[q, :q] = Dr * w
        H[q, q] = 0.5 * rss * w
    H = 0.5 * (H + H.T)
    return ll, grad, H
