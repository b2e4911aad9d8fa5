"""Direct assembly of the quadratic surrogate of the pooled log posterior.

Each center's log likelihood is replaced by its local quadratic
approximation::

    log p(D_l | t) ~ -1/2 (t - th_l)' A_l (t - th_l) + 1/2 t' Lam_l t + const

and the combined log posterior in the combined layout ``theta`` is::

    Omega(theta) = sum_l [-1/2 (P_l theta - th_l)' A_l (P_l theta - th_l)
                          + 1/2 (P_l theta)' Lam_l (P_l theta)]
                   - 1/2 theta' Lam theta

where ``P_l`` selects center ``l``'s local coordinates from ``theta``.
This module builds ``P_l`` explicitly and solves the dense normal
equations. It does not share code with the blockwise solver in
:mod:`bfi.combine.rules` and serves as an independent check of it.
"""

from __future__ import annotations

import numpy as np

from .structure import CombinedLayout, StructureSpec


def selection_matrix(layout: CombinedLayout, structure: StructureSpec, center_id) -> np.ndarray:
    """``P_l`` with ``P_l[i, j] = 1`` when local coordinate ``i`` is combined coordinate ``j``."""
    d = len(layout.local_names)
    P = np.zeros((d, layout.dim))
    g = structure.group_of(center_id)
    for i, j in enumerate(layout.local_to_combined(g)):
        P[i, j] = 1.0
    return P


class QuadraticSurrogate:
    """``Omega`` for a set of local fits under a given structure."""

    def __init__(self, fits, Lambda_combined, layout: CombinedLayout, structure: StructureSpec):
        self.layout = layout
        self.Lambda = np.asarray(getattr(Lambda_combined, "Lambda", Lambda_combined), dtype=float)
        self.terms = []
        for f in fits:
            P = selection_matrix(layout, structure, f.center_id)
            self.terms.append((P, np.asarray(f.A_hat, float), np.asarray(f.Lambda, float), np.asarray(f.theta_hat, float)))

    def value(self, theta) -> float:
        theta = np.asarray(theta, float)
        out = -0.5 * theta @ self.Lambda @ theta
        for P, A, Lam, th in self.terms:
            u = P @ theta
            r = u - th
            out += -0.5 * r @ A @ r + 0.5 * u @ Lam @ u
        return float(out)

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, float)
        g = -self.Lambda @ theta
        for P, A, Lam, th in self.terms:
            u = P @ theta
            g += P.T @ (-A @ (u - th) + Lam @ u)
        return g

    def hessian(self) -> np.ndarray:
        """Negative Hessian; constant because ``Omega`` is quadratic."""
        H = self.Lambda.copy()
        for P, A, Lam, _ in self.terms:
            H += P.T @ (A - Lam) @ P
        return H

    def maximizer(self) -> np.ndarray:
        rhs = np.zeros(self.layout.dim)
        for P, A, _, th in self.terms:
            rhs += P.T @ (A @ th)
        return np.linalg.solve(self.hessian(), rhs)


def surrogate_for(result, fits, Lambda_combined) -> QuadraticSurrogate:
    """Surrogate matching the layout and structure of a :class:`BfiResult`."""
    return QuadraticSurrogate(fits, Lambda_combined, result.layout, result.structure)
