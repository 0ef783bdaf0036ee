"""Epsilon-SVR with an RBF kernel, trained by sequential minimal optimization.

The dual is written over 2n variables ``a = [alpha, alpha*]`` in ``[0, C]``::

    min  0.5 a'Qa + p'a   s.t.  sum(s * a) = 0

with signs ``s = [+1]*n + [-1]*n``, ``Q[u, v] = s_u s_v K(x_u, x_v)`` and
``p = [eps - y, eps + y]``. Each step optimizes one pair picked by
second-order working-set selection (Fan, Chen & Lin, 2005).
"""

from __future__ import annotations

import numpy as np

from .base import TrainedModel, frozen

_TAU = 1e-12
_CHUNK_ELEMS = 4_000_000


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """``exp(-gamma * ||a - b||^2)`` for every pair of rows."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _CHUNK_ELEMS // max(1, B.shape[0] * A.shape[1]))
    for s in range(0, A.shape[0], step):
        diff = A[s:s + step, None, :] - B[None, :, :]
        out[s:s + step] = np.exp(-gamma * np.einsum("ijk,ijk->ij", diff, diff))
    return out


def smo_solve(K, y, C, epsilon, tol=1e-3, max_iter=100_000, track_objective=False):
    """Solve the epsilon-SVR dual for a precomputed kernel matrix.

    Returns ``(beta, b, info)`` where the decision function is
    ``sum_i beta_i K(x_i, .) + b``. ``info`` holds the iteration count, a
    convergence flag and, if requested, the objective after every step.
    """
    n = y.shape[0]
    s = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    a = np.zeros(2 * n)
    G = p.copy()
    diag = np.concatenate([np.diag(K), np.diag(K)])
    objective = [0.0] if track_objective else None

    def q_col(u):
        k = K[:, u % n]
        return s * s[u] * np.concatenate([k, k])

    it, converged = 0, False
    while it < max_iter:
        up = ((s > 0) & (a < C)) | ((s < 0) & (a > 0))
        low = ((s > 0) & (a > 0)) | ((s < 0) & (a < C))
        minus_sG = -s * G
        if not up.any() or not low.any():
            converged = True
            break
        cand = np.where(up, minus_sG, -np.inf)
        i = int(np.argmax(cand))
        g_max = cand[i]
        sG = s * G
        g_max2 = np.max(np.where(low, sG, -np.inf))
        if g_max + g_max2 < tol:
            converged = True
            break

        Qi = q_col(i)
        grad_diff = g_max + sG
        quad = diag[i] + diag - 2.0 * s[i] * s * Qi
        quad = np.where(quad > 0, quad, _TAU)
        score = np.where(low & (grad_diff > 0), -(grad_diff**2) / quad, np.inf)
        j = int(np.argmin(score))
        if not np.isfinite(score[j]):
            converged = True
            break
        Qj = q_col(j)

        ai_old, aj_old = a[i], a[j]
        if s[i] != s[j]:
            q = max(diag[i] + diag[j] + 2.0 * Qi[j], _TAU)
            delta = (-G[i] - G[j]) / q
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            q = max(diag[i] + diag[j] - 2.0 * Qi[j], _TAU)
            delta = (G[i] - G[j]) / q
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        a[i], a[j] = ai, aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)
        it += 1
        if track_objective:
            objective.append(0.5 * float(a @ (G + p)))

    # bias: average over free variables, else midpoint of the feasible interval
    sG = s * G
    free = (a > 0) & (a < C)
    if free.any():
        rho = float(sG[free].mean())
    else:
        at_upper = a >= C
        ub_mask = (at_upper & (s < 0)) | (~at_upper & (a <= 0) & (s > 0))
        lb_mask = (at_upper & (s > 0)) | (~at_upper & (a <= 0) & (s < 0))
        ub = sG[ub_mask].min() if ub_mask.any() else np.inf
        lb = sG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    beta = a[:n] - a[n:]
    info = {"iterations": it, "converged": converged}
    if track_objective:
        info["objective"] = objective
    return beta, -rho, info


class SVR(TrainedModel):
    def __init__(self, X, y, C=10.0, gamma=1.0, epsilon=0.1, tol=1e-3, max_iter=100_000,
                 track_objective=False):
        self.feature_count = X.shape[1]
        self.C, self.gamma, self.epsilon = C, gamma, epsilon
        K = rbf_kernel(X, X, gamma)
        beta, b, info = smo_solve(K, y, C, epsilon, tol, max_iter, track_objective)
        support = beta != 0
        self.dual_coef = frozen(beta[support])
        self.support_vectors = frozen(X[support])
        self.intercept = float(b)
        self.info = info

    def _predict(self, X):
        if self.dual_coef.size == 0:
            return np.full(X.shape[0], self.intercept)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef + self.intercept
