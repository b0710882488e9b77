"""Deterministic convex solvers over l1 balls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse

from .errors import OptimizationError, SingularSystemError


@dataclass
class SolverResult:
    theta: np.ndarray
    value: float
    iterations: int
    gap: float
    history: np.ndarray = field(default=None, repr=False)


def ols(X, y):
    """Least-squares coefficients via a QR factorization of ``X``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < d:
        raise SingularSystemError(f"{n} rows cannot determine {d} coefficients")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= max(n, d) * np.finfo(float).eps * diag.max():
        raise SingularSystemError("design matrix is rank deficient")
    return scipy.linalg.solve_triangular(R, Q.T @ y)


def project_l1(v, radius):
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= radius}``.

    Sorts ``|v|`` and soft-thresholds at the level that puts the result on
    the sphere (Duchi et al., 2008).
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    level = (css[rho] - radius) / (rho + 1.0)
    w = np.maximum(a - level, 0.0)
    # the threshold loses ~|v| * eps to cancellation when |v| >> radius;
    # spread the leftover over the support to land back on the sphere
    support = w > 0
    w[support] += (radius - w.sum()) / support.sum()
    return np.sign(v) * np.maximum(w, 0.0)


def kkt_residual_l1(theta, grad, radius, boundary_tol=1e-9):
    """Norm of the projection of ``-grad`` onto the feasible directions at ``theta``.

    Zero exactly when ``theta`` minimizes a convex function with gradient
    ``grad`` over the l1 ball.  Uses Moreau's decomposition: the projection
    onto the tangent cone has norm ``dist(-grad, normal cone)``, and the
    normal cone is ``{lam * s : lam >= 0, s in subdifferential of ||.||_1}``.
    """
    theta = np.asarray(theta, dtype=float)
    v = -np.asarray(grad, dtype=float)
    if np.abs(theta).sum() < radius * (1.0 - boundary_tol):
        return float(np.linalg.norm(v))
    on = theta != 0
    sigma = np.sign(theta[on])
    s = float(sigma @ v[on])
    k = int(on.sum())
    off = np.sort(np.abs(v[~on]))[::-1]
    # squared distance to lam * s, minimized over s off the support, is
    # sum_on (v - lam sigma)^2 + sum_off (|v| - lam)_+^2; convex in lam
    lam = 0.0
    cum = 0.0
    for j in range(off.size + 1):
        if k + j > 0:
            cand = (s + cum) / (k + j)
            upper = off[j - 1] if j > 0 else np.inf
            lower = off[j] if j < off.size else -np.inf
            if lower <= cand <= upper:
                lam = cand
                break
        if j < off.size:
            cum += off[j]
    lam = max(lam, 0.0)
    r_on = v[on] - lam * sigma
    r_off = np.maximum(np.abs(v[~on]) - lam, 0.0)
    return float(np.sqrt(r_on @ r_on + r_off @ r_off))


def projected_subgradient(
    fun, subgrad, domain, x0=None, max_iters=20000, tol=1e-6, window=100,
    step0=None, callback=None,
):
    """Minimize a convex function over an :class:`~kng.domains.L1Ball`.

    Iterates ``x <- P(x - a / sqrt(k) * g)`` and keeps the best iterate.  A
    stage ends once the moving average of the objective (over ``window``
    iterations) stops falling relative to the spread of the iterates above
    the best value; the next stage restarts from the best point with ``a``
    halved.  Converged when that spread is below ``tol`` relative to the best
    value.  ``a`` starts at ``radius / (1 + ||g_0||)`` unless ``step0`` is set.

    Raises OptimizationError (carrying the final relative gap) when
    ``max_iters`` runs out first.
    """
    radius = domain.radius
    x = project_l1(domain.center() if x0 is None else x0, radius)
    f0 = float(fun(x))
    g = np.asarray(subgrad(x), dtype=float)
    step = radius / (1.0 + np.linalg.norm(g)) if step0 is None else float(step0)
    best_x, best_f = x.copy(), f0
    history = np.empty(max_iters)
    stage = []
    gap = np.inf
    floor = 1e-6 * abs(f0) if f0 != 0 else 1e-300
    for it in range(max_iters):
        k = len(stage) + 1
        x = project_l1(x - (step / np.sqrt(k)) * g, radius)
        f = float(fun(x))
        if f < best_f:
            best_x, best_f = x.copy(), f
        history[it] = best_f
        stage.append(f)
        if callback is not None:
            callback(x)
        if len(stage) >= 2 * window:
            prev = np.mean(stage[-2 * window:-window])
            cur = np.mean(stage[-window:])
            spread = cur - best_f
            if abs(cur - prev) <= 0.5 * spread:
                gap = spread / max(abs(best_f), floor)
                if gap <= tol:
                    return SolverResult(best_x, best_f, it + 1, gap, history[: it + 1])
                x = best_x.copy()
                step *= 0.5
                stage = []
        g = np.asarray(subgrad(x), dtype=float)
    raise OptimizationError(
        f"projected subgradient stopped after {max_iters} iterations (gap {gap:.3g})", gap
    )


def projected_gradient(fun, grad, domain, lipschitz, x0=None, max_iters=20000, tol=1e-12):
    """Accelerated projected gradient for a smooth convex objective on an l1 ball.

    FISTA with step ``1 / lipschitz`` and gradient-based restarts.  Stops when
    ``kkt_residual_l1 <= tol * scale``, where ``scale = 1 + max(||g_0||_inf,
    lipschitz * ||theta||_inf)`` tracks the size of the terms that cancel in
    the gradient (``g_0`` is the gradient at the start).  The residual is
    returned as ``gap``.
    """
    if not lipschitz > 0:
        raise ValueError("lipschitz must be positive")
    radius = domain.radius
    x = project_l1(domain.center() if x0 is None else x0, radius)
    y = x.copy()
    t = 1.0
    gap = np.inf
    g0 = np.abs(grad(x)).max()
    for it in range(max_iters):
        x_new = project_l1(y - grad(y) / lipschitz, radius)
        if np.dot(y - x_new, x_new - x) > 0:
            t = 1.0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        g = grad(x)
        gap = kkt_residual_l1(x, g, radius)
        scale = 1.0 + max(g0, lipschitz * np.abs(x).max())
        if gap <= tol * scale:
            return SolverResult(x, float(fun(x)), it + 1, gap)
    raise OptimizationError(
        f"projected gradient stopped after {max_iters} iterations (gap {gap:.3g})", gap
    )


def quantile_regression_lp(X, y, tau, radius=None):
    """Exact check-loss minimizer as a linear program (HiGHS).

    Minimizes ``sum rho_tau(y - X theta)``, optionally subject to
    ``||theta||_1 <= radius``.  Without a radius the dual program
    ``max y^T a  s.t.  X^T a = (1 - tau) X^T 1, 0 <= a <= 1`` is solved instead;
    it has only ``d`` equality rows, and ``theta`` is read off its multipliers.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if radius is None:
        res = scipy.optimize.linprog(
            -y, A_eq=X.T, b_eq=(1.0 - tau) * X.sum(axis=0), bounds=(0, 1), method="highs"
        )
        if res.status != 0:
            raise OptimizationError(f"linear program failed: {res.message}", np.inf)
        return -np.asarray(res.eqlin.marginals, dtype=float)
    eye = scipy.sparse.identity(n, format="csr")
    # variables: theta+ (d), theta- (d), u (n), v (n); theta = theta+ - theta-
    Xs = scipy.sparse.csr_matrix(X)
    A_eq = scipy.sparse.hstack([Xs, -Xs, eye, -eye], format="csr")
    c = np.concatenate([np.zeros(2 * d), np.full(n, tau), np.full(n, 1.0 - tau)])
    A_ub = np.concatenate([np.ones(2 * d), np.zeros(2 * n)])[None, :]
    res = scipy.optimize.linprog(
        c, A_ub=A_ub, b_ub=[radius], A_eq=A_eq, b_eq=y, bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise OptimizationError(f"linear program failed: {res.message}", np.inf)
    return res.x[:d] - res.x[d: 2 * d]
