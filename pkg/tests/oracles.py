"""Independent reference computations used to freeze regression values.

Nothing here calls the package solvers: gamma_2 comes from a nonconvex
factorization search (upper bound) and a trace-norm maximization over unit
weight vectors (lower bound); integrals come from adaptive quadrature of
closed forms.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate, optimize


def _unpack(z, n, cplx):
    if cplx:
        half = n * n
        return (z[:half] + 1j * z[half:]).reshape(n, n)
    return z.reshape(n, n)


def factorization_cost(X, A):
    """max row norm of X times max column norm of X^{-1} A."""
    Y = np.linalg.solve(X, A)
    return np.linalg.norm(X, axis=1).max() * np.linalg.norm(Y, axis=0).max()


def gamma2_upper_oracle(A, starts: int = 12, seed: int = 0) -> float:
    """Best factorization cost found by multi-start SLSQP over invertible X.

    Epigraph form: minimize ``t`` subject to ``|x_i|^2 <= 1`` and
    ``|(X^-1 A)_j|^2 <= t``. Every returned value is attained by an actual
    factorization, so it is an upper bound.
    """
    A = np.asarray(A)
    n = A.shape[0]
    if not np.any(A):
        return 0.0
    cplx = np.iscomplexobj(A)
    rng = np.random.default_rng(seed)
    best = np.inf

    def cons(z):
        X = _unpack(z[:-1], n, cplx)
        try:
            Y = np.linalg.solve(X, A)
        except np.linalg.LinAlgError:
            return -np.ones(n + A.shape[1])
        return np.concatenate([1 - np.sum(np.abs(X) ** 2, axis=1),
                               z[-1] - np.sum(np.abs(Y) ** 2, axis=0)])

    U, s, _ = np.linalg.svd(A)
    s = np.concatenate([s, np.zeros(n - s.size)])
    inits = [np.eye(n), U * np.sqrt(np.maximum(s, 1e-3 * s[0]))]
    inits += [rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if cplx else 0)
              for _ in range(starts)]
    for X0 in inits:
        X0 = X0 / np.linalg.norm(X0, axis=1).max()
        Y0 = np.linalg.solve(X0, A)
        t0 = np.sum(np.abs(Y0) ** 2, axis=0).max() * 1.01
        vec = np.concatenate([X0.real.ravel(), X0.imag.ravel()]) if cplx else X0.ravel()
        z0 = np.concatenate([vec, [t0]])
        res = optimize.minimize(lambda z: z[-1], z0, method="SLSQP",
                                constraints=[{"type": "ineq", "fun": cons}],
                                options={"ftol": 1e-15, "maxiter": 2000})
        X = _unpack(res.x[:-1], n, cplx)
        if np.linalg.cond(X) < 1e12:
            best = min(best, factorization_cost(X, A))
    return float(best)


def gamma2_lower_oracle(A, starts: int = 12, seed: int = 0) -> float:
    """max over unit ``u, v`` of the trace norm of ``diag(u) A diag(v)``."""
    A = np.asarray(A)
    n, m = A.shape
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(seed + 1)

    def neg(z):
        u = z[:n] / np.linalg.norm(z[:n])
        v = z[n:] / np.linalg.norm(z[n:])
        return -np.linalg.svd(u[:, None] * A * v[None, :], compute_uv=False).sum()

    best = 0.0
    inits = [np.ones(n + m)] + [rng.uniform(0.1, 1.0, n + m) for _ in range(starts)]
    for z0 in inits:
        res = optimize.minimize(neg, z0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 40000,
                                         "maxfev": 40000})
        res = optimize.minimize(neg, res.x, method="Powell",
                                options={"xtol": 1e-12, "ftol": 1e-15, "maxiter": 40000})
        best = max(best, -res.fun)
    return float(best)


def all_2x2_sign_matrices():
    for entries in itertools.product((-1.0, 0.0, 1.0), repeat=4):
        yield np.array(entries).reshape(2, 2)


def fixed_small_matrices():
    """Ten fixed matrices of side at most four."""
    rng = np.random.default_rng(20240601)
    H = np.array([[1, 2, 3, 4], [2, 3, 4, 0], [3, 4, 0, 0], [4, 0, 0, 0]], dtype=float)
    hadamard = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], float)
    mats = [
        rng.normal(size=(3, 3)),
        rng.normal(size=(4, 4)),
        rng.normal(size=(2, 3)),
        rng.normal(size=(4, 3)),
        rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)),
        H,
        hadamard,
        np.outer([1.0, 2.0, 0.5], [1.0, -1.0, 3.0]),
        np.triu(np.ones((4, 4))),
        np.diag([3.0, 1.0, 0.2, 0.05]) + 0.1 * rng.normal(size=(4, 4)),
    ]
    return mats


def lvp_l1_quad(K: int) -> float:
    """L1 norm of the trapezoidal kernel by adaptive quadrature of the direct sum."""
    M = 1 << K
    n = np.arange(3 * M)
    c = np.minimum(np.minimum(n / M, 1.0), (3 * M - n) / M)

    def f(theta):
        return abs(np.sum(c * np.exp(1j * n * theta)))

    pts = np.linspace(0, 2 * np.pi, 8 * M + 1)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0]
    return total / (2 * np.pi)


def dirichlet_abs(q, theta):
    """|S(e^{i theta})| = |sin((q+1) theta / 2) / sin(theta / 2)|."""
    half = np.asarray(theta) / 2
    s = np.sin(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.abs(np.sin((q + 1) * half) / s)
    return np.where(np.abs(s) < 1e-15, q + 1.0, v)


def rotated_family_quad(q: int) -> float:
    """int max_j |S(xi_j e^{i theta})| dm / sqrt(q + 1) by adaptive quadrature.

    The integrand has period 2 pi / q, so one period is integrated, split at
    a fine subdivision to resolve the kinks of the pointwise max.
    """
    shifts = 2 * np.pi * np.arange(1, q + 1) / q

    def f(theta):
        return dirichlet_abs(q, theta + shifts).max()

    period = 2 * np.pi / q
    pts = np.linspace(0, period, 4 * (q + 1) + 1)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total / period / np.sqrt(q + 1)


def power_sup_oracle(T, limit: int = 5000) -> float:
    """max_n ||T^n|| by direct powers until the norm has decayed below 1e-3."""
    T = np.asarray(T, dtype=float)
    P = np.eye(T.shape[0])
    best = 0.0
    for _ in range(limit):
        P = P @ T
        v = np.linalg.norm(P, 2)
        best = max(best, v)
        if v < 1e-3:
            break
    return float(best)


def x2_two_point_search(g=(1.0, 1.0), points: int = 181) -> tuple:
    """Grid search over directions of real two-point phi for the (1, 1) case.

    gamma_2 is homogeneous, so the best feasible multiple of the direction
    (cos a, sin a) scores (g . dir) / gamma_2(Hankel(dir)). Sign flips of
    either entry leave gamma_2 unchanged, so the first quadrant suffices.
    The best grid point is polished by a bounded scalar search.
    """
    g = np.asarray(g, dtype=float)

    def score(a):
        d = np.array([np.cos(a), np.sin(a)])
        H = np.array([[d[0], d[1]], [d[1], 0.0]])
        return float(g @ d) / gamma2_upper_oracle(H, starts=2)

    grid = np.linspace(0, np.pi / 2, points)
    vals = [score(a) for a in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(lambda a: -score(a), bounds=(grid[i] - step, grid[i] + step),
                                   method="bounded", options={"xatol": 1e-10})
    a = res.x if -res.fun > vals[i] else grid[i]
    d = np.array([np.cos(a), np.sin(a)])
    H = np.array([[d[0], d[1]], [d[1], 0.0]])
    return float(max(-res.fun, vals[i])), d / gamma2_upper_oracle(H, starts=2)
