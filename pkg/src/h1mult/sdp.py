"""Semidefinite solvers for the factorization norm.

Two independent procedures are provided.

``gamma2_barrier`` works on the dual weights. For diagonal weights ``p, r``
(nonnegative, summing to one) the quantity ``2 ||D_p^1/2 A D_r^1/2||_tr``
is a lower bound, and ``p, r`` also give an explicit factorization whose
cost is an upper bound. The solver follows the central path of the
log-det barrier of the full SDP with the off-diagonal block eliminated
in closed form, one singular value at a time, so only ``n + m`` weights
are optimized.

``solve_lmi`` is a generic primal-dual path-following method (HKM
direction with Mehrotra correction) for small dense problems in
the form ``max b.y  s.t.  C - sum_a y_a F_a >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SdpNonConvergent, SizeLimit

__all__ = [
    "BarrierResult",
    "LmiResult",
    "gamma2_barrier",
    "weight_bounds",
    "solve_lmi",
    "gamma2_lmi_data",
]


@dataclass(frozen=True)
class BarrierResult:
    p: np.ndarray
    r: np.ndarray
    lower: float
    upper: float
    iterations: int


@dataclass(frozen=True)
class LmiResult:
    y: np.ndarray
    Z: np.ndarray
    X: np.ndarray
    primal_obj: float
    dual_obj: float
    iterations: int


def _svd(A, p, r):
    B = np.sqrt(p)[:, None] * A * np.sqrt(r)[None, :]
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    return B, U, s, Vh.conj().T


def weight_bounds(A, p, r):
    """Lower and upper bound on gamma_2(A) from positive weights ``p, r``."""
    _, U, s, V = _svd(A, p, r)
    lower = 2 * s.sum()
    upper = np.sqrt(((np.abs(U) ** 2) @ s / p).max() * ((np.abs(V) ** 2) @ s / r).max())
    return float(lower), float(upper)


def _smoothed(s, mu):
    # f(s) = max_c 2 s c + mu log(1 - c^2), attained at c below
    R = np.sqrt(mu * mu + 4 * s * s)
    c = 2 * s / (mu + R)
    # 1 - c without cancellation, using R - 2s = mu^2 / (R + 2s)
    one_minus_c = (mu + mu * mu / (R + 2 * s)) / (mu + R)
    f = 2 * s * c + mu * np.log(one_minus_c * (1 + c))
    return c, R, f


def _spectral_blocks(U, V, wpp, wpr, chunk):
    # Re sum_kl conj(U_ik U*_il) w_kl U_jk U*_jl and the analogous V and U/V
    # blocks, assembled over chunks of k to bound memory
    n, k = U.shape
    m = V.shape[0]
    Hpp, Hrr, Hpr = np.zeros((n, n)), np.zeros((m, m)), np.zeros((n, m))
    for start in range(0, k, chunk):
        stop = min(k, start + chunk)
        R = (U.conj()[:, start:stop, None] * U[:, None, :]).reshape(n, -1)
        T = (V.conj()[:, start:stop, None] * V[:, None, :]).reshape(m, -1)
        Rc, Tc = R.conj(), T.conj()
        w1 = wpp[start:stop].ravel()
        w2 = wpr[start:stop].ravel()
        Hpp += np.real((Rc * w1) @ R.T)
        Hrr += np.real((Tc * w1) @ T.T)
        Hpr += np.real((Rc * w2) @ T.T)
    return Hpp, Hrr, Hpr


def _barrier_derivs(A, p, r, mu):
    """Value, gradient and Hessian of the reduced barrier in (p, r)."""
    n, m = A.shape
    B, U, s, V = _svd(A, p, r)
    c, R, f = _smoothed(s, mu)
    fp = 2 * c
    value = f.sum() + mu * (np.log(p).sum() + np.log(r).sum())
    fs = fp * s
    Gd = (np.abs(U) ** 2) @ fs
    Hd = (np.abs(V) ** 2) @ fs
    grad = np.concatenate([Gd / (2 * p) + mu / p, Hd / (2 * r) + mu / r])

    # spectral second-order terms: divided differences of f'
    sk, sl = s[:, None], s[None, :]
    Rk, Rl = R[:, None], R[None, :]
    ssum = sk + sl
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(ssum > 0, ssum / (sk * Rl + sl * Rk), 1.0 / mu)
        cs = 2 / (mu + R)
        b = np.where(ssum > 0, 2 * (sk * cs[:, None] + sl * cs[None, :]) / ssum, 2 / mu)
    a = 4 * (mu + mu * mu * q) / ((mu + Rk) * (mu + Rl))
    wpp = (a * ssum ** 2 + b * (sk - sl) ** 2) / 16
    wpr = (a * ssum ** 2 - b * (sk - sl) ** 2) / 16
    k = s.size
    chunk = max(1, int(4e6 // max(1, max(n, m) * k)))
    Hpp, Hrr, Hpr = _spectral_blocks(U, V, wpp, wpr, chunk)
    Gp = (U * fs) @ U.conj().T
    Hp = (V * fs) @ V.conj().T
    Pp = (U * fp) @ V.conj().T
    Hpp += np.real((np.eye(n) - U @ U.conj().T) * Gp.T) / 4
    Hrr += np.real((np.eye(m) - V @ V.conj().T).T * Hp) / 4
    Hpp[np.diag_indices(n)] -= Gd / 4
    Hrr[np.diag_indices(m)] -= Hd / 4
    Hpr += np.real(Pp.conj() * B) / 4
    H = np.block([[Hpp, Hpr], [Hpr.T, Hrr]])
    z = np.concatenate([p, r])
    H = H / z[:, None] / z[None, :]
    H[np.diag_indices(n + m)] -= mu / z ** 2
    return value, grad, H


def gamma2_barrier(A, tol: float = 1e-6, max_iter: int = 2000) -> BarrierResult:
    """Central-path solver on the dual weights.

    Stops when the explicit upper bound is within ``tol`` (relative) of the
    trace-norm lower bound. ``A`` must have no zero rows or columns.
    """
    A = np.asarray(A)
    n, m = A.shape
    scale = float(np.abs(A).max())
    A = A / scale
    N = n + m
    z = np.full(N, 1.0 / N)
    lower, upper = weight_bounds(A, z[:n], z[n:])
    mu = lower / N
    ones = np.ones(N)
    it = 0
    while it < max_iter:
        for _ in range(60):
            it += 1
            try:
                _, g, H = _barrier_derivs(A, z[:n], z[n:], mu)
            except np.linalg.LinAlgError:
                raise SdpNonConvergent("SVD failed inside the barrier solver") from None
            # Newton system in the scaled variables w = dz / z, where the
            # barrier term contributes mu on the diagonal
            M = -(z[:, None] * H * z[None, :])
            try:
                L = np.linalg.cholesky(M)

                def solve(v):
                    return np.linalg.solve(L.T, np.linalg.solve(L, v))
            except np.linalg.LinAlgError:
                # round-off made the curvature slightly indefinite
                w, Q = np.linalg.eigh(M)
                w = np.maximum(w, mu * 1e-3)

                def solve(v):
                    return Q @ ((Q.T @ v) / w)

            # Newton step for the ascent problem restricted to sum(z) = 1
            a, bb = solve(z * g), solve(z)
            dz = z * (a - (np.dot(z, a) / np.dot(z, bb)) * bb)
            negH = -H
            lam = np.sqrt(max(dz @ negH @ dz, 0.0) / mu)
            if not np.isfinite(lam):
                raise SdpNonConvergent("barrier Newton system became singular")
            step = 1 / (1 + lam)
            shrinking = dz < 0
            if np.any(shrinking):
                # stay strictly inside the weight simplex
                step = min(step, 0.9 * float(np.min(z[shrinking] / -dz[shrinking])))
            z = z + step * dz
            z /= z.sum()
            if lam < 0.2 or it >= max_iter:
                break
        lower, upper = weight_bounds(A, z[:n], z[n:])
        if upper - lower <= tol * lower:
            return BarrierResult(z[:n].copy(), z[n:].copy(), lower * scale, upper * scale, it)
        mu *= 0.2
    raise SdpNonConvergent(
        f"barrier solver stopped after {it} Newton steps with relative gap "
        f"{(upper - lower) / lower:.3g} > {tol:g}")


def _sym(M):
    return (M + M.conj().T) / 2


def _affine(F, y):
    return np.tensordot(y, F, axes=1)


def _max_step(X, dX):
    L = np.linalg.cholesky(X)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve_lmi(C, F, b, y0, tol: float = 1e-9, max_iter: int = 100,
              X0=None) -> LmiResult:
    """Primal-dual path-following for ``max b.y`` s.t. ``Z = C - sum y_a F_a >= 0``.

    ``y0`` must be strictly dual feasible; the primal iterate ``X`` may start
    infeasible. The slack ``Z`` is always recomputed from ``y``, so every
    iterate is exactly dual feasible.
    """
    C = np.asarray(C)
    F = np.asarray(F)
    b = np.asarray(b, dtype=float)
    m, N = F.shape[0], C.shape[0]
    if m * N * N > 2e7:
        raise SizeLimit(f"LMI with {m} variables and side {N} exceeds the dense cap")
    Fflat = F.reshape(m, -1)
    y = np.asarray(y0, dtype=float).copy()
    X = np.eye(N, dtype=C.dtype) if X0 is None else np.asarray(X0, dtype=C.dtype).copy()
    bnorm = 1 + np.linalg.norm(b)

    def A_op(M):
        return np.real(Fflat.conj() @ M.ravel())

    for it in range(1, max_iter + 1):
        Z = C - _affine(F, y)
        Rp = b - A_op(X)
        gap = float(np.real(np.vdot(X, Z)))
        dobj = float(b @ y)
        pobj = float(np.real(np.vdot(C, X)))
        if gap <= tol * max(1.0, abs(dobj)) and np.linalg.norm(Rp) <= tol * bnorm:
            return LmiResult(y, Z, X, pobj, dobj, it)
        Zi = np.linalg.inv(Z)
        Zi = _sym(Zi)
        G = np.matmul(np.matmul(X[None], F), Zi[None])
        M = np.real(Fflat @ G.transpose(0, 2, 1).reshape(m, -1).T)
        M = (M + M.T) / 2
        try:
            Lm = np.linalg.cholesky(M)

            def msolve(v):
                return np.linalg.solve(Lm.T, np.linalg.solve(Lm, v))
        except np.linalg.LinAlgError:
            def msolve(v):
                return np.linalg.lstsq(M, v, rcond=None)[0]
        AX = A_op(X)

        def direction(Rc):
            dy = msolve(Rp - A_op(Rc) + AX)
            dZ = -_affine(F, dy)
            dX = _sym(Rc - X - X @ dZ @ Zi)
            return dy, dX, dZ

        dy, dX, dZ = direction(np.zeros_like(X))
        ap = min(1.0, _max_step(X, dX))
        ad = min(1.0, _max_step(Z, dZ))
        gap_aff = float(np.real(np.vdot(X + ap * dX, Z + ad * dZ)))
        sigma = min(1.0, max(0.0, gap_aff / max(gap, 1e-300))) ** 3
        mu = sigma * gap / N
        dy, dX, dZ = direction(mu * Zi - dX @ dZ @ Zi)
        ap = min(1.0, 0.95 * _max_step(X, dX))
        ad = min(1.0, 0.95 * _max_step(Z, dZ))
        X = _sym(X + ap * dX)
        y = y + ad * dy
    raise SdpNonConvergent(f"path-following stopped after {max_iter} iterations "
                           f"with gap {gap:.3g}")


def gamma2_lmi_data(A):
    """LMI data for ``min t`` over ``[[W1, A], [A^*, W2]] >= 0``, ``diag <= t``.

    Returns ``C, F, b, y0`` for :func:`solve_lmi`. The first variable is
    ``t`` (objective ``b = (-1, 0, ...)``); the rest are the off-diagonal
    entries of W1 and W2.
    """
    A = np.asarray(A)
    n, m = A.shape
    N = n + m
    cplx = np.iscomplexobj(A)
    dtype = np.complex128 if cplx else np.float64
    C = np.zeros((N, N), dtype=dtype)
    C[:n, n:] = A
    C[n:, :n] = A.conj().T
    mats = [-np.eye(N, dtype=dtype)]
    for lo, hi in ((0, n), (n, N)):
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                E = np.zeros((N, N), dtype=dtype)
                E[i, j] = E[j, i] = 1
                mats.append(-E)
                if cplx:
                    E = np.zeros((N, N), dtype=dtype)
                    E[i, j], E[j, i] = 1j, -1j
                    mats.append(-E)
    F = np.array(mats)
    b = np.zeros(len(mats))
    b[0] = -1.0
    y0 = np.zeros(len(mats))
    y0[0] = np.linalg.norm(A, 2) + 1.0
    return C, F, b, y0
