"""Hankel matrices of multipliers and the factorization norm gamma_2.

For a finitely supported ``phi`` the multiplier norm on two-fold
factorizations equals ``gamma_2`` of the Hankel matrix ``(phi(i+j))``,
and the full truncation of size ``support_max + 1`` already gives the
exact value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .errors import SdpNonConvergent, SizeLimit, ValidationError
from .formats import pack_array
from .torus import AnalyticPoly, MultiplierSeq

__all__ = [
    "HANKEL_CAP",
    "SDP_CAP",
    "GROTHENDIECK_BOUND",
    "HankelTruncation",
    "Gamma2Certificate",
    "DyadicFactorization",
    "X2LowerBound",
    "LNormUpper",
    "build_hankel",
    "gamma2_sdp",
    "gamma2_value",
    "dyadic_upper",
    "x2_lower_sdp",
    "x2_lower_sdp_detail",
    "injective_norm_bruteforce",
    "l_norm_upper",
]

HANKEL_CAP = 4096
SDP_CAP = 600
INJECTIVE_CAP = 12
# real Grothendieck constant is below 1.7823
GROTHENDIECK_BOUND = 1.783


@dataclass(frozen=True)
class HankelTruncation:
    n: int
    entries: np.ndarray = field(repr=False)
    source_support_max: int


@dataclass(frozen=True)
class Gamma2Certificate:
    """Two-sided certificate for gamma_2(A).

    ``value`` is attained by the factorization ``A = primal_x @ primal_y``
    (``row_norm_max * col_norm_max == value``). ``dual_witness`` is a PSD
    matrix of trace one whose diagonal blocks are diagonal; it proves
    ``lower <= gamma_2(A)``.
    """

    value: float
    lower: float
    gap: float
    primal_x: np.ndarray = field(repr=False)
    primal_y: np.ndarray = field(repr=False)
    row_norm_max: float
    col_norm_max: float
    dual_witness: np.ndarray = field(repr=False)
    method: str
    iterations: int

    @property
    def dual_bound(self) -> float:
        return self.lower

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "gap": self.gap,
            "rowNormMax": self.row_norm_max,
            "colNormMax": self.col_norm_max,
            "method": self.method,
            "iterations": self.iterations,
            "primalX": pack_array(self.primal_x),
            "primalY": pack_array(self.primal_y),
            "dualWitness": pack_array(self.dual_witness),
        }


def build_hankel(phi: MultiplierSeq, n: int, cap: int = HANKEL_CAP) -> HankelTruncation:
    """The ``n x n`` block ``A_ij = phi(i + j)``."""
    if n < 1:
        raise ValidationError("n must be positive")
    if n > cap:
        raise SizeLimit(f"Hankel side {n} exceeds the dense cap {cap}")
    diag = phi.to_dense(2 * n - 1)
    idx = np.add.outer(np.arange(n), np.arange(n))
    entries = diag[idx]
    if not np.any(entries.imag):
        entries = entries.real.copy()
    return HankelTruncation(n, entries, phi.support_max)


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, HankelTruncation):
        A = A.entries
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValidationError("expected a 2-d matrix")
    if np.iscomplexobj(A) and not np.any(A.imag):
        A = A.real
    return A.astype(np.complex128 if np.iscomplexobj(A) else np.float64)


def _weights_certificate(A, p, r):
    """Certificate from dual weights via the SVD of ``D_p^1/2 A D_r^1/2``."""
    sp, sr = np.sqrt(p), np.sqrt(r)
    U, s, Vh = np.linalg.svd(sp[:, None] * A * sr[None, :], full_matrices=False)
    lower = 2 * float(s.sum())
    k = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    root = np.sqrt(s[:k])
    X = U[:, :k] * root / sp[:, None]
    Y = (root[:, None] * Vh[:k]) / sr[None, :]
    K = U @ Vh
    Q = sp[:, None] * K * sr[None, :]
    witness = np.block([[np.diag(p).astype(Q.dtype), -Q], [-Q.conj().T, np.diag(r).astype(Q.dtype)]])
    return X, Y, lower, witness


def _gram_factors(Z, n):
    """Factors of the off-diagonal block from a (shifted) PSD slack."""
    w, Q = np.linalg.eigh(Z)
    shift = max(0.0, -w[0])
    w = w + shift
    order = np.argsort(w)[::-1]
    w, Q = w[order], Q[:, order]
    sig = np.sqrt(np.maximum(w, 0))
    k = int(np.sum(sig > 1e-10 * sig[0])) if sig[0] > 0 else 0
    R = Q[:, :k] * sig[:k]
    return R[:n], R[n:].conj().T


def _balanced(X, Y):
    rows = np.linalg.norm(X, axis=1).max() if X.size else 0.0
    cols = np.linalg.norm(Y, axis=0).max() if Y.size else 0.0
    if rows > 0 and cols > 0:
        f = np.sqrt(cols / rows)
        X, Y = X * f, Y / f
        rows, cols = rows * f, cols / f
    return X, Y, float(rows), float(cols)


def gamma2_sdp(A, tol: float = 1e-6, method: str = "auto", cap: int = SDP_CAP,
               max_iter: int | None = None) -> Gamma2Certificate:
    """Compute gamma_2(A) with a primal factorization and a dual witness.

    Parameters
    ----------
    A : HankelTruncation or array_like
        Real or complex matrix.
    tol : float
        Target relative gap ``(value - lower) / value``, in ``(0, 1e-2]``.
    method : {"auto", "barrier", "pathfollow"}
        ``barrier`` optimizes the dual weights along the central path of the
        reduced log-det barrier; ``pathfollow`` runs the dense primal-dual
        method on the full block SDP (small inputs only). ``auto`` uses the
        barrier and falls back to path-following if it stalls.
    cap : int
        Maximal side ``rows + cols`` of the semidefinite block.
    """
    A = _as_matrix(A)
    if not 0 < tol <= 1e-2:
        raise ValidationError("tol must lie in (0, 1e-2]")
    n, m = A.shape
    if n + m > cap:
        raise SizeLimit(f"SDP block side {n + m} exceeds the cap {cap}")
    if method not in ("auto", "barrier", "pathfollow"):
        raise ValidationError(f"unknown method {method!r}")
    # zero rows and columns change nothing; solve on the core block
    rows = np.flatnonzero(np.any(A != 0, axis=1))
    cols = np.flatnonzero(np.any(A != 0, axis=0))
    dtype = A.dtype
    X = np.zeros((n, 0), dtype=dtype)
    Y = np.zeros((0, m), dtype=dtype)
    W = np.zeros((n + m, n + m), dtype=dtype)
    if rows.size == 0:
        W[0, 0] = 1.0
        return Gamma2Certificate(0.0, 0.0, 0.0, X, Y, 0.0, 0.0, W, "trivial", 0)
    core = A[np.ix_(rows, cols)]
    # solve at unit scale; gamma_2 is homogeneous and the witness scale-free
    scale = float(np.abs(core).max())
    core = core / scale
    if method in ("auto", "barrier"):
        try:
            kw = {} if max_iter is None else {"max_iter": max_iter}
            res = sdp.gamma2_barrier(core, tol=tol, **kw)
            Xc, Yc, lower, Wc = _weights_certificate(core, res.p, res.r)
            used, its = "barrier", res.iterations
        except SdpNonConvergent:
            if method == "barrier" or core.shape[0] + core.shape[1] > 40:
                raise
            method = "pathfollow"
    if method == "pathfollow":
        Xc, Yc, lower, Wc, its = _pathfollow(core, tol, max_iter or 100)
        used = "pathfollow"
    Xc, Yc, rmax, cmax = _balanced(Xc, Yc)
    value = rmax * cmax * scale
    root = np.sqrt(scale)
    Xc, Yc, rmax, cmax = Xc * root, Yc * root, rmax * root, cmax * root
    lower = lower * scale
    k = Xc.shape[1]
    X = np.zeros((n, k), dtype=np.result_type(dtype, Xc.dtype))
    Y = np.zeros((k, m), dtype=X.dtype)
    X[rows] = Xc
    Y[:, cols] = Yc
    full = np.concatenate([rows, n + cols])
    W = np.zeros((n + m, n + m), dtype=Wc.dtype)
    W[np.ix_(full, full)] = Wc
    lower = min(lower, value)
    return Gamma2Certificate(value, lower, value - lower, X, Y, rmax, cmax, W, used, its)


def _pathfollow(core, tol, max_iter):
    n, m = core.shape
    C, F, b, y0 = sdp.gamma2_lmi_data(core)
    N = n + m
    res = sdp.solve_lmi(C, F, b, y0, tol=min(1e-9, tol * 1e-2), max_iter=max_iter,
                        X0=np.eye(N) / N)
    Xc, Yc = _gram_factors(res.Z, n)
    d = np.maximum(np.real(np.diag(res.X)), 1e-300)
    d = d / d.sum()
    _, _, lower, Wc = _weights_certificate(core, d[:n], d[n:])
    value = np.linalg.norm(Xc, axis=1).max() * np.linalg.norm(Yc, axis=0).max()
    if value - lower > tol * value:
        raise SdpNonConvergent(f"path-following gap {value - lower:.3g} above tolerance")
    return Xc, Yc, lower, Wc, res.iterations


def gamma2_value(A, tol: float = 1e-6, **kw) -> float:
    return gamma2_sdp(A, tol, **kw).value


@dataclass(frozen=True)
class DyadicFactorization:
    """Explicit Hilbert-space factorization of a Hankel matrix.

    ``x_i = sum_{i <= k < 2i} phi(k) e_{k-i}`` and ``y_i = phi(2i) e_i``
    reconstruct ``phi(i + j)`` as ``<x_i, e_j> + <x_j, e_i> + <y_i, e_j>``;
    the three terms cover ``j < i``, ``j > i`` and ``j == i``.
    """

    phi: MultiplierSeq = field(repr=False)
    block_sup: float
    phi0: float
    statement_bound: float
    proof_bound: float
    two_norm_proxy: float

    def x_vec(self, i: int) -> dict:
        lo = np.searchsorted(self.phi.index, i)
        hi = np.searchsorted(self.phi.index, 2 * i)
        return {int(k) - i: complex(v) for k, v in
                zip(self.phi.index[lo:hi], self.phi.values[lo:hi])}

    def y_vec(self, i: int) -> dict:
        v = self.phi(2 * i)
        return {i: v} if v != 0 else {}

    def reconstruct(self, i: int, j: int) -> complex:
        out = 0j
        if j < i:
            out += self.x_vec(i).get(j, 0j)
        if j > i:
            out += self.x_vec(j).get(i, 0j)
        if j == i:
            out += self.y_vec(i).get(j, 0j)
        return out

    def dense_reconstruction(self, n: int) -> np.ndarray:
        """All reconstructed entries for ``0 <= i, j < n`` at once."""
        dense = self.phi.to_dense(2 * n)
        # row i holds the coordinates of x_i: entry c is phi(i + c), c < i
        Xm = np.zeros((n, n), dtype=np.complex128)
        i, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        mask = c < i
        Xm[mask] = dense[(i + c)[mask]]
        diagonal = np.diag(dense[2 * np.arange(n)])
        return Xm + Xm.T + diagonal

    def x_norm(self, i: int) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.x_vec(i).values())))

    def y_norm(self, i: int) -> float:
        return abs(self.phi(2 * i))


def dyadic_upper(phi: MultiplierSeq) -> DyadicFactorization:
    """Dyadic-block bounds on the multiplier norm.

    With ``C`` the largest l2 norm of ``phi`` over the blocks
    ``[2^n, 2^(n+1))``, returns the statement bound ``4C + |phi(0)|``, the
    sharper bound ``(2 sqrt 2 + 1) C + |phi(0)|`` realized by the explicit
    factorization, and the proxy ``|phi(0)| + C``.
    """
    idx, val = phi.index, phi.values
    pos = idx > 0
    sup = 0.0
    if np.any(pos):
        blocks = np.array([int(k).bit_length() for k in idx[pos]])
        mags = np.abs(val[pos])
        top = float(mags.max())
        # scaled to avoid underflow when squaring tiny coefficients
        energy = np.zeros(int(blocks.max()) + 1)
        np.add.at(energy, blocks, (mags / top) ** 2)
        sup = top * float(np.sqrt(energy.max()))
    phi0 = abs(phi(0))
    return DyadicFactorization(phi, sup, phi0, 4 * sup + phi0,
                               float((2 * np.sqrt(2) + 1) * sup + phi0), phi0 + sup)


@dataclass(frozen=True)
class X2LowerBound:
    """Feasible multiplier found by the restricted-support program."""

    value: float
    phi: MultiplierSeq
    gamma2_phi: float


def _x2_lmi_data(g: np.ndarray):
    d = g.size - 1
    n = d + 1
    N = 2 * n
    cplx = np.iscomplexobj(g)
    dtype = np.complex128 if cplx else np.float64
    mats, b = [], []
    idx = np.add.outer(np.arange(n), np.arange(n))
    for k in range(n):
        phases = (1.0, 1j) if cplx else (1.0,)
        for ph in phases:
            H = np.where(idx == k, ph, 0).astype(dtype)
            F = np.zeros((N, N), dtype=dtype)
            F[:n, n:] = H
            F[n:, :n] = H.conj().T
            mats.append(-F)
            b.append(g[k].real if ph == 1.0 else g[k].imag)
    for lo, hi in ((0, n), (n, N)):
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                E = np.zeros((N, N), dtype=dtype)
                E[i, j] = E[j, i] = 1
                mats.append(-E)
                b.append(0.0)
                if cplx:
                    E = np.zeros((N, N), dtype=dtype)
                    E[i, j], E[j, i] = 1j, -1j
                    mats.append(-E)
                    b.append(0.0)
    return np.eye(N, dtype=dtype), np.array(mats), np.array(b), n, cplx


def x2_lower_sdp_detail(g: AnalyticPoly, tol: float = 1e-7,
                        cap: int = SDP_CAP) -> X2LowerBound:
    """Maximize ``Re sum g(n) conj(phi(n))`` over ``phi`` supported on
    ``[0, deg g]`` with ``gamma_2(Hankel(phi)) <= 1``.

    The returned value is certified: the maximizer is rescaled by the
    negative part of the slack spectrum so that it is exactly feasible.
    """
    if g.degree < 0:
        return X2LowerBound(0.0, MultiplierSeq(), 0.0)
    if 2 * (g.degree + 1) > cap:
        raise SizeLimit(f"degree {g.degree} exceeds half the SDP cap {cap}")
    gd = g.to_dense()
    if not np.any(gd.imag):
        gd = gd.real
    C, F, b, n, cplx = _x2_lmi_data(gd)
    res = sdp.solve_lmi(C, F, b, np.zeros(b.size), tol=min(tol, 1e-8))
    step = 2 if cplx else 1
    coef = res.y[0:n * step:step] + (1j * res.y[1:n * step:step] if cplx else 0)
    slack_min = float(np.linalg.eigvalsh(res.Z)[0])
    shrink = 1.0 + max(0.0, -slack_min)
    phi = MultiplierSeq.from_dense(coef / shrink)
    value = float(np.real(np.vdot(phi.to_dense(n), gd)))
    g2 = gamma2_sdp(build_hankel(phi, n), tol=1e-6).value if len(phi) else 0.0
    return X2LowerBound(max(value, 0.0), phi, g2)


def x2_lower_sdp(g: AnalyticPoly, tol: float = 1e-7, cap: int = SDP_CAP) -> float:
    """Certified lower bound on the dual norm of ``g`` (see the detail variant)."""
    return x2_lower_sdp_detail(g, tol, cap).value


def injective_norm_bruteforce(A, phase_resolution: int = 16, *,
                              return_bound: bool = False):
    """``sup |sum A_ij s_i t_j|`` over ``|s_i|, |t_j| <= 1``.

    The inner supremum over ``t`` is ``sum_j |(s^T A)_j|``. For real ``A``
    the outer one is an exact enumeration of sign vectors. For complex
    ``A`` it runs over a phase grid of ``phase_resolution`` points per
    coordinate; the true value is at most the grid value plus
    ``2 sin(pi / (2 R)) * sum |A_ij|``, returned as the second element
    when ``return_bound`` is set.
    """
    A = np.atleast_2d(np.asarray(A))
    if max(A.shape) > INJECTIVE_CAP:
        raise SizeLimit(f"side {max(A.shape)} exceeds the brute-force cap {INJECTIVE_CAP}")
    if A.shape[0] > A.shape[1]:
        A = A.T
    n = A.shape[0]
    real = not (np.iscomplexobj(A) and np.any(A.imag))
    if real:
        A = np.real(A)
        # the first sign is fixed by the global symmetry s -> -s
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n - 1)))
        S = np.hstack([np.ones((signs.shape[0], 1)), signs]) if n > 1 else np.ones((1, 1))
        value = float(np.abs(S @ A).sum(axis=1).max())
        return (value, value) if return_bound else value
    R = int(phase_resolution)
    if R ** (n - 1) > 1 << 22:
        raise SizeLimit(f"phase grid {R}^{n - 1} too large")
    roots = np.exp(2j * np.pi * np.arange(R) / R)
    best = 0.0
    for combo in itertools.product(range(R), repeat=n - 1) if n > 1 else [()]:
        s = np.concatenate([[1.0], roots[list(combo)]])
        best = max(best, float(np.abs(s @ A).sum()))
    bound = best + 2 * np.sin(np.pi / (2 * R)) * float(np.abs(A).sum())
    return (best, bound) if return_bound else best


@dataclass(frozen=True)
class LNormUpper:
    """Upper estimate of the projective lifting norm from explicit liftings."""

    value: float
    lifting: str
    matrix: np.ndarray = field(repr=False)
    label: str = "upper estimate"


def _liftings(a: np.ndarray):
    d = a.size - 1
    n = d + 1
    central = np.zeros((n, n), dtype=a.dtype)
    for k, c in enumerate(a):
        if k % 2 == 0:
            central[k // 2, k // 2] = c
        else:
            central[(k - 1) // 2, (k + 1) // 2] = c / 2
            central[(k + 1) // 2, (k - 1) // 2] = c / 2
    row = np.zeros((n, n), dtype=a.dtype)
    row[0, :] = a
    idx = np.add.outer(np.arange(n), np.arange(n))
    spread = np.where(idx <= d, a[np.minimum(idx, d)] / (idx + 1), 0).astype(a.dtype)
    return {"diagonal split": central, "first row": row, "uniform antidiagonal": spread}


def l_norm_upper(P: AnalyticPoly, phase_resolution: int = 16) -> LNormUpper:
    """Smallest injective norm among liftings ``A`` supported on the triangle
    ``i + j <= deg P`` with antidiagonal sums equal to the coefficients of P.

    Any such lifting bounds the infimum from above, so the result is an
    upper estimate only. The diagonal split mirrors the dyadic factorization
    (even index on the diagonal, odd index halved across the two central
    cells).
    """
    a = P.to_dense()
    if not np.any(a.imag):
        a = a.real
    if a.size == 0:
        return LNormUpper(0.0, "zero", np.zeros((1, 1)))
    best = None
    for name, L in _liftings(a).items():
        _, up = injective_norm_bruteforce(L, phase_resolution, return_bound=True)
        if best is None or up < best.value:
            best = LNormUpper(float(up), name, L)
    return best
