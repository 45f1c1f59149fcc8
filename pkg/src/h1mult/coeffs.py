"""Coefficient sequences ``phi(n) = <T^n xi, eta>`` of power-bounded matrices.

An inner product ``<a, b>`` is linear in ``a``: ``<a, b> = sum a_i conj(b_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    GridTooSmall,
    NotAContraction,
    NotCertifiable,
    SizeLimit,
    ValidationError,
)
from .torus import AnalyticPoly, MultiplierSeq, norm_p

__all__ = [
    "DIM_CAP",
    "PowerBoundedOp",
    "Stage",
    "MdCertificate",
    "VonNeumannRecord",
    "power_bound_certify",
    "coeff_sequence",
    "md_certificate",
    "md_eval",
    "von_neumann_check",
    "poly_of_matrix",
]

DIM_CAP = 64
CONTRACTION_SLACK = 1e-12


def _opnorm(M) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _square(T) -> np.ndarray:
    T = np.atleast_2d(np.asarray(T))
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {T.shape}")
    if T.shape[0] > DIM_CAP:
        raise SizeLimit(f"dimension {T.shape[0]} exceeds the cap {DIM_CAP}")
    return T.astype(np.complex128 if np.iscomplexobj(T) else np.float64)


@dataclass(frozen=True)
class PowerBoundedOp:
    """A matrix with a certified bound ``sup_{n>=1} ||T^n|| <= certified_c``."""

    matrix: np.ndarray = field(repr=False)
    horizon: int
    certified_c: float
    tail_rationale: str
    scan_norms: tuple = field(default=(), repr=False)
    contraction: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def c_eff(self) -> float:
        """Bound on ``sup_{n>=0} ||T^n||``; the ``n = 0`` term is the identity."""
        return max(1.0, self.certified_c)


def power_bound_certify(T, N_max: int = 256) -> PowerBoundedOp:
    """Certify ``sup_{n>=1} ||T^n||``.

    Contractions get ``c = ||T||`` directly. Otherwise the norms of
    ``T, ..., T^N`` are scanned and, provided ``||T^N|| < 1``, every later
    power obeys ``||T^(aN+r)|| <= ||T^N||^a ||T^r||`` which the scan
    already dominates.
    """
    T = _square(T)
    if N_max < 1:
        raise ValidationError("N_max must be positive")
    norm1 = _opnorm(T)
    if norm1 <= 1 + CONTRACTION_SLACK:
        return PowerBoundedOp(T, int(N_max), norm1,
                              "contraction: ||T^n|| <= ||T||^n <= ||T||", (norm1,), True)
    rho = float(np.abs(np.linalg.eigvals(T)).max())
    if rho >= 1:
        raise NotCertifiable(f"spectral radius {rho:.6g} >= 1 and ||T|| = {norm1:.6g} > 1")
    norms = []
    P = np.eye(T.shape[0], dtype=T.dtype)
    for _ in range(N_max):
        P = P @ T
        norms.append(_opnorm(P))
    last = norms[-1]
    if last >= 1:
        raise NotCertifiable(f"||T^{N_max}|| = {last:.6g} >= 1; enlarge N_max")
    scan = max(norms)
    tail = last * max([1.0] + norms[:-1])
    c = max(scan, tail)
    why = (f"scan n <= {N_max} gives {scan:.6g}; for n > {N_max}, "
           f"||T^n|| <= ||T^{N_max}|| max_(r<{N_max}) ||T^r|| = {tail:.6g}")
    return PowerBoundedOp(T, int(N_max), float(c), why, tuple(norms))


def _vectors(op, xi, eta):
    xi = np.asarray(xi).ravel()
    eta = np.asarray(eta).ravel()
    if xi.size != op.dim or eta.size != op.dim:
        raise DimensionMismatch(f"vectors of length {xi.size}, {eta.size} "
                                f"do not match dimension {op.dim}")
    return xi, eta


def coeff_sequence(op: PowerBoundedOp, xi, eta, N: int) -> MultiplierSeq:
    """``phi(n) = <T^n xi, eta>`` for ``0 <= n <= N`` by repeated application."""
    if N < 1:
        raise ValidationError("N must be positive")
    xi, eta = _vectors(op, xi, eta)
    out = np.empty(N + 1, dtype=np.complex128)
    v = xi.astype(np.complex128)
    for n in range(N + 1):
        out[n] = np.vdot(eta, v)
        v = op.matrix @ v
    return MultiplierSeq.from_dense(out)


class Stage:
    """One factor ``t -> xi_i(t)`` of a multi-fold factorization.

    ``kind`` is ``"row"`` (``eta^* T^t``), ``"op"`` (``T^t``) or ``"col"``
    (``T^t xi``). Values are produced on demand and cached.
    """

    def __init__(self, kind: str, T: np.ndarray, vec: np.ndarray | None = None):
        self.kind = kind
        self.T = T
        self.vec = vec
        self._cache = {}

    def __call__(self, t: int) -> np.ndarray:
        if t < 0:
            raise ValidationError("stage arguments are nonnegative")
        if t not in self._cache:
            if self.kind == "op":
                M = np.eye(self.T.shape[0], dtype=np.complex128)
                for _ in range(t):
                    M = M @ self.T
                self._cache[t] = M
            elif self.kind == "row":
                v = self.vec.conj().astype(np.complex128)
                for _ in range(t):
                    v = v @ self.T
                self._cache[t] = v[None, :]
            else:
                v = self.vec.astype(np.complex128)
                for _ in range(t):
                    v = self.T @ v
                self._cache[t] = v[:, None]
        return self._cache[t]

    @property
    def shape(self):
        n = self.T.shape[0]
        return {"row": (1, n), "op": (n, n), "col": (n, 1)}[self.kind]


@dataclass(frozen=True)
class MdCertificate:
    d: int
    stages: tuple = field(repr=False)
    stage_sups: tuple
    norm_bound: float
    c_eff: float


def _stage_sup(op: PowerBoundedOp, kind: str, vec=None) -> float:
    """``sup_{t>=0}`` of the stage norm: powers up to the horizon, after which
    ``||T^horizon|| < 1`` keeps every value below the scanned ones."""
    T = op.matrix
    if kind == "op":
        return op.c_eff
    if op.contraction:
        # norms never increase along the orbit
        return float(np.linalg.norm(vec))
    v = vec.astype(np.complex128)
    if kind == "row":
        v = v.conj()
    best = np.linalg.norm(v)
    for _ in range(op.horizon):
        v = v @ T if kind == "row" else T @ v
        best = max(best, np.linalg.norm(v))
    return float(best)


def md_certificate(op: PowerBoundedOp, xi, eta, d: int) -> MdCertificate:
    """Factorization ``phi(t_1 + ... + t_d) = eta^* T^t1 T^t2 ... T^td xi``.

    The first stage is a row vector, the last a column vector, and the
    ``d - 2`` middle stages are matrices. ``norm_bound`` is the product of
    the stage suprema, which is at most ``c^d ||xi|| ||eta||`` with
    ``c = max(1, certified_c)``.
    """
    if d < 2:
        raise ValidationError("d must be at least 2")
    xi, eta = _vectors(op, xi, eta)
    T = op.matrix
    stages = (Stage("row", T, eta),) + tuple(Stage("op", T) for _ in range(d - 2)) \
        + (Stage("col", T, xi),)
    sups = (_stage_sup(op, "row", eta),) + (op.c_eff,) * (d - 2) + (_stage_sup(op, "col", xi),)
    return MdCertificate(d, stages, sups, float(np.prod(sups)), op.c_eff)


def md_eval(cert: MdCertificate, *ts) -> complex:
    """Evaluate ``xi_1(t_1) ... xi_d(t_d)``."""
    if len(ts) == 1 and np.ndim(ts[0]) == 1:
        ts = tuple(ts[0])
    if len(ts) != cert.d:
        raise DimensionMismatch(f"expected {cert.d} arguments, got {len(ts)}")
    out = cert.stages[0](int(ts[0]))
    for stage, t in zip(cert.stages[1:], ts[1:]):
        out = out @ stage(int(t))
    return complex(out[0, 0])


def poly_of_matrix(P: AnalyticPoly, T) -> np.ndarray:
    """Horner evaluation of ``sum a_n T^n``."""
    T = np.asarray(T)
    eye = np.eye(T.shape[0], dtype=np.complex128)
    R = np.zeros_like(eye)
    for a in P.to_dense()[::-1]:
        R = R @ T + a * eye
    return R


@dataclass(frozen=True)
class VonNeumannRecord:
    lhs: float
    rhs: float
    passed: bool

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def von_neumann_check(P: AnalyticPoly, T, grid_size: int | None = None) -> VonNeumannRecord:
    """Compare ``||P(T)||`` with a certified upper bound on ``sup |P|``."""
    T = _square(T)
    if _opnorm(T) > 1 + CONTRACTION_SLACK:
        raise NotAContraction(f"||T|| = {_opnorm(T):.15g} > 1")
    if grid_size is None:
        grid_size = max(16, 1 << (8 * (P.degree + 1) - 1).bit_length())
    if grid_size <= 4 * P.degree:
        raise GridTooSmall(f"grid {grid_size} must exceed four times the degree {P.degree}")
    lhs = _opnorm(poly_of_matrix(P, T))
    rhs = norm_p(P, np.inf, grid_size, bernstein=True)
    return VonNeumannRecord(lhs, rhs, bool(lhs <= rhs * (1 + 1e-8)))
