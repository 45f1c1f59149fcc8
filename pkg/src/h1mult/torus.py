"""Polynomials on the unit circle: grid evaluation, norms, Riesz factorization
and the special kernels used by the witness constructions.

Sequences are stored sparsely as sorted integer indices with complex values.
Point ``j`` of a grid of size ``N`` stands for ``z = exp(2 pi i j / N)``, so
evaluation is ``N * ifft`` of the zero-padded coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    FactorizationDiverged,
    GridTooSmall,
    NotPowerOfTwo,
    SizeLimit,
    ValidationError,
    ZeroInput,
)

__all__ = [
    "AnalyticPoly",
    "MultiplierSeq",
    "TorusGrid",
    "RieszFactorPair",
    "QuadratureResult",
    "eval_grid",
    "norm_p",
    "l1_quadrature",
    "riesz_factor",
    "lvp_kernel",
    "dirichlet_poly",
    "is_power_of_two",
    "next_power_of_two",
]

# largest K for which lvp_kernel is materialized (3 * 2**K coefficients)
LVP_MAX_K = 24


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (int(n) & (int(n) - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _check_grid(grid_size):
    if not is_power_of_two(grid_size):
        raise NotPowerOfTwo(f"grid size {grid_size} is not a power of two")
    return int(grid_size)


def _canonical(data, index=None, values=None):
    if data is not None:
        if isinstance(data, Mapping):
            pairs = list(data.items())
        else:
            pairs = list(data)
        index = np.array([int(k) for k, _ in pairs], dtype=np.int64)
        values = np.array([complex(v) for _, v in pairs], dtype=np.complex128)
    index = np.asarray(index if index is not None else [], dtype=np.int64).ravel()
    values = np.asarray(values if values is not None else [], dtype=np.complex128).ravel()
    if index.shape != values.shape:
        raise ValidationError("index and value arrays differ in length")
    if index.size and index.min() < 0:
        raise ValidationError("indices must be nonnegative")
    order = np.argsort(index, kind="stable")
    index, values = index[order], values[order]
    if index.size > 1 and np.any(np.diff(index) == 0):
        # merge repeated indices by summation
        uniq, inv = np.unique(index, return_inverse=True)
        summed = np.zeros(uniq.size, dtype=np.complex128)
        np.add.at(summed, inv, values)
        index, values = uniq, summed
    keep = values != 0
    index, values = index[keep].copy(), values[keep].copy()
    index.setflags(write=False)
    values.setflags(write=False)
    return index, values


@dataclass(frozen=True, eq=False, init=False)
class _SparseSeq:
    """Finitely supported complex sequence on the nonnegative integers."""

    index: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __init__(self, data: Mapping[int, complex] | Iterable | None = None, *,
                 index=None, values=None):
        idx, val = _canonical(data, index, values)
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, arr, offset: int = 0):
        arr = np.asarray(arr, dtype=np.complex128).ravel()
        return cls(index=np.arange(arr.size) + offset, values=arr)

    @property
    def _max_index(self) -> int:
        return int(self.index[-1]) if self.index.size else -1

    def to_dense(self, length: int | None = None) -> np.ndarray:
        """Dense coefficient vector of the given length (entries beyond it dropped)."""
        if length is None:
            length = self._max_index + 1
        out = np.zeros(length, dtype=np.complex128)
        keep = self.index < length
        out[self.index[keep]] = self.values[keep]
        return out

    def get(self, n: int) -> complex:
        pos = np.searchsorted(self.index, n)
        if pos < self.index.size and self.index[pos] == n:
            return complex(self.values[pos])
        return 0j

    def items(self):
        return zip(self.index.tolist(), self.values.tolist())

    def scale(self, c: complex):
        return type(self)(index=self.index, values=self.values * c)

    def __len__(self):
        return int(self.index.size)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (np.array_equal(self.index, other.index)
                and np.array_equal(self.values, other.values))

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(index=np.concatenate([self.index, other.index]),
                          values=np.concatenate([self.values, other.values]))

    def __repr__(self):
        body = ", ".join(f"{n}: {v:g}" for n, v in list(self.items())[:6])
        if len(self) > 6:
            body += ", ..."
        return f"{type(self).__name__}({{{body}}})"


class AnalyticPoly(_SparseSeq):
    """Analytic trigonometric polynomial ``sum_n c_n z^n``.

    ``degree`` is the largest stored index, and -1 for the zero polynomial.
    """

    @property
    def coeffs(self) -> dict:
        return dict(self.items())

    @property
    def degree(self) -> int:
        return self._max_index

    @property
    def low_degree(self) -> int:
        """Order of vanishing at the origin (-1 for the zero polynomial)."""
        return int(self.index[0]) if self.index.size else -1

    @classmethod
    def monomial(cls, m: int, c: complex = 1.0):
        return cls({m: c})

    def __call__(self, z):
        """Direct evaluation at arbitrary points (Horner on the dense vector)."""
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for c in self.to_dense()[::-1]:
            out = out * z + c
        return out


class MultiplierSeq(_SparseSeq):
    """Sparse multiplier sequence ``phi``; absent entries are exactly zero."""

    @property
    def entries(self) -> dict:
        return dict(self.items())

    @property
    def support_max(self) -> int:
        return self._max_index

    def __call__(self, n: int) -> complex:
        return self.get(n)

    def __mul__(self, other):
        """Pointwise product of two multipliers."""
        if not isinstance(other, MultiplierSeq):
            return NotImplemented
        common, ia, ib = np.intersect1d(self.index, other.index,
                                        assume_unique=True, return_indices=True)
        return MultiplierSeq(index=common, values=self.values[ia] * other.values[ib])

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))


@dataclass(frozen=True)
class TorusGrid:
    size: int
    values: np.ndarray = field(repr=False)
    oversample: float

    @property
    def points(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.size) / self.size)


@dataclass(frozen=True)
class RieszFactorPair:
    """Factors ``x = g h`` sampled on a grid, with ``l2g == l2h``."""

    g: TorusGrid
    h: TorusGrid
    l2g: float
    l2h: float
    residual: float
    norm1: float
    tol: float
    g_zeros: tuple = ()
    h_zeros: tuple = ()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    grid_size: int
    refinement_gap: float


def eval_grid(p: AnalyticPoly, grid_size: int) -> TorusGrid:
    """Sample ``p`` at the ``grid_size`` roots of unity."""
    n = _check_grid(grid_size)
    if n <= 2 * p.degree:
        raise GridTooSmall(f"grid {n} must exceed twice the degree {p.degree}")
    c = p.to_dense(n)
    values = n * np.fft.ifft(c)
    return TorusGrid(n, values, n / (p.degree + 1) if p.degree >= 0 else float("inf"))


def _default_grid(degree: int, oversample: int = 8) -> int:
    return max(16, next_power_of_two(oversample * (degree + 1)))


def norm_p(p: AnalyticPoly, exponent, grid_size: int | None = None, *,
           bernstein: bool = False) -> float:
    """L^p norm on the circle for ``exponent`` in {1, 2, inf}.

    The 2-norm is computed from the coefficients. The 1- and inf-norms are
    grid quadratures (mean and max of ``|p|``); ``bernstein=True`` multiplies
    the grid max by ``1 / (1 - pi * degree / grid_size)``, which turns it into
    a guaranteed upper bound.
    """
    if exponent == 2:
        return float(np.sqrt(np.sum(np.abs(p.values) ** 2)))
    if exponent not in (1, np.inf, float("inf"), "inf"):
        raise ValidationError(f"unsupported exponent {exponent!r}")
    if grid_size is None:
        grid_size = _default_grid(p.degree)
    n = _check_grid(grid_size)
    if n <= 4 * p.degree:
        raise GridTooSmall(f"grid {n} must exceed four times the degree {p.degree}")
    if p.degree < 0:
        return 0.0
    absval = np.abs(eval_grid(p, n).values)
    if exponent == 1:
        return float(absval.mean())
    top = float(absval.max())
    if bernstein:
        top /= 1.0 - np.pi * p.degree / n
    return top


def l1_quadrature(p: AnalyticPoly, grid_size: int) -> QuadratureResult:
    """L^1 quadrature at ``grid_size`` with the gap to the doubled grid."""
    v = norm_p(p, 1, grid_size)
    v2 = norm_p(p, 1, 2 * grid_size)
    return QuadratureResult(v, int(grid_size), abs(v - v2))


def _analytic_part(u: np.ndarray) -> np.ndarray:
    """Grid values of ``u + i H u`` for a real grid function ``u``."""
    n = u.size
    uh = np.fft.fft(u) / n
    a = np.zeros(n, dtype=np.complex128)
    a[0] = uh[0].real
    a[1:n // 2] = 2 * uh[1:n // 2]
    a[n // 2] = uh[n // 2].real
    return n * np.fft.ifft(a)


def _blaschke(zeros, z):
    out = np.ones_like(z)
    for a in zeros:
        if a == 0:
            out = out * z
        else:
            out = out * (z - a) / (1 - np.conj(a) * z)
    return out


def riesz_factor(x: AnalyticPoly, grid_size: int, tol: float = 1e-8, *,
                 inner_radius: float = 1 - 1e-6) -> RieszFactorPair:
    """Split ``x = g h`` with ``||g||_2 = ||h||_2 = ||x||_1 ** 0.5``.

    The outer part is ``exp((u + iHu) / 2)`` with ``u`` the floored
    log-modulus of ``x`` on the grid. Zeros strictly inside ``|z| <
    inner_radius`` form the Blaschke part; they are sorted by modulus and
    dealt alternately to ``g`` and ``h`` so that both get half the
    multiplicity (``g`` takes the extra one).
    """
    if x.degree < 0:
        raise ZeroInput("cannot factor the zero polynomial")
    n = _check_grid(grid_size)
    if n < 8 * x.degree:
        raise GridTooSmall(f"grid {n} must be at least eight times the degree {x.degree}")
    z = np.exp(2j * np.pi * np.arange(n) / n)
    xv = eval_grid(x, n).values
    absx = np.abs(xv)
    norm1 = float(absx.mean())

    m0 = x.low_degree
    reduced = x.to_dense()[m0:]
    roots = np.roots(reduced[::-1]) if reduced.size > 1 else np.array([])
    inner = sorted((r for r in roots if abs(r) < inner_radius), key=abs)
    zeros = [0j] * m0 + list(inner)
    g_zeros, h_zeros = tuple(zeros[0::2]), tuple(zeros[1::2])

    eps = 1e-12 * absx.max()
    u = np.log(np.maximum(absx, eps))
    outer_half = np.exp(0.5 * _analytic_part(u))
    bg = _blaschke(g_zeros, z)
    bh = _blaschke(h_zeros, z)
    prod = bg * bh * outer_half ** 2
    w = np.vdot(prod, xv)
    phase = w / abs(w) if w != 0 else 1.0
    gv = phase * bg * outer_half
    hv = bh * outer_half
    l2g = float(np.sqrt(np.mean(np.abs(gv) ** 2)))
    l2h = float(np.sqrt(np.mean(np.abs(hv) ** 2)))
    residual = float(np.abs(xv - gv * hv).max())
    over = n / (x.degree + 1)
    pair = RieszFactorPair(TorusGrid(n, gv, over), TorusGrid(n, hv, over),
                           l2g, l2h, residual, norm1, tol, g_zeros, h_zeros)
    if residual > tol * norm1 or l2g * l2h > norm1 * (1 + tol):
        raise FactorizationDiverged(
            f"residual {residual:.3g} and norm product {l2g * l2h:.6g} miss "
            f"tol {tol:g} against ||x||_1 = {norm1:.6g}")
    return pair


def lvp_kernel(K: int) -> AnalyticPoly:
    """Trapezoidal kernel: rises linearly on [0, 2^K], equals 1 on
    [2^K, 2^(K+1)], falls linearly to 0 at 3 * 2^K."""
    if K < 1:
        raise ValidationError("K must be at least 1")
    if K > LVP_MAX_K:
        raise SizeLimit(f"K = {K} would materialize 3 * 2^{K} coefficients")
    m = 1 << K
    n = np.arange(3 * m, dtype=np.float64)
    c = np.minimum(np.minimum(n / m, 1.0), (3 * m - n) / m)
    return AnalyticPoly(index=np.arange(3 * m), values=c)


def dirichlet_poly(q: int) -> AnalyticPoly:
    """S(z) = 1 + z + ... + z^q."""
    if q < 1:
        raise ValidationError("q must be at least 1")
    return AnalyticPoly(index=np.arange(q + 1), values=np.ones(q + 1))
