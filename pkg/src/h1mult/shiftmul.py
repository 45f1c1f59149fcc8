"""Shifted multipliers and the maximal functional
``x -> int sup_k |sum_n x(n) phi(n + k) z^n| dm``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeViolation, FamilyLengthMismatch, GridTooSmall, ValidationError
from .torus import AnalyticPoly, MultiplierSeq, _check_grid, eval_grid

__all__ = [
    "ShiftMaximalResult",
    "apply_multiplier",
    "shifted_multiplier",
    "candidate_shifts",
    "shift_maximal",
    "family_indices",
    "family_sup_integral",
    "m3_lower_from_family",
]

# number of shifts evaluated per batched FFT
_BATCH = 64


@dataclass(frozen=True)
class ShiftMaximalResult:
    value: float
    grid_size: int
    k_range: tuple
    refinement_gap: float
    shifts_evaluated: int

    def to_json(self) -> dict:
        return {"value": self.value, "gridSize": self.grid_size,
                "kRange": list(self.k_range), "refinementGap": self.refinement_gap}


def _lookup(phi: MultiplierSeq, idx: np.ndarray) -> np.ndarray:
    if not phi.index.size:
        return np.zeros(np.shape(idx), dtype=np.complex128)
    pos = np.minimum(np.searchsorted(phi.index, idx), phi.index.size - 1)
    return np.where(phi.index[pos] == idx, phi.values[pos], 0)


def apply_multiplier(phi: MultiplierSeq, x: AnalyticPoly) -> AnalyticPoly:
    """Coefficientwise product ``phi(n) x(n)``."""
    return AnalyticPoly(index=x.index, values=x.values * _lookup(phi, x.index))


def shifted_multiplier(phi: MultiplierSeq, x: AnalyticPoly, k: int) -> AnalyticPoly:
    """The polynomial ``sum_n x(n) phi(n + k) z^n``."""
    if k < 0:
        raise ValidationError("shifts are nonnegative")
    return AnalyticPoly(index=x.index, values=x.values * _lookup(phi, x.index + k))


def candidate_shifts(phi: MultiplierSeq, x: AnalyticPoly) -> np.ndarray:
    """Shifts ``k >= 0`` for which the shifted multiplier can be nonzero."""
    if not len(phi) or not len(x):
        return np.zeros(0, dtype=np.int64)
    diff = np.subtract.outer(phi.index, x.index).ravel()
    return np.unique(diff[diff >= 0])


def _max_profile(phi, x, shifts, n):
    best = np.zeros(n)
    for start in range(0, shifts.size, _BATCH):
        ks = shifts[start:start + _BATCH]
        rows = x.values[None, :] * _lookup(phi, x.index[None, :] + ks[:, None])
        nnz = np.count_nonzero(rows, axis=1)
        # a single monomial has constant modulus on the circle
        single = nnz == 1
        if np.any(single):
            np.maximum(best, np.abs(rows[single]).max(), out=best)
        multi = rows[nnz > 1]
        if multi.size:
            dense = np.zeros((multi.shape[0], n), dtype=np.complex128)
            dense[:, x.index] = multi
            vals = np.abs(n * np.fft.ifft(dense, axis=1))
            np.maximum(best, vals.max(axis=0), out=best)
    return best


def _mean(profile):
    if np.all(profile == profile[0]):
        return float(profile[0])
    return float(profile.mean())


def shift_maximal(phi: MultiplierSeq, x: AnalyticPoly, grid_size: int,
                  refine: bool = True) -> ShiftMaximalResult:
    """Grid quadrature of ``int sup_{k>=0} |sum_n x(n) phi(n+k) z^n| dm``.

    Only shifts ``0 <= k <= support_max`` can contribute; among those, the
    ones giving the zero polynomial are skipped. Memory stays
    ``O(grid_size)`` apart from one FFT batch. With ``refine`` the value at
    the doubled grid is computed too and the difference reported.
    """
    n = _check_grid(grid_size)
    if n <= 4 * x.degree:
        raise GridTooSmall(f"grid {n} must exceed four times the degree {x.degree}")
    shifts = candidate_shifts(phi, x)
    k_range = (0, max(phi.support_max, 0))
    if shifts.size == 0:
        return ShiftMaximalResult(0.0, n, k_range, 0.0, 0)
    value = _mean(_max_profile(phi, x, shifts, n))
    gap = 0.0
    if refine:
        gap = abs(value - _mean(_max_profile(phi, x, shifts, 2 * n)))
    return ShiftMaximalResult(value, n, k_range, gap, int(shifts.size))


def family_indices(K: int) -> list:
    """The block indices ``p`` with ``K/2 < p < K``."""
    if K < 3:
        raise ValidationError("K must be at least 3")
    return list(range(K // 2 + 1, K))


def family_sup_integral(F, grid_size: int) -> float:
    """Grid quadrature of ``int max_p |F_p| dm``."""
    n = _check_grid(grid_size)
    deg = max((f.degree for f in F), default=-1)
    if n <= 4 * deg:
        raise GridTooSmall(f"grid {n} must exceed four times the degree {deg}")
    best = np.zeros(n)
    for f in F:
        np.maximum(best, np.abs(eval_grid(f, n).values), out=best)
    return _mean(best)


def m3_lower_from_family(F, K: int, grid_size: int, constant: float = 2.0) -> float:
    """Lower bound ``int sup_p |F_p| dm / constant`` on the three-fold norm
    of the multiplier assembled from the blocks ``z^(2^(2p)) F_p``.

    ``constant = 2`` is the certified divisor; pass 3 for the conservative
    reading. Only the small ``F_p`` are evaluated.
    """
    ps = family_indices(K)
    F = list(F)
    if len(F) != len(ps):
        raise FamilyLengthMismatch(f"K = {K} needs {len(ps)} polynomials, got {len(F)}")
    limit = 1 << (K - 1)
    for p, f in zip(ps, F):
        if f.degree > limit:
            raise DegreeViolation(f"F_{p} has degree {f.degree} > 2^{K - 1}")
    return family_sup_integral(F, grid_size) / constant
