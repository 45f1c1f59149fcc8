"""Witness multipliers separating two- and three-fold multiplier norms.

The family ``F_j(z) = S(xi_j z) / sqrt(q + 1)``, with ``S`` the Dirichlet
polynomial of degree ``q`` and ``xi_j`` the ``q``-th roots of unity, is
admissible for ``C(q)``: ``q`` polynomials of degree ``q`` and unit L2
norm. Placing ``F_j`` at offset ``2^(2p)`` gives the witness ``phi_K``
whose dyadic blocks are separate, so its two-fold norm stays below 1
while the family integral grows like ``sqrt(q)``.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    DegreeViolation,
    FamilyLengthMismatch,
    GridTooSmall,
    NormViolation,
    PropertyCheckFailed,
    ValidationError,
)
from .hankel import build_hankel, dyadic_upper, gamma2_sdp
from .shiftmul import family_indices, family_sup_integral, m3_lower_from_family
from .torus import (
    AnalyticPoly,
    MultiplierSeq,
    _check_grid,
    eval_grid,
    next_power_of_two,
    norm_p,
)

__all__ = [
    "BERNSTEIN_A",
    "BERNSTEIN_B",
    "BernsteinGrid",
    "CqEstimate",
    "SeparationRow",
    "SeparationReport",
    "bernstein_grid",
    "rotated_dirichlet_family",
    "cq_lower_integral",
    "cq_estimate",
    "default_cq_grid",
    "build_witness",
    "separation_experiment",
]

BERNSTEIN_A = 1.0 / (1.0 - np.pi / 4.0)
BERNSTEIN_B = 8


@dataclass(frozen=True)
class BernsteinGrid:
    q: int
    points: np.ndarray = field(repr=False)
    a: float
    b: int

    def recovers(self, F: AnalyticPoly, fine_grid: int | None = None) -> bool:
        """Check ``||F||_inf <= a * max_grid |F|`` with a certified sup."""
        n = fine_grid or next_power_of_two(64 * (F.degree + 1))
        sup = norm_p(F, np.inf, n, bernstein=True)
        on_grid = np.abs(F(self.points)).max()
        return sup <= self.a * on_grid * (1 + 1e-12)


def bernstein_grid(q: int, checks: int = 20, seed: int = 0) -> BernsteinGrid:
    """``8q`` equispaced points with recovery constant ``1 / (1 - pi/4)``.

    Between grid points at spacing ``2 pi / 8q`` the derivative bound
    ``||F'|| <= q ||F||`` limits the loss to ``pi/4 * ||F||``. The property
    is spot-checked on ``checks`` random polynomials of degree ``q``.
    """
    if q < 1:
        raise ValidationError("q must be at least 1")
    m = BERNSTEIN_B * q
    grid = BernsteinGrid(q, np.exp(2j * np.pi * np.arange(m) / m), BERNSTEIN_A, BERNSTEIN_B)
    rng = np.random.default_rng(seed)
    for _ in range(checks):
        c = rng.normal(size=q + 1) + 1j * rng.normal(size=q + 1)
        if not grid.recovers(AnalyticPoly.from_dense(c)):
            raise PropertyCheckFailed(f"sup recovery failed on the grid for q = {q}")
    return grid


def rotated_dirichlet_family(q: int) -> list:
    """``[S(xi_j z) / sqrt(q + 1) for j = 1..q]`` with ``xi_j = exp(2 pi i j / q)``."""
    if q < 1:
        raise ValidationError("q must be at least 1")
    n = np.arange(q + 1)
    fam = []
    for j in range(1, q + 1):
        xi = np.exp(2j * np.pi * j / q)
        fam.append(AnalyticPoly.from_dense(xi ** n / np.sqrt(q + 1)))
    return fam


def cq_lower_integral(q: int, grid_size: int) -> float:
    """Grid quadrature of ``int max_j |S(xi_j z)| dm / sqrt(q + 1)``.

    When ``q`` divides the grid size, the rotation by ``xi_j`` is a cyclic
    shift by ``j N / q`` points, so the max over rotations is a max over the
    columns of a reshaped array.
    """
    n = _check_grid(grid_size)
    if n <= 8 * q:
        raise GridTooSmall(f"grid {n} must exceed 8q = {8 * q}")
    base = np.abs(eval_grid(AnalyticPoly.from_dense(np.ones(q + 1)), n).values)
    if n % q == 0:
        best = base.reshape(q, n // q).max(axis=0)
    else:
        best = np.zeros(n)
        for j in range(1, q + 1):
            rot = np.exp(2j * np.pi * j * np.arange(q + 1) / q)
            np.maximum(best, np.abs(eval_grid(AnalyticPoly.from_dense(rot), n).values),
                       out=best)
    return float(best.mean() / np.sqrt(q + 1))


@dataclass(frozen=True)
class CqEstimate:
    q: int
    lower: float
    upper: float
    family_descriptor: str
    grid_size: int

    def to_json(self) -> dict:
        return {"q": self.q, "lower": self.lower, "upper": self.upper,
                "familyDescriptor": self.family_descriptor, "gridSize": self.grid_size}


def default_cq_grid(q: int) -> int:
    return max(1024, next_power_of_two(64 * q))


def cq_estimate(q: int, grid_size: int | None = None) -> CqEstimate:
    """Lower bound on ``C(q)`` from the rotated Dirichlet family, with the
    ceiling ``sqrt(q)``."""
    if q < 1:
        raise ValidationError("q must be at least 1")
    n = default_cq_grid(q) if grid_size is None else grid_size
    lower = cq_lower_integral(q, n)
    return CqEstimate(q, lower, float(np.sqrt(q)),
                      f"S(xi_j z)/sqrt({q + 1}), xi_j = exp(2 pi i j/{q}), j = 1..{q}", int(n))


def build_witness(K: int, family) -> MultiplierSeq:
    """``phi_K = F_hat / 4`` with ``F = sum_{K/2 < p < K} z^(2^(2p)) F_(p - K/2)``.

    Block ``p`` occupies ``[2^(2p), 2^(2p) + q]`` and the support stays
    inside ``[0, 2^(2K)]``. Only the nonzero entries are stored.
    """
    if K < 4 or K % 2:
        raise ValidationError("K must be an even integer >= 4")
    q = K // 2 - 1
    family = list(family)
    if len(family) != q:
        raise FamilyLengthMismatch(f"K = {K} needs q = {q} polynomials, got {len(family)}")
    # room for the kernel extraction: each block must fit below 2^(K-1)
    assert q <= 1 << (K - 1)
    index, values = [], []
    for p, f in zip(family_indices(K), family):
        if f.degree > q:
            raise DegreeViolation(f"family member has degree {f.degree} > q = {q}")
        if norm_p(f, 2) > 1 + 1e-12:
            raise NormViolation(f"family member has L2 norm {norm_p(f, 2):.6g} > 1")
        index.append(f.index + (1 << (2 * p)))
        values.append(f.values / 4)
    if not index:
        return MultiplierSeq()
    return MultiplierSeq(index=np.concatenate(index), values=np.concatenate(values))


@dataclass(frozen=True)
class SeparationRow:
    K: int
    q: int
    m2UpperProof: float
    m2UpperSdp: float | None
    m3Lower: float
    m3LowerStatement: float
    ratio: float
    refinementGap: float
    gridSize: int


@dataclass(frozen=True)
class SeparationReport:
    rows: tuple
    fitExponent: float | None
    fitIntercept: float | None
    fitR2: float | None

    def to_json(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "fitExponent": self.fitExponent,
                "fitIntercept": self.fitIntercept, "fitR2": self.fitR2}

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(SeparationRow.__dataclass_fields__) + ["fitExponent", "fitR2"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.rows:
            d = asdict(r)
            w.writerow([_fmt(d[k]) for k in SeparationRow.__dataclass_fields__]
                       + [_fmt(self.fitExponent), _fmt(self.fitR2)])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _grid_for(q, policy):
    if callable(policy):
        return int(policy(q))
    if policy is None:
        return default_cq_grid(q)
    return int(policy)


def _separation_row(K, grid_policy, sdp_max_K, sdp_tol):
    q = K // 2 - 1
    family = rotated_dirichlet_family(q)
    phi = build_witness(K, family)
    m2 = dyadic_upper(phi).proof_bound
    n = _grid_for(q, grid_policy)
    scaled = [f.scale(0.25) for f in family]
    m3 = m3_lower_from_family(scaled, K, n)
    m3_fine = m3_lower_from_family(scaled, K, 2 * n)
    m3_statement = m3 * 2 / 3
    sdp_val = None
    if K <= sdp_max_K:
        H = build_hankel(phi, phi.support_max + 1)
        sdp_val = gamma2_sdp(H, tol=sdp_tol).value
    return SeparationRow(K, q, m2, sdp_val, m3, m3_statement, m3 / m2,
                         abs(m3 - m3_fine), n)


def separation_experiment(Ks, grid_policy=None, *, sdp_max_K: int = 4,
                          sdp_tol: float = 1e-6, workers: int = 1) -> SeparationReport:
    """Two-fold upper and three-fold lower bounds for ``phi_K`` over ``Ks``.

    ``grid_policy`` is ``None`` (default grid per ``q``), an integer grid
    size, or a callable ``q -> grid size``. The log-log fit of ratio
    against ``q`` uses the rows with ``q >= 2``.
    """
    Ks = [int(K) for K in Ks]
    for K in Ks:
        if K < 4 or K % 2:
            raise ValidationError(f"K = {K} is not an even integer >= 4")
    args = [(K, grid_policy, sdp_max_K, sdp_tol) for K in Ks]
    if workers > 1 and not callable(grid_policy):
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_separation_row, *zip(*args)))
    else:
        rows = [_separation_row(*a) for a in args]
    fit = [r for r in rows if r.q >= 2]
    slope = intercept = r2 = None
    if len({r.q for r in fit}) >= 2:
        res = stats.linregress(np.log([r.q for r in fit]), np.log([r.ratio for r in fit]))
        slope, intercept, r2 = float(res.slope), float(res.intercept), float(res.rvalue ** 2)
    return SeparationReport(tuple(rows), slope, intercept, r2)
