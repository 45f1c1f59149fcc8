"""Acceptance suite: one test per criterion, each with its runtime budget."""

import itertools
import time

import numpy as np
import pytest
from scipy import stats

from conftest import oracle_matrix, random_poly
from h1mult import (
    AnalyticPoly,
    MultiplierSeq,
    apply_multiplier,
    build_hankel,
    build_witness,
    coeff_sequence,
    cq_estimate,
    dyadic_upper,
    gamma2_sdp,
    lvp_kernel,
    md_certificate,
    md_eval,
    norm_p,
    power_bound_certify,
    separation_experiment,
    shift_maximal,
    shifted_multiplier,
    von_neumann_check,
)
from h1mult.shiftmul import family_indices, family_sup_integral
from h1mult.witness import rotated_dirichlet_family

R2 = 2 * np.sqrt(2) + 1


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s > {self.seconds} s"


def test_criterion_01_gamma2_oracle_equivalence(oracle):
    entries = oracle["gamma2_2x2"] + oracle["gamma2_small"]
    assert len(oracle["gamma2_2x2"]) == 81 and len(oracle["gamma2_small"]) == 10
    with Budget(10):
        for e in entries:
            A = oracle_matrix(e)
            cert = gamma2_sdp(A, tol=1e-6)
            if e["value"] == 0:
                assert cert.value == 0
                continue
            assert abs(cert.value - e["value"]) <= 1e-5 * e["value"]
            assert cert.gap <= 1e-6 * cert.value


def test_criterion_02_dyadic_sandwich():
    rng = np.random.default_rng(2024)
    with Budget(300):
        for _ in range(100):
            phi = MultiplierSeq.from_dense(rng.normal(size=65))
            n = phi.support_max + 1
            H = build_hankel(phi, n).entries
            cert = gamma2_sdp(H)
            dy = dyadic_upper(phi)
            assert np.abs(H).max() <= cert.value * (1 + 1e-12)
            assert cert.value <= R2 * dy.block_sup + dy.phi0 + 1e-6
            assert np.array_equal(dy.dense_reconstruction(n), H)


def test_criterion_03_lvp_bound():
    with Budget(30):
        for K in range(1, 13):
            assert norm_p(lvp_kernel(K), 1) <= 2 * (1 + 1e-3)


def test_criterion_04_witness_m2_bound_k4():
    with Budget(60):
        phi = build_witness(4, rotated_dirichlet_family(1))
        H = build_hankel(phi, 66)
        assert H.n == 66 and phi.support_max == 65
        assert gamma2_sdp(H).value <= 1 + 1e-4


def test_criterion_05_kernel_extraction_k6():
    K, grid = 6, 1 << 15
    with Budget(120):
        q = K // 2 - 1
        fam = rotated_dirichlet_family(q)
        phi = build_witness(K, fam)
        x = lvp_kernel(K)
        z = np.exp(2j * np.pi * np.arange(grid) / grid)
        for p, F in zip(family_indices(K), fam):
            k = (1 << (2 * p)) - (1 << K)
            out = shifted_multiplier(phi, x, k)
            # reindexed by n + k, the window is exactly z^(2^(2p)) F_p / 4
            got = {int(n) + k: v for n, v in out.items()}
            want = {int(n) + (1 << (2 * p)): v / 4 for n, v in F.items()}
            assert got.keys() == want.keys()
            for idx in want:
                assert got[idx] == want[idx]
            # on the grid the extracted polynomial is z^(2^K) F_p / 4
            assert np.allclose(np.asarray([out(zz) for zz in z[::512]]),
                               z[::512] ** (1 << K) * F(z[::512]) / 4, atol=1e-12)
        res = shift_maximal(phi, x, grid, refine=False)
        scaled = [f.scale(0.25) for f in fam]
        assert res.value >= family_sup_integral(scaled, grid) * (1 - 1e-12)


def test_criterion_06_cq_scaling():
    with Budget(600):
        qs = [1 << k for k in range(4, 13)]
        rows = [cq_estimate(q) for q in qs]
        for q in list(range(1, 17)) + [24, 100]:
            est = cq_estimate(q)
            assert est.lower <= np.sqrt(q) * (1 + 1e-9)
        for est in rows:
            assert est.lower <= est.upper * (1 + 1e-9)
        fit = stats.linregress(np.log(qs), np.log([r.lower for r in rows]))
        assert 0.45 <= fit.slope <= 0.55
        assert abs(cq_estimate(1).lower - 4 / np.pi / np.sqrt(2)) <= 1e-4


def test_criterion_07_separation_trend():
    with Budget(600):
        rep = separation_experiment(list(range(6, 26, 2)), sdp_max_K=0)
        ratios = [r.ratio for r in rep.rows]
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))
        assert 0.35 <= rep.fitExponent <= 0.65
        assert rep.fitR2 >= 0.95
        assert all(r.refinementGap <= 1e-4 * r.m3Lower for r in rep.rows)


def test_criterion_08_shift_maximal_chain():
    rng = np.random.default_rng(8)
    with Budget(120):
        for _ in range(200):
            s = int(rng.integers(1, 65))
            d = int(rng.integers(0, 65))
            phi = MultiplierSeq.from_dense(rng.normal(size=s) + 1j * rng.normal(size=s))
            x = random_poly(rng, d)
            grid = 4096
            res = shift_maximal(phi, x, grid)
            lower = norm_p(apply_multiplier(phi, x), 1, grid)
            upper = phi.l2_norm() * norm_p(x, 1, grid)
            assert lower <= res.value * (1 + 1e-12)
            assert res.value <= upper * (1 + 1e-6)
            assert res.refinement_gap <= 1e-4 * res.value
        x = random_poly(rng, 20)
        for m in range(0, 30):
            ref = np.abs(x.to_dense()[:m + 1]).max()
            assert shift_maximal(MultiplierSeq({m: 1.0}), x, 128).value == ref


def test_criterion_09_von_neumann():
    rng = np.random.default_rng(9)
    with Budget(60):
        for _ in range(200):
            dim = int(rng.integers(1, 9))
            deg = int(rng.integers(0, 17))
            G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            T = G / np.linalg.norm(G, 2) * rng.uniform(0.5, 1.0)
            P = random_poly(rng, deg)
            rec = von_neumann_check(P, T)
            assert rec.passed and rec.lhs <= rec.rhs * (1 + 1e-8)


def _md_case(T, xi, eta, d=3, tmax=4):
    op = power_bound_certify(T)
    cert = md_certificate(op, xi, eta, d)
    phi = coeff_sequence(op, xi, eta, d * tmax)
    for ts in itertools.product(range(tmax + 1), repeat=d):
        assert abs(md_eval(cert, *ts) - phi(sum(ts))) <= 1e-10
    bound = op.c_eff ** d * np.linalg.norm(xi) * np.linalg.norm(eta)
    assert cert.norm_bound <= bound * (1 + 1e-12)


def test_criterion_10_md_certificate():
    rng = np.random.default_rng(10)
    with Budget(60):
        _md_case([[0.0, 1.0], [0.0, 0.0]], np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        _md_case([[0.7]], np.array([1.0]), np.array([1.0]))
        for _ in range(20):
            dim = int(rng.integers(1, 7))
            G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            T = G / np.linalg.norm(G, 2) * rng.uniform(0.3, 1.0)
            xi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            eta = rng.normal(size=dim)
            _md_case(T, xi, eta)


def test_criterion_11_submultiplicativity():
    rng = np.random.default_rng(11)
    with Budget(180):
        for _ in range(50):
            a = MultiplierSeq.from_dense(rng.normal(size=int(rng.integers(1, 33))))
            b = MultiplierSeq.from_dense(rng.normal(size=int(rng.integers(1, 33))))
            prod = a * b
            if not len(prod):
                continue
            ca = gamma2_sdp(build_hankel(a, a.support_max + 1))
            cb = gamma2_sdp(build_hankel(b, b.support_max + 1))
            cp = gamma2_sdp(build_hankel(prod, prod.support_max + 1))
            # certified lower bound of the product against the factors' upper bounds
            assert cp.lower <= ca.value * cb.value * (1 + 1e-6)
            assert cp.value <= ca.value * cb.value * (1 + 1e-6)
