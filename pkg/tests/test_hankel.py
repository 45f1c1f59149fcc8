import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_matrix
from h1mult import (
    AnalyticPoly,
    MultiplierSeq,
    build_hankel,
    dyadic_upper,
    gamma2_sdp,
    injective_norm_bruteforce,
    l_norm_upper,
    x2_lower_sdp,
)
from h1mult.errors import SdpNonConvergent, SizeLimit, ValidationError
from h1mult.hankel import GROTHENDIECK_BOUND, x2_lower_sdp_detail
from h1mult.sdp import gamma2_barrier, gamma2_lmi_data, solve_lmi, weight_bounds

R2 = 2 * np.sqrt(2) + 1


def check_certificate(A, cert, tol=1e-6):
    A = np.asarray(A)
    assert np.allclose(cert.primal_x @ cert.primal_y, A, atol=1e-9 * max(1, np.abs(A).max()))
    rows = np.linalg.norm(cert.primal_x, axis=1).max() if cert.primal_x.size else 0.0
    cols = np.linalg.norm(cert.primal_y, axis=0).max() if cert.primal_y.size else 0.0
    assert rows * cols <= cert.value * (1 + 1e-9) + 1e-12
    W = cert.dual_witness
    assert np.allclose(W, W.conj().T)
    assert np.linalg.eigvalsh(W).min() >= -1e-9 * np.trace(W).real
    assert cert.lower <= cert.value * (1 + 1e-12)
    assert cert.gap <= tol * cert.value + 1e-12
    assert cert.value >= np.abs(A).max() * (1 - 1e-9)


def test_build_hankel_examples():
    assert np.array_equal(build_hankel(MultiplierSeq({0: 1}), 2).entries, [[1, 0], [0, 0]])
    assert np.array_equal(build_hankel(MultiplierSeq({1: 1}), 2).entries, [[0, 1], [1, 0]])
    assert np.array_equal(build_hankel(MultiplierSeq.from_dense([1, 2, 3]), 2).entries,
                          [[1, 2], [2, 3]])
    with pytest.raises(SizeLimit):
        build_hankel(MultiplierSeq({0: 1}), 5000)


def test_build_hankel_structure():
    phi = MultiplierSeq.from_dense(np.random.default_rng(0).normal(size=6))
    H = build_hankel(phi, 9).entries
    for i in range(9):
        for j in range(9):
            assert H[i, j] == phi(i + j)
    assert not np.any(H[6:, :]) and H.shape == (9, 9)


@pytest.mark.parametrize("method", ["barrier", "pathfollow"])
@pytest.mark.parametrize("A,val", [
    (np.ones((3, 3)), 1.0),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0),
    (np.array([[1.0, 1.0], [1.0, -1.0]]), np.sqrt(2)),
    (np.diag([1.0, 0.1]), 1.0),
])
def test_gamma2_examples(A, val, method):
    cert = gamma2_sdp(A, method=method)
    assert cert.value == pytest.approx(val, rel=1e-6)
    check_certificate(A, cert)


def test_gamma2_complex_and_rectangular(oracle):
    for entry in oracle["gamma2_small"]:
        A = oracle_matrix(entry)
        cert = gamma2_sdp(A)
        assert cert.value == pytest.approx(entry["value"], rel=1e-5)
        check_certificate(A, cert)


def test_gamma2_zero_and_zero_rows():
    cert = gamma2_sdp(np.zeros((3, 2)))
    assert cert.value == 0
    A = np.zeros((4, 4))
    A[1, 2], A[2, 1] = 1.0, -2.0
    cert = gamma2_sdp(A)
    assert cert.value == pytest.approx(2.0, rel=1e-6)
    check_certificate(A, cert)


def test_gamma2_validation():
    with pytest.raises(ValidationError):
        gamma2_sdp(np.ones((2, 2)), tol=0.5)
    with pytest.raises(SizeLimit):
        gamma2_sdp(np.ones((400, 400)))
    with pytest.raises(ValidationError):
        gamma2_sdp(np.ones((2, 2)), method="simplex")


def test_barrier_iteration_cap():
    with pytest.raises(SdpNonConvergent):
        gamma2_barrier(np.random.default_rng(0).normal(size=(6, 6)), tol=1e-9, max_iter=2)


def test_weight_bounds_sandwich():
    A = np.random.default_rng(1).normal(size=(5, 4))
    p = np.full(5, 0.1)
    r = np.full(4, 0.125)
    lo, up = weight_bounds(A, p, r)
    ref = gamma2_sdp(A).value
    assert lo <= ref * (1 + 1e-9) and ref <= up * (1 + 1e-9)


def test_lmi_solver_matches_barrier():
    A = np.random.default_rng(2).normal(size=(4, 4))
    C, F, b, y0 = gamma2_lmi_data(A)
    res = solve_lmi(C, F, b, y0)
    assert -res.dual_obj == pytest.approx(gamma2_barrier(A).upper, rel=1e-6)


def test_exactness_at_full_truncation():
    phi = MultiplierSeq.from_dense(np.random.default_rng(3).normal(size=7))
    vals = [gamma2_sdp(build_hankel(phi, n), tol=1e-8).value for n in range(1, 11)]
    assert all(b >= a * (1 - 1e-7) for a, b in zip(vals, vals[1:]))
    assert max(vals[6:]) - min(vals[6:]) <= 1e-7 * vals[6]


def test_certificate_json_roundtrip():
    from h1mult.formats import unpack_array

    cert = gamma2_sdp(np.array([[1.0, 2.0], [3.0, 4.0]]))
    d = cert.to_json()
    assert set(d) >= {"value", "gap", "primalX", "primalY", "dualWitness"}
    assert np.allclose(unpack_array(d["primalX"]), cert.primal_x)


def test_dyadic_examples():
    f = dyadic_upper(MultiplierSeq({1: 1}))
    assert f.block_sup == 1 and f.proof_bound == pytest.approx(3.82843, abs=1e-5)
    f = dyadic_upper(MultiplierSeq({0: 1}))
    assert f.block_sup == 0 and f.proof_bound == 1
    f = dyadic_upper(MultiplierSeq({2 ** n: 1 for n in range(6)}))
    assert f.block_sup == 1 and f.proof_bound == pytest.approx(R2, abs=1e-12)
    assert f.statement_bound == 4 and f.two_norm_proxy == 1


def test_dyadic_reconstruction_and_vector_bounds():
    rng = np.random.default_rng(4)
    phi = MultiplierSeq.from_dense(rng.normal(size=20) + 1j * rng.normal(size=20))
    f = dyadic_upper(phi)
    n = 21
    H = build_hankel(phi, n).entries
    assert np.array_equal(f.dense_reconstruction(n), H)
    for i in range(n):
        for j in range(n):
            assert f.reconstruct(i, j) == H[i, j]
        assert f.x_norm(i) <= np.sqrt(2) * f.block_sup * (1 + 1e-12)
        assert f.y_norm(i) <= f.block_sup + f.phi0 + 1e-12


def test_x2_examples(oracle):
    assert x2_lower_sdp(AnalyticPoly({0: 1})) == pytest.approx(1.0, abs=1e-6)
    assert x2_lower_sdp(AnalyticPoly({3: 1})) == pytest.approx(1.0, abs=1e-6)
    detail = x2_lower_sdp_detail(AnalyticPoly({0: 1, 1: 1}))
    ref = oracle["x2_one_one"]
    assert 1 <= detail.value <= 2
    # the grid search is a lower bound found by a different method
    assert detail.value == pytest.approx(ref["value"], rel=1e-7)
    assert detail.gamma2_phi <= 1 + 1e-6
    assert np.allclose(detail.phi.to_dense(2).real, ref["phi"], atol=1e-4)


def test_injective_examples():
    assert injective_norm_bruteforce([[1.0]]) == 1
    assert injective_norm_bruteforce(np.eye(2)) == 2
    assert injective_norm_bruteforce([[1, 1], [1, -1]]) == 2
    with pytest.raises(SizeLimit):
        injective_norm_bruteforce(np.ones((13, 2)))


def test_injective_complex_bound():
    A = np.array([[1, 1j], [1j, 1]])
    val, bound = injective_norm_bruteforce(A, 16, return_bound=True)
    # |s1 + i s2| + |i s1 + s2| peaks at 2 sqrt 2 for s = (1, 1)
    assert val == pytest.approx(2 * np.sqrt(2)) and bound >= val


def test_injective_dominates_entries_and_gamma2():
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = rng.normal(size=(3, 4))
        inj = injective_norm_bruteforce(A)
        assert inj >= np.abs(A).sum(axis=1).max() - 1e-12
        # injective norm of l1 x l1 dominates gamma_2 up to the Grothendieck constant
        assert gamma2_sdp(A).value <= GROTHENDIECK_BOUND * inj


def test_l_norm_upper_is_labeled():
    res = l_norm_upper(AnalyticPoly({0: 1, 1: 1}))
    assert res.label == "upper estimate"
    L = res.matrix
    idx = np.add.outer(np.arange(L.shape[0]), np.arange(L.shape[1]))
    for k, c in enumerate([1, 1]):
        assert L[idx == k].sum() == pytest.approx(c)


def test_grothendieck_consistency_sandwich():
    rng = np.random.default_rng(6)
    for _ in range(8):
        deg = int(rng.integers(0, 7))
        P = AnalyticPoly.from_dense(rng.normal(size=deg + 1))
        assert x2_lower_sdp(P) / GROTHENDIECK_BOUND <= l_norm_upper(P).value * (1 + 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6))
def test_entry_bound_property(vals):
    phi = MultiplierSeq.from_dense(vals)
    if len(phi) == 0:
        return
    n = phi.support_max + 1
    cert = gamma2_sdp(build_hankel(phi, n))
    assert np.abs(np.asarray(vals)).max() <= cert.value * (1 + 1e-9)
    assert cert.value <= dyadic_upper(phi).proof_bound * (1 + 1e-6)
