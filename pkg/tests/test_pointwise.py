import itertools

import numpy as np
import pytest

from acgeo.pointwise import (
    AlmostComplexPoint,
    HermitianFormPoint,
    KFormPoint,
    MetricPoint,
    NijenhuisPoint,
    compatible_metric,
    dx,
    form_inner,
    hermitian_eigenbasis,
    hermitian_from_normal_form,
    project_pq,
    split_two_form,
    unitary_coframe,
)
from conftest import random_acs, random_compatible_metric


def _antisymmetrize(comps, k):
    out = np.zeros_like(comps)
    for perm in itertools.permutations(range(k)):
        sign = 1.0
        p = list(perm)
        for i in range(k):
            for j in range(i + 1, k):
                if p[i] > p[j]:
                    sign = -sign
        out += sign * np.transpose(comps, perm)
    return out


def rand_kform(rng, n, k, complex_dtype=False):
    comps = rng.standard_normal((n,) * k)
    if complex_dtype:
        comps = comps + 1j * rng.standard_normal((n,) * k)
    return KFormPoint(_antisymmetrize(comps, k))


def test_dx_wedge_normalization():
    # (dx1 ^ dx2)(e1, e2) = 1 fixes every other convention downstream
    w = dx(1, 4).wedge(dx(2, 4))
    e1 = np.array([1.0, 0, 0, 0])
    e2 = np.array([0, 1.0, 0, 0])
    assert w(e1, e2) == 1.0
    assert w(e2, e1) == -1.0
    assert w.comps[0, 1] == 1.0


def test_wedge_is_associative_and_graded_commutative():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(4, 7))
        a = rand_kform(rng, n, 1)
        b = rand_kform(rng, n, 2)
        c = rand_kform(rng, n, 1)
        left = a.wedge(b).wedge(c)
        right = a.wedge(b.wedge(c))
        assert np.abs(left.comps - right.comps).max() < 1e-12
        # a ^ b = (-1)^{deg a * deg b} b ^ a
        assert np.abs(a.wedge(b).comps - b.wedge(a).comps).max() < 1e-12
        assert np.abs(a.wedge(c).comps + c.wedge(a).comps).max() < 1e-12


def test_form_inner_counts_each_increasing_tuple_once():
    a = dx(1, 5).wedge(dx(2, 5))
    assert form_inner(a, a) == 1.0
    b = dx(1, 5).wedge(dx(2, 5)) + dx(3, 5).wedge(dx(4, 5))
    assert form_inner(b, b) == 2.0
    v = dx(1, 3).wedge(dx(2, 3)).wedge(dx(3, 3))
    assert form_inner(v, v) == 1.0


def test_form_inner_with_metric_uses_inverse_metric_legs():
    rng = np.random.default_rng(11)
    n = 4
    for _ in range(30):
        A = rng.standard_normal((n, n))
        g = MetricPoint(A @ A.T + n * np.eye(n))
        a = rand_kform(rng, n, 2)
        b = rand_kform(rng, n, 2)
        expected = np.einsum(
            "ab,ac,bd,cd->", a.comps, g.inverse, g.inverse, b.comps
        ) / 2.0
        assert abs(form_inner(a, b, metric=g) - expected) < 1e-12


def test_jstar_is_minus_j_transpose_on_one_forms():
    rng = np.random.default_rng(5)
    for _ in range(40):
        J = random_acs(rng, dim=6)
        xi = rand_kform(rng, 6, 1)
        X = rng.standard_normal(6)
        pulled = KFormPoint(J.jstar @ xi.comps)
        assert abs(pulled(X) + xi(J.J @ X)) < 1e-12


def test_split_two_form_reassembles_and_projects():
    rng = np.random.default_rng(17)
    for _ in range(60):
        J = random_acs(rng, dim=6)
        phi = rand_kform(rng, 6, 2)
        inv, anti = split_two_form(phi, J)
        assert np.abs((inv + anti).comps - phi.comps).max() < 1e-12
        # invariant part commutes with pullback by J, anti part anticommutes
        assert np.abs(inv.pullback_endo(J.J).comps - inv.comps).max() < 1e-12
        assert np.abs(anti.pullback_endo(J.J).comps + anti.comps).max() < 1e-12
        # splitting is idempotent
        inv2, anti2 = split_two_form(inv, J)
        assert np.abs(inv2.comps - inv.comps).max() < 1e-12
        assert anti2.max_norm() < 1e-12


def test_project_pq_resolves_identity_and_is_idempotent():
    rng = np.random.default_rng(29)
    for _ in range(20):
        J = random_acs(rng, dim=6)
        for k in (1, 2, 3):
            phi = rand_kform(rng, 6, k, complex_dtype=True)
            total = KFormPoint(np.zeros((6,) * k, dtype=complex))
            for p in range(k + 1):
                q = k - p
                piece = project_pq(phi, p, q, J)
                total = total + piece
                again = project_pq(piece, p, q, J)
                assert np.abs(again.comps - piece.comps).max() < 1e-10
                for p2 in range(k + 1):
                    if p2 != p:
                        other = project_pq(piece, p2, k - p2, J)
                        assert other.max_norm() < 1e-10
            assert np.abs(total.comps - phi.comps).max() < 1e-10


def test_project_pq_splits_dx_evenly():
    J = AlmostComplexPoint.standard(4)
    ten = project_pq(dx(1, 4), 1, 0, J)
    zer = project_pq(dx(1, 4), 0, 1, J)
    assert np.abs((ten + zer).comps - dx(1, 4).comps).max() < 1e-14
    assert abs(form_inner(ten, ten.conj()) - 0.5) < 1e-14
    assert np.abs(zer.comps - ten.conj().comps).max() < 1e-14


def test_compatible_metric_verdicts():
    J = AlmostComplexPoint.standard(4)
    omega0 = dx(1, 4).wedge(dx(2, 4)) + dx(3, 4).wedge(dx(4, 4))
    res = compatible_metric(omega0, J)
    assert res.verdict == "compatible"
    assert np.abs(res.g - np.eye(4)).max() < 1e-14
    assert res.metric is not None

    res_neg = compatible_metric(-omega0, J)
    assert res_neg.verdict == "symmetric-but-indefinite"
    assert res_neg.min_eigenvalue < 0
    assert res_neg.metric is None

    skew = omega0 + dx(1, 4).wedge(dx(3, 4))
    res_skew = compatible_metric(skew, J)
    assert res_skew.verdict == "not-symmetric"
    assert res_skew.symmetry_residual > 0.1

    with pytest.raises(ValueError):
        compatible_metric(dx(1, 4).wedge(dx(2, 4)), J)  # degenerate


def test_compatible_metric_random_positive_cases():
    rng = np.random.default_rng(41)
    for _ in range(40):
        J = random_acs(rng, dim=4)
        h = random_compatible_metric(rng, J)
        omega = KFormPoint(-h.g @ J.J)  # omega(X, Y) = h(JX, Y)
        res = compatible_metric(omega, J)
        assert res.verdict == "compatible"
        assert np.abs(res.g - h.g).max() < 1e-10


def test_unitary_coframe_duality_and_unitarity():
    rng = np.random.default_rng(53)
    for dim in (4, 6):
        for _ in range(25):
            J = random_acs(rng, dim=dim)
            h = random_compatible_metric(rng, J)
            coframe, frame = unitary_coframe(J, h)
            m = dim // 2
            for i in range(m):
                Zi = frame[i]
                # frame vectors live in the +i eigenspace of J
                assert np.abs(J.J @ Zi - 1j * Zi).max() < 1e-9
                # h-unitarity: h(Z_i, conj Z_j) = delta_ij
                for j in range(m):
                    herm = Zi @ h.g @ np.conj(frame[j])
                    assert abs(herm - (1.0 if i == j else 0.0)) < 1e-9
            for j in range(m):
                alpha = KFormPoint(coframe[j])
                # (1,0) covectors satisfy J* alpha = -i alpha
                assert np.abs(J.jstar @ coframe[j] + 1j * coframe[j]).max() < 1e-9
                for i in range(m):
                    assert abs(alpha(frame[i]) - (1.0 if i == j else 0.0)) < 1e-9
                    assert abs(alpha(np.conj(frame[i]))) < 1e-9


def _standard_unitary_psi():
    J = AlmostComplexPoint.standard(6)
    h = MetricPoint(np.eye(6))
    coframe, frame = unitary_coframe(J, h)
    psi = KFormPoint(coframe[0]).wedge(KFormPoint(coframe[1])).wedge(
        KFormPoint(coframe[2])
    )
    return J, h, coframe, frame, psi


def test_hermitian_eigenbasis_identity_pin():
    J, h, coframe, frame, psi = _standard_unitary_psi()
    eig = hermitian_eigenbasis(HermitianFormPoint(np.eye(6)), psi, J, h)
    assert np.abs(eig.raw_eigenvalues - 1.0).max() < 1e-12
    assert np.abs(eig.eigenvalues - 1.0).max() < 1e-12
    assert eig.rank == 3
    assert eig.quasi_definite
    assert abs(eig.psi_scale - 1.0) < 1e-12
    assert eig.proportionality_residual < 1e-12


def test_hermitian_eigenbasis_diagonal_pins():
    J, h, coframe, frame, psi = _standard_unitary_psi()

    H = hermitian_from_normal_form([1.0, 2.0, 3.0], frame)
    eig = hermitian_eigenbasis(H, psi, J, h)
    assert np.allclose(eig.eigenvalues, [3.0, 2.0, 1.0], atol=1e-12)
    assert eig.rank == 3 and eig.quasi_definite

    H2 = hermitian_from_normal_form([1.0, 1.0, 0.0], frame)
    eig2 = hermitian_eigenbasis(H2, psi, J, h)
    assert eig2.rank == 2
    assert eig2.quasi_definite
    assert abs(eig2.eigenvalues[-1]) < 1e-12

    H3 = hermitian_from_normal_form([1.0, -1.0, 0.5], frame)
    eig3 = hermitian_eigenbasis(H3, psi, J, h)
    assert not eig3.quasi_definite


def test_hermitian_eigenbasis_requires_sane_inputs():
    J, h, coframe, frame, psi = _standard_unitary_psi()
    lopsided = np.eye(6)
    lopsided[0, 1] = 1.0
    with pytest.raises(ValueError):
        hermitian_eigenbasis(HermitianFormPoint(lopsided), psi, J, h)
    not_invariant = np.diag([2.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        hermitian_eigenbasis(HermitianFormPoint(not_invariant), psi, J, h)
    with pytest.raises(ValueError):
        hermitian_eigenbasis(
            HermitianFormPoint(np.eye(6)), KFormPoint(np.zeros((6, 6, 6))), J, h
        )


def test_hermitian_eigenbasis_round_trip():
    rng = np.random.default_rng(67)
    for _ in range(50):
        J = random_acs(rng, dim=6)
        h = random_compatible_metric(rng, J)
        coframe, frame = unitary_coframe(J, h)
        lam_in = np.sort(rng.uniform(0.1, 3.0, size=3))[::-1]
        H = hermitian_from_normal_form(lam_in, frame)
        c = (rng.standard_normal() + 1j * rng.standard_normal()) or 1.0
        psi = KFormPoint(coframe[0]).wedge(KFormPoint(coframe[1])).wedge(
            KFormPoint(coframe[2])
        ) * c
        eig = hermitian_eigenbasis(H, psi, J, h)
        assert eig.quasi_definite and eig.rank == 3
        assert eig.proportionality_residual < 1e-10
        # the psi-normalized coframe wedges exactly back to psi
        rewedge = KFormPoint(eig.coframe[0]).wedge(
            KFormPoint(eig.coframe[1])
        ).wedge(KFormPoint(eig.coframe[2]))
        assert (rewedge - psi).max_norm() < 1e-10 * psi.max_norm()
        # normal form with the normalized eigenpairs rebuilds the same H
        rebuilt = hermitian_from_normal_form(eig.eigenvalues, eig.frame)
        assert np.abs(rebuilt.H - H.H).max() < 1e-10 * max(1.0, np.abs(H.H).max())


def test_hermitian_from_normal_form_matches_pairing():
    rng = np.random.default_rng(97)
    J = AlmostComplexPoint.standard(6)
    h = MetricPoint(np.eye(6))
    coframe, frame = unitary_coframe(J, h)
    lam = [2.0, 0.5, 1.0]
    H = hermitian_from_normal_form(lam, frame)
    assert H.symmetry_residual() < 1e-14
    assert H.jstar_invariance_residual(J) < 1e-14
    for i in range(3):
        pair = H.pair(coframe[i], np.conj(coframe[i]))
        assert abs(pair - lam[i]) < 1e-12


def test_nijenhuis_point_contracts_vectors():
    rng = np.random.default_rng(71)
    N = np.zeros((4, 4, 4))
    N[0, 1, 2] = 1.0
    N[0, 2, 1] = -1.0
    ten = NijenhuisPoint(N)
    X = rng.standard_normal(4)
    Y = rng.standard_normal(4)
    out = ten(X, Y)
    assert abs(out[0] - (X[1] * Y[2] - X[2] * Y[1])) < 1e-14
    assert ten.antisymmetry_residual() < 1e-14


def test_metric_point_basics():
    rng = np.random.default_rng(73)
    A = rng.standard_normal((4, 4))
    g = MetricPoint(A @ A.T + 4 * np.eye(4))
    X = rng.standard_normal(4)
    xi = g.flat(X)
    assert np.abs(g.sharp(xi) - X).max() < 1e-12
    assert abs(g.covector_norm2(xi) - g.inner(X, X)) < 1e-12
    frame = g.orthonormal_frame()  # columns are the frame vectors
    gram = frame.T @ g.g @ frame
    assert np.abs(gram - np.eye(4)).max() < 1e-10
    vol = g.volume_form()
    assert abs(form_inner(vol, vol, metric=g) - 1.0) < 1e-12
