"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the library's own derivative machinery:
exterior derivatives and Nijenhuis tensors are rebuilt from central
finite differences of raw coefficient evaluations, and matrix ranks are
recomputed by Gaussian elimination, so agreement is evidence rather
than tautology.
"""

import itertools
import math

import numpy as np
import pytest

from acgeo.catalog import builtin_scene
from acgeo.fields import ChartDomain, JField, MetricField
from acgeo.pointwise import (
    AlmostComplexPoint,
    KFormPoint,
    MetricPoint,
    NijenhuisPoint,
)


def fd_exterior_derivative(field, point, step=1e-6):
    """Central-difference d(phi) as a k+1 form."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    k = field.form_jet(point, 0).value.ndim
    partials = np.zeros((n,) + (n,) * k)
    for a in range(n):
        dp = np.zeros(n)
        dp[a] = step
        plus = field.form_jet(point + dp, 0).value
        minus = field.form_jet(point - dp, 0).value
        partials[a] = (plus - minus) / (2.0 * step)
    out = np.zeros((n,) * (k + 1))
    for perm_sign, axes in _alternation(k + 1):
        out += perm_sign * partials.transpose(axes)
    return KFormPoint(out / math.factorial(k))


def _alternation(k):
    base = tuple(range(k))
    for perm in itertools.permutations(base):
        yield _perm_sign(perm), perm


def _perm_sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def fd_nijenhuis(J_field, point, step=1e-6):
    """Bracket-definition Nijenhuis tensor from finite differences.

    4N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y] on coordinate fields,
    assembled from central differences of the J entries.
    """
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    J0 = J_field.value(point)
    dJ = np.zeros((n, n, n))  # dJ[a, k, j] = d_a J^k_j
    for a in range(n):
        dp = np.zeros(n)
        dp[a] = step
        dJ[a] = (J_field.value(point + dp) - J_field.value(point - dp)) / (2.0 * step)
    N = np.zeros((n, n, n))  # N[k, i, j]
    for i in range(n):
        for j in range(n):
            bracket_JJ = np.einsum("m,mk->k", J0[:, i], dJ[:, :, j]) - np.einsum(
                "m,mk->k", J0[:, j], dJ[:, :, i]
            )
            bracket_Ji_j = -dJ[j, :, i]
            bracket_i_Jj = dJ[i, :, j]
            N[:, i, j] = (
                bracket_JJ - J0 @ bracket_Ji_j - J0 @ bracket_i_Jj
            ) / 4.0
    return N


def elimination_rank(M, tol=1e-9):
    """Row-echelon rank by Gaussian elimination with partial pivoting."""
    A = np.array(M, dtype=float)
    rows, cols = A.shape
    rank = 0
    scale = max(1.0, np.abs(A).max())
    for c in range(cols):
        if rank == rows:
            break
        pivot = rank + np.argmax(np.abs(A[rank:, c]))
        if abs(A[pivot, c]) <= tol * scale:
            continue
        A[[rank, pivot]] = A[[pivot, rank]]
        A[rank] = A[rank] / A[rank, c]
        for r in range(rows):
            if r != rank:
                A[r] -= A[r, c] * A[rank]
        rank += 1
    return rank


def random_acs(rng, dim=4, spread=0.3):
    """A random almost complex structure: a conjugated block rotation."""
    J0 = np.zeros((dim, dim))
    for i in range(dim // 2):
        J0[2 * i + 1, 2 * i] = 1.0
        J0[2 * i, 2 * i + 1] = -1.0
    G = np.eye(dim) + spread * rng.normal(size=(dim, dim))
    while abs(np.linalg.det(G)) < 0.1:
        G = np.eye(dim) + spread * rng.normal(size=(dim, dim))
    return AlmostComplexPoint(np.linalg.solve(G, J0 @ G))


def random_compatible_metric(rng, J, scale=4.0):
    """A random J-invariant positive definite metric."""
    n = J.dim
    A = rng.normal(size=(n, n))
    g0 = A @ A.T + scale * np.eye(n)
    return MetricPoint(0.5 * (g0 + J.J.T @ g0 @ J.J))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance scoreboard after the run, outside capture."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def unitary_psi(coframe, c=1.0):
    """The (3,0)-form c * alpha1 ^ alpha2 ^ alpha3 of a unitary coframe."""
    return KFormPoint(coframe[0]).wedge(KFormPoint(coframe[1])).wedge(
        KFormPoint(coframe[2])
    ) * c


def synthetic_nijenhuis(H, psi, frame, coframe):
    """The tensor with N(Z_i, Z_j) = H psi(Z_i, Z_j, .) and pure type.

    The conjugate block makes the dense components real; the residual
    imaginary part is a construction check, not an approximation.
    """
    m = len(frame)
    V = np.zeros((m, m, 2 * m), dtype=complex)
    for i in range(m):
        for j in range(m):
            beta = np.einsum("abc,a,b->c", psi.comps, frame[i], frame[j])
            V[i, j] = H.apply(beta)
    half = np.einsum("ia,jb,ijk->kab", coframe, coframe, V)
    dense = half + half.conj()
    assert np.abs(dense.imag).max() < 1e-13
    return NijenhuisPoint(dense.real)


J0_4 = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)

J0_6 = np.zeros((6, 6))
for _i in range(3):
    J0_6[2 * _i + 1, 2 * _i] = 1.0
    J0_6[2 * _i, 2 * _i + 1] = -1.0


@pytest.fixture(scope="session")
def s6():
    return builtin_scene("s6")


@pytest.fixture(scope="session")
def r4_twisted():
    return builtin_scene("r4_twisted")


@pytest.fixture(scope="session")
def r4_remark1():
    return builtin_scene("r4_remark1")


@pytest.fixture(scope="session")
def c3_flat():
    return builtin_scene("c3_flat")


@pytest.fixture(scope="session")
def r6_product():
    return builtin_scene("r6_product")


@pytest.fixture(scope="session")
def all_scenes(s6, r4_remark1, r4_twisted, c3_flat, r6_product):
    return (s6, r4_remark1, r4_twisted, c3_flat, r6_product)


@pytest.fixture()
def flat4():
    chart = ChartDomain(((-2.0, 2.0),) * 4)
    h = MetricField(chart, [["1" if i == j else "0" for j in range(4)] for i in range(4)])
    J = JField(chart, [[repr(J0_4[i, j]) for j in range(4)] for i in range(4)])
    return chart, h, J
