"""Pointwise multilinear algebra for almost complex charts.

Forms are stored as dense fully antisymmetric component arrays with the
determinant convention: no 1/k! appears in evaluation, so
``(dx1 ^ dx2)(e1, e2) = 1``.  The inner product on k-forms induced by a
metric divides the full index contraction by k!, hence
``<dx1^dx2, dx1^dx2> = 1`` for the flat metric.

Complexification is componentwise; ``T^{1,0}`` is the (+i)-eigenspace of
J acting on complexified tangent vectors, and the dual action on
covectors is ``(J* a)(X) = -a(J X)``, i.e. minus the transpose.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np

__all__ = [
    "AlmostComplexPoint",
    "CompatibilityResult",
    "ComplexVolumePoint",
    "HermitianEigenbasis",
    "HermitianFormPoint",
    "KFormPoint",
    "MetricPoint",
    "NijenhuisPoint",
    "compatible_metric",
    "dx",
    "form_inner",
    "hermitian_eigenbasis",
    "hermitian_from_normal_form",
    "increasing_tuples",
    "project_pq",
    "split_two_form",
    "unitary_coframe",
]

ABS_TOL = 1e-12


@lru_cache(maxsize=None)
def increasing_tuples(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All strictly increasing k-tuples of indices below n (0-based)."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def _perm_signs(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for perm in itertools.permutations(range(k)):
        inversions = sum(
            1 for a in range(k) for b in range(a + 1, k) if perm[a] > perm[b]
        )
        out.append((perm, -1 if inversions % 2 else 1))
    return tuple(out)


@lru_cache(maxsize=None)
def _shuffles(k: int, l: int) -> tuple[tuple[tuple[int, ...], tuple[int, ...], int], ...]:
    # (k,l)-shuffles of positions 0..k+l-1 with the sign of moving the
    # chosen block to the front
    out = []
    for left in itertools.combinations(range(k + l), k):
        right = tuple(m for m in range(k + l) if m not in left)
        sign = -1 if (sum(left) - k * (k - 1) // 2) % 2 else 1
        out.append((left, right, sign))
    return tuple(out)


def _fill_dense(n: int, k: int, increasing_values) -> np.ndarray:
    values = np.asarray(increasing_values)
    comps = np.zeros((n,) * k, dtype=complex if values.dtype.kind == "c" else float)
    for I, v in zip(increasing_tuples(n, k), values):
        for perm, sign in _perm_signs(k):
            comps[tuple(I[p] for p in perm)] = sign * v
    return comps


class KFormPoint:
    """A k-form at a point, k >= 1, as a dense antisymmetric array."""

    __slots__ = ("comps",)

    def __init__(self, comps: np.ndarray, validate: bool = False):
        comps = np.asarray(comps)
        if comps.ndim < 1 or len(set(comps.shape)) != 1:
            raise ValueError("component array must be cubical of rank >= 1")
        self.comps = comps
        if validate:
            worst = self.antisymmetry_residual()
            if worst > ABS_TOL * max(1.0, self.max_norm()):
                raise ValueError(f"components not antisymmetric (residual {worst:g})")

    @property
    def degree(self) -> int:
        return self.comps.ndim

    @property
    def dim(self) -> int:
        return self.comps.shape[0]

    @classmethod
    def zero(cls, n: int, degree: int, complex_dtype: bool = False) -> "KFormPoint":
        return cls(np.zeros((n,) * degree, dtype=complex if complex_dtype else float))

    @classmethod
    def from_increasing(cls, n: int, degree: int, values) -> "KFormPoint":
        """Build from components on increasing index tuples (0-based order
        of :func:`increasing_tuples`)."""
        return cls(_fill_dense(n, degree, values))

    def antisymmetry_residual(self) -> float:
        worst = 0.0
        k = self.degree
        for perm, sign in _perm_signs(k):
            worst = max(worst, float(np.abs(self.comps - sign * np.transpose(self.comps, perm)).max()))
        return worst

    def __call__(self, *vectors):
        if len(vectors) != self.degree:
            raise ValueError(f"need {self.degree} vectors, got {len(vectors)}")
        out = self.comps
        for v in vectors:
            out = np.tensordot(out, np.asarray(v), axes=([0], [0]))
        return complex(out) if np.iscomplexobj(out) else float(out)

    def wedge(self, other: "KFormPoint") -> "KFormPoint":
        if self.dim != other.dim:
            raise ValueError("wedge of forms on different chart dimensions")
        k, l, n = self.degree, other.degree, self.dim
        if k + l > n:
            raise ValueError(f"degree overflow: {k} + {l} > {n}")
        values = []
        for I in increasing_tuples(n, k + l):
            acc = 0.0
            for left, right, sign in _shuffles(k, l):
                acc = acc + sign * self.comps[tuple(I[m] for m in left)] \
                    * other.comps[tuple(I[m] for m in right)]
            values.append(acc)
        return KFormPoint(_fill_dense(n, k + l, values))

    def interior(self, vector) -> "KFormPoint":
        """Contraction with a vector in the first slot."""
        if self.degree < 2:
            raise ValueError("interior product here needs degree >= 2")
        return KFormPoint(np.tensordot(np.asarray(vector), self.comps, axes=([0], [0])))

    def pullback_endo(self, A: np.ndarray) -> "KFormPoint":
        """The form (X1,..,Xk) -> phi(A X1, .., A Xk)."""
        out = self.comps
        for slot in range(self.degree):
            out = np.moveaxis(np.tensordot(out, np.asarray(A), axes=([slot], [0])), -1, slot)
        return KFormPoint(out)

    def real(self) -> "KFormPoint":
        return KFormPoint(self.comps.real.copy())

    def imag(self) -> "KFormPoint":
        return KFormPoint(self.comps.imag.copy())

    def conj(self) -> "KFormPoint":
        return KFormPoint(self.comps.conj())

    def max_norm(self) -> float:
        return float(np.abs(self.comps).max())

    def __add__(self, other: "KFormPoint") -> "KFormPoint":
        return KFormPoint(self.comps + other.comps)

    def __sub__(self, other: "KFormPoint") -> "KFormPoint":
        return KFormPoint(self.comps - other.comps)

    def __neg__(self) -> "KFormPoint":
        return KFormPoint(-self.comps)

    def __mul__(self, scalar) -> "KFormPoint":
        return KFormPoint(self.comps * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"KFormPoint(degree={self.degree}, dim={self.dim})"


def dx(i: int, n: int) -> KFormPoint:
    """The coordinate covector dx_i (1-based) on an n-dimensional chart."""
    comps = np.zeros(n)
    comps[i - 1] = 1.0
    return KFormPoint(comps)


def form_inner(a: KFormPoint, b: KFormPoint, metric: "MetricPoint | None" = None):
    """Metric inner product on k-forms, full contraction divided by k!.

    With ``metric=None`` the flat coordinate metric is used.  Complex
    components are paired bilinearly (no conjugation); callers wanting a
    Hermitian pairing pass ``b.conj()``.
    """
    if a.degree != b.degree or a.dim != b.dim:
        raise ValueError("mismatched forms")
    raised = b.comps
    if metric is not None:
        ginv = metric.inverse
        for slot in range(b.degree):
            raised = np.moveaxis(np.tensordot(raised, ginv, axes=([slot], [0])), -1, slot)
    val = np.tensordot(a.comps, raised, axes=a.degree) / float(math.factorial(a.degree))
    return complex(val) if np.iscomplexobj(val) else float(val)


@dataclass
class AlmostComplexPoint:
    """An endomorphism J with J^2 = -I at a point."""

    J: np.ndarray

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        n = self.J.shape[0]
        if self.J.shape != (n, n) or n % 2:
            raise ValueError("J must be square of even dimension")
        residual = np.abs(self.J @ self.J + np.eye(n)).max()
        if residual > 1e-10 * max(1.0, float(np.abs(self.J).max()) ** 2):
            raise ValueError(f"J^2 != -I (residual {residual:g})")

    @classmethod
    def standard(cls, n: int) -> "AlmostComplexPoint":
        J = np.zeros((n, n))
        for i in range(0, n, 2):
            J[i + 1, i] = 1.0
            J[i, i + 1] = -1.0
        return cls(J)

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    @property
    def jstar(self) -> np.ndarray:
        """Matrix of the covector action (J* a)(X) = -a(J X)."""
        return -self.J.T

    def __call__(self, X):
        return self.J @ np.asarray(X)


def split_two_form(omega: KFormPoint, J: AlmostComplexPoint) -> tuple[KFormPoint, KFormPoint]:
    """J-invariant and J-anti-invariant parts of a 2-form.

    Returns (omega_plus, omega_minus) with
    omega_pm = (omega(.,.) pm omega(J., J.)) / 2; the two parts sum back
    to omega and the splitting is a pointwise projection.
    """
    if omega.degree != 2:
        raise ValueError("split_two_form needs a 2-form")
    twisted = omega.pullback_endo(J.J)
    return 0.5 * (omega + twisted), 0.5 * (omega - twisted)


def project_pq(phi: KFormPoint, p: int, q: int, J: AlmostComplexPoint) -> KFormPoint:
    """The (p,q)-type component of a complexified k-form, p + q = degree."""
    if p < 0 or q < 0 or p + q != phi.degree:
        raise ValueError(f"(p, q) = ({p}, {q}) incompatible with degree {phi.degree}")
    n = phi.dim
    P = 0.5 * (np.eye(n) - 1j * J.J)  # slot projection onto T^{1,0} arguments
    Q = P.conj()
    out = np.zeros((n,) * phi.degree, dtype=complex)
    for holo_slots in itertools.combinations(range(phi.degree), p):
        term = phi.comps.astype(complex)
        for slot in range(phi.degree):
            M = P if slot in holo_slots else Q
            term = np.moveaxis(np.tensordot(term, M, axes=([slot], [0])), -1, slot)
        out += term
    return KFormPoint(out)


@dataclass
class NijenhuisPoint:
    """The Nijenhuis tensor of an almost complex structure at a point.

    Components satisfy ``N(X, Y)^k = N[k, i, j] X^i Y^j``; complex vector
    arguments are allowed, so the tensor can be fed (1,0)-frame vectors
    directly.
    """

    N: np.ndarray

    def __post_init__(self):
        self.N = np.asarray(self.N, dtype=float)
        n = self.N.shape[0]
        if self.N.shape != (n, n, n):
            raise ValueError("Nijenhuis components must form an (n, n, n) array")

    @property
    def dim(self) -> int:
        return self.N.shape[0]

    def __call__(self, X, Y) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.N, np.asarray(X), np.asarray(Y))

    def max_norm(self) -> float:
        return float(np.abs(self.N).max())

    def antisymmetry_residual(self) -> float:
        return float(np.abs(self.N + self.N.transpose(0, 2, 1)).max())

    def anti_linearity_residual(self, J: AlmostComplexPoint) -> float:
        """Max-norm of N(JX, Y) + J N(X, Y) over the coordinate frame."""
        twisted = np.einsum("kmj,mi->kij", self.N, J.J)
        rotated = np.einsum("km,mij->kij", J.J, self.N)
        return float(np.abs(twisted + rotated).max())


@dataclass
class MetricPoint:
    """A positive-definite symmetric bilinear form at a point."""

    g: np.ndarray
    inverse: np.ndarray = dataclass_field(init=False, repr=False)
    sqrt_det: float = dataclass_field(init=False)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        scale = max(1.0, float(np.abs(self.g).max()))
        if np.abs(self.g - self.g.T).max() > 1e-10 * scale:
            raise ValueError("metric not symmetric")
        eigenvalues = np.linalg.eigvalsh(self.g)
        if eigenvalues.min() <= 0.0:
            raise ValueError(f"metric not positive definite (min eigenvalue {eigenvalues.min():g})")
        self.inverse = np.linalg.inv(self.g)
        self.sqrt_det = float(np.sqrt(np.linalg.det(self.g)))

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def inner(self, X, Y) -> float:
        return float(np.asarray(X) @ self.g @ np.asarray(Y))

    def sharp(self, covector) -> np.ndarray:
        return np.linalg.solve(self.g, np.asarray(covector))

    def flat(self, X) -> np.ndarray:
        return self.g @ np.asarray(X)

    def covector_norm2(self, covector):
        alpha = np.asarray(covector)
        return alpha @ self.inverse @ alpha

    def volume_form(self) -> KFormPoint:
        n = self.dim
        values = np.zeros(len(increasing_tuples(n, n)))
        values[0] = self.sqrt_det
        return KFormPoint(_fill_dense(n, n, values))

    def orthonormal_frame(self) -> np.ndarray:
        """Columns form a g-orthonormal frame (Cholesky based, deterministic)."""
        L = np.linalg.cholesky(self.g)
        return np.linalg.inv(L).T


@dataclass
class CompatibilityResult:
    verdict: str  # compatible | symmetric-but-indefinite | not-symmetric
    g: np.ndarray
    metric: MetricPoint | None
    symmetry_residual: float
    min_eigenvalue: float | None


def compatible_metric(omega: KFormPoint, J: AlmostComplexPoint) -> CompatibilityResult:
    """Test whether g = omega(., J.) is a positive almost Hermitian metric.

    The verdict is ``compatible`` exactly when g is symmetric and positive
    definite; a symmetric but non-positive g reports
    ``symmetric-but-indefinite`` and an asymmetric one ``not-symmetric``.
    """
    if omega.degree != 2 or omega.dim != J.dim:
        raise ValueError("compatible_metric needs a 2-form matching J")
    Om = omega.comps
    n = omega.dim
    det = np.linalg.det(Om)
    scale = max(1.0, float(np.abs(Om).max()))
    if abs(det) < 1e-10 * scale ** n:
        raise ValueError("degenerate 2-form")
    g = Om @ J.J
    symmetry_residual = float(np.abs(g - g.T).max())
    if symmetry_residual > ABS_TOL * max(1.0, float(np.abs(g).max())):
        return CompatibilityResult("not-symmetric", g, None, symmetry_residual, None)
    g_sym = 0.5 * (g + g.T)
    min_eig = float(np.linalg.eigvalsh(g_sym).min())
    if min_eig <= 0.0:
        return CompatibilityResult("symmetric-but-indefinite", g, None, symmetry_residual, min_eig)
    return CompatibilityResult("compatible", g, MetricPoint(g_sym), symmetry_residual, min_eig)


def unitary_coframe(J: AlmostComplexPoint, h: MetricPoint):
    """An h-unitary (1,0)-coframe and dual frame for (J, h).

    Returns ``(coframe, frame)``: ``frame[i]`` are components of
    Z_i = (u_i - i J u_i)/sqrt(2) spanning T^{1,0} with h(Z_i, conj Z_j)
    = delta_ij, and ``coframe[i]`` the dual (1,0)-covectors with
    alpha^i(Z_j) = delta_ij.  Construction is deterministic: candidate
    vectors are the coordinate frame in order, h-orthonormalized against
    u_1, J u_1, u_2, J u_2, ...
    """
    n = J.dim
    if h.dim != n:
        raise ValueError("dimension mismatch")
    invariance = np.abs(J.J.T @ h.g @ J.J - h.g).max()
    if invariance > 1e-8 * max(1.0, float(np.abs(h.g).max())):
        raise ValueError(f"metric not J-invariant (residual {invariance:g})")
    basis: list[np.ndarray] = []
    for candidate_index in range(n):
        if len(basis) == n:
            break
        u = np.zeros(n)
        u[candidate_index] = 1.0
        for b in basis:
            u = u - h.inner(b, u) * b
        norm = np.sqrt(h.inner(u, u))
        if norm < 1e-10:
            continue
        u = u / norm
        basis.append(u)
        basis.append(J(u))
    if len(basis) != n:
        raise ValueError("failed to build an adapted frame")
    B = np.column_stack(basis)
    D = np.linalg.inv(B)  # rows are the dual real coframe
    m = n // 2
    root2 = np.sqrt(2.0)
    frame = np.array([(basis[2 * i] - 1j * J(basis[2 * i])) / root2 for i in range(m)])
    coframe = np.array([(D[2 * i] + 1j * D[2 * i + 1]) / root2 for i in range(m)])
    return coframe, frame


@dataclass
class HermitianFormPoint:
    """A real J*-invariant symmetric bilinear form on covectors.

    Stored with both indices raised: ``pair(beta, gamma) = beta H gamma``
    for covector component vectors.  Residual diagnostics from whatever
    produced the form travel along in ``residuals``.
    """

    H: np.ndarray
    residuals: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def pair(self, beta, gamma):
        return np.asarray(beta) @ self.H @ np.asarray(gamma)

    def apply(self, beta) -> np.ndarray:
        """The vector H(beta, .) obtained by contracting one slot."""
        return self.H @ np.asarray(beta)

    def symmetry_residual(self) -> float:
        return float(np.abs(self.H - self.H.T).max())

    def jstar_invariance_residual(self, J: AlmostComplexPoint) -> float:
        return float(np.abs(J.J @ self.H @ J.J.T - self.H).max())


def hermitian_from_normal_form(lambdas, frame) -> HermitianFormPoint:
    """Assemble sum_i lambda_i (Z_i (x) conj Z_i + conj Z_i (x) Z_i)."""
    frame = np.asarray(frame, dtype=complex)
    H = np.zeros((frame.shape[1], frame.shape[1]))
    for lam, Z in zip(lambdas, frame):
        H += lam * 2.0 * np.real(np.outer(Z, Z.conj()))
    return HermitianFormPoint(H)


@dataclass
class ComplexVolumePoint:
    """A complex (3,0)-form at a point, stored as a real/imaginary pair.

    ``purity_residual`` records how far the real 3-form the volume was
    recovered from sits from pure type (3,0) + (0,3).
    """

    real: KFormPoint
    imag: KFormPoint
    purity_residual: float = 0.0

    def __post_init__(self):
        if self.real.degree != 3 or self.imag.degree != 3:
            raise ValueError("complex volume forms have degree 3")
        if self.real.dim != self.imag.dim:
            raise ValueError("real/imaginary parts disagree on dimension")

    @property
    def dim(self) -> int:
        return self.real.dim

    def form(self) -> KFormPoint:
        return KFormPoint(self.real.comps + 1j * self.imag.comps)

    def max_norm(self) -> float:
        return self.form().max_norm()

    def __neg__(self) -> "ComplexVolumePoint":
        return ComplexVolumePoint(-self.real, -self.imag, self.purity_residual)


def _psi_form(psi) -> KFormPoint:
    return psi.form() if isinstance(psi, ComplexVolumePoint) else psi


@dataclass
class HermitianEigenbasis:
    raw_eigenvalues: np.ndarray
    eigenvalues: np.ndarray  # rescaled so the coframe wedges exactly to psi
    coframe: np.ndarray  # rows alpha^i, psi-normalized
    frame: np.ndarray  # rows Z_i dual to the coframe, in T^{1,0}
    psi_scale: complex
    quasi_definite: bool
    rank: int
    proportionality_residual: float


def hermitian_eigenbasis(
    H: HermitianFormPoint,
    psi,
    J: AlmostComplexPoint,
    h_ref: MetricPoint,
    tol: float = 1e-8,
) -> HermitianEigenbasis:
    """Diagonalize H against a reference Hermitian structure, then rescale
    the eigen-coframe by the common factor making it wedge to psi.

    Raw eigenvalues are those of the mixed-type matrix H(alpha^i, conj
    alpha^j) in an h_ref-unitary coframe, sorted descending; the
    psi-normalized eigenvalues absorb |c|^(2/3) where
    psi = c alpha~^1 ^ alpha~^2 ^ alpha~^3.
    """
    psi = _psi_form(psi)
    n = H.dim
    if n != 6:
        raise ValueError("eigenbasis extraction is specific to 6 dimensions")
    if psi.degree != 3 or psi.dim != n:
        raise ValueError("psi must be a 3-form on the same chart")
    scale = max(1.0, float(np.abs(H.H).max()))
    if psi.max_norm() <= ABS_TOL:
        raise ValueError("psi vanishes; no eigenbasis normalization possible")
    if H.symmetry_residual() > tol * scale:
        raise ValueError("form is not symmetric within tolerance")
    if H.jstar_invariance_residual(J) > tol * scale:
        raise ValueError("form is not J*-invariant within tolerance")

    coframe0, frame0 = unitary_coframe(J, h_ref)
    G = np.array([[H.pair(coframe0[i], coframe0[j].conj()) for j in range(3)] for i in range(3)])
    G = 0.5 * (G + G.conj().T)
    mu, U = np.linalg.eigh(G)
    order = np.argsort(-mu)
    mu = mu[order]
    U = U[:, order]
    coframe = U.conj().T @ coframe0
    frame = U.T @ frame0

    wedge = KFormPoint(coframe[0]).wedge(KFormPoint(coframe[1])).wedge(KFormPoint(coframe[2]))
    denom = form_inner(wedge, wedge.conj())
    c = form_inner(psi, wedge.conj()) / denom
    residual = (psi - c * wedge).max_norm() / psi.max_norm()

    root = c ** (1.0 / 3.0) if c != 0 else 1.0
    lam = mu * abs(c) ** (2.0 / 3.0)
    coframe = root * coframe
    frame = frame / root

    sign_tol = 1e-9 * max(float(np.abs(lam).max()), ABS_TOL)
    quasi = bool(np.all(lam >= -sign_tol) or np.all(lam <= sign_tol))
    rank = int(np.sum(np.abs(lam) > sign_tol))
    return HermitianEigenbasis(mu, lam, coframe, frame, c, quasi, rank, residual)
