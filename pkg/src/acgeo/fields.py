"""Tensor fields on a box chart with exact derivative propagation.

Every field stores coefficients that can produce exact 2-jets (value,
gradient, Hessian) at a point: expression trees from
:mod:`acgeo.exprlang`, quadratic polynomial coefficients, or anything
exposing the same ``jet``-style data.  All differential operators below
consume those jets; finite differences appear only in test oracles.

Matrix-valued jets are propagated with explicit product/inverse/detroot
rules rather than elementwise dual numbers, which keeps the codifferential
of a 2-form against a curved metric both exact and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exprlang import Expr, Const, Jet, eval_jet, parse
from .pointwise import (
    AlmostComplexPoint,
    KFormPoint,
    MetricPoint,
    NijenhuisPoint,
    increasing_tuples,
    _fill_dense,
)

__all__ = [
    "ChartDomain",
    "FieldK",
    "FormJet",
    "FundamentalFormField",
    "JField",
    "LeeFormResult",
    "MatJet",
    "MatrixField",
    "MetricField",
    "QuadraticCoefficient",
    "codifferential_jet",
    "codifferential_two_form",
    "conformal_rescale",
    "exterior_derivative",
    "fundamental_form",
    "lee_dtheta_fd",
    "lee_form_4d",
    "nijenhuis",
]


@dataclass(frozen=True)
class ChartDomain:
    """An open coordinate box in R^n."""

    box: tuple  # ((lo, hi), ...) per axis

    def __post_init__(self):
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        for lo, hi in self.box:
            if not lo < hi:
                raise ValueError("box intervals must be nonempty")

    @property
    def dim(self) -> int:
        return len(self.box)

    def contains(self, point, margin: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            return False
        return all(
            lo + margin < x < hi - margin for (lo, hi), x in zip(self.box, point)
        )

    def center(self) -> np.ndarray:
        return np.array([(lo + hi) / 2.0 for lo, hi in self.box])

    def sample(self, count: int, rng, margin_fraction: float = 0.02) -> np.ndarray:
        """Draw points uniformly, strictly inside the box.

        ``rng`` is a seeded ``numpy.random.Generator``; the small margin
        keeps finite-difference stencils used by callers inside the box.
        """
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        pad = margin_fraction * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim))


@dataclass
class MatJet:
    """Jet of a matrix-valued map: value (m,m), grad (n,m,m), hess (n,n,m,m)."""

    value: np.ndarray
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None

    @property
    def order(self) -> int:
        return 0 if self.grad is None else (1 if self.hess is None else 2)


def matjet_mul(A: MatJet, B: MatJet) -> MatJet:
    value = A.value @ B.value
    grad = hess = None
    if A.grad is not None and B.grad is not None:
        grad = np.einsum("aik,kj->aij", A.grad, B.value) + np.einsum(
            "ik,akj->aij", A.value, B.grad
        )
        if A.hess is not None and B.hess is not None:
            cross = np.einsum("aik,bkj->abij", A.grad, B.grad)
            hess = (
                np.einsum("abik,kj->abij", A.hess, B.value)
                + np.einsum("ik,abkj->abij", A.value, B.hess)
                + cross
                + cross.transpose(1, 0, 2, 3)
            )
    return MatJet(value, grad, hess)


def matjet_inv(A: MatJet) -> MatJet:
    W = np.linalg.inv(A.value)
    grad = hess = None
    if A.grad is not None:
        grad = -np.einsum("ik,akl,lj->aij", W, A.grad, W)
        if A.hess is not None:
            GW = np.einsum("ik,akl,lj->aij", W, A.grad, W)  # W dA W
            sym = np.einsum("aik,bkj->abij", GW, np.einsum("akl,lj->akj", A.grad, W))
            hess = (
                sym
                + sym.transpose(1, 0, 2, 3)
                - np.einsum("ik,abkl,lj->abij", W, A.hess, W)
            )
    return MatJet(W, grad, hess)


def sqrt_det_jet(A: MatJet) -> Jet:
    """Jet of sqrt(det A) for symmetric positive definite A."""
    W = np.linalg.inv(A.value)
    s = float(np.sqrt(np.linalg.det(A.value)))
    grad = hess = None
    if A.grad is not None:
        l1 = np.einsum("ij,aji->a", W, A.grad)  # grad of log det
        grad = 0.5 * s * l1
        if A.hess is not None:
            l2 = np.einsum("ij,abji->ab", W, A.hess) - np.einsum(
                "ij,ajk,kl,bli->ab", W, A.grad, W, A.grad
            )
            hess = s * (0.5 * l2 + 0.25 * np.outer(l1, l1))
    return Jet(s, grad, hess)


@dataclass
class FormJet:
    """Jet of a k-form field: dense antisymmetric value plus derivatives."""

    value: np.ndarray
    grad: np.ndarray | None = None  # grad[a, ...] = d_a (components)
    hess: np.ndarray | None = None  # hess[a, b, ...]

    @property
    def degree(self) -> int:
        return self.value.ndim


@dataclass(frozen=True)
class QuadraticCoefficient:
    """c0 + c1 . (x - center) + (x - center)^T c2 (x - center) / 2."""

    center: tuple
    c0: float
    c1: tuple
    c2: tuple  # rows of the symmetric matrix

    @classmethod
    def build(cls, center, c0: float, c1, c2) -> "QuadraticCoefficient":
        center = np.asarray(center, dtype=float)
        c1 = np.asarray(c1, dtype=float)
        c2 = np.asarray(c2, dtype=float)
        return cls(
            tuple(center), float(c0), tuple(c1), tuple(map(tuple, 0.5 * (c2 + c2.T)))
        )

    def jet(self, point, order: int = 2) -> Jet:
        d = np.asarray(point, dtype=float) - np.asarray(self.center)
        c1 = np.asarray(self.c1)
        c2 = np.asarray(self.c2)
        value = self.c0 + c1 @ d + 0.5 * d @ c2 @ d
        grad = c1 + c2 @ d if order >= 1 else None
        hess = c2.copy() if order >= 2 else None
        return Jet(float(value), grad, hess)


def _require_inside(field, point) -> None:
    chart = getattr(field, "chart", None)
    if isinstance(chart, ChartDomain) and not chart.contains(point):
        raise ValueError(
            f"point {np.asarray(point, dtype=float)} lies outside the chart box"
        )


def _coefficient_jet(coefficient, point: np.ndarray, order: int) -> Jet:
    if isinstance(coefficient, Expr):
        return eval_jet(coefficient, point, order)
    return coefficient.jet(point, order)


def _normalize_coefficient(coefficient, dim: int):
    if isinstance(coefficient, str):
        return parse(coefficient, dim)
    if isinstance(coefficient, (int, float)):
        return Const(float(coefficient))
    if isinstance(coefficient, Expr) or hasattr(coefficient, "jet"):
        return coefficient
    raise TypeError(f"cannot use {coefficient!r} as a field coefficient")


class MatrixField:
    """A square matrix of scalar coefficients over a chart."""

    def __init__(self, chart: ChartDomain, entries):
        n = chart.dim
        if len(entries) != n or any(len(row) != n for row in entries):
            raise ValueError(f"need a {n}x{n} entry grid")
        self.chart = chart
        self.entries = [
            [_normalize_coefficient(e, n) for e in row] for row in entries
        ]

    @property
    def dim(self) -> int:
        return self.chart.dim

    def value(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        n = self.dim
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = _coefficient_jet(self.entries[i][j], point, 0).value
        return out

    def mat_jet(self, point, order: int = 1) -> MatJet:
        point = np.asarray(point, dtype=float)
        n = self.dim
        value = np.empty((n, n))
        grad = np.empty((n, n, n)) if order >= 1 else None
        hess = np.empty((n, n, n, n)) if order >= 2 else None
        for i in range(n):
            for j in range(n):
                jet = _coefficient_jet(self.entries[i][j], point, order)
                value[i, j] = jet.value
                if order >= 1:
                    grad[:, i, j] = jet.grad
                if order >= 2:
                    hess[:, :, i, j] = jet.hess
        return MatJet(value, grad, hess)


class JField(MatrixField):
    """An almost complex structure as a matrix of coefficients."""

    def at_point(self, point) -> AlmostComplexPoint:
        return AlmostComplexPoint(self.value(point))


class MetricField(MatrixField):
    """A Riemannian metric as a matrix of coefficients."""

    def at_point(self, point) -> MetricPoint:
        return MetricPoint(self.value(point))


class FieldK:
    """A k-form field with one coefficient per increasing index tuple.

    Coefficient keys are 1-based strictly increasing tuples, matching the
    coordinate names x1..xn; missing tuples are zero.
    """

    def __init__(self, chart: ChartDomain, degree: int, coefficients: dict):
        n = chart.dim
        if not 1 <= degree <= n:
            raise ValueError(f"degree {degree} out of range for dimension {n}")
        self.chart = chart
        self.degree = degree
        self.coefficients = {}
        for key, coefficient in coefficients.items():
            key = tuple(int(i) for i in key)
            if len(key) != degree or any(not 1 <= i <= n for i in key) or any(
                a >= b for a, b in zip(key, key[1:])
            ):
                raise ValueError(f"bad coefficient key {key} for degree {degree}")
            self.coefficients[key] = _normalize_coefficient(coefficient, n)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def form_jet(self, point, order: int = 1) -> FormJet:
        point = np.asarray(point, dtype=float)
        n, k = self.dim, self.degree
        tuples = increasing_tuples(n, k)
        values = np.zeros(len(tuples))
        grads = np.zeros((n, len(tuples))) if order >= 1 else None
        hesses = np.zeros((n, n, len(tuples))) if order >= 2 else None
        index = {t: m for m, t in enumerate(tuples)}
        for key, coefficient in self.coefficients.items():
            jet = _coefficient_jet(coefficient, point, order)
            m = index[tuple(i - 1 for i in key)]
            values[m] = jet.value
            if order >= 1:
                grads[:, m] = jet.grad
            if order >= 2:
                hesses[:, :, m] = jet.hess
        value = _fill_dense(n, k, values)
        grad = hess = None
        if order >= 1:
            grad = np.stack([_fill_dense(n, k, grads[a]) for a in range(n)])
        if order >= 2:
            hess = np.stack(
                [
                    np.stack([_fill_dense(n, k, hesses[a, b]) for b in range(n)])
                    for a in range(n)
                ]
            )
        return FormJet(value, grad, hess)

    def at_point(self, point) -> KFormPoint:
        return KFormPoint(self.form_jet(point, 0).value)


def _d_from_grad(grad: np.ndarray, n: int, k: int) -> np.ndarray:
    """Assemble d(phi) components from grad[a, ...] = d_a phi_{...}."""
    values = []
    for T in increasing_tuples(n, k + 1):
        acc = 0.0
        for m in range(k + 1):
            rest = T[:m] + T[m + 1:]
            acc += (-1) ** m * grad[(T[m],) + rest]
        values.append(acc)
    return _fill_dense(n, k + 1, values)


def exterior_derivative(field, point) -> KFormPoint:
    """d(phi) at a point, from exact coefficient jets."""
    _require_inside(field, point)
    jet = field.form_jet(point, 1)
    n, k = jet.value.shape[0], jet.degree
    if k + 1 > n:
        raise ValueError(f"degree overflow: d of a {k}-form in dimension {n}")
    return KFormPoint(_d_from_grad(jet.grad, n, k))


class ExteriorDerivativeField:
    """d(phi) as a field, exposing jets one order lower than phi's."""

    def __init__(self, base):
        self.base = base
        self.chart = getattr(base, "chart", None)

    def form_jet(self, point, order: int = 1) -> FormJet:
        base = self.base.form_jet(point, order + 1)
        n, k = base.value.shape[0], base.degree
        if k + 1 > n:
            raise ValueError(f"degree overflow: d of a {k}-form in dimension {n}")
        value = _d_from_grad(base.grad, n, k)
        grad = None
        if order >= 1:
            grad = np.stack([_d_from_grad(base.hess[a], n, k) for a in range(n)])
        return FormJet(value, grad, None)

    def at_point(self, point) -> KFormPoint:
        return KFormPoint(self.form_jet(point, 0).value)


def nijenhuis(J: JField, point) -> NijenhuisPoint:
    """Nijenhuis tensor at a point from exact first derivatives of J.

    Components follow 4 N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]
    expanded in coordinates; the 1/4 stays in.
    """
    _require_inside(J, point)
    mj = J.mat_jet(point, 1)
    V, G = mj.value, mj.grad
    t1 = np.einsum("mi,mkj->kij", V, G)
    t3 = np.einsum("km,imj->kij", V, G)
    raw = t1 - t1.transpose(0, 2, 1) - t3 + t3.transpose(0, 2, 1)
    return NijenhuisPoint(raw / 4.0)


class FundamentalFormField:
    """F(X, Y) = h(J X, Y) as a 2-form field with exact jets."""

    def __init__(self, h: MetricField, J: JField, invariance_tol: float = 1e-8):
        if h.chart is not J.chart and h.chart != J.chart:
            raise ValueError("h and J must live on the same chart")
        self.h = h
        self.J = J
        self.invariance_tol = invariance_tol
        self.chart = J.chart
        self.degree = 2

    @property
    def dim(self) -> int:
        return self.chart.dim

    def form_jet(self, point, order: int = 1) -> FormJet:
        hj = self.h.mat_jet(point, order)
        Jj = self.J.mat_jet(point, order)
        Vh, VJ = hj.value, Jj.value
        residual = np.abs(VJ.T @ Vh @ VJ - Vh).max()
        if residual > self.invariance_tol * max(1.0, float(np.abs(Vh).max())):
            raise ValueError(f"metric is not J-invariant at the point (residual {residual:g})")
        value = VJ.T @ Vh
        grad = hess = None
        if order >= 1:
            grad = np.einsum("aki,kj->aij", Jj.grad, Vh) + np.einsum(
                "ki,akj->aij", VJ, hj.grad
            )
        if order >= 2:
            cross = np.einsum("aki,bkj->abij", Jj.grad, hj.grad)
            hess = (
                np.einsum("abki,kj->abij", Jj.hess, Vh)
                + np.einsum("ki,abkj->abij", VJ, hj.hess)
                + cross
                + cross.transpose(1, 0, 2, 3)
            )
        # exact antisymmetry in the 2-form slots (J-invariance makes the
        # symmetric part pure roundoff)
        value = 0.5 * (value - value.T)
        if grad is not None:
            grad = 0.5 * (grad - grad.transpose(0, 2, 1))
        if hess is not None:
            hess = 0.5 * (hess - hess.transpose(0, 1, 3, 2))
        return FormJet(value, grad, hess)

    def at_point(self, point) -> KFormPoint:
        return KFormPoint(self.form_jet(point, 0).value)


def fundamental_form(h: MetricField, J: JField, point) -> KFormPoint:
    """F = h(J., .) at a point; errors if h is not J-invariant there."""
    _require_inside(h, point)
    return FundamentalFormField(h, J).at_point(point)


@dataclass
class LeeFormResult:
    theta: np.ndarray
    residual: float
    pfaffian: float  # (Omega ^ Omega)(e1..e4) / 2, the nondegeneracy witness


def lee_form_4d(omega_field, point) -> LeeFormResult:
    """Solve d(Omega) = theta ^ Omega for theta at a point (dimension 4).

    The 4x4 linear system (one equation per increasing triple) is solved
    by LU with partial pivoting; the returned residual is the max-norm of
    d(Omega) - theta ^ Omega and should sit at roundoff level whenever
    Omega is nondegenerate.
    """
    _require_inside(omega_field, point)
    jet = omega_field.form_jet(point, 1)
    n = jet.value.shape[0]
    if n != 4 or jet.degree != 2:
        raise ValueError("the Lee form solve needs a 2-form on a 4-dimensional chart")
    Om = jet.value
    scale = max(1.0, float(np.abs(Om).max()))
    pf = (
        Om[0, 1] * Om[2, 3] - Om[0, 2] * Om[1, 3] + Om[0, 3] * Om[1, 2]
    )
    if abs(pf) < 1e-10 * scale * scale:
        raise ValueError(f"2-form degenerate at the point (pfaffian {pf:g})")
    d_omega = _d_from_grad(jet.grad, 4, 2)
    triples = increasing_tuples(4, 3)
    M = np.zeros((4, 4))
    rhs = np.zeros(4)
    for row, (a, b, c) in enumerate(triples):
        M[row, a] = Om[b, c]
        M[row, b] = -Om[a, c]
        M[row, c] = Om[a, b]
        rhs[row] = d_omega[a, b, c]
    theta = np.linalg.solve(M, rhs)
    check = KFormPoint(theta).wedge(KFormPoint(Om))
    residual = float(np.abs(check.comps - d_omega).max())
    return LeeFormResult(theta, residual, float(pf))


def lee_dtheta_fd(omega_field, point, step: float = 1e-5) -> KFormPoint:
    """d(theta) assembled from central differences of pointwise Lee solves.

    The Lee form is only defined through a pointwise linear solve, so its
    exterior derivative is estimated from solved samples.
    """
    point = np.asarray(point, dtype=float)
    partials = np.zeros((4, 4))
    for a in range(4):
        dp = np.zeros(4)
        dp[a] = step
        tp = lee_form_4d(omega_field, point + dp).theta
        tm = lee_form_4d(omega_field, point - dp).theta
        partials[a] = (tp - tm) / (2.0 * step)
    return KFormPoint(partials - partials.T)


def conformal_rescale(h: MetricField, f) -> MetricField:
    """The metric e^f h as a coefficient field (exact jets, no approximation)."""
    from .exprlang import BinOp, Call

    if isinstance(f, str):
        f = parse(f, h.dim)
    if not isinstance(f, Expr):
        raise TypeError("conformal factor must be an expression")
    entries = [
        [BinOp("*", Call("exp", f), entry) for entry in row] for row in h.entries
    ]
    return MetricField(h.chart, entries)


def codifferential_jet(h: MetricField, phi, point) -> tuple[np.ndarray, np.ndarray]:
    """Value and gradient of the codifferential of a 2-form.

    Uses (delta phi)_v = -g_vj (1/sqrt(det g)) d_i (sqrt(det g) phi^{ij}),
    the formal L2 adjoint of d for the inner product with
    <dx1^dx2, dx1^dx2> = 1.  Returns ``(value, grad)`` with
    ``grad[a, v] = d_a (delta phi)_v``; metric and coefficient Hessians
    make the gradient exact.
    """
    point = np.asarray(point, dtype=float)
    _require_inside(h, point)
    hj = h.mat_jet(point, 2)
    pj = phi.form_jet(point, 2)
    if pj.degree != 2:
        raise ValueError("codifferential implemented for 2-forms")
    Wj = matjet_inv(hj)
    phi_mat = MatJet(pj.value, pj.grad, pj.hess)
    up = matjet_mul(matjet_mul(Wj, phi_mat), Wj)  # phi with both indices raised
    s = sqrt_det_jet(hj)
    A_value = s.value * up.value
    A_grad = np.einsum("a,ij->aij", s.grad, up.value) + s.value * up.grad
    cross = np.einsum("a,bij->abij", s.grad, up.grad)
    A_hess = (
        np.einsum("ab,ij->abij", s.hess, up.value)
        + cross
        + cross.transpose(1, 0, 2, 3)
        + s.value * up.hess
    )
    div_value = np.einsum("iij->j", A_grad)
    div_grad = np.einsum("aiij->aj", A_hess)
    r_value = 1.0 / s.value
    r_grad = -s.grad / (s.value * s.value)
    u_value = -r_value * div_value
    u_grad = -(np.einsum("a,j->aj", r_grad, div_value) + r_value * div_grad)
    value = hj.value @ u_value
    grad = np.einsum("avj,j->av", hj.grad, u_value) + np.einsum(
        "vj,aj->av", hj.value, u_grad
    )
    return value, grad


def codifferential_two_form(h: MetricField, phi, point) -> KFormPoint:
    """delta(phi) at a point, as a covector."""
    value, _ = codifferential_jet(h, phi, point)
    return KFormPoint(value)


class CodifferentialField:
    """delta(phi) as a 1-form field with order <= 1 jets."""

    def __init__(self, h: MetricField, phi):
        self.h = h
        self.phi = phi
        self.chart = getattr(phi, "chart", None) or getattr(h, "chart", None)

    def form_jet(self, point, order: int = 1) -> FormJet:
        value, grad = codifferential_jet(self.h, self.phi, point)
        return FormJet(value, grad if order >= 1 else None, None)

    def at_point(self, point) -> KFormPoint:
        return KFormPoint(self.form_jet(point, 0).value)
