"""Jet-level construction of local symplectic certificates in dimension 4.

On a 4-dimensional chart with almost complex structure J, a 1-form alpha
with d-alpha(p) = 0 (vanishing anti-invariant part of d alpha) and
(d alpha ^ d alpha)(p) > 0 in the J-orientation witnesses, to first
order, a symplectic form taming J at p.  This module provides the
principal symbols of the operators that drive that construction --
the anti-invariant projection d- of the exterior derivative, the
second-order elliptic block P = d- delta^h, the first-order scalar
operator L_h(Phi) = <d delta^h Phi, F>, and the polarized second-order
symbol of d delta^h -- together with exact evaluation of d delta^h on
quadratic 2-jets of anti-invariant forms and a seeded search that
assembles a certified jet at a chart point.

The key linear-algebra facts the construction rests on, and which the
symbol functions expose for direct verification: the symbol of d- has
rank 2 (full) for every nonzero covector, and the polarized symbol of
d delta^h maps the 20-dimensional space of symmetric-tensor-valued
anti-invariant coefficients onto the full 5-dimensional space of
primitive 2-forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exprlang import Expr, eval_jet, parse
from .fields import (
    ChartDomain,
    CodifferentialField,
    FieldK,
    FundamentalFormField,
    JField,
    MetricField,
    QuadraticCoefficient,
    conformal_rescale,
    exterior_derivative,
    lee_form_4d,
    nijenhuis,
)
from .pointwise import (
    AlmostComplexPoint,
    KFormPoint,
    MetricPoint,
    NijenhuisPoint,
    form_inner,
    increasing_tuples,
)

__all__ = [
    "GermResult",
    "Jet2AntiInv",
    "anti_invariant_basis",
    "anti_invariant_part",
    "build_infinitesimal_solution",
    "conformal_factor_valid",
    "evaluate_jet_operator",
    "polarized_symbol_ddelta",
    "primitive_part",
    "symbol_Lh",
    "symbol_P",
    "symbol_dminus",
    "symbol_dminus_rank",
]

CONFORMAL_BUDGET = 64
JET_SAMPLE_BUDGET = 256
L_THRESHOLD = 1e-6
DMINUS_SUCCESS_TOL = 1e-9


def anti_invariant_part(phi: KFormPoint, J: AlmostComplexPoint) -> KFormPoint:
    """The component of a 2-form with phi(J., J.) = -phi."""
    if phi.degree != 2:
        raise ValueError("anti-invariant splitting applies to 2-forms")
    pulled = J.J.T @ phi.comps @ J.J
    return KFormPoint(0.5 * (phi.comps - pulled))


def anti_invariant_basis(J: AlmostComplexPoint) -> np.ndarray:
    """A deterministic orthonormal basis of the anti-invariant 2-forms.

    In dimension 4 the space is 2-dimensional.  The basis comes from
    Gram-Schmidt (coefficient inner product) on the anti-invariant parts
    of dx1^dx3, dx1^dx4, and dx2^dx3 in that order, keeping the first
    two independent projections; the third candidate only matters when
    an earlier projection degenerates.
    """
    n = J.dim
    if n != 4:
        raise ValueError("anti-invariant frames implemented for dimension 4")
    basis: list[np.ndarray] = []
    for i, j in ((1, 3), (1, 4), (2, 3)):
        comps = np.zeros((n, n))
        comps[i - 1, j - 1] = 1.0
        comps[j - 1, i - 1] = -1.0
        cand = anti_invariant_part(KFormPoint(comps), J).comps
        for b in basis:
            cand = cand - (np.tensordot(b, cand, 2) / 2.0) * b
        norm = np.sqrt(np.tensordot(cand, cand, 2) / 2.0)
        if norm < 1e-8:
            continue
        basis.append(cand / norm)
        if len(basis) == 2:
            return np.array(basis)
    raise ValueError("could not span the anti-invariant 2-forms; is J^2 = -I?")


def symbol_dminus(J: AlmostComplexPoint, xi, alpha) -> KFormPoint:
    """Principal symbol of d- on 1-forms: (xi, alpha) -> (xi ^ alpha)^-.

    Equals (xi ^ alpha - J*xi ^ J*alpha)/2, manifestly anti-invariant.
    """
    if J.dim != 4:
        raise ValueError("the d- symbol is implemented for dimension 4")
    xi = np.asarray(xi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    jxi = J.jstar @ xi
    jalpha = J.jstar @ alpha
    comps = 0.5 * (
        np.outer(xi, alpha) - np.outer(alpha, xi)
        - np.outer(jxi, jalpha) + np.outer(jalpha, jxi)
    )
    return KFormPoint(comps)


def symbol_dminus_rank(J: AlmostComplexPoint, xi) -> int:
    """Rank of alpha -> symbol_dminus(J, xi, alpha) onto the 2-dim target."""
    xi = np.asarray(xi, dtype=float)
    if np.abs(xi).max() == 0.0:
        raise ValueError("the symbol rank is undefined at xi = 0")
    basis = anti_invariant_basis(J)
    M = np.zeros((2, 4))
    for a in range(4):
        sigma = symbol_dminus(J, xi, np.eye(4)[a]).comps
        for k in range(2):
            M[k, a] = np.tensordot(basis[k], sigma, 2) / 2.0
    return int(np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.abs(M).max())))


def symbol_P(h: MetricPoint, xi, Phi: KFormPoint) -> KFormPoint:
    """Principal symbol of the elliptic block: -|xi|^2_h Phi."""
    return KFormPoint(-h.covector_norm2(np.asarray(xi, dtype=float)) * Phi.comps)


def symbol_Lh(
    h: MetricPoint,
    J: AlmostComplexPoint,
    N: NijenhuisPoint,
    theta,
    xi,
    Phi: KFormPoint,
) -> float:
    """Principal (first-order) symbol of Phi -> <d delta^h Phi, F>.

    sigma_xi(L_h)(Phi) = -Phi(xi#, J theta#) + 2 sum_i Phi(JN(xi#, e_i), e_i)
    over an h-orthonormal frame e_i; theta is the Lee form of (h, J).
    The second-order contribution cancels because anti-invariant forms
    satisfy Phi(X, JX) = 0, which is what makes L_h first order.
    """
    xs = h.sharp(np.asarray(xi, dtype=float))
    ts = h.sharp(np.asarray(theta, dtype=float))
    value = -Phi(xs, J(ts))
    for e in h.orthonormal_frame():
        value = value + 2.0 * Phi(J(N(xs, e)), e)
    return float(np.real(value))


def _fundamental(h: MetricPoint, J: AlmostComplexPoint) -> KFormPoint:
    F = J.J.T @ h.g
    return KFormPoint(0.5 * (F - F.T))


def primitive_part(phi: KFormPoint, h: MetricPoint, J: AlmostComplexPoint) -> KFormPoint:
    """Projection of a 2-form onto the h-orthogonal complement of F."""
    F = _fundamental(h, J)
    return phi - (form_inner(phi, F, h) / form_inner(F, F, h)) * F


def _primitive_basis(h: MetricPoint, J: AlmostComplexPoint) -> np.ndarray:
    """Orthonormal basis (h form inner product) of primitive 2-forms."""
    n = h.dim
    basis: list[np.ndarray] = []
    for key in increasing_tuples(n, 2):
        comps = np.zeros((n, n))
        comps[key] = 1.0
        comps[key[::-1]] = -1.0
        cand = primitive_part(KFormPoint(comps), h, J)
        for b in basis:
            cand = cand - form_inner(KFormPoint(b), cand, h) * KFormPoint(b)
        norm = np.sqrt(form_inner(cand, cand, h))
        if norm < 1e-8:
            continue
        basis.append(cand.comps / norm)
    if len(basis) != 5:
        raise ValueError("primitive 2-forms should be 5-dimensional in dimension 4")
    return np.array(basis)


def polarized_symbol_ddelta(h: MetricPoint, J: AlmostComplexPoint, a2) -> KFormPoint:
    """Second-order action of d delta^h on a pure quadratic jet, projected
    primitive.

    ``a2[i, j]`` is the anti-invariant 2-form multiplying x_i x_j (shape
    (4, 4, 4, 4), symmetric in the first two slots).  The unprojected
    value polarizes -xi ^ iota_{xi#} Phi over the quadratic coefficients
    and equals d(delta^h Phi)(p) exactly for the jet with those
    coefficients; the result here is its projection onto primitive
    2-forms, the part the quadratic correction in a germ search can
    steer.  As a map from the 20-dimensional coefficient space to the
    5-dimensional primitive space it has full rank 5.
    """
    a2 = np.asarray(a2, dtype=float)
    if a2.shape != (4, 4, 4, 4):
        raise ValueError("a2 must be a (4, 4, 4, 4) coefficient array")
    if np.abs(a2 - a2.transpose(1, 0, 2, 3)).max() > 1e-12 * max(1.0, np.abs(a2).max()):
        raise ValueError("a2 must be symmetric in its first two slots")
    u = np.einsum("aj,cjad->cd", h.inverse, a2)
    return primitive_part(KFormPoint(-(u - u.T)), h, J)


def conformal_factor_valid(f, point, tol: float = 1e-12) -> bool:
    """Whether f(p) = 0 and df_p != 0, the admissibility test for
    conformal factors in the germ construction."""
    point = np.asarray(point, dtype=float)
    if isinstance(f, str):
        f = parse(f, point.shape[0])
    if not isinstance(f, Expr):
        raise TypeError("conformal factor must be an expression")
    jet = eval_jet(f, point, order=1)
    return abs(jet.value) <= tol and np.abs(jet.grad).max() > tol


@dataclass(frozen=True)
class Jet2AntiInv:
    """Quadratic 2-jet of an anti-invariant 2-form at a base point.

    Coefficients run along the deterministic anti-invariant frame at the
    base point: the realized polynomial form is

        Phi(x) = sum_k (a0[k] + a1[., k].(x-p) + (x-p).a2[., ., k].(x-p)/2)
                 * frame[k],

    so Phi(p) = a0 in frame coordinates exactly.  ``a2`` is symmetric in
    its covector slots exactly (symmetrized on construction).
    """

    point: tuple
    a0: tuple
    a1: tuple
    a2: tuple
    frame_comps: tuple

    @classmethod
    def build(cls, J: AlmostComplexPoint, point, a0=None, a1=None, a2=None) -> "Jet2AntiInv":
        point = np.asarray(point, dtype=float)
        a0 = np.zeros(2) if a0 is None else np.asarray(a0, dtype=float)
        a1 = np.zeros((4, 2)) if a1 is None else np.asarray(a1, dtype=float)
        a2 = np.zeros((4, 4, 2)) if a2 is None else np.asarray(a2, dtype=float)
        if a0.shape != (2,) or a1.shape != (4, 2) or a2.shape != (4, 4, 2):
            raise ValueError("coefficient shapes must be (2,), (4, 2), (4, 4, 2)")
        a2 = 0.5 * (a2 + a2.transpose(1, 0, 2))
        frame = anti_invariant_basis(J)
        return cls(
            tuple(point),
            tuple(a0),
            tuple(map(tuple, a1)),
            tuple(tuple(map(tuple, plane)) for plane in a2),
            tuple(tuple(map(tuple, f)) for f in frame),
        )

    @classmethod
    def from_forms(cls, J: AlmostComplexPoint, point, a0_form=None, a1_forms=None, a2_forms=None) -> "Jet2AntiInv":
        """Build from anti-invariant 2-form values instead of frame
        coefficients; ``a1_forms``/``a2_forms`` carry one leading slot
        per covector index."""
        frame = anti_invariant_basis(J)

        def coords(comps):
            return np.array([np.tensordot(f, comps, 2) / 2.0 for f in frame])

        a0 = None if a0_form is None else coords(np.asarray(a0_form, dtype=float))
        a1 = a2 = None
        if a1_forms is not None:
            a1_forms = np.asarray(a1_forms, dtype=float)
            a1 = np.stack([coords(a1_forms[i]) for i in range(4)])
        if a2_forms is not None:
            a2_forms = np.asarray(a2_forms, dtype=float)
            a2 = np.stack(
                [np.stack([coords(a2_forms[i, j]) for j in range(4)]) for i in range(4)]
            )
        return cls.build(J, point, a0, a1, a2)

    @property
    def base_point(self) -> np.ndarray:
        return np.asarray(self.point, dtype=float)

    @property
    def frame(self) -> np.ndarray:
        return np.asarray(self.frame_comps, dtype=float)

    def coefficient_arrays(self):
        return (
            np.asarray(self.a0, dtype=float),
            np.asarray(self.a1, dtype=float),
            np.asarray(self.a2, dtype=float),
        )

    def a2_form(self) -> np.ndarray:
        """The quadratic coefficient as a (4, 4, 4, 4) form-valued array."""
        _, _, a2 = self.coefficient_arrays()
        return np.einsum("ijk,kab->ijab", a2, self.frame)

    def value(self, x) -> KFormPoint:
        a0, a1, a2 = self.coefficient_arrays()
        d = np.asarray(x, dtype=float) - self.base_point
        coeff = a0 + d @ a1 + 0.5 * np.einsum("i,ijk,j->k", d, a2, d)
        return KFormPoint(np.einsum("k,kab->ab", coeff, self.frame))

    def realize(self, chart: ChartDomain) -> FieldK:
        """The polynomial representative as a 2-form coefficient field."""
        a0, a1, a2 = self.coefficient_arrays()
        frame = self.frame
        coefficients = {}
        for key in increasing_tuples(4, 2):
            w = frame[:, key[0], key[1]]
            coefficients[(key[0] + 1, key[1] + 1)] = QuadraticCoefficient.build(
                self.base_point, float(a0 @ w), a1 @ w, np.einsum("ijk,k->ij", a2, w)
            )
        return FieldK(chart, 2, coefficients)


def evaluate_jet_operator(h: MetricField, J: JField, e: Jet2AntiInv):
    """Exact (d delta^h Phi, anti-invariant part, <., F>) of a jet at its
    base point.

    Returns ``(ddelta, P_val, L_val)``: the full 2-form d(delta^h Phi)(p)
    computed through exact polynomial and metric jets, its anti-invariant
    part, and its h-inner product with the fundamental form.  The
    a2-dependence of the primitive part of ``ddelta`` reproduces
    polarized_symbol_ddelta.
    """
    p = e.base_point
    if not (h.chart.contains(p) and J.chart.contains(p)):
        raise ValueError(f"jet base point {p} lies outside the chart")
    Jp = J.at_point(p)
    if np.abs(anti_invariant_basis(Jp) - e.frame).max() > 1e-9:
        raise ValueError(
            "jet frame does not match the structure at its base point; "
            "rebuild the jet for this J"
        )
    alpha = CodifferentialField(h, e.realize(h.chart))
    ddelta = exterior_derivative(alpha, p)
    hp = h.at_point(p)
    P_val = anti_invariant_part(ddelta, Jp)
    L_val = form_inner(ddelta, _fundamental(hp, Jp), hp)
    return ddelta, P_val, float(L_val)


@dataclass
class GermResult:
    """A certified infinitesimal symplectic germ at a chart point.

    ``alpha`` is the 1-form field delta^h Phi for the found jet; at the
    base point its differential has vanishing anti-invariant part and
    positive square relative to the J-orientation, and the identity
    (d alpha ^ d alpha)(p) = L^2/2 * v_h(p) ties the 4-form value to the
    first-order operator.  ``positivity_radius`` reports the largest
    tested radius on which sampled d alpha ^ d alpha values stay
    positive; away from p the germ is a polynomial convenience, and only
    the base-point checks are certified.
    """

    jet: Jet2AntiInv
    alpha: CodifferentialField
    metric: MetricField
    conformal: Expr | None
    theta: np.ndarray
    L_value: float
    dminus_norm: float
    wedge_value: float
    volume_value: float
    wedge_identity_residual: float
    positivity_radius: float
    seed: int


def _wedge_vs_orientation(alpha_field, h: MetricField, J: JField, x):
    """(d alpha ^ d alpha) coefficient and the J-oriented volume at x."""
    da = exterior_derivative(alpha_field, x)
    wedge = da.wedge(da).comps[0, 1, 2, 3]
    hp = h.at_point(x)
    F = _fundamental(hp, J.at_point(x))
    vol = F.wedge(F).comps[0, 1, 2, 3] / 2.0
    return float(wedge), float(vol)


def _lh_symbol_sheet(hp, Jp, N, theta, basis) -> float:
    vals = [
        abs(symbol_Lh(hp, Jp, N, theta, np.eye(4)[a], KFormPoint(b)))
        for a in range(4)
        for b in basis
    ]
    return max(vals)


def build_infinitesimal_solution(J: JField, h: MetricField, point, seed: int = 0) -> GermResult:
    """Search for a 2-jet whose codifferential is an infinitesimal
    symplectic germ at ``point``.

    The staged procedure: (i) if the first-order symbol of L_h vanishes
    identically at the point (flat Lee form and vanishing Nijenhuis
    torsion there), replace h by e^f h for a linear f with f(p) = 0,
    df_p != 0 drawn from the seed, which shifts the Lee form by df;
    (ii) sample constant/linear coefficients until |L_h(e)| clears a
    threshold; (iii) append the quadratic coefficient solving the rank-5
    linear system that cancels the primitive part of d delta^h e at p --
    the quadratic term cannot disturb L_h, so the leftover is exactly
    (L/2) F; (iv) verify the base-point identities on the assembled
    alpha = delta^h Phi and sample shrinking boxes for the positivity
    radius.  Raises on dimension != 4 or when a search budget runs out.
    """
    point = np.asarray(point, dtype=float)
    if h.chart.dim != 4 or J.chart.dim != 4:
        raise ValueError("the germ construction is specific to dimension 4")
    if not (h.chart.contains(point) and J.chart.contains(point)):
        raise ValueError(f"point {point} lies outside the chart")
    rng = np.random.default_rng(seed)

    Jp = J.at_point(point)
    N = nijenhuis(J, point)
    basis = anti_invariant_basis(Jp)
    h_work, conformal = h, None
    theta = lee_form_4d(FundamentalFormField(h_work, J), point).theta
    hp = h_work.at_point(point)

    if _lh_symbol_sheet(hp, Jp, N, theta, basis) < 1e-12:
        for _ in range(CONFORMAL_BUDGET):
            c = rng.normal(size=4)
            if np.abs(c).max() < 0.1:
                continue
            terms = " + ".join(
                f"({float(c[i])!r}) * (x{i + 1} - ({float(point[i])!r}))"
                for i in range(4)
            )
            f = parse(terms, 4)
            if not conformal_factor_valid(f, point):
                continue
            candidate = conformal_rescale(h_work, f)
            theta_c = lee_form_4d(FundamentalFormField(candidate, J), point).theta
            if _lh_symbol_sheet(candidate.at_point(point), Jp, N, theta_c, basis) > 1e-8:
                h_work, conformal, theta = candidate, f, theta_c
                hp = h_work.at_point(point)
                break
        else:
            raise RuntimeError(
                "conformal search budget exhausted: the L_h symbol stayed "
                f"degenerate at {point} after {CONFORMAL_BUDGET} factors"
            )

    jet01 = None
    for _ in range(JET_SAMPLE_BUDGET):
        a0 = rng.normal(size=2)
        a1 = rng.normal(size=(4, 2))
        candidate = Jet2AntiInv.build(Jp, point, a0=a0, a1=a1)
        ddelta, _, L_val = evaluate_jet_operator(h_work, J, candidate)
        if abs(L_val) > L_THRESHOLD:
            jet01 = candidate
            break
    if jet01 is None:
        raise RuntimeError(
            f"jet sample budget exhausted at {point}: |L_h| never exceeded "
            f"{L_THRESHOLD:g} in {JET_SAMPLE_BUDGET} draws "
            f"(theta = {theta}, max |N| = {N.max_norm():g})"
        )

    prim_basis = _primitive_basis(hp, Jp)

    def prim_coords(form: KFormPoint) -> np.ndarray:
        return np.array([form_inner(form, KFormPoint(b), hp) for b in prim_basis])

    rhs = prim_coords(ddelta)
    pairs = [(i, j) for i in range(4) for j in range(i, 4)]
    columns = []
    for i, j in pairs:
        for k in range(2):
            unit = np.zeros((4, 4, 2))
            unit[i, j, k] = unit[j, i, k] = 1.0
            probe = Jet2AntiInv.build(Jp, point, a2=unit)
            dd_probe, _, _ = evaluate_jet_operator(h_work, J, probe)
            columns.append(prim_coords(dd_probe))
    M = np.array(columns).T  # 5 x 20
    x, *_ = np.linalg.lstsq(M, -rhs, rcond=None)
    a2 = np.zeros((4, 4, 2))
    for coeff, (i, j) in zip(x.reshape(len(pairs), 2), pairs):
        a2[i, j] += coeff
        if i != j:
            a2[j, i] += coeff

    a0_arr, a1_arr, _ = jet01.coefficient_arrays()
    jet = Jet2AntiInv.build(Jp, point, a0=a0_arr, a1=a1_arr, a2=a2)
    ddelta, P_val, L_val = evaluate_jet_operator(h_work, J, jet)
    dminus_norm = P_val.max_norm()
    alpha = CodifferentialField(h_work, jet.realize(h_work.chart))
    wedge, vol = _wedge_vs_orientation(alpha, h_work, J, point)
    identity = abs(wedge - 0.5 * L_val * L_val * vol) / max(abs(wedge), 1e-300)
    if dminus_norm > DMINUS_SUCCESS_TOL or wedge * np.sign(vol) <= 0.0:
        raise RuntimeError(
            f"germ verification failed at {point}: |d-alpha| = {dminus_norm:g}, "
            f"d alpha ^ d alpha = {wedge:g} against volume {vol:g}"
        )

    margin = min(
        float(min(point[i] - lo, hi - point[i]))
        for i, (lo, hi) in enumerate(h_work.chart.box)
    )
    radius = 0.0
    for fraction in (0.5, 0.25, 0.1, 0.05, 0.02):
        r = fraction * margin
        if r <= 0.0:
            continue
        offsets = np.concatenate([r * np.eye(4), -r * np.eye(4)])
        extra = rng.normal(size=(8, 4))
        extra = r * extra / np.abs(extra).max(axis=1, keepdims=True)
        ok = True
        for off in np.concatenate([offsets, extra]):
            w, v = _wedge_vs_orientation(alpha, h_work, J, point + off)
            if w * np.sign(v) <= 0.0:
                ok = False
                break
        if ok:
            radius = r
            break

    return GermResult(
        jet=jet,
        alpha=alpha,
        metric=h_work,
        conformal=conformal,
        theta=theta,
        L_value=L_val,
        dminus_norm=dminus_norm,
        wedge_value=wedge,
        volume_value=vol,
        wedge_identity_residual=identity,
        positivity_radius=radius,
        seed=seed,
    )
