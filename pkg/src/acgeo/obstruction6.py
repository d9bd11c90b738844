"""Six-dimensional obstruction pipeline for compatible symplectic forms.

Given an almost Hermitian pair (J, h) on a 6-dimensional chart, the chain

    nijenhuis -> fundamental form -> dF -> complex volume -> factorization

recovers a complex (3,0)-form Psi with dF = Im Psi and the unique real
bivector H with N = H o Psi.  When H is symmetric, J*-invariant, and
quasi-definite with a positive direction, evaluating the cyclic 3-form
W(X, Y, Z) = g(JN(Y,Z), X) + g(JN(Z,X), Y) + g(JN(X,Y), Z) on the
eigenframe yields a nonzero scalar for *every* compatible metric g, so no
symplectic form compatible with J can exist near the point.  That scalar
is the certificate's obstruction value.

Convention note: T^{1,0} is the (+i)-eigenspace of J and (J* a)(X) =
-a(JX).  Under these choices, evaluating W on an eigenframe triple
(Z_1, Z_2, Z_3) gives -i * sum_i lambda_i |Z_i|^2_g; the certificate
scalar is the conjugate evaluation W(conj Z_1, conj Z_2, conj Z_3) =
+i * sum_i lambda_i |Z_i|^2_g, whose imaginary part is nonnegative for
a nonnegative spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .fields import FundamentalFormField, JField, MetricField, exterior_derivative, nijenhuis
from .pointwise import (
    AlmostComplexPoint,
    ComplexVolumePoint,
    HermitianEigenbasis,
    HermitianFormPoint,
    KFormPoint,
    MetricPoint,
    NijenhuisPoint,
    hermitian_eigenbasis,
    project_pq,
    unitary_coframe,
)

__all__ = [
    "Certificate",
    "almost_kahler_obstruction",
    "check_nk_identity",
    "complex_volume_from_three_form",
    "d_omega_30_norm",
    "factor_nijenhuis",
    "no_symplectic_certificate",
    "obstruction_value",
    "pointwise_certificate",
]

HYPOTHESIS_TOL = 1e-6
NIJENHUIS_ZERO_TOL = 1e-9
EIGEN_SIGN_TOL = 1e-9

VERDICT_OBSTRUCTED = "NO_COMPATIBLE_SYMPLECTIC_FORM"
VERDICT_INCONCLUSIVE = "INCONCLUSIVE"
VERDICT_NOT_APPLICABLE = "NOT_APPLICABLE"


def complex_volume_from_three_form(rho: KFormPoint, J: AlmostComplexPoint) -> ComplexVolumePoint:
    """Recover the complex (3,0)-form Psi with Im Psi = rho.

    Psi = 2i * rho^(3,0); when rho has pure type (3,0) + (0,3) the
    imaginary part of Psi reproduces rho exactly, and the reported purity
    residual (max norm of the (2,1) + (1,2) part of rho) is zero.  A zero
    rho legitimately gives Psi = 0.
    """
    if rho.dim != 6 or J.dim != 6:
        raise ValueError("complex volume recovery is specific to 6 dimensions")
    if rho.degree != 3:
        raise ValueError("need a 3-form")
    if np.iscomplexobj(rho.comps) and np.abs(rho.comps.imag).max() > 1e-12:
        raise ValueError("rho must be a real 3-form")
    rho = rho.real()
    p30 = project_pq(rho, 3, 0, J)
    mixed = project_pq(rho, 2, 1, J) + project_pq(rho, 1, 2, J)
    psi = 2j * p30.comps
    return ComplexVolumePoint(
        KFormPoint(psi.real), KFormPoint(psi.imag), mixed.max_norm()
    )


def factor_nijenhuis(
    N: NijenhuisPoint,
    psi: ComplexVolumePoint,
    J: AlmostComplexPoint,
    h_ref: MetricPoint,
) -> HermitianFormPoint:
    """Solve N = H o psi for the real bivector H.

    psi identifies pairs of (1,0)-frame vectors with (1,0)-covectors via
    beta_ij = psi(Z_i, Z_j, .); together with the conjugate equations this
    is an invertible 6x6 linear system for H whenever psi != 0.  The
    residuals dict on the result reports how well H satisfies the
    hypotheses the factorization is only meaningful under:

    - ``type_purity``: how far N(Z_i, Z_j) sits from T^{0,1},
    - ``symmetry`` and ``jstar_invariance``: defects of the solved H,
    - ``factorization``: max residual of the linear equations themselves,
    - ``imaginary``: size of the imaginary part dropped from the solve.
    """
    psi_form = psi.form()
    if psi_form.max_norm() <= 1e-14:
        raise ValueError("psi vanishes; the factorization is undefined")
    if N.dim != 6:
        raise ValueError("factorization is specific to 6 dimensions")
    coframe, frame = unitary_coframe(J, h_ref)
    P = 0.5 * (np.eye(6) - 1j * J.J)  # projector onto T^{1,0}
    pairs = ((0, 1), (1, 2), (2, 0))
    betas, values = [], []
    purity = 0.0
    for i, j in pairs:
        beta = np.einsum("abc,a,b->c", psi_form.comps, frame[i], frame[j])
        value = N(frame[i], frame[j])
        purity = max(purity, float(np.abs(P @ value).max()))
        betas.append(beta)
        values.append(value)
    B = np.column_stack(betas + [b.conj() for b in betas])
    V = np.column_stack(values + [v.conj() for v in values])
    H_complex = V @ np.linalg.inv(B)
    H = H_complex.real
    residuals = {
        "type_purity": purity,
        "imaginary": float(np.abs(H_complex.imag).max()),
        "factorization": float(np.abs(H @ B - V).max()),
        "symmetry": float(np.abs(H - H.T).max()),
        "jstar_invariance": float(np.abs(J.J @ H @ J.J.T - H).max()),
    }
    return HermitianFormPoint(H, residuals)


def almost_kahler_obstruction(
    g: MetricPoint, J: AlmostComplexPoint, N: NijenhuisPoint
) -> KFormPoint:
    """The cyclic obstruction 3-form W for a compatible metric g.

    W(X, Y, Z) = g(JN(Y,Z), X) + g(JN(Z,X), Y) + g(JN(X,Y), Z).  For any
    metric arising from a symplectic form compatible with J this must
    vanish identically, because it is the cyclic sum of the covariant
    derivative of the closed fundamental form.  Complex arguments are
    accepted (bilinear extension).
    """
    invariance = np.abs(J.J.T @ g.g @ J.J - g.g).max()
    if invariance > 1e-8 * max(1.0, float(np.abs(g.g).max())):
        raise ValueError(f"metric is not J-compatible (residual {invariance:g})")
    T = np.einsum("im,ml,ljk->ijk", g.g, J.J, N.N)
    W = T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)
    return KFormPoint(W)


def obstruction_value(
    g: MetricPoint, J: AlmostComplexPoint, N: NijenhuisPoint, frame
) -> complex:
    """The certificate scalar i * sum_i lambda_i |Z_i|^2_g.

    Computed as the obstruction 3-form evaluated on the conjugated frame
    triple; see the module docstring for why the conjugation realizes the
    +i convention.
    """
    W = almost_kahler_obstruction(g, J, N)
    frame = np.asarray(frame, dtype=complex)
    return complex(W(frame[0].conj(), frame[1].conj(), frame[2].conj()))


def check_nk_identity(J: JField, h: MetricField, point) -> float:
    """Max-norm residual of h(JN(X,Y), Z) = (1/3) dF(X,Y,Z) at a point.

    A small residual certifies that (h, J) is nearly Kahler at the point;
    the left side uses exact first derivatives of J, the right exact
    first derivatives of h and J through F = h(J., .).
    """
    N = nijenhuis(J, point)
    dF = exterior_derivative(FundamentalFormField(h, J), point)
    hv = h.value(point)
    Jv = J.value(point)
    lhs = np.einsum("lm,lk,kij->ijm", hv, Jv, N.N)
    return float(np.abs(lhs - dF.comps / 3.0).max())


def d_omega_30_norm(omega, J: JField, point) -> float:
    """Max-norm of the (3,0)-part of d(omega) at a point (dimension 6).

    Near a point where the eigenvalue certificate applies, no almost
    Hermitian metric compatible with J makes this vanish identically, so
    a positive value is the expected signal on such geometries.
    """
    Jp = J.at_point(point)
    if Jp.dim != 6:
        raise ValueError("the (3,0)-projection test is specific to 6 dimensions")
    d_omega = exterior_derivative(omega, point)
    return project_pq(KFormPoint(d_omega.comps.astype(complex)), 3, 0, Jp).max_norm()


@dataclass
class Certificate:
    """Machine-checkable outcome of the pointwise obstruction pipeline."""

    scene_id: str | None
    point: np.ndarray
    verdict: str
    nijenhuis_max: float
    raw_eigenvalues: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    quasi_definite: bool | None = None
    rank: int | None = None
    sign_flipped: bool = False
    obstruction: complex | None = None
    residuals: dict = dataclass_field(default_factory=dict)
    frame: np.ndarray | None = None
    eigen_sign_tol: float = EIGEN_SIGN_TOL

    @property
    def obstructed(self) -> bool:
        return self.verdict == VERDICT_OBSTRUCTED


def pointwise_certificate(
    J: AlmostComplexPoint,
    h: MetricPoint,
    N: NijenhuisPoint,
    dF: KFormPoint,
    point,
    scene_id: str | None = None,
    tol: float = HYPOTHESIS_TOL,
) -> Certificate:
    """Certificate from already-evaluated pointwise data.

    Verdicts: NO_COMPATIBLE_SYMPLECTIC_FORM when N != 0, all hypothesis
    residuals sit below ``tol``, and the factored spectrum is
    quasi-definite with a strictly positive direction (an all-negative
    spectrum is flipped to (-H, -psi), recorded in ``sign_flipped``);
    INCONCLUSIVE when N is numerically zero; NOT_APPLICABLE when the
    factorization hypotheses fail, so the eigenvalue argument says
    nothing.
    """
    point = np.asarray(point, dtype=float)
    n_scale = max(1.0, float(np.abs(h.g).max()))
    n_max = N.max_norm()
    residuals: dict = {}
    if n_max < NIJENHUIS_ZERO_TOL * n_scale:
        return Certificate(
            scene_id, point, VERDICT_INCONCLUSIVE, n_max, residuals=residuals
        )
    psi = complex_volume_from_three_form(dF, J)
    residuals["rho_purity"] = psi.purity_residual
    if psi.max_norm() <= 1e-12 * max(1.0, dF.max_norm()):
        return Certificate(
            scene_id, point, VERDICT_NOT_APPLICABLE, n_max, residuals=residuals
        )
    H = factor_nijenhuis(N, psi, J, h)
    residuals.update(H.residuals)
    hypothesis_scale = max(1.0, float(np.abs(H.H).max()), n_max)
    hypotheses_ok = all(r <= tol * hypothesis_scale for r in residuals.values())
    if not hypotheses_ok:
        return Certificate(
            scene_id, point, VERDICT_NOT_APPLICABLE, n_max, residuals=residuals
        )
    eig = hermitian_eigenbasis(H, psi, J, h)
    sign_flipped = False
    sign_tol = EIGEN_SIGN_TOL * max(float(np.abs(eig.eigenvalues).max()), 1e-300)
    if np.all(eig.eigenvalues <= sign_tol) and np.any(eig.eigenvalues < -sign_tol):
        sign_flipped = True
        eig = hermitian_eigenbasis(
            HermitianFormPoint(-H.H, H.residuals), -psi, J, h
        )
    residuals["psi_proportionality"] = eig.proportionality_residual
    value = obstruction_value(h, J, N, eig.frame)
    if eig.quasi_definite and eig.rank >= 1:
        verdict = VERDICT_OBSTRUCTED
    elif not eig.quasi_definite:
        verdict = VERDICT_NOT_APPLICABLE
    else:
        verdict = VERDICT_INCONCLUSIVE  # factored spectrum is numerically zero
    return Certificate(
        scene_id,
        point,
        verdict,
        n_max,
        raw_eigenvalues=eig.raw_eigenvalues,
        eigenvalues=eig.eigenvalues,
        quasi_definite=eig.quasi_definite,
        rank=eig.rank,
        sign_flipped=sign_flipped,
        obstruction=value,
        residuals=residuals,
        frame=eig.frame,
    )


def no_symplectic_certificate(
    J: JField,
    h: MetricField,
    point,
    scene_id: str | None = None,
    tol: float = HYPOTHESIS_TOL,
) -> Certificate:
    """Run the full obstruction pipeline at a chart point."""
    point = np.asarray(point, dtype=float)
    Jp = J.at_point(point)
    if Jp.dim != 6:
        raise ValueError("the obstruction pipeline is specific to 6 dimensions")
    hp = h.at_point(point)
    N = nijenhuis(J, point)
    dF = exterior_derivative(FundamentalFormField(h, J), point)
    return pointwise_certificate(Jp, hp, N, dF, point, scene_id, tol)
