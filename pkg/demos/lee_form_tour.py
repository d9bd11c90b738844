#!/usr/bin/env python3
"""Solve for the Lee form of nondegenerate 2-forms on a 4-dimensional chart.

Any nondegenerate 2-form Omega in dimension 4 satisfies
d(Omega) = theta ^ Omega for a unique 1-form theta, and Omega is
locally a conformal rescaling of a symplectic form exactly when
d(theta) = 0.  The tour solves for theta on a chart where d(theta)
refuses to vanish, contrasts with the standard symplectic form, and
verifies the conformal shift law theta(e^f Omega) = theta(Omega) + df.
"""

import numpy as np

from acgeo import ChartDomain, FieldK, builtin_scene, lee_form_4d, to_text
from acgeo.fields import lee_dtheta_fd


def main():
    np.set_printoptions(precision=6, suppress=True)

    print("== a nondegenerate 2-form that is nowhere conformally closed ==")
    scene = builtin_scene("r4_remark1")
    omega = scene.form_field("omega")
    print(f"scene {scene.id}; Omega coefficients:")
    for indices, node in omega.coefficients.items():
        print(f"  dx{indices[0]} ^ dx{indices[1]}: {to_text(node)}")
    for point in ([0.0, 0.0, 0.0, 0.0], [1.0, 0.5, -0.3, 0.2]):
        result = lee_form_4d(omega, point)
        dtheta = lee_dtheta_fd(omega, point)
        print(f"at p = {np.asarray(point)}:")
        print(f"  theta        = {result.theta}")
        print(f"  |d(Omega) - theta ^ Omega| = {result.residual:.2e}")
        print(f"  pfaffian     = {result.pfaffian:.6f}")
        print(f"  |d(theta)|   = {dtheta.max_norm():.6f}  (nonzero: no local"
              " conformal rescaling closes Omega)")

    print("\n== the standard symplectic form is its own certificate ==")
    box = ChartDomain(((-2.0, 2.0),) * 4)
    standard = FieldK(box, 2, {(1, 2): "1", (3, 4): "1"})
    rng = np.random.default_rng(12)
    worst = max(
        float(np.abs(lee_form_4d(standard, q).theta).max())
        for q in box.sample(25, rng) * 0.9
    )
    print(f"max |theta| over 25 points: {worst:.2e}  (closed, so theta = 0)")

    print("\n== conformal shift law ==")
    f_text = "0.4 * x1 - 0.3 * x2 + 0.1 * x1 * x2"
    scaled = FieldK(
        box,
        2,
        {
            (1, 2): f"exp({f_text})",
            (3, 4): f"exp({f_text})",
        },
    )
    p = np.array([0.5, -0.4, 0.8, 0.1])
    theta = lee_form_4d(scaled, p).theta
    df = np.array([0.4 + 0.1 * p[1], -0.3 + 0.1 * p[0], 0.0, 0.0])
    print(f"f = {f_text}")
    print(f"theta(e^f Omega0) at p = {theta}")
    print(f"df at p                = {df}")
    print(f"|theta - df| = {np.abs(theta - df).max():.2e}")
    print("rescaling a symplectic form shifts theta by an exact form, so")
    print("d(theta) stays zero; the first chart's d(theta) != 0 shows its")
    print("Omega is not such a rescaling around any point.")


if __name__ == "__main__":
    main()
