#!/usr/bin/env python3
"""Build an infinitesimal compatible symplectic form on a 4-dimensional chart.

Dimension 4 behaves opposite to the 6-sphere: at any point of any
almost Hermitian chart one can solve, to first order, for a closed
nondegenerate 2-form taming the almost complex structure.  The solve
runs through the anti-invariant jet machinery: kill the anti-invariant
part of d(alpha) exactly, keep the scalar slot L multiplying the
fundamental form away from zero, and read off positivity from
d(alpha) ^ d(alpha) = (L^2/2) v_h.
"""

import numpy as np

from acgeo import (
    ChartDomain,
    JField,
    MetricField,
    anti_invariant_basis,
    build_infinitesimal_solution,
    builtin_scene,
    exterior_derivative,
    symbol_dminus,
    symbol_dminus_rank,
    to_text,
)


def flat_pair():
    chart = ChartDomain(((-2.0, 2.0),) * 4)
    J0 = [["0", "-1", "0", "0"],
          ["1", "0", "0", "0"],
          ["0", "0", "0", "-1"],
          ["0", "0", "1", "0"]]
    h0 = [["1" if i == j else "0" for j in range(4)] for i in range(4)]
    return JField(chart, J0), MetricField(chart, h0)


def main():
    np.set_printoptions(precision=6, suppress=True)
    rng = np.random.default_rng(8)

    print("== the first-order symbol never obstructs ==")
    J, h = flat_pair()
    Jp = J.at_point(np.zeros(4))
    xi = rng.normal(size=4)
    print(f"anti-invariant 2-forms in dimension 4: "
          f"{len(anti_invariant_basis(Jp))}-dimensional target")
    print(f"random covector xi = {xi}")
    print(f"rank of alpha -> (xi ^ alpha)^(J,-): {symbol_dminus_rank(Jp, xi)} of 2")
    print(f"  kernel witness |sigma(xi)(xi)|      = "
          f"{symbol_dminus(Jp, xi, xi).max_norm():.2e}")
    print(f"  kernel witness |sigma(xi)(-J^T xi)| = "
          f"{symbol_dminus(Jp, xi, -Jp.J.T @ xi).max_norm():.2e}")
    print("the symbol is surjective with kernel span{xi, J*xi}, so the")
    print("anti-invariant equation can always be solved jet by jet.")

    print("\n== germ on the twisted chart ==")
    scene = builtin_scene("r4_twisted")
    Jt, ht = scene.j_field(), scene.metric_field()
    p = scene.sample_points(1, seed=5)[0]
    germ = build_infinitesimal_solution(Jt, ht, p, seed=7)
    print(f"scene {scene.id}, base point p = {p}")
    print(f"alpha(p) = {germ.alpha.at_point(p).comps}")
    print(f"|d(alpha)^(J,-)| at p: {germ.dminus_norm:.2e}")
    print(f"scalar slot L = {germ.L_value:.6f} (kept away from zero)")
    print(f"d(alpha) ^ d(alpha) = {germ.wedge_value:.6f} "
          f"vs (L^2/2) v_h = {0.5 * germ.L_value**2 * germ.volume_value:.6f}")
    print(f"identity residual: {germ.wedge_identity_residual:.2e}")
    print(f"positivity holds on probes out to radius {germ.positivity_radius:.3f}")
    dalpha = exterior_derivative(germ.alpha, p)
    print(f"independent check |d(alpha)| at p: {dalpha.max_norm():.6f} (nondegenerate)")

    print("\n== flat charts need a conformal nudge ==")
    q = np.array([0.3, -0.1, 0.2, 0.4])
    germ0 = build_infinitesimal_solution(J, h, q, seed=7)
    if germ0.conformal is None:
        print("flat germ solved without rescaling")
    else:
        print("the flat metric's scalar slot degenerates, so the solve reruns")
        print(f"against e^f h with f = {to_text(germ0.conformal)}")
        print(f"theta = df at p: {germ0.theta}")
    print(f"|d(alpha)^(J,-)| = {germ0.dminus_norm:.2e}, "
          f"L = {germ0.L_value:.6f}, "
          f"wedge identity residual {germ0.wedge_identity_residual:.2e}")
    print("either way the output is an honest infinitesimal symplectic germ;")
    print("in dimension 4 the local story never obstructs.")


if __name__ == "__main__":
    main()
