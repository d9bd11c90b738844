"""Chart-based numerics for almost complex structures.

Exact-jet fields over box charts, pointwise tensor algebra for almost
Hermitian pairs, the 6-dimensional eigenvalue certificate ruling out
compatible symplectic forms on strictly nearly Kahler geometries, and
the 4-dimensional jet construction producing infinitesimal symplectic
germs.
"""

from .exprlang import Expr, ExprSyntaxError, Jet, eval_jet, parse, to_text
from .pointwise import (
    AlmostComplexPoint,
    ComplexVolumePoint,
    HermitianEigenbasis,
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
from .fields import (
    ChartDomain,
    FieldK,
    FundamentalFormField,
    JField,
    MetricField,
    QuadraticCoefficient,
    codifferential_two_form,
    conformal_rescale,
    exterior_derivative,
    fundamental_form,
    lee_form_4d,
    nijenhuis,
)
from .obstruction6 import (
    Certificate,
    almost_kahler_obstruction,
    check_nk_identity,
    complex_volume_from_three_form,
    d_omega_30_norm,
    factor_nijenhuis,
    no_symplectic_certificate,
    obstruction_value,
)
from .localsymp4 import (
    GermResult,
    Jet2AntiInv,
    anti_invariant_basis,
    build_infinitesimal_solution,
    evaluate_jet_operator,
    polarized_symbol_ddelta,
    symbol_Lh,
    symbol_P,
    symbol_dminus,
    symbol_dminus_rank,
)
from .catalog import (
    BUILTIN_SCENE_IDS,
    Octonion,
    Scene,
    SceneCheckError,
    SceneFormatError,
    SceneUsageError,
    builtin_scene,
    load_scene,
    octonion_multiply,
    save_scene,
)

__version__ = "0.1.0"
