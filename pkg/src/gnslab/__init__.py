"""gnslab: numerical laboratory for C*-valued inner products.

Finite-dimensional models of quasi *-algebras carrying positive
C*-algebra-valued sesquilinear maps, the quotients and quasi norms those
maps induce, and the cyclic *-representations built from them, with every
structural inequality verified numerically.
"""

__version__ = "0.1.0"

from .cstar import (
    AlgebraElement,
    CStarAlgebra,
    State,
    functional_calculus_min,
    is_positive,
    make_grid_algebra,
    op_norm,
    state_eval,
)
from .errors import (
    ClosureError,
    DomainError,
    GnslabError,
    InternalInconsistencyError,
    PreconditionError,
    StructureError,
)
from .gns import (
    GnsTriple,
    IntertwinerResult,
    build_gns,
    gns_from_bounded_functional,
    gns_from_positive_linear_map,
    intertwiner,
    module_gns,
    reconstruct_phi,
    unitary_equivalence,
    verify_representation,
)
from .quasi import (
    NormSpec,
    QuasiElement,
    QuasiStarAlgebra,
    full_matrix_model,
    involution,
    mod_mult,
    nondegeneracy_check,
    schatten_model,
    validate,
)
from .reporting import CheckResult, Report
from .sesq import (
    MapFlags,
    PositiveLinearMap,
    QuotientSpace,
    RightAction,
    SesquiMap,
    canonical_right_action,
    check_admissibility,
    check_c_linearity,
    check_cs,
    check_hermitian_symmetry,
    check_invariance,
    check_module_bound,
    check_positivity,
    density_check,
    evaluate,
    null_space,
    quasi_norm,
    quasi_triangle_check,
    stinespring_inequality,
)
