"""Finite-level estimators for kernel dimensions of group-ring matrices and
covering growth rates of the associated torus-configuration spaces."""

__version__ = "0.1.0"

from .coverings import CoveringBounds, PseudometricSpec, covering_number_bruteforce
from .groupring import (
    ElementParseError,
    GroupRingElement,
    GroupRingMatrix,
    ModulePresentation,
    parse_element,
    partial_adjoint,
    ring_mul,
    star,
    trace_moment,
)
from .groups import (
    DefectReport,
    FolnerBox,
    GroupElement,
    GroupError,
    GroupSpec,
    SoficLevel,
    defect_statistics,
    folner_levels,
    mul,
    orbit_count,
    quotient_chain,
    sofic_permutation,
)
from .microstates import (
    MdimReport,
    NearKernelSubspace,
    TorusMicrostate,
    additivity_failure_demo,
    map_membership,
    mdim_estimate,
    microstate_from_vector,
    near_kernel,
    wdim_slope_surrogate,
)
from .rank import (
    CoveringSandwich,
    EtaSchedule,
    RankEstimate,
    covering_sandwich,
    exact_kernel_fraction,
    fourier_oracle_vr,
    fourier_symbol_counting,
    rank_mod_p,
    sandwich_exponents,
    vnd_estimate,
    vr_estimate,
)
from .soficrep import BudgetError, SoficMatrix, export_triplets, gram, normalized_hs_norm, represent
from .spectral import (
    CountingFunction,
    MomentReport,
    SpectralProfile,
    count_below_iterative,
    counting_function,
    moment_check,
    perturbation_moment_check,
    singular_profile,
)
from .tiling import (
    OrbitPseudometric,
    QuasiTiling,
    orbit_covering_estimate,
    quasi_tile,
    text_diagram,
    verify_quasi_tiling,
)
