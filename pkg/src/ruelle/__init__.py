"""Transfer operators, pressures, escape rates and dimensions for topological
Markov shifts with holes."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    EnumerationCapExceeded,
    NonUniqueDominantError,
    PreconditionError,
    RuelleError,
)
from .shifts import (
    Alphabet,
    Classification,
    PeriodClasses,
    QuotientDag,
    TransitionStructure,
    admissible_words,
    banded_structure,
    classify,
    from_entries,
    full_shift,
    full_truncated,
    nonempty_cylinder_words,
    period_classes,
    renewal_structure,
    scc_quotient,
)
from .potentials import (
    Metric,
    Potential,
    SummabilityCertificate,
    TailModel,
    birkhoff_sum,
    constant_potential,
    cylinder_sup,
    d_theta,
    extend_potential,
    lex_min_point,
    perturbed_potential,
    potential_from_weights,
    seminorm_bracket,
    summability_certificate,
    variation,
    zero_potential,
)
from .transfer import (
    PressureReport,
    RpfTriplet,
    TransferMatrix,
    apply_operator,
    build_transfer_matrix,
    rpf_triplet,
    spectral_radius_sup_route,
    topological_pressure,
)
from .spectral import (
    ConeReport,
    EventuallyPeriodicPoint,
    GibbsReport,
    SpectralDecomposition,
    cone_membership,
    cone_contraction_constant,
    component_decomposition,
    gibbs_check,
    lasota_yorke_check,
    small_eigenfunction,
    spectral_decomposition,
)
from .opensystem import (
    EscapeReport,
    HoleSpec,
    MonteCarloEstimate,
    escape_rate,
    log_survivor_masses,
    monte_carlo_survival,
    open_operator,
    survivor_mass,
)
from .perturbation import (
    PerturbationConditionsReport,
    PerturbationTrace,
    eigenvector_identity_check,
    gibbs_convergence_trace,
    limit_invariant_masses,
    operator_distance,
    pressure_convergence_trace,
    verify_perturbation_conditions,
)
from .applications import (
    DimensionReport,
    GifsEdge,
    GifsSpec,
    RenewalReport,
    RenewalSpec,
    bowen_dimension,
    gifs_build,
    locally_constant_analysis,
    renewal_analysis,
    renewal_potential,
)
from .config import SystemConfig, CONFIG_SCHEMA
