"""Pathwise Malliavin calculus on the Poisson space, at desk scale.

Configurations and their operators, Poisson sampling under a product
intensity, difference operators, factorial-measure iterated integrals,
chaotic / uncompensated expansions, representation-identity checks, and a
thinning construction for self-exciting processes — plus a seeded Monte
Carlo suite that verifies the identities exactly (pathwise) or
statistically (z-tests).
"""

from .configuration import (
    Atom,
    Configuration,
    Window,
    add_points,
    count,
    empty_configuration,
    make_configuration,
    project,
    truncate_before,
)
from .errors import (
    AtomOutOfWindow,
    BudgetExceeded,
    ConfigError,
    DuplicateAtom,
    IntegrationUnavailable,
    KernelsUnavailable,
    OrderTooLarge,
    PoissonMalliavinError,
    ProjectionUnavailable,
    UnsupportedDimension,
)
from .expansions import (
    ExpansionReport,
    ResidualReport,
    chaotic_sum,
    co_residual,
    co_residual_suite,
    pco_residual_suite,
    pco_uniqueness_probe,
    pco_verify,
    projection_probes,
    pseudo_chaotic_sum,
    windowed_pco_convergence,
)
from .integrals import (
    IntegralResult,
    IteratedDecomposition,
    Kernel,
    anchored_integral,
    combine_kernels,
    eval_compensated,
    eval_uncompensated,
    factorial_tuples,
    falling_factorial,
    from_function,
    gauss_time_kernel,
    indicator_kernel,
    poly_time_kernel,
    rho_integral,
    rho_norm_sq,
    scale_kernel,
    slice_kernel,
    symmetrize,
    tensor_kernel,
    tensor_power,
    to_compensated,
    to_uncompensated,
    validate_kernel,
    zero_kernel,
)
from .malliavin import (
    Functional,
    as_functional,
    conditional_expectation,
    constant_functional,
    count_functional,
    count_squared_functional,
    deterministic_diff,
    difference,
    exp_count_functional,
    girsanov_weight,
    iterated_difference,
    pco_integrand,
    predictable_mean_count,
    product_counts_functional,
)
from .measure import (
    DiscreteMarks,
    IntervalMarks,
    ProductIntensity,
    density_marks,
    derive_seed,
    discrete_marks,
    sample_poisson,
    uniform_marks,
)
from .montecarlo import (
    EstimateReport,
    SampleBatch,
    draw_batch,
    estimate,
    ibp_check,
    isometry_check,
    map_replications,
    mecke_check,
)
from .processes import (
    ConstantExcitation,
    ExponentialExcitation,
    HawkesModel,
    ThinnedPath,
    expected_count_oracle,
    ground_intensity,
    hawkes_functional,
    hawkes_intensity,
    hawkes_pco_integrand,
    simulate_hawkes,
    thin,
)

__version__ = "0.1.0"
