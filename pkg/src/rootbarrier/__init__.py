"""rootbarrier: barrier functions for symmetric target laws, bounded Brownian
increment sampling from them, and a walk-over-barriers Monte Carlo solver for
parabolic problems with moving boundaries.

Hot kernels run in a compiled extension when available, with a pure-NumPy
fallback selected automatically at import (see `rootbarrier._backend`).
"""

__version__ = "0.1.0"

from ._backend import HAVE_COMPILED, backend_name
from .barrier import (
    BarrierTable,
    GrowthBoundReport,
    R0_LOWER_UNIFORM,
    R0_UPPER_UNIFORM,
    ResidualReport,
    check_growth_bound,
    evaluate_barrier,
    residuals,
    solve_barrier,
)
from .embedding import (
    IncrementSample,
    RngStream,
    increment_from_uniform,
    sample_increment,
    sample_increments,
    sample_path,
)
from .errors import ConfigError, InvariantViolation, NumericalError, RootBarrierError
from .measures import (
    FiniteBarrierCheck,
    PowerMeasure,
    SymmetricMeasure,
    TabulatedMeasure,
    check_finite_barrier_condition,
    dirac_potential,
    make_power_measure,
    make_table_measure,
    measure_from_config,
    potential,
)
from .special import expected_local_time, heat_kernel
from .verification import (
    EmbeddingTestReport,
    HittingSample,
    ObstacleReport,
    heat_potential,
    ks_embedding_test,
    obstacle_check,
    simulate_hitting,
    simulate_hitting_batch,
)
from .walk import (
    BoundaryCurve,
    ChainResult,
    ParabolicDomain,
    WalkStats,
    default_rho,
    domain_from_config,
    example51_domain,
    example51_rho,
    example51_solution,
    parabolic_distance,
    project_to_boundary,
    rho_value,
    solve_pde,
    sweep_delta,
    walk_chain,
)

__all__ = [name for name in dir() if not name.startswith("_")]
