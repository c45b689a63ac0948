"""Single-mode continuous-variable state workbench.

Builds approximate cubic-phase resource states, scores them with
task-oriented metrics (state fidelity, conditional-gate fidelity, nonlinear
quadrature variance, Wigner functions), and optimizes them with Gaussian
post-operations or a genetic search over squeezed, displaced photon-number
superpositions.
"""

__version__ = "0.1.0"

from .numerics import (  # noqa: F401
    AccuracyError,
    ConfigurationError,
    CutoffTooSmallError,
    FockVector,
    GridTooSmallError,
    PositionWave,
    QGrid,
    default_grid,
    fock_to_position,
    fock_unitary_exp,
    hermite_functions,
    hermite_poly,
    integrate,
    position_to_fock,
    spectral_derivative,
)
from .states import (  # noqa: F401
    GaussianOp,
    StateSpec,
    apply_gaussian,
    bloch_coefficients,
    build_state,
    fit_trisqueezed,
    make_bloch_superposition,
    make_cubic_phase,
    make_fock_truncation,
    make_gaussian_squeezed,
    make_operator_truncation,
    make_trisqueezed,
)
from .metrics import (  # noqa: F401
    MetricReport,
    WignerGrid,
    gate_fidelity,
    nl_variance,
    state_fidelity,
    wigner,
)
from .optimize import (  # noqa: F401
    GATE_FIDELITY_MAX,
    GATE_FIDELITY_ROWS,
    NL_VARIANCE_MIN,
    NL_VARIANCE_ROWS,
    STATE_FIDELITY_MAX,
    GaBounds,
    GaConfig,
    Objective,
    OptimizationRecord,
    TableRow,
    evaluate_table_row,
    optimize_bloch_ga,
    optimize_gaussian,
)
from .experiments import (  # noqa: F401
    EXPERIMENTS,
    ResultSet,
    RunConfig,
    load_config,
    parse_config_text,
    run_experiment,
)
