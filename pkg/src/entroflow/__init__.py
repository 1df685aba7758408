"""Numerical experiments on heat-flow direction in correlated quantum
systems: entropy inequalities, entangled states with thermal marginals,
heat-exchange unitaries, Clausius cycles, and a dilute-gas collision
ensemble."""

__version__ = "0.1.0"

from .errors import (
    BadCycle,
    ConfigError,
    ConvergenceFailure,
    DimensionMismatch,
    EntroflowError,
    InvalidSpec,
    InvalidState,
    NoConvergence,
    NonpositiveBeta,
    NotDegenerate,
    NotHermitian,
    NotUnitary,
    OverlappingPlanes,
    SupportViolation,
    TooFewFactors,
)
from .exchange import (
    CaseSpec,
    ClausiusStroke,
    CycleReport,
    ExchangeReport,
    StrokeRecord,
    clausius_cycle,
    degenerate_pairs,
    givens_unitary,
    joint_energies,
    partial_swap,
    run_exchange,
)
from .gas import (
    CollisionEvent,
    CollisionSpec,
    GasReport,
    collide,
    ensemble_heat,
    fractional_gain,
    sample_entangled_event,
    sample_product_event,
    x_parameter,
)
from .inequalities import (
    AncillaChannel,
    GibbsEvolutionReport,
    SlackReport,
    average_correlation_bound,
    check_ssa,
    gibbs_evolution_identity,
)
from .qmath import (
    dagger,
    eig_hermitian,
    func_hermitian,
    haar_unitary,
    kron,
    partial_trace,
    random_density,
    substream,
)
from .states import (
    DensityOperator,
    EntangledThermalSpec,
    HamiltonianSpec,
    PureJointState,
    entangled_thermal_state,
    gibbs_state,
    log_partition,
    marginal,
    mutual_information,
    relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
