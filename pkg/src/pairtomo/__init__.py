"""Qubit-pair preparation, measurement budgeting, and minimal-observable tomography."""

from .complexity import (
    Complexity,
    ComplexityBounds,
    ErrorSpec,
    SeriesPlan,
    bernoulli_complexity,
    complexity_from_events,
    compose_joint,
    compose_successive,
    distribution_complexity_bounds,
    events_from_complexity,
    minimal_detector_count,
    parameter_count,
    prior_knowledge_complexity,
    ququart_complexity_bounds,
    ququart_series_plan,
    qubit_state_complexity,
)
from .core import (
    DensityMatrix,
    PureState,
    born_probabilities,
    hermitian_eig,
    partial_trace,
    pauli,
    schmidt_decompose,
    tensor_product,
    trace_distance,
)
from .jc import AtomFieldState, EffectiveQubit, JCParams, evolve, extract_effective_qubit
from .measurement import (
    DetectorBank,
    PreparationSequence,
    RegistrationRecord,
    StateEnsemble,
    basis_estimation,
    eavesdrop_report,
    prepare_sequence,
    register,
    sequence_multiplicity,
    source_density_matrix,
)
from .tomography import (
    BornPairSampler,
    CanonicalParams,
    ReconstructionResult,
    canonical_state,
    forward_joint_distributions,
    full_reconstruct,
    j_observables,
    ququart_linear_inversion,
    qubit_reconstruct,
    solve_canonical,
)

__version__ = "0.1.0"
