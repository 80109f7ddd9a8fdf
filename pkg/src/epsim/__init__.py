"""Numerical laboratory for particle entanglement under a local-number
superselection rule: sector measures, the register transfer protocol,
phase-difference measurements and number-phase uncertainty bounds."""

from .fock import (
    CapacityError,
    DensityOperator,
    LayoutError,
    ModeDescriptor,
    ModeLayout,
    PureState,
    StateValidationError,
    entropy_of_entanglement,
    layout_of,
    partial_trace,
    tensor_many,
    tensor_product,
    trace_distance,
    von_neumann_entropy,
)
from .sectors import (
    Sector,
    SectorDecomposition,
    local_particle_number,
    particle_entanglement,
    register_sector_entanglement,
    register_sector_table,
    register_sector_weights,
    sector_decompose,
)
from .protocol import (
    AncillaSpec,
    GridError,
    MeasurementOutcome,
    ProtocolConfig,
    coherent_ancilla,
    coherent_coefficients,
    equal_different_measurement,
    hiding_operation,
    mode_overlap_integral,
    occupation_cnot,
    phase_grid_register_state,
    phase_rotated_ancilla,
    reference_phase_shift,
    run_transfer,
    transfer_entanglement,
    transfer_final_state,
    truncated_phase_state,
    two_mode_ancilla_state,
)
from .phase import (
    PhaseDistribution,
    VisibilityReport,
    apply_phase_difference_povm,
    binary_entropy,
    canonical_phase_distribution,
    circular_mean,
    circular_variance,
    coherent_visibility_model,
    concurrence_ef_oracle,
    ef_large_visibility,
    ef_upper_bound,
    entanglement_of_formation_x,
    post_measurement_register_state,
    resolution_kernel,
    two_qubit_concurrence,
    visibility,
)
from .uncertainty import (
    InequalityCheck,
    PhaseOperatorSpace,
    PhysicalityError,
    UncertaintyReport,
    optimum_condition,
    pegg_barnett_exponential,
    phase_difference_trig,
    random_uncorrelated_pair,
    robertson_checks,
    visibility_bound_check,
)

__version__ = "0.1.0"
