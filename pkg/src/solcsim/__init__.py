"""Self-organizing logic circuit workbench for exact fixed-point inversion.

The package builds an exact integer embedding of fixed-point division,
realizes it as a logic-gate netlist with clamped knowns and floating
unknowns, relaxes the netlist with a continuous-time dynamics engine, and
cross-checks every result against arbitrary-precision integer oracles.
"""

from .embedding import (
    DecodedSolution,
    EmbeddedInstance,
    EmbeddingLayout,
    FixedPointScalar,
    build_embedding,
    classify_readout,
    enumerate_solutions,
    from_decimal,
    normalize,
    oracle_divide,
    quotient_scalar,
    reduce_precision_bits,
    sign_of_quotient,
    solve_exponent,
    verify_identity,
)
from .circuit import (
    Gate,
    GateCensus,
    Netlist,
    build_full_adder,
    build_half_adder,
    build_inversion_circuit,
    build_twos_complement_stage,
    clamp_instance,
    count_gates,
    expected_inversion_census,
    export_netlist,
    import_netlist,
    instance_from_netlist,
)
from .dynamics import (
    SimConfig,
    SimState,
    SolveReport,
    Trace,
    convergence_metric,
    decode,
    gate_gradient,
    gate_penalty,
    init_state,
    report_to_json,
    run,
    step,
    trace_to_csv,
)
from .satcheck import SatAssignment, brute_force_sat, cross_check
from .linear import Matrix2, build_column_system, invert_matrix

__all__ = [name for name in dir() if not name.startswith("_")]
