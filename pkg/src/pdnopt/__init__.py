"""Decoupling-capacitor selection for power distribution networks.

Reads Touchstone network models, composes board/die/VR/capacitor models by
multiport reduction, scores candidate populations against a target impedance
in the frequency domain and by worst-case transient noise, and searches the
integer quantity space with a genetic algorithm.
"""

from .touchstone import (
    FrequencyGrid,
    NetworkModel,
    TouchstoneHeader,
    TouchstoneError,
    ConversionError,
    parse_touchstone,
    read_touchstone,
    write_touchstone,
    s_to_z,
    z_to_s,
    s_to_y,
    y_to_s,
    z_to_y,
    y_to_z,
    renormalize,
)
from .network import (
    ShuntElementModel,
    LumpedRLC,
    GridCoverageError,
    lumped_to_shunt,
    reduce_capacitor_to_shunt,
    align_grid,
    attach_shunt,
    attach_many,
    short_port,
    merge_ports,
    shunt_across_port,
)
from .analysis import (
    PortInductance,
    PortInductanceReport,
    CapacitorCatalog,
    CatalogEntry,
    PeakList,
    Extremum,
    SrfOutOfBandError,
    loop_inductance,
    capacitor_srf,
    capacitance_estimate,
    build_catalog,
    find_extrema,
)
from .scoring import (
    TargetImpedanceCurve,
    ScoreWeights,
    ScoreBreakdown,
    load_target_curve,
    target_at,
    area_scores,
    max_violation,
    flatness_deviation,
    flatness_q,
    combined_score,
)
from .transient import (
    RationalModel,
    StepResponse,
    WorstCaseResult,
    VectorFitError,
    HorizonError,
    vector_fit,
    check_passivity,
    step_response,
    reverse_pulse,
    pulse_train_response,
    export_pwl,
    apply_vr_loadline,
    extend_to_dc,
)
from .optimizer import (
    GAConfig,
    Assignment,
    GenerationStats,
    EvaluationContext,
    OptimizeResult,
    prepare_context,
    initial_guess,
    assign_ports,
    attach_and_score,
    score_breakdown,
    observed_impedance,
    optimize,
    load_capacitor_list,
)

__version__ = "0.1.0"
