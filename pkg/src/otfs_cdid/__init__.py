"""OTFS cross-domain iterative detection.

Modulation and demodulation for delay-Doppler grids, a frequency-domain
MMSE equalizer iterating against a symbol-wise a-posteriori detector
(with a-posteriori or extrinsic message passing between them), scalar
state-evolution analysis of both schemes, and a Monte-Carlo harness.
"""

from .analysis import (
    ConvergenceReport,
    FixedPoint,
    GFunction,
    GGridWarning,
    MatchedFilterBound,
    check_convergence_conditions,
    default_eta_grid,
    empirical_error_state,
    estimate_g,
    find_fixed_point,
    lower_bound_type1,
    lower_bound_type2,
    mfb,
    q_function,
    se_trajectory,
    se_type1_step,
    se_type2_step,
)
from .channel import (
    ChannelMatrices,
    Path,
    add_awgn,
    ambiguity_rect,
    apply_channel,
    build_effective_channels,
    build_path_matrix,
)
from .core import (
    Belief,
    Constellation,
    Domain,
    OtfsParams,
    clamp_variance,
    db_to_linear,
    linear_to_db,
    make_constellation,
    mse,
    random_symbols,
    uniform_belief,
)
from .detection import (
    CdidResult,
    DdDetOutput,
    DetectorType,
    FdeOutput,
    IterationRecord,
    cdid_type1,
    cdid_type2,
    dd_app_detect,
    extrinsic_combine,
    fde_mmse,
    run_cdid,
)
from .harness import (
    BER_COLUMNS,
    BIAS_COLUMNS,
    CSV_COLUMNS,
    PREDICT_COLUMNS,
    TRAJECTORY_COLUMNS,
    BiasRecord,
    ConfigError,
    ExperimentConfig,
    bias_rows,
    dump_config,
    emit_csv,
    load_config,
    run_ber,
    run_bias,
    run_experiment,
    run_predict,
    run_trajectory,
    transmit_frame,
    wilson_interval,
    write_metadata,
)
from .transforms import (
    add_cp,
    average_variance_transfer,
    dd_to_freq,
    dzt,
    freq_to_dd,
    freq_to_time,
    idzt,
    remove_cp,
    time_to_freq,
)

__all__ = [
    "BER_COLUMNS",
    "BIAS_COLUMNS",
    "CSV_COLUMNS",
    "PREDICT_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "Belief",
    "BiasRecord",
    "CdidResult",
    "ChannelMatrices",
    "ConfigError",
    "Constellation",
    "ConvergenceReport",
    "DdDetOutput",
    "DetectorType",
    "Domain",
    "ExperimentConfig",
    "FdeOutput",
    "FixedPoint",
    "GFunction",
    "GGridWarning",
    "IterationRecord",
    "MatchedFilterBound",
    "OtfsParams",
    "Path",
    "add_awgn",
    "add_cp",
    "ambiguity_rect",
    "apply_channel",
    "average_variance_transfer",
    "bias_rows",
    "build_effective_channels",
    "build_path_matrix",
    "cdid_type1",
    "cdid_type2",
    "check_convergence_conditions",
    "clamp_variance",
    "db_to_linear",
    "dd_app_detect",
    "dd_to_freq",
    "default_eta_grid",
    "dump_config",
    "dzt",
    "emit_csv",
    "empirical_error_state",
    "estimate_g",
    "extrinsic_combine",
    "fde_mmse",
    "find_fixed_point",
    "freq_to_dd",
    "freq_to_time",
    "idzt",
    "linear_to_db",
    "load_config",
    "lower_bound_type1",
    "lower_bound_type2",
    "make_constellation",
    "mfb",
    "mse",
    "q_function",
    "random_symbols",
    "remove_cp",
    "run_ber",
    "run_bias",
    "run_cdid",
    "run_experiment",
    "run_predict",
    "run_trajectory",
    "se_trajectory",
    "se_type1_step",
    "se_type2_step",
    "time_to_freq",
    "transmit_frame",
    "uniform_belief",
    "wilson_interval",
    "write_metadata",
]

__version__ = "0.1.0"
