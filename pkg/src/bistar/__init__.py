"""Bistatic radar localization toolkit.

Deterministic simulation and analysis for device-free target
localization with communication-style OFDM signals: exact bistatic
geometry, dilution-of-precision prediction, a signal-level OFDM receiver
chain (MUSIC angle estimation, direct-path cancellation, matched-filter
delay, range-Doppler processing), weighted multistatic fusion, and
reproducible experiment sweeps with CSV output.
"""

from .channel import ArrayModel, PathDescriptor, array_factor, build_paths, propagate, steering_vector
from .config import (
    ENGINE_MODEL,
    ENGINE_SIGNAL,
    MotionConfig,
    ScenarioConfig,
    apply_bandwidth,
    dumps_scenario,
    error_model_for,
    load_scenario,
    parse_scenario,
    preset_scenario,
)
from .errors import (
    BistarError,
    ConfigError,
    DegenerateGeometryError,
    DetectionError,
    ExcludedGeometryError,
)
from .estimation import (
    MEAN_ABS_TO_SIGMA,
    Measurement,
    RangeDopplerMap,
    beamform,
    cancel_direct_path,
    doppler_peak,
    doppler_to_velocity,
    estimate_tdoa,
    model_based_measure,
    music_aoa,
    null_steer_beamform,
    project_out_stream,
    range_doppler,
    resolve_front_back,
)
from .fusion import (
    FusionProblem,
    FusionResult,
    SolverOptions,
    compute_weights,
    solve_multistatic,
    wls_loss,
)
from .gdop import (
    CONDITION_LIMIT,
    GdopReport,
    MeasurementErrorModel,
    error_covariance,
    gdop,
    jacobian_c1,
    jacobian_c2,
    select_mode,
)
from .geometry import (
    BOLTZMANN,
    SPEED_OF_LIGHT,
    BistaticPair,
    Mode,
    NodePosition,
    RadarParams,
    TargetState,
    bistatic_angle,
    bistatic_ranges,
    bistatic_snr,
    collinearity_deg,
    iso_range_target,
    locate_bistatic,
    r2_from_measurements,
    sum_range_rate,
    true_aoa,
    true_tdoa,
    wrap_angle,
)
from .harness import (
    DopplerResult,
    GdopCell,
    GridSpec,
    MultistaticResult,
    MultistaticRow,
    SweepResult,
    SweepRow,
    run_doppler,
    run_gdop_map,
    run_iso_range_sweep,
    run_multistatic,
    waveform_for_radar,
    write_doppler_csv,
    write_gdop_map_csv,
    write_multistatic_csv,
    write_range_doppler_csv,
    write_sweep_csv,
)
from .waveform import (
    IqCapture,
    WaveformConfig,
    demodulate_slot,
    dump_iq,
    generate_slot,
    load_iq,
    matched_reference,
    pulse_train,
    resource_grid,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayModel",
    "BOLTZMANN",
    "BistarError",
    "BistaticPair",
    "CONDITION_LIMIT",
    "ConfigError",
    "DegenerateGeometryError",
    "DetectionError",
    "DopplerResult",
    "ENGINE_MODEL",
    "ENGINE_SIGNAL",
    "ExcludedGeometryError",
    "FusionProblem",
    "FusionResult",
    "GdopCell",
    "GdopReport",
    "GridSpec",
    "IqCapture",
    "MEAN_ABS_TO_SIGMA",
    "Measurement",
    "MeasurementErrorModel",
    "Mode",
    "MotionConfig",
    "MultistaticResult",
    "MultistaticRow",
    "NodePosition",
    "PathDescriptor",
    "RadarParams",
    "RangeDopplerMap",
    "SPEED_OF_LIGHT",
    "ScenarioConfig",
    "SolverOptions",
    "SweepResult",
    "SweepRow",
    "TargetState",
    "WaveformConfig",
    "apply_bandwidth",
    "array_factor",
    "beamform",
    "bistatic_angle",
    "bistatic_ranges",
    "bistatic_snr",
    "build_paths",
    "cancel_direct_path",
    "collinearity_deg",
    "compute_weights",
    "demodulate_slot",
    "doppler_peak",
    "doppler_to_velocity",
    "dump_iq",
    "dumps_scenario",
    "error_covariance",
    "error_model_for",
    "estimate_tdoa",
    "gdop",
    "generate_slot",
    "iso_range_target",
    "jacobian_c1",
    "jacobian_c2",
    "load_iq",
    "load_scenario",
    "locate_bistatic",
    "matched_reference",
    "model_based_measure",
    "music_aoa",
    "null_steer_beamform",
    "parse_scenario",
    "preset_scenario",
    "project_out_stream",
    "propagate",
    "pulse_train",
    "r2_from_measurements",
    "range_doppler",
    "resolve_front_back",
    "resource_grid",
    "run_doppler",
    "run_gdop_map",
    "run_iso_range_sweep",
    "run_multistatic",
    "select_mode",
    "solve_multistatic",
    "steering_vector",
    "sum_range_rate",
    "true_aoa",
    "true_tdoa",
    "waveform_for_radar",
    "wls_loss",
    "wrap_angle",
    "write_doppler_csv",
    "write_gdop_map_csv",
    "write_multistatic_csv",
    "write_range_doppler_csv",
    "write_sweep_csv",
]
