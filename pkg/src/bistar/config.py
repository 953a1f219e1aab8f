"""Scenario configuration: presets, file parsing, and serialization.

Config files are line oriented ``key = value`` pairs grouped under
``[nodes]``, ``[radar]``, ``[sweep]``, and ``[motion]`` section headers,
with scalar run controls before the first section. Parsing is strict:
unknown keys, malformed values, and missing required keys raise
ConfigError with the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .estimation import MEAN_ABS_TO_SIGMA
from .gdop import MeasurementErrorModel
from .geometry import NodePosition, RadarParams

ENGINE_SIGNAL = "signal_level"
ENGINE_MODEL = "model_based"

_SAMPLE_RATES = {100: 122.88e6, 400: 491.52e6}

# Scenario presets: baseline L, bistatic range sum, target cross section.
_PRESETS = {
    "scenario1": (3.0, 6.0, -20.0),
    "scenario2": (15.0, 30.0, 0.0),
    "scenario3": (25.0, 50.0, 0.0),
}

# Mean absolute measurement errors of the signal-level chain for each
# (preset, bandwidth MHz), used to parameterize the statistical engine
# and the dilution-of-precision predictions.
MEAN_ABS_TDOA_NS = {
    ("scenario1", 100): 4.2,
    ("scenario1", 400): 0.17,
    ("scenario2", 100): 1.21,
    ("scenario2", 400): 1.21,
    ("scenario3", 100): 3.55,
    ("scenario3", 400): 0.02,
}
MEAN_ABS_AOA_DEG = {
    ("scenario1", 100): 0.0,
    ("scenario1", 400): 0.0,
    ("scenario2", 100): 0.03,
    ("scenario2", 400): 0.03,
    ("scenario3", 100): 0.16,
    ("scenario3", 400): 0.23,
}

DEFAULT_NODE_SIGMA_M = 0.01


@dataclass(frozen=True)
class MotionConfig:
    """Constant-speed target motion along the inward contour normal."""

    speed_mps: float = 0.2
    direction: str = "radial_inward"
    theta2_deg: float = 60.0
    pulses: int = 64

    def __post_init__(self) -> None:
        if self.speed_mps < 0:
            raise ValueError("speed must be non-negative")
        if self.direction != "radial_inward":
            raise ValueError(f"unsupported motion direction {self.direction!r}")
        if self.pulses < 2:
            raise ValueError("need at least 2 pulses for Doppler processing")


@dataclass
class ScenarioConfig:
    """Everything needed to run one experiment."""

    scenario_id: str
    nodes: list[NodePosition]
    baseline_l: float
    sum_range: float
    rcs_dbsm: float
    radar: RadarParams = field(default_factory=RadarParams)
    error_override: MeasurementErrorModel | None = None
    sweep_points: int = 360
    trials_per_point: int = 1
    seed: int = 1
    engine: str = ENGINE_SIGNAL
    motion: MotionConfig | None = None
    exclusion_deg: float = 5.0
    direct_path_gain_db: float | None = None

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("need at least two nodes")
        if self.sum_range <= self.baseline_l:
            raise ValueError("sum_range must exceed the baseline")
        if self.sweep_points < 4:
            raise ValueError("sweep_points must be at least 4")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be at least 1")
        if self.engine not in (ENGINE_SIGNAL, ENGINE_MODEL):
            raise ValueError(f"engine must be {ENGINE_SIGNAL} or {ENGINE_MODEL}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0.0 <= self.exclusion_deg < 45.0:
            raise ValueError("exclusion_deg must be in [0, 45)")
        separation = math.hypot(
            self.nodes[1].x - self.nodes[0].x, self.nodes[1].y - self.nodes[0].y
        )
        if abs(separation - self.baseline_l) > 1e-6 * max(1.0, self.baseline_l):
            raise ValueError(
                f"baseline_l {self.baseline_l} does not match the first two nodes "
                f"({separation:.6f} m apart)"
            )


def error_model_for(scenario_id: str, bandwidth_mhz: int) -> MeasurementErrorModel:
    """Error model from the tabulated mean absolute measurement errors."""
    key = (scenario_id, bandwidth_mhz)
    if key not in MEAN_ABS_TDOA_NS:
        raise ConfigError(f"no tabulated errors for {scenario_id} at {bandwidth_mhz} MHz")
    return MeasurementErrorModel(
        sigma_tdoa_s=MEAN_ABS_TDOA_NS[key] * 1e-9 * MEAN_ABS_TO_SIGMA,
        sigma_aoa_rad=math.radians(MEAN_ABS_AOA_DEG[key]) * MEAN_ABS_TO_SIGMA,
    )


def preset_scenario(name: str, bandwidth_mhz: int = 100, seed: int = 1) -> ScenarioConfig:
    """Built-in two-node scenario on the x axis.

    The three presets share the mmWave link parameters (28 GHz carrier,
    43 dBm EIRP, 8 transmit and 16 receive elements, 13 dB noise
    figure) and differ in baseline, contour size, and cross section.
    """
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(_PRESETS)}")
    if bandwidth_mhz not in _SAMPLE_RATES:
        raise ConfigError("bandwidth_mhz must be 100 or 400")
    baseline, sum_range, rcs = _PRESETS[name]
    radar = RadarParams(
        bandwidth_hz=bandwidth_mhz * 1e6,
        sample_rate_hz=_SAMPLE_RATES[bandwidth_mhz],
    )
    sigma = DEFAULT_NODE_SIGMA_M
    return ScenarioConfig(
        scenario_id=name,
        nodes=[
            NodePosition(0.0, 0.0, sigma, sigma),
            NodePosition(baseline, 0.0, sigma, sigma),
        ],
        baseline_l=baseline,
        sum_range=sum_range,
        rcs_dbsm=rcs,
        radar=radar,
        error_override=error_model_for(name, bandwidth_mhz),
        seed=seed,
    )


_TOP_KEYS = {"scenario_id", "seed", "engine", "sweep_points", "trials_per_point"}
_RADAR_KEYS = {
    "carrier_hz",
    "bandwidth_hz",
    "subcarrier_spacing_hz",
    "eirp_dbm",
    "tx_elements",
    "rx_elements",
    "noise_figure_db",
    "sample_rate_hz",
    "reference_temp_k",
    "direct_path_gain_db",
}
_SWEEP_KEYS = {
    "baseline_l",
    "sum_range",
    "rcs_dbsm",
    "exclusion_deg",
    "sigma_tdoa_ns",
    "sigma_aoa_deg",
}
_MOTION_KEYS = {"speed_mps", "direction", "theta2_deg", "pulses"}
_SECTIONS = {"nodes", "radar", "sweep", "motion"}


def _parse_number(raw: str, line_no: int, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: value for {key!r} is not a number: {raw!r}") from exc


def _parse_int(raw: str, line_no: int, key: str) -> int:
    value = _parse_number(raw, line_no, key)
    if value != int(value):
        raise ConfigError(f"line {line_no}: {key!r} must be an integer, got {raw!r}")
    return int(value)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a scenario config from text; see the module docstring."""
    section: str | None = None
    top: dict[str, str] = {}
    radar: dict[str, float] = {}
    sweep: dict[str, float] = {}
    motion: dict[str, object] = {}
    nodes: list[NodePosition] = []

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ConfigError(f"line {line_no}: empty value for {key!r}")

        if section is None:
            if key not in _TOP_KEYS:
                raise ConfigError(f"line {line_no}: unknown top-level key {key!r}")
            top[key] = value if key in ("scenario_id", "engine") else str(
                _parse_int(value, line_no, key)
            )
        elif section == "nodes":
            if key != "node":
                raise ConfigError(f"line {line_no}: only 'node' entries belong in [nodes]")
            parts = value.split()
            if len(parts) not in (2, 4):
                raise ConfigError(
                    f"line {line_no}: node needs 'x y' or 'x y sigma_x sigma_y'"
                )
            numbers = [_parse_number(p, line_no, "node") for p in parts]
            if len(numbers) == 2:
                numbers += [0.0, 0.0]
            try:
                nodes.append(NodePosition(*numbers))
            except ValueError as exc:
                raise ConfigError(f"line {line_no}: {exc}") from exc
        elif section == "radar":
            if key not in _RADAR_KEYS:
                raise ConfigError(f"line {line_no}: unknown [radar] key {key!r}")
            radar[key] = _parse_number(value, line_no, key)
        elif section == "sweep":
            if key not in _SWEEP_KEYS:
                raise ConfigError(f"line {line_no}: unknown [sweep] key {key!r}")
            sweep[key] = _parse_number(value, line_no, key)
        else:
            if key not in _MOTION_KEYS:
                raise ConfigError(f"line {line_no}: unknown [motion] key {key!r}")
            if key == "direction":
                motion[key] = value
            elif key == "pulses":
                motion[key] = _parse_int(value, line_no, key)
            else:
                motion[key] = _parse_number(value, line_no, key)

    for required in ("baseline_l", "sum_range"):
        if required not in sweep:
            raise ConfigError(f"missing required [sweep] key {required!r}")
    if len(nodes) < 2:
        raise ConfigError("need at least two [nodes] entries")

    override = None
    if "sigma_tdoa_ns" in sweep or "sigma_aoa_deg" in sweep:
        override = MeasurementErrorModel(
            sigma_tdoa_s=sweep.get("sigma_tdoa_ns", 0.0) * 1e-9,
            sigma_aoa_rad=math.radians(sweep.get("sigma_aoa_deg", 0.0)),
        )

    radar_kwargs = dict(radar)
    direct_gain = radar_kwargs.pop("direct_path_gain_db", None)
    for int_key in ("tx_elements", "rx_elements"):
        if int_key in radar_kwargs:
            radar_kwargs[int_key] = int(radar_kwargs[int_key])

    try:
        params = RadarParams(**radar_kwargs)
        motion_cfg = MotionConfig(**motion) if motion else None
        return ScenarioConfig(
            scenario_id=top.get("scenario_id", "custom"),
            nodes=nodes,
            baseline_l=sweep["baseline_l"],
            sum_range=sweep["sum_range"],
            rcs_dbsm=sweep.get("rcs_dbsm", 0.0),
            radar=params,
            error_override=override,
            sweep_points=int(top.get("sweep_points", 360)),
            trials_per_point=int(top.get("trials_per_point", 1)),
            seed=int(top.get("seed", 1)),
            engine=top.get("engine", ENGINE_SIGNAL),
            motion=motion_cfg,
            exclusion_deg=sweep.get("exclusion_deg", 5.0),
            direct_path_gain_db=direct_gain,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dumps_scenario(cfg: ScenarioConfig) -> str:
    """Serialize a config to the text form ``parse_scenario`` accepts."""
    lines = [
        f"scenario_id = {cfg.scenario_id}",
        f"seed = {cfg.seed}",
        f"engine = {cfg.engine}",
        f"sweep_points = {cfg.sweep_points}",
        f"trials_per_point = {cfg.trials_per_point}",
        "",
        "[nodes]",
    ]
    for node in cfg.nodes:
        lines.append(f"node = {node.x!r} {node.y!r} {node.sigma_x!r} {node.sigma_y!r}")
    lines += [
        "",
        "[radar]",
        f"carrier_hz = {cfg.radar.carrier_hz!r}",
        f"bandwidth_hz = {cfg.radar.bandwidth_hz!r}",
        f"subcarrier_spacing_hz = {cfg.radar.subcarrier_spacing_hz!r}",
        f"eirp_dbm = {cfg.radar.eirp_dbm!r}",
        f"tx_elements = {cfg.radar.tx_elements}",
        f"rx_elements = {cfg.radar.rx_elements}",
        f"noise_figure_db = {cfg.radar.noise_figure_db!r}",
        f"sample_rate_hz = {cfg.radar.sample_rate_hz!r}",
        f"reference_temp_k = {cfg.radar.reference_temp_k!r}",
    ]
    if cfg.direct_path_gain_db is not None:
        lines.append(f"direct_path_gain_db = {cfg.direct_path_gain_db!r}")
    lines += [
        "",
        "[sweep]",
        f"baseline_l = {cfg.baseline_l!r}",
        f"sum_range = {cfg.sum_range!r}",
        f"rcs_dbsm = {cfg.rcs_dbsm!r}",
        f"exclusion_deg = {cfg.exclusion_deg!r}",
    ]
    if cfg.error_override is not None:
        lines.append(f"sigma_tdoa_ns = {cfg.error_override.sigma_tdoa_s * 1e9!r}")
        lines.append(
            f"sigma_aoa_deg = {math.degrees(cfg.error_override.sigma_aoa_rad)!r}"
        )
    if cfg.motion is not None:
        lines += [
            "",
            "[motion]",
            f"speed_mps = {cfg.motion.speed_mps!r}",
            f"direction = {cfg.motion.direction}",
            f"theta2_deg = {cfg.motion.theta2_deg!r}",
            f"pulses = {cfg.motion.pulses}",
        ]
    return "\n".join(lines) + "\n"


def load_scenario(source: str | Path, bandwidth_mhz: int | None = None) -> ScenarioConfig:
    """Load a scenario from a preset name or a config file path.

    For presets, ``bandwidth_mhz`` picks the 100 or 400 MHz variant
    (default 100) including the matching tabulated error model. For
    files, a bandwidth override rescales the radar sampling; explicit
    sigmas from the file are kept, otherwise a matching preset id pulls
    in that bandwidth's error table.
    """
    name = str(source)
    if name in _PRESETS:
        return preset_scenario(name, bandwidth_mhz or 100)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"{name!r} is neither a preset name nor an existing file")
    cfg = parse_scenario(path.read_text())
    if bandwidth_mhz is not None:
        cfg = apply_bandwidth(cfg, bandwidth_mhz)
    return cfg


def apply_bandwidth(cfg: ScenarioConfig, bandwidth_mhz: int) -> ScenarioConfig:
    """Switch a config to the 100 or 400 MHz sampling configuration.

    A measurement error model that came from the built-in tables is
    refreshed for the new bandwidth; an explicit sigma override from the
    config file is kept as given.
    """
    if bandwidth_mhz not in _SAMPLE_RATES:
        raise ConfigError("bandwidth_mhz must be 100 or 400")
    radar = replace(
        cfg.radar,
        bandwidth_hz=bandwidth_mhz * 1e6,
        sample_rate_hz=_SAMPLE_RATES[bandwidth_mhz],
    )
    override = cfg.error_override
    if (cfg.scenario_id, bandwidth_mhz) in MEAN_ABS_TDOA_NS:
        old_mhz = int(round(cfg.radar.bandwidth_hz / 1e6))
        was_default = (cfg.scenario_id, old_mhz) in MEAN_ABS_TDOA_NS and (
            override == error_model_for(cfg.scenario_id, old_mhz)
        )
        if override is None or was_default:
            override = error_model_for(cfg.scenario_id, bandwidth_mhz)
    return replace(cfg, radar=radar, error_override=override)
