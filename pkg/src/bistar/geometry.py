"""Exact 2-D geometry for one bistatic transmitter/receiver pair.

Forward models (true delay difference, angle of arrival, received echo
SNR) and their inverses (target position from a TDOA/AoA pair, iso-range
parameterization of constant bistatic range contours). Angles are in
radians internally; degrees appear only at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from .errors import DegenerateGeometryError, ExcludedGeometryError

if TYPE_CHECKING:  # pragma: no cover
    from .estimation import Measurement

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
BOLTZMANN = 1.380649e-23  # J/K

# Below this separation two points are treated as coincident.
_MIN_RANGE_M = 1e-9


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


class Mode(Enum):
    """Transmit direction of a pair: MODE1 is n1 -> n2, MODE2 is n2 -> n1."""

    MODE1 = 1
    MODE2 = 2


@dataclass(frozen=True)
class NodePosition:
    """A radar node location with per-axis position uncertainty.

    Args:
        x: east coordinate in meters.
        y: north coordinate in meters.
        sigma_x: standard deviation of the known x coordinate, meters.
        sigma_y: standard deviation of the known y coordinate, meters.
    """

    x: float
    y: float
    sigma_x: float = 0.0
    sigma_y: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "sigma_x", "sigma_y"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.sigma_x < 0.0 or self.sigma_y < 0.0:
            raise ValueError("position uncertainties must be non-negative")


@dataclass(frozen=True)
class TargetState:
    """A point scatterer with optional velocity and radar cross section."""

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    rcs_dbsm: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "vx", "vy", "rcs_dbsm"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class BistaticPair:
    """Two nodes acting as one bistatic transmitter/receiver pair."""

    n1: NodePosition
    n2: NodePosition
    mode: Mode = Mode.MODE1

    def __post_init__(self) -> None:
        if self.baseline < _MIN_RANGE_M:
            raise ValueError("nodes of a pair must not be coincident")

    @property
    def baseline(self) -> float:
        """Separation between the two nodes in meters."""
        return math.hypot(self.n2.x - self.n1.x, self.n2.y - self.n1.y)

    @property
    def tx_node(self) -> NodePosition:
        return self.n1 if self.mode is Mode.MODE1 else self.n2

    @property
    def rx_node(self) -> NodePosition:
        return self.n2 if self.mode is Mode.MODE1 else self.n1


@dataclass(frozen=True)
class RadarParams:
    """Link-budget and sampling parameters shared by all scenarios."""

    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6
    subcarrier_spacing_hz: float = 120e3
    eirp_dbm: float = 43.0
    tx_elements: int = 8
    rx_elements: int = 16
    noise_figure_db: float = 13.0
    sample_rate_hz: float = 122.88e6
    reference_temp_k: float = 290.0

    def __post_init__(self) -> None:
        if self.carrier_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("carrier and bandwidth must be positive")
        if self.sample_rate_hz < self.bandwidth_hz:
            raise ValueError("sample rate must cover the signal bandwidth")
        if self.tx_elements < 1 or self.rx_elements < 1:
            raise ValueError("element counts must be at least 1")
        if self.subcarrier_spacing_hz <= 0 or self.reference_temp_k <= 0:
            raise ValueError("subcarrier spacing and temperature must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def eirp_w(self) -> float:
        return 10.0 ** ((self.eirp_dbm - 30.0) / 10.0)

    @property
    def noise_temp_k(self) -> float:
        """System noise temperature, reference temperature times the noise factor."""
        return self.reference_temp_k * 10.0 ** (self.noise_figure_db / 10.0)

    def noise_power_w(self, bandwidth_hz: float | None = None) -> float:
        """Thermal noise power k*T_s*B in the given (default: signal) bandwidth."""
        band = self.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
        return BOLTZMANN * self.noise_temp_k * band


def _range(a, b) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def bistatic_ranges(pair: BistaticPair, target: TargetState) -> tuple[float, float]:
    """Distances (n1 to target, n2 to target) in meters.

    Raises DegenerateGeometryError if the target coincides with a node.
    """
    r1 = _range(pair.n1, target)
    r2 = _range(pair.n2, target)
    if r1 < _MIN_RANGE_M or r2 < _MIN_RANGE_M:
        raise DegenerateGeometryError("target coincides with a node")
    return r1, r2


def true_tdoa(pair: BistaticPair, target: TargetState) -> float:
    """Delay of the echo path relative to the direct path, in seconds.

    The echo travels n_tx -> target -> n_rx while the direct signal
    travels the baseline, so the difference is (R1 + R2 - L) / c. The
    result is zero when the target sits on the baseline segment and is
    independent of mode.
    """
    r1, r2 = bistatic_ranges(pair, target)
    return (r1 + r2 - pair.baseline) / SPEED_OF_LIGHT


def true_aoa(node: NodePosition, target) -> float:
    """Angle of arrival at ``node`` of a signal from ``target``, radians.

    Measured from the node's +y direction, increasing toward -x:
    atan2(x_node - x_target, y_target - y_node), in (-pi, pi]. A target
    straight above the node reads 0; one on the -x side reads +pi/2.
    """
    if _range(node, target) < _MIN_RANGE_M:
        raise DegenerateGeometryError("target coincides with the node")
    return math.atan2(node.x - target.x, target.y - node.y)


def r2_from_measurements(tdoa_s: float, aoa_rad: float, baseline_m: float) -> float:
    """Receiver-to-target range implied by a TDOA/AoA measurement pair.

    Inverts the bistatic delay equation given the angle of arrival at
    the receiving node:

        R = (c^2 dT^2 + 2 c L dT) / (2 ((c dT + L) - L sin(theta)))

    The angle is expressed in the baseline frame of the receiving node:
    the transmitting node sits in the +pi/2 direction, so sin(theta) is
    the cosine of the angle between the arrival direction and the
    direction toward the transmitter. ``locate_bistatic`` performs that
    rotation for arbitrary node layouts.

    Args:
        tdoa_s: delay of the echo relative to the direct path, >= 0.
        aoa_rad: angle of arrival at the receiving node, baseline frame.
        baseline_m: node separation L, > 0.

    Returns:
        Range from the receiving node to the target in meters.
    """
    if tdoa_s < 0.0:
        raise ValueError("tdoa must be non-negative")
    if baseline_m <= 0.0:
        raise ValueError("baseline must be positive")
    excess = SPEED_OF_LIGHT * tdoa_s
    numerator = excess * excess + 2.0 * baseline_m * excess
    denominator = 2.0 * ((excess + baseline_m) - baseline_m * math.sin(aoa_rad))
    if denominator <= _MIN_RANGE_M:
        raise DegenerateGeometryError(
            "tdoa/aoa combination puts the target at infinity along the baseline"
        )
    return numerator / denominator


def locate_bistatic(pair: BistaticPair, meas: "Measurement") -> tuple[float, float]:
    """Closed-form target position from one TDOA/AoA measurement.

    The measurement's angle must be the global arrival angle at the
    receiving node implied by ``pair.mode``; it is rotated into the
    baseline frame before the range inversion, so any node layout and
    either transmit direction works. Returns (x, y) in meters.
    """
    mode = getattr(meas, "mode", None)
    if mode is not None and mode is not pair.mode:
        raise ValueError(f"measurement mode {mode} does not match pair mode {pair.mode}")
    rx, tx = pair.rx_node, pair.tx_node
    relative = math.pi / 2.0 - wrap_angle(meas.aoa_rad - true_aoa(rx, tx))
    r_rx = r2_from_measurements(meas.tdoa_s, relative, pair.baseline)
    return (rx.x - r_rx * math.sin(meas.aoa_rad), rx.y + r_rx * math.cos(meas.aoa_rad))


def collinearity_deg(pair: BistaticPair, target) -> float:
    """Angular distance in degrees of the target from the baseline line.

    Measured at node n2 between the target direction and the direction
    of n1 (or its opposite), so 0 means the nodes and target are
    collinear. Used to flag geometries where the direct signal masks the
    echo.
    """
    toward_target = true_aoa(pair.n2, target)
    toward_peer = true_aoa(pair.n2, pair.n1)
    delta = wrap_angle(toward_target - toward_peer)
    distance = min(abs(delta), math.pi - abs(delta))
    return math.degrees(distance)


def _iso_range_point(
    pair: BistaticPair, sum_range_m: float, theta2_rad: float
) -> tuple[float, float]:
    """Point on the contour R1 + R2 = sum_range at angle theta2 from n2."""
    length = pair.baseline
    tdoa = (sum_range_m - length) / SPEED_OF_LIGHT
    relative = math.pi / 2.0 - wrap_angle(theta2_rad - true_aoa(pair.n2, pair.n1))
    r2 = r2_from_measurements(tdoa, relative, length)
    n2 = pair.n2
    return (n2.x - r2 * math.sin(theta2_rad), n2.y + r2 * math.cos(theta2_rad))


def iso_range_target(
    pair: BistaticPair,
    sum_range_m: float,
    theta2_rad: float,
    rcs_dbsm: float = 0.0,
    exclusion_deg: float = 5.0,
) -> TargetState:
    """Target on the iso-range contour R1 + R2 = sum_range at a given angle.

    The contour is the ellipse with the two nodes as foci; theta2 is the
    arrival angle the target would present at node n2, which sweeps the
    whole contour once over a full turn.

    Args:
        pair: node pair defining the contour foci.
        sum_range_m: bistatic range sum, must exceed the baseline.
        theta2_rad: contour parameter, arrival angle at n2.
        rcs_dbsm: radar cross section assigned to the returned target.
        exclusion_deg: half-width of the near-collinear band to refuse.

    Raises:
        ExcludedGeometryError: when the point falls within
            ``exclusion_deg`` of the baseline directions, where the
            direct signal would mask the echo.
    """
    if sum_range_m <= pair.baseline:
        raise ValueError("sum range must exceed the baseline")
    x, y = _iso_range_point(pair, sum_range_m, theta2_rad)
    target = TargetState(x, y, rcs_dbsm=rcs_dbsm)
    separation = collinearity_deg(pair, target)
    if separation < exclusion_deg:
        raise ExcludedGeometryError(
            f"target {separation:.2f} deg from the baseline is inside the "
            f"{exclusion_deg:.1f} deg exclusion band"
        )
    return target


def bistatic_angle(pair: BistaticPair, target: TargetState) -> float:
    """Angle at the target subtended by the two nodes, radians in [0, pi]."""
    r1, r2 = bistatic_ranges(pair, target)
    u1x = (pair.n1.x - target.x) / r1
    u1y = (pair.n1.y - target.y) / r1
    u2x = (pair.n2.x - target.x) / r2
    u2y = (pair.n2.y - target.y) / r2
    cosine = min(1.0, max(-1.0, u1x * u2x + u1y * u2y))
    return math.acos(cosine)


def sum_range_rate(pair: BistaticPair, target: TargetState) -> float:
    """Time derivative of R1 + R2 for the target's velocity, m/s."""
    r1, r2 = bistatic_ranges(pair, target)
    gx = (target.x - pair.n1.x) / r1 + (target.x - pair.n2.x) / r2
    gy = (target.y - pair.n1.y) / r1 + (target.y - pair.n2.y) / r2
    return target.vx * gx + target.vy * gy


def bistatic_snr(params: RadarParams, pair: BistaticPair, target: TargetState) -> float:
    """Received echo SNR in dB from the bistatic radar equation.

    SNR = EIRP * G_R * lambda^2 * sigma / ((4 pi)^3 (R1 R2)^2 k T_s B)
    with receive gain G_R equal to the receive element count and system
    temperature T_s derived from the noise figure. Constant along curves
    of constant R1 * R2 (Cassini ovals).
    """
    r1, r2 = bistatic_ranges(pair, target)
    rcs_m2 = 10.0 ** (target.rcs_dbsm / 10.0)
    gain_rx = float(params.rx_elements)
    wavelength = params.wavelength_m
    numerator = params.eirp_w * gain_rx * wavelength * wavelength * rcs_m2
    denominator = (
        (4.0 * math.pi) ** 3 * (r1 * r2) ** 2 * params.noise_power_w()
    )
    return 10.0 * math.log10(numerator / denominator)
