"""Dilution of precision for TDOA/AoA bistatic localization.

Propagates measurement noise and node position uncertainty through the
linearized measurement model to a position error covariance, and selects
the transmit direction with the smaller predicted error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometryError
from .geometry import SPEED_OF_LIGHT, BistaticPair, Mode, TargetState, bistatic_ranges

# Geometries whose measurement Jacobian is worse conditioned than this
# are refused rather than inverted.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class MeasurementErrorModel:
    """Standard deviations of one TDOA/AoA measurement."""

    sigma_tdoa_s: float
    sigma_aoa_rad: float

    def __post_init__(self) -> None:
        if self.sigma_tdoa_s < 0.0 or self.sigma_aoa_rad < 0.0:
            raise ValueError("measurement sigmas must be non-negative")


@dataclass(frozen=True)
class GdopReport:
    """Intermediate matrices and the scalar dilution value for one geometry."""

    c1: np.ndarray
    c2: np.ndarray
    p_dp: np.ndarray
    gdop_m: float
    mode: Mode


def _tdoa_gradient_target(pair: BistaticPair, target: TargetState) -> tuple[float, float]:
    """d(TDOA)/d(target x, y); sum of unit vectors from the nodes, over c."""
    r1, r2 = bistatic_ranges(pair, target)
    gx = ((target.x - pair.n1.x) / r1 + (target.x - pair.n2.x) / r2) / SPEED_OF_LIGHT
    gy = ((target.y - pair.n1.y) / r1 + (target.y - pair.n2.y) / r2) / SPEED_OF_LIGHT
    return gx, gy


def _aoa_gradient_target(node, target) -> tuple[float, float]:
    """d(theta)/d(target x, y) for theta = atan2(x_n - x, y - y_n).

    Written with the squared range in the denominator so it stays finite
    when the target shares a y coordinate with the node.
    """
    dx = node.x - target.x
    dy = target.y - node.y
    r_sq = dx * dx + dy * dy
    if r_sq < 1e-18:
        raise DegenerateGeometryError("target coincides with the node")
    return (-dy / r_sq, -dx / r_sq)


def jacobian_c1(pair: BistaticPair, target: TargetState) -> np.ndarray:
    """2x2 Jacobian of (TDOA, AoA at the receiving node) w.r.t. target (x, y)."""
    dt_dx, dt_dy = _tdoa_gradient_target(pair, target)
    th_dx, th_dy = _aoa_gradient_target(pair.rx_node, target)
    return np.array([[dt_dx, dt_dy], [th_dx, th_dy]], dtype=float)


def jacobian_c2(pair: BistaticPair, target: TargetState) -> np.ndarray:
    """2x4 Jacobian of (TDOA, AoA) w.r.t. node coordinates (x1, y1, x2, y2).

    The AoA row is the negative of the target gradient in the receiving
    node's columns and zero in the other node's columns, because the
    arrival angle depends only on the receiver-to-target geometry.
    """
    r1, r2 = bistatic_ranges(pair, target)
    length = pair.baseline
    n1, n2 = pair.n1, pair.n2
    c = SPEED_OF_LIGHT
    dt_dx1 = ((n1.x - target.x) / r1 - (n1.x - n2.x) / length) / c
    dt_dy1 = ((n1.y - target.y) / r1 - (n1.y - n2.y) / length) / c
    dt_dx2 = ((n2.x - target.x) / r2 - (n2.x - n1.x) / length) / c
    dt_dy2 = ((n2.y - target.y) / r2 - (n2.y - n1.y) / length) / c
    rx = pair.rx_node
    th_dx, th_dy = _aoa_gradient_target(rx, target)
    row = np.zeros(4)
    if pair.mode is Mode.MODE1:
        row[2], row[3] = -th_dx, -th_dy
    else:
        row[0], row[1] = -th_dx, -th_dy
    return np.array([[dt_dx1, dt_dy1, dt_dx2, dt_dy2], row], dtype=float)


def error_covariance(
    c1: np.ndarray,
    c2: np.ndarray,
    meas: MeasurementErrorModel,
    pair: BistaticPair,
) -> np.ndarray:
    """2x2 position error covariance from measurement and node noise.

    Solves the linearized model dZ = C1 dp + C2 dX for dp with the
    pseudo-inverse B of C1, giving

        P = B (R_z + C2 R_x C2^T) B^T

    where R_z holds the measurement variances and R_x the node
    coordinate variances.  B is computed by SVD rather than through the
    normal equations because the TDOA row (seconds per meter) and the
    AoA row (radians per meter) differ in scale by seven orders of
    magnitude, and forming C1^T C1 would square that imbalance.

    Raises:
        DegenerateGeometryError: when C1 is ill conditioned
            (condition number above CONDITION_LIMIT).
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    condition = np.linalg.cond(c1)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DegenerateGeometryError(
            f"measurement Jacobian condition number {condition:.3e} exceeds "
            f"{CONDITION_LIMIT:.0e}"
        )
    b = np.linalg.pinv(c1)
    r_z = np.diag([meas.sigma_tdoa_s**2, meas.sigma_aoa_rad**2])
    r_x = np.diag(
        [
            pair.n1.sigma_x**2,
            pair.n1.sigma_y**2,
            pair.n2.sigma_x**2,
            pair.n2.sigma_y**2,
        ]
    )
    return b @ (r_z + c2 @ r_x @ c2.T) @ b.T


def gdop(pair: BistaticPair, target: TargetState, meas: MeasurementErrorModel) -> GdopReport:
    """Predicted RMS position error for one pair, target, and error model."""
    c1 = jacobian_c1(pair, target)
    c2 = jacobian_c2(pair, target)
    p_dp = error_covariance(c1, c2, meas, pair)
    return GdopReport(c1=c1, c2=c2, p_dp=p_dp, gdop_m=math.sqrt(np.trace(p_dp)), mode=pair.mode)


def select_mode(
    pair: BistaticPair, target: TargetState, meas: MeasurementErrorModel
) -> Mode:
    """Transmit direction with the lower predicted error; ties pick MODE1."""
    values = {}
    for mode in (Mode.MODE1, Mode.MODE2):
        try:
            values[mode] = gdop(replace(pair, mode=mode), target, meas).gdop_m
        except DegenerateGeometryError:
            values[mode] = math.inf
    if not any(math.isfinite(v) for v in values.values()):
        raise DegenerateGeometryError("both transmit directions are degenerate")
    return Mode.MODE1 if values[Mode.MODE1] <= values[Mode.MODE2] else Mode.MODE2
