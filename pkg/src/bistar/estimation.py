"""Receiver-side estimators: AoA, TDOA, Doppler, and a statistical model.

The signal-level chain works on element captures: MUSIC for the echo
arrival angle, conjugate beamforming toward the direct and echo
directions, least-squares direct-path cancellation, matched-filter TDOA
on the sample lattice, and a range-Doppler map across a pulse train.
``model_based_measure`` is the cheap statistical stand-in that produces
measurements with the same lattice and error behavior without
simulating waveforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DetectionError
from .channel import ArrayModel, steering_vector
from .geometry import (
    SPEED_OF_LIGHT,
    BistaticPair,
    Mode,
    RadarParams,
    TargetState,
    bistatic_snr,
    true_aoa,
    true_tdoa,
    wrap_angle,
)
from .gdop import MeasurementErrorModel
from .waveform import IqCapture

# Half-normal identity: for zero-mean Gaussian error, E|e| = sigma *
# sqrt(2 / pi), so a reported mean absolute error maps back to sigma
# through this factor.
MEAN_ABS_TO_SIGMA = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class Measurement:
    """One TDOA/AoA (optionally Doppler) measurement from a pair."""

    tdoa_s: float
    aoa_rad: float
    doppler_hz: float | None = None
    snr_db: float | None = None
    pair_index: int = 0
    mode: Mode = Mode.MODE1

    def __post_init__(self) -> None:
        if self.tdoa_s < 0.0:
            raise ValueError("measured tdoa must be non-negative")
        if not -math.pi < self.aoa_rad <= math.pi + 1e-12:
            raise ValueError("aoa must be wrapped to (-pi, pi]")


@dataclass
class RangeDopplerMap:
    """Matched-filter magnitude over delay (rows) and Doppler (columns)."""

    magnitudes: np.ndarray
    delay_axis_s: np.ndarray
    doppler_axis_hz: np.ndarray

    def __post_init__(self) -> None:
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        self.delay_axis_s = np.asarray(self.delay_axis_s, dtype=float)
        self.doppler_axis_hz = np.asarray(self.doppler_axis_hz, dtype=float)
        if self.magnitudes.shape != (self.delay_axis_s.size, self.doppler_axis_hz.size):
            raise ValueError("map shape must match its axes")
        if np.any(np.diff(self.delay_axis_s) <= 0) or np.any(
            np.diff(self.doppler_axis_hz) <= 0
        ):
            raise ValueError("axes must be strictly increasing")
        if np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be non-negative")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(np.random.SeedSequence([int(seed)]))
    return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))


def _snapshots(capture: IqCapture, window: slice | None, count: int) -> np.ndarray:
    samples = capture.samples if window is None else capture.samples[:, window]
    total = samples.shape[1]
    if total < count:
        raise ValueError(f"window holds {total} samples, need at least {count}")
    idx = (np.arange(count) * total) // count
    return samples[:, idx]


def _fb_smooth(x: np.ndarray, subarray: int) -> np.ndarray:
    """Forward-backward spatially smoothed covariance from snapshots."""
    elements, count = x.shape
    hops = elements - subarray + 1
    r = np.zeros((subarray, subarray), dtype=np.complex128)
    for k in range(hops):
        sub = x[k : k + subarray]
        r += sub @ sub.conj().T
    r /= hops * count
    flip = np.flipud(np.fliplr(r.conj()))
    return 0.5 * (r + flip)


def music_aoa(
    capture: IqCapture,
    array: ArrayModel,
    n_sources: int = 1,
    grid_deg: float = 0.1,
    window: slice | None = None,
    snapshots: int = 128,
    smoothing_subarray: int | None = None,
) -> list[float]:
    """MUSIC arrival angles from an element capture.

    Builds a covariance from decimated snapshots (by default the whole
    capture; pass ``window`` to restrict to, say, the pilot symbol),
    scans the noise-subspace null spectrum over a grid of angles within
    the front half plane of the array, and refines each peak with a
    parabolic fit of the null spectrum.

    Coherent sources defeat plain MUSIC, so for ``n_sources >= 2`` a
    forward-backward spatially smoothed covariance over subarrays is
    used (default subarray of 12 on a 16-element array).

    Returns:
        Angles in radians (global convention), strongest peak first.
        A linear array cannot tell front from back; the returned angles
        live in (boresight - pi/2, boresight + pi/2) and
        ``resolve_front_back`` maps them to the other half plane when
        the hemisphere is known.
    """
    if n_sources < 1:
        raise ValueError("n_sources must be at least 1")
    if capture.elements != array.elements:
        raise ValueError("capture and array element counts differ")
    if capture.elements < n_sources + 1:
        raise ValueError("need more elements than sources")
    if snapshots < 64:
        raise ValueError("need at least 64 snapshots")
    x = _snapshots(capture, window, snapshots)

    if smoothing_subarray is None and n_sources >= 2:
        smoothing_subarray = min(12, array.elements - 1)
    if smoothing_subarray is not None:
        if not n_sources < smoothing_subarray <= array.elements:
            raise ValueError("smoothing subarray must be in (n_sources, elements]")
        r = _fb_smooth(x, smoothing_subarray)
        effective = smoothing_subarray
    else:
        r = x @ x.conj().T / x.shape[1]
        effective = array.elements

    eigvals, eigvecs = np.linalg.eigh(r)
    noise_basis = eigvecs[:, : effective - n_sources]

    offsets_deg = np.arange(-90.0 + grid_deg, 90.0, grid_deg)
    offsets = np.radians(offsets_deg)
    scan = ArrayModel(effective, array.spacing_wavelengths, boresight=0.0)
    steer = np.exp(
        1j
        * 2.0
        * math.pi
        * np.arange(effective)[:, np.newaxis]
        * scan.spacing_wavelengths
        * np.sin(offsets)[np.newaxis, :]
    )
    null = np.sum(np.abs(noise_basis.conj().T @ steer) ** 2, axis=0) / effective

    interior = (null[1:-1] < null[:-2]) & (null[1:-1] <= null[2:])
    minima = np.flatnonzero(interior) + 1
    if minima.size == 0:
        raise DetectionError("MUSIC found no spectrum peaks")
    order = minima[np.argsort(null[minima])]
    picks = order[:n_sources]

    results = []
    for i in picks:
        lower, center, upper = null[i - 1], null[i], null[i + 1]
        denom = lower - 2.0 * center + upper
        shift = 0.0 if denom <= 0 else 0.5 * (lower - upper) / denom
        angle = offsets[i] + shift * math.radians(grid_deg)
        results.append(wrap_angle(array.boresight + angle))
    return results


def resolve_front_back(angle_rad: float, boresight_rad: float, hint_rad: float) -> float:
    """Pick the linear-array alias of ``angle_rad`` closer to ``hint_rad``.

    A line array sees directions theta and (2 * boresight + pi - theta)
    identically; the hint (for example the transmit steering direction)
    breaks the tie.
    """
    alias = wrap_angle(2.0 * boresight_rad + math.pi - angle_rad)
    keep = abs(wrap_angle(angle_rad - hint_rad))
    flip = abs(wrap_angle(alias - hint_rad))
    return wrap_angle(angle_rad) if keep <= flip else alias


def beamform(capture: IqCapture, array: ArrayModel, angle_rad: float) -> IqCapture:
    """Conjugate steering-vector sum normalized by the element count.

    A source arriving from ``angle_rad`` passes with gain 1; white noise
    power drops by the element count.
    """
    if capture.elements != array.elements:
        raise ValueError("capture and array element counts differ")
    weights = steering_vector(array, angle_rad)
    stream = weights.conj() @ capture.samples / array.elements
    return IqCapture(
        stream,
        capture.sample_rate_hz,
        pulses=capture.pulses,
        samples_per_pulse=capture.samples_per_pulse,
    )


def null_steer_beamform(
    capture: IqCapture, array: ArrayModel, steer_rad: float, null_rad: float
) -> IqCapture:
    """Steered beam with an exact spatial null toward ``null_rad``.

    The steering vector toward ``steer_rad`` is projected orthogonal to
    the one toward ``null_rad``, then normalized so a source arriving
    from ``steer_rad`` still passes with gain 1. A plane wave from the
    null direction is rejected completely, which makes this beam a
    guard channel for validating detections against strong co-channel
    interference.

    Raises:
        ValueError: when the two directions are so close that the
            projection leaves no usable gain toward ``steer_rad``.
    """
    if capture.elements != array.elements:
        raise ValueError("capture and array element counts differ")
    steer = steering_vector(array, steer_rad)
    null = steering_vector(array, null_rad)
    rho = np.vdot(null, steer) / array.elements
    weights = steer - rho * null
    gain = array.elements * (1.0 - abs(rho) ** 2)
    if gain <= 1e-9 * array.elements:
        raise ValueError("null direction coincides with the steering direction")
    stream = weights.conj() @ capture.samples / gain
    return IqCapture(
        stream,
        capture.sample_rate_hz,
        pulses=capture.pulses,
        samples_per_pulse=capture.samples_per_pulse,
    )


def project_out_stream(capture: IqCapture, stream: np.ndarray) -> IqCapture:
    """Remove each element's least-squares projection onto ``stream``.

    Scales every element identically, so the spatial signature of any
    component not aligned with ``stream`` is preserved; used to strip
    the direct path before single-source MUSIC.
    """
    reference = np.asarray(stream, dtype=np.complex128).reshape(-1)
    if reference.shape[0] != capture.samples.shape[1]:
        raise ValueError("stream length must match the capture")
    energy = np.vdot(reference, reference).real
    if energy <= 0.0:
        raise ValueError("reference stream has no energy")
    coeffs = capture.samples @ reference.conj() / energy
    cleaned = capture.samples - coeffs[:, np.newaxis] * reference[np.newaxis, :]
    return IqCapture(
        cleaned,
        capture.sample_rate_hz,
        pulses=capture.pulses,
        samples_per_pulse=capture.samples_per_pulse,
    )


def cancel_direct_path(echo_beam: IqCapture, direct_beam: IqCapture) -> IqCapture:
    """Subtract the least-squares projection of the direct stream.

    The residual is orthogonal to the direct stream, so output energy
    never exceeds input energy.
    """
    if echo_beam.samples.shape != direct_beam.samples.shape:
        raise ValueError("beams must have identical shapes")
    direct = direct_beam.samples.reshape(-1)
    echo = echo_beam.samples.reshape(-1)
    energy = np.vdot(direct, direct).real
    if energy <= 0.0:
        raise ValueError("direct beam has no energy")
    alpha = np.vdot(direct, echo) / energy
    return IqCapture(
        (echo - alpha * direct).reshape(echo_beam.samples.shape),
        echo_beam.sample_rate_hz,
        pulses=echo_beam.pulses,
        samples_per_pulse=echo_beam.samples_per_pulse,
    )


def _correlate(stream: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Linear cross-correlation values at non-negative integer lags."""
    length = stream.shape[0]
    size = 1
    while size < length + reference.shape[0]:
        size <<= 1
    spectrum = np.fft.fft(stream, size) * np.fft.fft(reference, size).conj()
    return np.fft.ifft(spectrum)[:length]


def _peak_with_floor(
    corr: np.ndarray,
    min_peak_db: float,
    what: str,
    window: tuple[int, int] | None = None,
) -> int:
    """Index of the strongest magnitude, checked against the median floor.

    ``window`` restricts the search to ``[lo, hi)`` while the floor is
    still taken over the whole correlation.
    """
    magnitude = np.abs(corr)
    lo, hi = (0, magnitude.shape[0]) if window is None else window
    lo = max(lo, 0)
    hi = min(hi, magnitude.shape[0])
    if lo >= hi:
        raise ValueError(f"{what} search window is outside the capture")
    peak = lo + int(np.argmax(magnitude[lo:hi]))
    floor = float(np.median(magnitude))
    if floor <= 0.0 or 20.0 * math.log10(magnitude[peak] / floor) < min_peak_db:
        raise DetectionError(
            f"{what} correlation peak is below the {min_peak_db:.1f} dB detection threshold"
        )
    return peak


def estimate_tdoa(
    direct_beam: IqCapture,
    echo_beam: IqCapture,
    reference: IqCapture,
    min_peak_db: float = 6.0,
    guard_beam: IqCapture | None = None,
    guard_fraction: float = 0.5,
    direct_delay_hint_s: float | None = None,
    hint_window: int = 3,
    hint_floor_db: float = 12.0,
) -> float:
    """Matched-filter TDOA between the echo and direct streams, seconds.

    Locates the direct-path peak in the direct beam's correlation with
    the pilot reference, then removes the direct path from the echo
    beam's correlation by subtracting a complex-scaled copy of the
    reference autocorrelation centered on that lattice point (one
    CLEAN-style deflation step). The echo is the strongest remaining lag
    after the direct peak. No sub-sample interpolation is applied: the
    result is an integer multiple of the sample period, which sets the
    quantization lattice of the measurement. Because the template sits
    on the lattice while the true direct delay does not, a residual
    proportional to the leaked direct amplitude survives around the
    deflated peak and interferes with the echo lobe; when the echo's
    fractional delay is close to half a sample this interference decides
    which of the two neighboring lattice points wins.

    ``guard_beam``, when given, is an interference-suppressed stream of
    the same capture (see `null_steer_beamform`) used as a guard channel
    to blank false detections: if the winning lag holds less than
    ``guard_fraction`` of the guard correlation's own peak, the main
    detection is attributed to deflation residue and the guard's peak
    lag is reported instead.

    ``direct_delay_hint_s``, when given, restricts the direct-path peak
    search to ``hint_window`` samples either side of that delay. Node
    positions are surveyed, so the baseline delay is predictable; the
    restriction keeps a strong echo from being mistaken for the direct
    path when transmit-pattern nulls starve the reference. Inside the
    window the anchor must clear the correlation floor by
    ``hint_floor_db`` rather than ``min_peak_db``: a handful of noise
    bins can top the median by several dB just by order statistics, and
    a false anchor corrupts every downstream lag, while a physically
    present direct path enjoys the reference's full processing gain and
    clears the stricter bar easily.

    Raises:
        DetectionError: when the direct peak or the deflated echo peak
            fails to clear ``min_peak_db`` above the median correlation
            floor.
    """
    beams = [direct_beam, echo_beam]
    if guard_beam is not None:
        beams.append(guard_beam)
    for capture in beams:
        if capture.elements != 1:
            raise ValueError("beams must be single streams")
        if abs(capture.sample_rate_hz - reference.sample_rate_hz) > 1e-3:
            raise ValueError("sample rates must match the reference")
    ref = reference.samples[0]
    corr_direct = _correlate(direct_beam.samples[0], ref)
    if direct_delay_hint_s is None:
        direct_peak = _peak_with_floor(corr_direct, min_peak_db, "direct")
    else:
        center = int(round(direct_delay_hint_s * reference.sample_rate_hz))
        lo, hi = center - hint_window, center + hint_window + 1
        direct_peak = _peak_with_floor(
            corr_direct, hint_floor_db, "direct", window=(lo, hi)
        )

    corr_echo = _correlate(echo_beam.samples[0], ref)
    length = corr_echo.shape[0]
    size = 1
    while size < 2 * ref.shape[0] or size < length + ref.shape[0]:
        size <<= 1
    spectrum = np.fft.fft(ref, size)
    auto = np.fft.ifft(spectrum * spectrum.conj())
    template = auto[(np.arange(length) - direct_peak) % size]
    corr_clean = corr_echo - corr_echo[direct_peak] / auto[0].real * template

    tail = np.abs(corr_clean[direct_peak + 1 :])
    if tail.size == 0:
        raise DetectionError("no lags left after the direct peak")
    offset = int(np.argmax(tail))
    floor = float(np.median(np.abs(corr_clean)))
    if floor <= 0.0 or 20.0 * math.log10(tail[offset] / floor) < min_peak_db:
        raise DetectionError(
            f"echo correlation peak is below the {min_peak_db:.1f} dB detection threshold"
        )
    if guard_beam is not None:
        guard_tail = np.abs(_correlate(guard_beam.samples[0], ref)[direct_peak + 1 :])
        guard_peak = float(guard_tail.max())
        if guard_peak <= 0.0:
            raise DetectionError("guard correlation is empty")
        if guard_tail[offset] < guard_fraction * guard_peak:
            offset = int(np.argmax(guard_tail))
            guard_floor = float(np.median(guard_tail))
            if (
                guard_floor <= 0.0
                or 20.0 * math.log10(guard_peak / guard_floor) < min_peak_db
            ):
                raise DetectionError(
                    f"guard correlation peak is below the {min_peak_db:.1f} dB "
                    "detection threshold"
                )
    return (offset + 1) / reference.sample_rate_hz


def range_doppler(
    train: IqCapture,
    reference: IqCapture,
    pad_factor: int = 4,
) -> RangeDopplerMap:
    """Fast-time matched filter and slow-time DFT over a pulse train.

    Each pulse frame is correlated with the pilot reference, then a
    zero-padded DFT across pulses resolves Doppler per delay bin. The
    Doppler axis spans plus or minus half the pulse repetition rate
    with bin spacing 1 / (pad_factor * pulses * PRI).
    """
    if train.elements != 1:
        raise ValueError("range_doppler expects a single beamformed stream")
    if train.pulses < 2:
        raise ValueError("need at least 2 pulses for Doppler")
    if pad_factor < 1:
        raise ValueError("pad_factor must be at least 1")
    fs = train.sample_rate_hz
    spp = train.samples_per_pulse
    pri = spp / fs
    frames = train.frames()[0]
    ref = reference.samples[0]
    if ref.shape[0] > spp:
        raise ValueError("reference longer than one pulse frame")

    spectra = np.fft.fft(frames, axis=1) * np.fft.fft(ref, spp).conj()[np.newaxis, :]
    fast = np.fft.ifft(spectra, axis=1)

    bins = train.pulses * pad_factor
    slow = np.fft.fftshift(np.fft.fft(fast, n=bins, axis=0), axes=0)
    magnitudes = np.abs(slow).T
    delay_axis = np.arange(spp) / fs
    doppler_axis = np.fft.fftshift(np.fft.fftfreq(bins, d=pri))
    return RangeDopplerMap(magnitudes, delay_axis, doppler_axis)


def doppler_peak(rd_map: RangeDopplerMap) -> tuple[float, float]:
    """Map peak as (delay seconds, Doppler Hz with parabolic refinement)."""
    flat = int(np.argmax(rd_map.magnitudes))
    d_idx, f_idx = np.unravel_index(flat, rd_map.magnitudes.shape)
    doppler = rd_map.doppler_axis_hz[f_idx]
    if 0 < f_idx < rd_map.doppler_axis_hz.size - 1:
        row = rd_map.magnitudes[d_idx]
        lower, center, upper = row[f_idx - 1], row[f_idx], row[f_idx + 1]
        denom = lower - 2.0 * center + upper
        if denom < 0:
            step = rd_map.doppler_axis_hz[1] - rd_map.doppler_axis_hz[0]
            doppler += 0.5 * (lower - upper) / denom * step
    return float(rd_map.delay_axis_s[d_idx]), float(doppler)


def doppler_to_velocity(doppler_hz: float, carrier_hz: float) -> float:
    """Bistatic range rate c * f_D / f0, positive for a closing target."""
    if carrier_hz <= 0:
        raise ValueError("carrier must be positive")
    return SPEED_OF_LIGHT * doppler_hz / carrier_hz


def model_based_measure(
    pair: BistaticPair,
    target: TargetState,
    params: RadarParams,
    err: MeasurementErrorModel,
    seed,
    sample_rate_hz: float | None = None,
) -> Measurement:
    """Statistical measurement: lattice quantization plus Gaussian error.

    The true TDOA is rounded to the lattice of ``sample_rate_hz`` when
    one is given (pass ``params.sample_rate_hz`` to mimic the
    matched-filter quantization, or None for no quantization), then
    Gaussian errors with the model's sigmas are added to both the TDOA
    and the AoA. A negative noisy TDOA clamps to zero, matching the
    matched filter which never reports the echo before the direct path.
    """
    rng = _rng(seed)
    tdoa = true_tdoa(pair, target)
    if sample_rate_hz is not None and math.isfinite(sample_rate_hz):
        if sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        tdoa = round(tdoa * sample_rate_hz) / sample_rate_hz
    aoa = true_aoa(pair.rx_node, target)
    noise = rng.standard_normal(2)
    tdoa = max(0.0, tdoa + err.sigma_tdoa_s * noise[0])
    aoa = wrap_angle(aoa + err.sigma_aoa_rad * noise[1])
    return Measurement(
        tdoa_s=tdoa,
        aoa_rad=aoa,
        snr_db=bistatic_snr(params, pair, target),
        mode=pair.mode,
    )
