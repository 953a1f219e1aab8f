"""CP-OFDM slot generation with a comb pilot symbol.

One slot is 14 OFDM symbols. A single pilot symbol carries seeded QPSK
on alternating occupied subcarriers (half the occupied band); every
other resource element of the slot carries seeded QPSK data. The pilot
portion alone forms the matched-filter reference, so the reference is
independent of the data stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Substream tags separating the pilot and data random draws.
_PILOT_STREAM = 0x70696C6F
_DATA_STREAM = 0x64617461

_QPSK_POINTS = np.array(
    [1.0 + 1.0j, -1.0 + 1.0j, -1.0 - 1.0j, 1.0 - 1.0j]
) / math.sqrt(2.0)


@dataclass(frozen=True)
class WaveformConfig:
    """Numerology of one CP-OFDM slot.

    The sample rate is implied by the FFT size times the subcarrier
    spacing (1024 x 120 kHz = 122.88 MHz for the 100 MHz configuration,
    4096 x 120 kHz = 491.52 MHz for 400 MHz).
    """

    fft_size: int = 1024
    occupied_subcarriers: int = 792
    subcarrier_spacing_hz: float = 120e3
    cp_samples: int = 72
    dmrs_symbol_index: int = 2
    symbols_per_slot: int = 14
    pilot_comb_offset: int = 0
    seed: int = 0
    data_seed: int | None = None

    def __post_init__(self) -> None:
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two >= 2")
        if not 2 <= self.occupied_subcarriers <= self.fft_size:
            raise ValueError("occupied_subcarriers must be in [2, fft_size]")
        if self.occupied_subcarriers % 2:
            raise ValueError("occupied_subcarriers must be even for the comb")
        if self.cp_samples < 0:
            raise ValueError("cp_samples must be non-negative")
        if not 0 <= self.dmrs_symbol_index < self.symbols_per_slot:
            raise ValueError("dmrs_symbol_index outside the slot")
        if self.pilot_comb_offset not in (0, 1):
            raise ValueError("pilot_comb_offset must be 0 or 1")
        if self.symbols_per_slot < 1:
            raise ValueError("symbols_per_slot must be positive")
        if self.subcarrier_spacing_hz <= 0:
            raise ValueError("subcarrier_spacing_hz must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.subcarrier_spacing_hz

    @property
    def samples_per_symbol(self) -> int:
        return self.fft_size + self.cp_samples

    @property
    def samples_per_slot(self) -> int:
        return self.symbols_per_slot * self.samples_per_symbol

    @property
    def slot_duration_s(self) -> float:
        return self.samples_per_slot / self.sample_rate_hz

    def occupied_bins(self) -> np.ndarray:
        """FFT bin index of each occupied subcarrier, centered on DC."""
        offsets = np.arange(self.occupied_subcarriers) - self.occupied_subcarriers // 2
        return np.mod(offsets, self.fft_size)

    def pilot_mask(self) -> np.ndarray:
        """Boolean mask over occupied subcarriers selecting the pilot comb."""
        comb = np.arange(self.occupied_subcarriers) % 2 == self.pilot_comb_offset
        return comb

    def dmrs_window(self) -> slice:
        """Sample range of the pilot symbol within the slot."""
        start = self.dmrs_symbol_index * self.samples_per_symbol
        return slice(start, start + self.samples_per_symbol)

    @classmethod
    def for_bandwidth(cls, bandwidth_hz: float, seed: int = 0) -> "WaveformConfig":
        """Standard numerology for the two supported RF bandwidths."""
        table = {100e6: (1024, 792, 72), 400e6: (4096, 3168, 288)}
        key = float(bandwidth_hz)
        if key not in table:
            raise ValueError(f"unsupported bandwidth {bandwidth_hz}, expected 100e6 or 400e6")
        fft, occupied, cp = table[key]
        return cls(fft_size=fft, occupied_subcarriers=occupied, cp_samples=cp, seed=seed)


@dataclass
class IqCapture:
    """Complex baseband samples for one or more antenna elements.

    ``samples`` has shape (elements, pulses * samples_per_pulse); a 1-D
    array is promoted to a single element.
    """

    samples: np.ndarray
    sample_rate_hz: float
    pulses: int = 1
    samples_per_pulse: int = 0

    def __post_init__(self) -> None:
        array = np.asarray(self.samples, dtype=np.complex128)
        if array.ndim == 1:
            array = array[np.newaxis, :]
        if array.ndim != 2 or array.shape[1] == 0:
            raise ValueError("samples must be a non-empty 1-D or 2-D array")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.pulses < 1:
            raise ValueError("pulses must be at least 1")
        if self.samples_per_pulse == 0:
            self.samples_per_pulse = array.shape[1] // self.pulses
        if self.pulses * self.samples_per_pulse != array.shape[1]:
            raise ValueError("pulses * samples_per_pulse must equal the sample count")
        if not np.isfinite(array.view(np.float64)).all():
            raise ValueError("samples must be finite")
        self.samples = array

    @property
    def elements(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[1] / self.sample_rate_hz

    def frames(self) -> np.ndarray:
        """View shaped (elements, pulses, samples_per_pulse)."""
        return self.samples.reshape(self.elements, self.pulses, self.samples_per_pulse)


def _pilot_rng(cfg: WaveformConfig) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, _PILOT_STREAM]))


def _data_rng(cfg: WaveformConfig) -> np.random.Generator:
    seed = cfg.seed if cfg.data_seed is None else cfg.data_seed
    return np.random.default_rng(np.random.SeedSequence([seed, _DATA_STREAM]))


def _qpsk(rng: np.random.Generator, count: int) -> np.ndarray:
    return _QPSK_POINTS[rng.integers(0, 4, size=count)]


def resource_grid(cfg: WaveformConfig) -> np.ndarray:
    """Frequency-domain grid (symbols x occupied subcarriers) of one slot."""
    occupied = cfg.occupied_subcarriers
    grid = _qpsk(_data_rng(cfg), cfg.symbols_per_slot * occupied)
    grid = grid.reshape(cfg.symbols_per_slot, occupied)
    mask = cfg.pilot_mask()
    grid[cfg.dmrs_symbol_index, mask] = _qpsk(_pilot_rng(cfg), int(mask.sum()))
    return grid


def _modulate(cfg: WaveformConfig, grid: np.ndarray) -> np.ndarray:
    """CP-OFDM modulate a grid; unit mean power per occupied resource element."""
    bins = cfg.occupied_bins()
    scale = cfg.fft_size / math.sqrt(cfg.occupied_subcarriers)
    out = np.empty(grid.shape[0] * cfg.samples_per_symbol, dtype=np.complex128)
    spectrum = np.zeros(cfg.fft_size, dtype=np.complex128)
    for sym in range(grid.shape[0]):
        spectrum[:] = 0.0
        spectrum[bins] = grid[sym]
        body = np.fft.ifft(spectrum) * scale
        start = sym * cfg.samples_per_symbol
        out[start : start + cfg.cp_samples] = body[cfg.fft_size - cfg.cp_samples :]
        out[start + cfg.cp_samples : start + cfg.samples_per_symbol] = body
    return out


def generate_slot(cfg: WaveformConfig) -> IqCapture:
    """One CP-OFDM slot with pilots and data, as a single-element capture.

    Deterministic for a given config: the pilot and data streams are
    drawn from independent substreams of ``cfg.seed`` (the data stream
    moves to ``cfg.data_seed`` when set).
    """
    return IqCapture(_modulate(cfg, resource_grid(cfg)), cfg.sample_rate_hz)


def matched_reference(cfg: WaveformConfig) -> IqCapture:
    """Pilot-only copy of the slot used as the matched-filter template.

    Identical to ``generate_slot`` with every data resource element
    zeroed, so it depends only on the pilot substream of the seed.
    """
    occupied = cfg.occupied_subcarriers
    grid = np.zeros((cfg.symbols_per_slot, occupied), dtype=np.complex128)
    mask = cfg.pilot_mask()
    grid[cfg.dmrs_symbol_index, mask] = _qpsk(_pilot_rng(cfg), int(mask.sum()))
    return IqCapture(_modulate(cfg, grid), cfg.sample_rate_hz)


def demodulate_slot(cfg: WaveformConfig, capture: IqCapture) -> np.ndarray:
    """Recover the resource grid from a clean single-element slot capture."""
    if capture.elements != 1:
        raise ValueError("demodulation expects a single-element capture")
    if capture.samples.shape[1] < cfg.samples_per_slot:
        raise ValueError("capture shorter than one slot")
    bins = cfg.occupied_bins()
    scale = cfg.fft_size / math.sqrt(cfg.occupied_subcarriers)
    grid = np.empty((cfg.symbols_per_slot, cfg.occupied_subcarriers), dtype=np.complex128)
    for sym in range(cfg.symbols_per_slot):
        start = sym * cfg.samples_per_symbol + cfg.cp_samples
        body = capture.samples[0, start : start + cfg.fft_size]
        grid[sym] = np.fft.fft(body / scale)[bins]
    return grid


def pulse_train(slot: IqCapture, count: int) -> IqCapture:
    """Repeat a single-pulse capture ``count`` times back to back."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if slot.pulses != 1:
        raise ValueError("pulse_train expects a single-pulse capture")
    tiled = np.tile(slot.samples, (1, count))
    return IqCapture(
        tiled,
        slot.sample_rate_hz,
        pulses=count,
        samples_per_pulse=slot.samples.shape[1],
    )


def dump_iq(capture: IqCapture, path: str | Path) -> None:
    """Write raw interleaved float32 I/Q plus a text metadata sidecar.

    Layout is element major: all samples of element 0, then element 1,
    and so on, each sample stored as little-endian I then Q.
    """
    path = Path(path)
    interleaved = np.empty(2 * capture.samples.size, dtype="<f4")
    flat = capture.samples.reshape(-1)
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    interleaved.tofile(path)
    meta = (
        f"sample_rate_hz = {capture.sample_rate_hz!r}\n"
        f"elements = {capture.elements}\n"
        f"pulses = {capture.pulses}\n"
        f"samples_per_pulse = {capture.samples_per_pulse}\n"
        "format = interleaved float32 little-endian, element major\n"
    )
    path.with_suffix(path.suffix + ".meta").write_text(meta)


def load_iq(path: str | Path) -> IqCapture:
    """Read a capture written by ``dump_iq``."""
    path = Path(path)
    meta: dict[str, str] = {}
    for line in path.with_suffix(path.suffix + ".meta").read_text().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    raw = np.fromfile(path, dtype="<f4")
    flat = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    elements = int(meta["elements"])
    return IqCapture(
        flat.reshape(elements, -1),
        float(meta["sample_rate_hz"]),
        pulses=int(meta["pulses"]),
        samples_per_pulse=int(meta["samples_per_pulse"]),
    )
