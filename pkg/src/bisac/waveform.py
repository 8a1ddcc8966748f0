"""OFDM symbol grids, framing (IFFT + cyclic prefix) and detection.

Transforms are unitary (1/sqrt(N) both ways) so symbol energy and sample
power agree without bookkeeping factors.  Subcarrier index n of a grid column
maps to baseband frequency n * subcarrier_spacing (mod bandwidth), i.e. plain
FFT bin ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import SystemConfig

QPSK = "qpsk"
QAM16 = "qam16"

BITS_PER_SYMBOL = {QPSK: 2, QAM16: 4}

# Gray-coded 16-QAM axis levels indexed by the 2-bit pattern (b_hi, b_lo):
# 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
_QAM16_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
_QAM16_SCALE = 1.0 / np.sqrt(10.0)


class WaveformError(ValueError):
    pass


@dataclass
class SymbolGrid:
    data: np.ndarray                     # (N, M) complex
    pilot_mask: np.ndarray               # (N, M) bool
    modulation: str = QPSK

    def __post_init__(self):
        if self.data.shape != self.pilot_mask.shape:
            raise WaveformError("data and pilot_mask shapes differ")


@dataclass
class ComplexSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if not np.all(np.isfinite(self.samples)):
            raise WaveformError("non-finite samples")

    def __len__(self) -> int:
        return self.samples.shape[-1]


def modulate_bits(bits: np.ndarray, scheme: str = QPSK) -> np.ndarray:
    """Map a bit vector to Gray-coded unit-mean-energy constellation points."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if np.any((bits != 0) & (bits != 1)):
        raise WaveformError("bits must be 0/1")
    k = BITS_PER_SYMBOL.get(scheme)
    if k is None:
        raise WaveformError(f"unknown modulation {scheme!r}")
    if bits.size % k:
        raise WaveformError(f"bit count {bits.size} not divisible by {k}")
    b = bits.reshape(-1, k)
    if scheme == QPSK:
        # bit0 -> real sign, bit1 -> imag sign; 00 maps to (1+1j)/sqrt(2)
        return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2.0)
    i = _QAM16_LEVELS[2 * b[:, 0] + b[:, 1]]
    q = _QAM16_LEVELS[2 * b[:, 2] + b[:, 3]]
    return (i + 1j * q) * _QAM16_SCALE


def demodulate_symbols(symbols: np.ndarray, scheme: str = QPSK) -> np.ndarray:
    """Nearest-point hard decisions, inverse of :func:`modulate_bits`."""
    s = np.asarray(symbols).ravel()
    if scheme == QPSK:
        out = np.empty((s.size, 2), dtype=np.int64)
        out[:, 0] = (s.real < 0).astype(np.int64)
        out[:, 1] = (s.imag < 0).astype(np.int64)
        return out.ravel()
    if scheme == QAM16:
        out = np.empty((s.size, 4), dtype=np.int64)
        for col, axis in ((0, s.real), (2, s.imag)):
            lv = axis / _QAM16_SCALE
            idx = np.argmin(np.abs(lv[:, None] - _QAM16_LEVELS[None, :]), axis=1)
            out[:, col] = idx >> 1
            out[:, col + 1] = idx & 1
        return out.ravel()
    raise WaveformError(f"unknown modulation {scheme!r}")


def random_grid(cfg: SystemConfig, n_symbols: int, rng,
                scheme: str = QPSK, pilot_symbols: tuple[int, ...] = ()) -> SymbolGrid:
    """Random data grid with optional full-band pilot symbol columns.

    Pilot columns carry QPSK symbols drawn from the same stream; they are
    known to the receiver via the mask + data, not by a fixed sequence.
    """
    n = cfg.n_subcarriers
    k = BITS_PER_SYMBOL[scheme]
    bits = rng.integers(0, 2, size=n * n_symbols * k)
    data = modulate_bits(bits, scheme).reshape(n, n_symbols, order="F")
    mask = np.zeros((n, n_symbols), dtype=bool)
    for m in pilot_symbols:
        mask[:, m] = True
        pbits = rng.integers(0, 2, size=n * 2)
        data[:, m] = modulate_bits(pbits, QPSK)
    return SymbolGrid(data=data, pilot_mask=mask, modulation=scheme)


def build_frame(grid: SymbolGrid, cfg: SystemConfig) -> ComplexSignal:
    """Unitary IFFT per symbol column plus cyclic prefix, concatenated."""
    n, m = grid.data.shape
    if n != cfg.n_subcarriers:
        raise WaveformError(f"grid has {n} subcarriers, config expects {cfg.n_subcarriers}")
    ncp = cfg.cp_samples
    core = np.fft.ifft(grid.data, axis=0) * np.sqrt(n)
    frame = np.empty((n + ncp, m), dtype=np.complex128)
    if ncp:
        frame[:ncp, :] = core[-ncp:, :]
    frame[ncp:, :] = core
    return ComplexSignal(samples=frame.reshape(-1, order="F"),
                         sample_rate_hz=cfg.bandwidth_hz)


def demodulate_frame(sig: ComplexSignal, cfg: SystemConfig) -> np.ndarray:
    """Strip cyclic prefixes and apply the unitary FFT per symbol.

    Returns the raw (unequalized) subcarrier observations, shape (N, M).
    """
    n = cfg.n_subcarriers
    ncp = cfg.cp_samples
    step = n + ncp
    total = sig.samples.shape[-1]
    if total % step:
        raise WaveformError(f"signal length {total} is not a multiple of {step}")
    m = total // step
    blocks = sig.samples.reshape(m, step).T   # (step, M)
    return np.fft.fft(blocks[ncp:, :], axis=0) / np.sqrt(n)


class EqualizationError(ValueError):
    pass


def equalize_and_detect(obs: np.ndarray, channel_est: np.ndarray,
                        scheme: str = QPSK) -> np.ndarray:
    """One-tap equalization followed by hard decisions."""
    obs = np.asarray(obs)
    h = np.asarray(channel_est)
    if obs.shape != h.shape:
        raise EqualizationError(f"shape mismatch {obs.shape} vs {h.shape}")
    dead = h == 0
    if np.any(dead):
        tone = np.argwhere(dead)[0]
        raise EqualizationError(f"zero channel coefficient on tone {tuple(tone)}")
    return demodulate_symbols((obs / h).ravel(order="F"), scheme)


def bit_error_rate(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    a = np.asarray(tx_bits).ravel()
    b = np.asarray(rx_bits).ravel()
    if a.size != b.size:
        raise WaveformError(f"length mismatch {a.size} vs {b.size}")
    return float(np.count_nonzero(a != b)) / a.size
