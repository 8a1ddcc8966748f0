"""STFT/ISTFT and the RGB spectrogram codec.

Spectrogram layout: rows are frequency bins ordered from -fs/2 to +fs/2
(two-sided, complex baseband input), columns are time frames.  The analysis
window is a 128-sample Hamming with hop 8 (120-sample overlap); synthesis is
weighted overlap-add with window-squared normalization, which inverts the
analysis exactly wherever the normalizer is healthy (the Hamming window never
reaches zero, so in practice everywhere).

The codec maps a complex spectrogram onto 8-bit RGB tiles:

    R = log(|Y| + eps) / log(m_max + eps) * 255         (clamped, rounded)
    G = (f - f_min) / (f_max - f_min) * 255             (bin row position)
    B = (angle(Y) + pi) / (2 pi) * 255

R is invertible down to |Y| = 1 - eps (the codec floor); signals should be
scaled so their useful dynamic range sits above that floor, see
``CODEC_REF_RMS``.  G is reconstructed positionally and ignored on decode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .tensorio import fmt, new_record, read_record, write_record
from .waveform import ComplexSignal

WINDOW_LEN = 128
DEFAULT_HOP = 8

# Reference RMS that enhancement normalizes signals to before encoding.  At
# this scale a full-band tone peaks around 6e3 in STFT magnitude, so the
# codec floor (|Y| = 1) sits below -60 dB of a calibrated m_max.
CODEC_REF_RMS = 1024.0


class TfrError(ValueError):
    pass


@dataclass(frozen=True)
class StftConfig:
    window: np.ndarray = field(default_factory=lambda: np.hamming(WINDOW_LEN))
    hop: int = DEFAULT_HOP
    fft_size: int = WINDOW_LEN
    two_sided: bool = True

    def __post_init__(self):
        w = np.asarray(self.window, dtype=np.float64)
        object.__setattr__(self, "window", w)
        if self.hop > w.size:
            raise TfrError(f"hop {self.hop} exceeds window length {w.size}")
        if self.fft_size != w.size:
            raise TfrError("fft_size must equal window length")

    def ola_norm(self, n_frames: int, length: int) -> np.ndarray:
        """Sum of squared windows at every output sample."""
        den = np.zeros(length)
        w2 = self.window ** 2
        for t in range(n_frames):
            start = t * self.hop
            den[start:start + w2.size] += w2
        return den


@dataclass
class Spectrogram:
    bins: np.ndarray          # (fft_size, frames) complex, -fs/2 first
    origin_len: int
    sample_rate_hz: float
    cfg: StftConfig = field(default_factory=StftConfig)

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]


def stft(sig: ComplexSignal, cfg: StftConfig | None = None) -> Spectrogram:
    """Windowed unitary DFT per frame, bins shifted so -fs/2 comes first."""
    cfg = cfg or StftConfig()
    x = sig.samples
    win = cfg.window
    n = win.size
    if x.size < n:
        raise TfrError(f"signal length {x.size} shorter than window {n}")
    n_frames = (x.size - n) // cfg.hop + 1
    idx = np.arange(n)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    frames = x[idx] * win[None, :]
    spec = np.fft.fft(frames, axis=1) / np.sqrt(n)
    return Spectrogram(bins=np.fft.fftshift(spec, axes=1).T,
                       origin_len=x.size, sample_rate_hz=sig.sample_rate_hz, cfg=cfg)


def istft(spec: Spectrogram) -> ComplexSignal:
    """Weighted overlap-add inverse; output has length ``origin_len``.

    Samples past the last frame's reach (at most hop-1 of them) are zero.
    """
    cfg = spec.cfg
    win = cfg.window
    n = win.size
    frames = np.fft.ifft(np.fft.ifftshift(spec.bins.T, axes=1), axis=1) * np.sqrt(n)
    num = np.zeros(spec.origin_len, dtype=np.complex128)
    den = cfg.ola_norm(spec.n_frames, spec.origin_len)
    if spec.n_frames and den[: (spec.n_frames - 1) * cfg.hop + n].min() <= 1e-12:
        raise TfrError("overlap-add normalizer degenerate for this window/hop")
    for t in range(spec.n_frames):
        start = t * cfg.hop
        num[start:start + n] += win * frames[t]
    out = np.zeros_like(num)
    covered = den > 1e-12
    out[covered] = num[covered] / den[covered]
    return ComplexSignal(samples=out, sample_rate_hz=spec.sample_rate_hz)


# ---------------------------------------------------------------------------
# RGB codec

@dataclass(frozen=True)
class RgbCodecMeta:
    m_max: float
    epsilon: float = 1e-8
    f_min: float = -0.5
    f_max: float = 0.5

    def __post_init__(self):
        if self.m_max <= 0:
            raise TfrError(f"m_max must be > 0, got {self.m_max}")
        if not self.f_min < self.f_max:
            raise TfrError("f_min must be < f_max")


@dataclass
class RgbImage:
    tiles: list[np.ndarray]        # each (128, 128, 3) uint8
    meta: RgbCodecMeta
    pad_frames: int
    origin_len: int
    sample_rate_hz: float

    @property
    def n_frames(self) -> int:
        return len(self.tiles) * WINDOW_LEN - self.pad_frames


def calibrate_m_max(mags: np.ndarray, percentile: float = 99.9) -> float:
    """Magnitude scale for the R channel from a clean calibration set."""
    m = float(np.percentile(np.abs(mags), percentile))
    if m <= 0:
        raise TfrError("calibration magnitudes are all zero")
    return m


def _quantize(channel: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(channel), 0, 255).astype(np.uint8)


def rgb_encode(spec: Spectrogram, meta: RgbCodecMeta) -> RgbImage:
    """Encode a spectrogram into 128x128 RGB tiles along the time axis."""
    mag = np.abs(spec.bins)
    phase = np.angle(spec.bins)
    log_scale = np.log(meta.m_max + meta.epsilon)
    r = np.log(mag + meta.epsilon) / log_scale * 255.0
    rows = spec.bins.shape[0]
    freqs = (np.arange(rows) / rows) - 0.5     # bin center as fraction of fs
    g_col = (freqs - meta.f_min) / (meta.f_max - meta.f_min) * 255.0
    g = np.broadcast_to(g_col[:, None], spec.bins.shape)
    b = (phase + np.pi) / (2.0 * np.pi) * 255.0

    img = np.stack([_quantize(r), _quantize(g), _quantize(b)], axis=-1)
    n_frames = spec.n_frames
    n_tiles = max(1, -(-n_frames // WINDOW_LEN))
    pad = n_tiles * WINDOW_LEN - n_frames
    if pad:
        img = np.pad(img, ((0, 0), (0, pad), (0, 0)))
    tiles = [np.ascontiguousarray(img[:, t * WINDOW_LEN:(t + 1) * WINDOW_LEN, :])
             for t in range(n_tiles)]
    return RgbImage(tiles=tiles, meta=meta, pad_frames=pad,
                    origin_len=spec.origin_len, sample_rate_hz=spec.sample_rate_hz)


def rgb_decode(img: RgbImage, cfg: StftConfig | None = None) -> Spectrogram:
    """Invert the R/B channels back to a complex spectrogram.

    The G channel is positional and ignored; tile padding is dropped.
    """
    cfg = cfg or StftConfig()
    full = np.concatenate(img.tiles, axis=1).astype(np.float64)
    if img.pad_frames:
        full = full[:, : full.shape[1] - img.pad_frames, :]
    meta = img.meta
    mag = np.exp(full[:, :, 0] / 255.0 * np.log(meta.m_max + meta.epsilon)) - meta.epsilon
    phase = full[:, :, 2] / 255.0 * 2.0 * np.pi - np.pi
    return Spectrogram(bins=mag * np.exp(1j * phase), origin_len=img.origin_len,
                       sample_rate_hz=img.sample_rate_hz, cfg=cfg)


def tiles_to_float(img: RgbImage) -> np.ndarray:
    """Stack tiles as (T, 3, 128, 128) float32 in [0, 1] for the network."""
    arr = np.stack([t.transpose(2, 0, 1) for t in img.tiles]).astype(np.float32)
    return arr / 255.0


def float_to_tiles(batch: np.ndarray, like: RgbImage) -> RgbImage:
    """Inverse of :func:`tiles_to_float`, requantizing to uint8."""
    tiles = [_quantize(np.asarray(t, dtype=np.float64).transpose(1, 2, 0) * 255.0)
             for t in batch]
    return RgbImage(tiles=tiles, meta=like.meta, pad_frames=like.pad_frames,
                    origin_len=like.origin_len, sample_rate_hz=like.sample_rate_hz)


# ---------------------------------------------------------------------------
# PNG + sidecar persistence

def save_tiles(img: RgbImage, directory: str | Path, stem: str) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, tile in enumerate(img.tiles):
        p = directory / f"{stem}_t{t:03d}.png"
        Image.fromarray(tile, mode="RGB").save(p)
        paths.append(p)
    rec = new_record()
    rec.add_section("codec")
    rec.set("codec", "m_max", fmt(img.meta.m_max))
    rec.set("codec", "epsilon", fmt(img.meta.epsilon))
    rec.set("codec", "f_min", fmt(img.meta.f_min))
    rec.set("codec", "f_max", fmt(img.meta.f_max))
    rec.set("codec", "hop", str(DEFAULT_HOP))
    rec.set("codec", "window", "hamming128")
    rec.set("codec", "origin_len", str(img.origin_len))
    rec.set("codec", "pad_frames", str(img.pad_frames))
    rec.set("codec", "sample_rate_hz", fmt(img.sample_rate_hz))
    rec.set("codec", "n_tiles", str(len(img.tiles)))
    write_record(directory / f"{stem}.meta", rec)
    return paths


def load_tiles(directory: str | Path, stem: str) -> RgbImage:
    directory = Path(directory)
    rec = read_record(directory / f"{stem}.meta")
    meta = RgbCodecMeta(
        m_max=float(rec.get("codec", "m_max")),
        epsilon=float(rec.get("codec", "epsilon")),
        f_min=float(rec.get("codec", "f_min")),
        f_max=float(rec.get("codec", "f_max")),
    )
    n_tiles = int(rec.get("codec", "n_tiles"))
    tiles = []
    for t in range(n_tiles):
        with Image.open(directory / f"{stem}_t{t:03d}.png") as im:
            tiles.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
    return RgbImage(tiles=tiles, meta=meta,
                    pad_frames=int(rec.get("codec", "pad_frames")),
                    origin_len=int(rec.get("codec", "origin_len")),
                    sample_rate_hz=float(rec.get("codec", "sample_rate_hz")))
