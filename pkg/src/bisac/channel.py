"""Planar-array steering vectors, the Rician multipath channel and AWGN.

The frequency-domain channel entry for path l on subcarrier n of packet m is

    g_l * chi_l * exp(-j 2 pi n df tau_l) * exp(+j 2 pi f_l m Tp) * a(aoa_l)

where ``g_l`` is the path gain including the Rician weight, ``chi_l`` the
transmit beamforming gain, ``df`` the subcarrier spacing and ``Tp`` the CSI
snapshot interval.  Doppler is applied per packet: ``f_l * Ts`` is negligible
within one symbol at the parameter scales used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ArrayGeometry, PathTruth, SystemConfig, derive_ofdm_timing
from .waveform import ComplexSignal


def steering_vector(geom: ArrayGeometry, aoa: tuple[float, float]) -> np.ndarray:
    """Array response for a (azimuth, elevation) direction.

    Element (p, q) on the half-wavelength grid contributes
    ``exp(-j pi (p ox + q oy))``; the flat vector is ordered y-major
    (index = q * mx + p), i.e. the Kronecker product of the y and x ramps.
    """
    az, el = aoa
    ox = np.sin(el) * np.cos(az)
    oy = np.sin(el) * np.sin(az)
    scale = 2.0 * geom.spacing_wavelengths  # = 1 at half-wavelength spacing
    px = np.exp(-1j * np.pi * scale * ox * np.arange(geom.mx))
    py = np.exp(-1j * np.pi * scale * oy * np.arange(geom.my))
    return np.kron(py, px)


def rician_weights(rician_k: float) -> tuple[float, float]:
    """(LoS, NLoS) amplitude weights; their squares sum to 1."""
    return (np.sqrt(rician_k / (rician_k + 1.0)),
            np.sqrt(1.0 / (rician_k + 1.0)))


def path_coefficient(path: PathTruth, cfg: SystemConfig, tx_beam: np.ndarray) -> complex:
    """Combined scalar gain: Rician weight x attenuation x transmit beam gain."""
    w_los, w_nlos = rician_weights(cfg.rician_k)
    weight = w_los if path.kind == "LoS" else w_nlos
    chi = np.dot(steering_vector(cfg.tx_array, path.aod), tx_beam)  # transpose, no conj
    return weight * path.gain * chi


@dataclass
class ChannelRealization:
    paths: list[PathTruth]
    response: np.ndarray      # (rx antennas, N, M_s) complex
    tx_beam: np.ndarray


def channel_response(paths: list[PathTruth], cfg: SystemConfig,
                     tx_beam: np.ndarray) -> ChannelRealization:
    """Per-subcarrier, per-packet response on every receive element."""
    if not paths:
        raise ValueError("paths must be nonempty")
    tx_beam = np.asarray(tx_beam, dtype=np.complex128)
    if tx_beam.shape != (cfg.tx_array.size,):
        raise ValueError(f"tx_beam length {tx_beam.shape} != {cfg.tx_array.size}")
    n, ms = cfg.n_subcarriers, cfg.n_packets
    tp = derive_ofdm_timing(cfg)["csi_interval_s"]
    df = cfg.subcarrier_spacing_hz
    h = np.zeros((cfg.rx_array.size, n, ms), dtype=np.complex128)
    n_idx = np.arange(n)
    m_idx = np.arange(ms)
    for path in paths:
        coeff = path_coefficient(path, cfg, tx_beam)
        freq_ramp = np.exp(-2j * np.pi * n_idx * df * path.delay_s)
        dopp_ramp = np.exp(2j * np.pi * path.doppler_hz * m_idx * tp)
        a_rx = steering_vector(cfg.rx_array, path.aoa)
        h += coeff * a_rx[:, None, None] * freq_ramp[None, :, None] * dopp_ramp[None, None, :]
    return ChannelRealization(paths=list(paths), response=h, tx_beam=tx_beam)


def apply_awgn(x: np.ndarray, noise_power: float, rng) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of the given power.

    ``noise_power`` is E|z|^2 per complex sample (half per real component).
    """
    if noise_power < 0:
        raise ValueError(f"noise_power must be >= 0, got {noise_power}")
    x = np.asarray(x, dtype=np.complex128)
    if noise_power == 0.0:
        return x.copy()
    return x + sample_awgn(x.shape, noise_power, rng)


def sample_awgn(shape, noise_power: float, rng) -> np.ndarray:
    sigma = np.sqrt(noise_power / 2.0)
    return sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def received_time_signal(tx: ComplexSignal, realization: ChannelRealization,
                         rx_antenna: int, cfg: SystemConfig, rng,
                         noise_power: float = 0.0) -> ComplexSignal:
    """Time-domain receive stream on one antenna element.

    Delays are applied as per-symbol frequency-domain phase ramps (exact while
    the delay stays inside the cyclic prefix); Doppler rotates per packet.
    The input must be a whole number of OFDM symbols.
    """
    n, ncp = cfg.n_subcarriers, cfg.cp_samples
    step = n + ncp
    total = len(tx)
    if total % step:
        raise ValueError(f"tx length {total} is not a multiple of symbol length {step}")
    n_sym = total // step
    tp = derive_ofdm_timing(cfg)["csi_interval_s"]
    df = cfg.subcarrier_spacing_hz
    max_delay = max(p.delay_s for p in realization.paths)
    if max_delay * cfg.bandwidth_hz >= total:
        raise ValueError("path delay exceeds frame length")

    blocks = tx.samples.reshape(n_sym, step).T      # (step, n_sym)
    spectra = np.fft.fft(blocks[ncp:, :], axis=0)   # unscaled; inverted below
    n_idx = np.arange(n)
    packet = np.arange(n_sym) // cfg.symbols_per_packet

    out = np.zeros((step, n_sym), dtype=np.complex128)
    for path in realization.paths:
        coeff = path_coefficient(path, cfg, realization.tx_beam)
        coeff = coeff * steering_vector(cfg.rx_array, path.aoa)[rx_antenna]
        ramp = np.exp(-2j * np.pi * n_idx * df * path.delay_s)
        dopp = np.exp(2j * np.pi * path.doppler_hz * packet * tp)
        shifted = np.fft.ifft(spectra * ramp[:, None], axis=0)
        sym = np.empty_like(out)
        if ncp:
            sym[:ncp, :] = shifted[-ncp:, :]
        sym[ncp:, :] = shifted
        out += coeff * dopp[None, :] * sym
    samples = out.reshape(-1, order="F")
    if noise_power > 0.0:
        samples = apply_awgn(samples, noise_power, rng)
    return ComplexSignal(samples=samples, sample_rate_hz=tx.sample_rate_hz)
