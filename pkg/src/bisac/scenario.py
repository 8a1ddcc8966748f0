"""Physical/waveform configuration, bistatic geometry and per-path ground truth.

Angle convention used everywhere in the package: a propagation direction is a
unit vector ``u``; azimuth ``az = atan2(u_y, u_x)`` is measured in the x-y
plane from +x, elevation ``el = arccos(u_z)`` from +z.  With this convention
the planar-array direction cosines are ``ox = sin(el) cos(az)`` and
``oy = sin(el) sin(az)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .tensorio import new_record, read_record


class ConfigError(ValueError):
    """Raised when a config file fails to parse or violates an invariant."""


@dataclass(frozen=True)
class ArrayGeometry:
    mx: int = 4
    my: int = 4
    spacing_wavelengths: float = 0.5

    @property
    def size(self) -> int:
        return self.mx * self.my

    def validate(self) -> None:
        if self.mx < 1 or self.my < 1:
            raise ConfigError(f"array dims must be >= 1, got {self.mx}x{self.my}")


@dataclass(frozen=True)
class SystemConfig:
    """Link-level parameters.  Defaults are the full-scale simulation set."""

    total_power_dbm: float = 30.0
    carrier_freq_hz: float = 28e9
    bandwidth_hz: float = 100e6
    n_subcarriers: int = 1024
    subcarrier_spacing_hz: float = 100e6 / 1024
    cp_duration_s: float = 3.34e-6
    n_packets: int = 64            # CSI snapshots per coherent interval
    symbols_per_packet: int = 14
    n_paths: int = 3               # NLoS (target) path count
    rician_k: float = 10.0         # linear
    speed_of_light: float = 3e8
    noise_psd_dbm_hz: float = -174.0
    beam_power_factor: float = 0.5
    beam_phase: float = 0.0
    tx_array: ArrayGeometry = field(default_factory=ArrayGeometry)
    rx_array: ArrayGeometry = field(default_factory=ArrayGeometry)
    seed: int = 0

    # -- derived quantities ------------------------------------------------
    @property
    def wavelength_m(self) -> float:
        return self.speed_of_light / self.carrier_freq_hz

    @property
    def cp_samples(self) -> int:
        return int(round(self.cp_duration_s * self.bandwidth_hz))

    @property
    def noise_power_w(self) -> float:
        """Total-band noise power: PSD integrated over the bandwidth."""
        dbm = self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)
        return 10.0 ** ((dbm - 30.0) / 10.0)

    @property
    def total_power_w(self) -> float:
        return 10.0 ** ((self.total_power_dbm - 30.0) / 10.0)

    def validate(self) -> None:
        n = self.n_subcarriers
        if n <= 0 or (n & (n - 1)) != 0:
            raise ConfigError(f"n_subcarriers must be a power of two, got {n}")
        if not 0.0 <= self.beam_power_factor <= 1.0:
            raise ConfigError(
                f"beam_power_factor must lie in [0, 1], got {self.beam_power_factor}"
            )
        expect = self.bandwidth_hz / self.n_subcarriers
        if not math.isclose(self.subcarrier_spacing_hz, expect, rel_tol=1e-12):
            raise ConfigError(
                "subcarrier_spacing_hz inconsistent: "
                f"{self.subcarrier_spacing_hz} != bandwidth/n_subcarriers = {expect}"
            )
        if self.rician_k < 0:
            raise ConfigError(f"rician_k must be >= 0, got {self.rician_k}")
        if self.n_paths < 0:
            raise ConfigError(f"n_paths must be >= 0, got {self.n_paths}")
        if self.cp_duration_s < 0:
            raise ConfigError(f"cp_duration_s must be >= 0, got {self.cp_duration_s}")
        self.tx_array.validate()
        self.rx_array.validate()


# Reduced-size profile for CI-speed experiments; full-scale values above are
# the "paper" profile.
DESK_OVERRIDES = dict(
    n_subcarriers=256,
    subcarrier_spacing_hz=100e6 / 256,
    cp_duration_s=8e-7,            # 80-sample cyclic prefix at 100 MHz
    n_packets=32,
    symbols_per_packet=2,          # pilot + one data symbol
    rician_k=1.0,
)

PROFILES = ("desk", "paper")


def profile_config(profile: str = "paper") -> SystemConfig:
    if profile == "paper":
        return SystemConfig()
    if profile == "desk":
        return replace(SystemConfig(), **DESK_OVERRIDES)
    raise ConfigError(f"unknown profile {profile!r}, expected one of {PROFILES}")


_SCALAR_KEYS = {
    "total_power_dbm": float,
    "carrier_freq_hz": float,
    "bandwidth_hz": float,
    "n_subcarriers": int,
    "subcarrier_spacing_hz": float,
    "cp_duration_s": float,
    "n_packets": int,
    "symbols_per_packet": int,
    "n_paths": int,
    "rician_k": float,
    "speed_of_light": float,
    "noise_psd_dbm_hz": float,
    "beam_power_factor": float,
    "beam_phase": float,
    "seed": int,
}


def load_config(path: str | Path | None = None, profile: str = "paper",
                overrides: dict | None = None) -> SystemConfig:
    """Build a validated SystemConfig.

    Precedence: profile defaults < config file < explicit overrides.  The file
    is flat key/value text; scalar keys live in ``[system]``, array geometry in
    ``[tx_array]`` / ``[rx_array]``.  An empty file yields the profile
    defaults.
    """
    cfg = profile_config(profile)
    fields: dict = {}
    spacing_given = False

    if path is not None:
        try:
            rec = read_record(path)
        except FileNotFoundError:
            raise
        except Exception as exc:  # configparser raises several types
            raise ConfigError(f"{path}: parse failure: {exc}") from exc
        if rec.has_section("system"):
            for key, raw in rec.items("system"):
                if key not in _SCALAR_KEYS:
                    raise ConfigError(f"{path}: unknown key [system] {key}")
                try:
                    fields[key] = _SCALAR_KEYS[key](raw)
                except ValueError as exc:
                    raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from exc
                if key == "subcarrier_spacing_hz":
                    spacing_given = True
        for sect, attr in (("tx_array", "tx_array"), ("rx_array", "rx_array")):
            if rec.has_section(sect):
                geom = getattr(cfg, attr)
                kwargs = dict(mx=geom.mx, my=geom.my,
                              spacing_wavelengths=geom.spacing_wavelengths)
                for key, raw in rec.items(sect):
                    if key not in kwargs:
                        raise ConfigError(f"{path}: unknown key [{sect}] {key}")
                    kwargs[key] = int(raw) if key in ("mx", "my") else float(raw)
                fields[attr] = ArrayGeometry(**kwargs)

    if overrides:
        fields.update(overrides)
        if "subcarrier_spacing_hz" in overrides:
            spacing_given = True

    cfg = replace(cfg, **fields)
    if not spacing_given and ("bandwidth_hz" in fields or "n_subcarriers" in fields):
        cfg = replace(cfg, subcarrier_spacing_hz=cfg.bandwidth_hz / cfg.n_subcarriers)
    cfg.validate()
    return cfg


def config_record(cfg: SystemConfig):
    """Serialize a SystemConfig back to the key/value text grammar."""
    rec = new_record()
    rec.add_section("system")
    for key in _SCALAR_KEYS:
        rec.set("system", key, repr(getattr(cfg, key)) if _SCALAR_KEYS[key] is float
                else str(getattr(cfg, key)))
    for sect, geom in (("tx_array", cfg.tx_array), ("rx_array", cfg.rx_array)):
        rec.add_section(sect)
        rec.set(sect, "mx", str(geom.mx))
        rec.set(sect, "my", str(geom.my))
        rec.set(sect, "spacing_wavelengths", repr(geom.spacing_wavelengths))
    return rec


def derive_ofdm_timing(cfg: SystemConfig) -> dict:
    """Symbol duration (useful part + CP) and the CSI snapshot interval."""
    symbol = 1.0 / cfg.subcarrier_spacing_hz + cfg.cp_duration_s
    return {
        "symbol_duration_s": symbol,
        "csi_interval_s": cfg.symbols_per_packet * symbol,
    }


# ---------------------------------------------------------------------------
# geometry / ground truth

@dataclass(frozen=True)
class Target:
    position: np.ndarray
    velocity: np.ndarray
    reflect_coeff: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        if abs(self.reflect_coeff) > 1.0 + 1e-12:
            raise ConfigError(
                f"|reflect_coeff| must be <= 1, got {abs(self.reflect_coeff)}"
            )


@dataclass(frozen=True)
class PathTruth:
    kind: str                  # "LoS" | "NLoS"
    gain: complex              # attenuation, excluding the Rician weight
    delay_s: float
    doppler_hz: float          # total-path-length rate divided by wavelength
    aoa: tuple[float, float]   # (azimuth, elevation) rad at the receiver
    aod: tuple[float, float]   # (azimuth, elevation) rad at the transmitter


def direction_angles(vec: np.ndarray) -> tuple[float, float]:
    """(azimuth, elevation) of a direction vector; see module docstring."""
    v = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ConfigError("zero-length direction vector")
    u = v / norm
    el = math.acos(max(-1.0, min(1.0, u[2])))
    az = math.atan2(u[1], u[0])
    return az, el


def angles_to_unit(az: float, el: float) -> np.ndarray:
    return np.array([
        math.sin(el) * math.cos(az),
        math.sin(el) * math.sin(az),
        math.cos(el),
    ])


def angular_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle angle (rad) between two (az, el) directions."""
    ua, ub = angles_to_unit(*a), angles_to_unit(*b)
    return math.acos(max(-1.0, min(1.0, float(np.dot(ua, ub)))))


def ground_truth_paths(cfg: SystemConfig, tx_pos, rx_pos,
                       targets: list[Target]) -> list[PathTruth]:
    """Direct path plus one reflected path per target.

    Gains follow free-space attenuation: direct ``lambda/(4 pi d)``, reflected
    ``lambda/((4 pi)^{3/2} d1 d2) * rho``.  Doppler is the rate of change of
    total path length divided by the wavelength (endpoints are static; only
    targets move), so the sensing chain's ``velocity = lambda * doppler``
    recovers the bistatic range rate directly.
    """
    tx = np.asarray(tx_pos, dtype=float)
    rx = np.asarray(rx_pos, dtype=float)
    lam = cfg.wavelength_m
    c = cfg.speed_of_light

    d_los = float(np.linalg.norm(rx - tx))
    if d_los == 0.0:
        raise ConfigError("tx and rx positions coincide")

    paths = [PathTruth(
        kind="LoS",
        gain=complex(lam / (4.0 * math.pi * d_los)),
        delay_s=d_los / c,
        doppler_hz=0.0,
        aoa=direction_angles(tx - rx),
        aod=direction_angles(rx - tx),
    )]

    for tgt in targets:
        p = tgt.position
        d1_vec = p - tx
        d2_vec = rx - p
        d1 = float(np.linalg.norm(d1_vec))
        d2 = float(np.linalg.norm(d2_vec))
        if d1 == 0.0 or d2 == 0.0:
            raise ConfigError("target coincides with an endpoint")
        # d/dt (d1 + d2) with static endpoints
        rate = float(np.dot(tgt.velocity, d1_vec / d1) - np.dot(tgt.velocity, d2_vec / d2))
        gain = lam / ((4.0 * math.pi) ** 1.5 * d1 * d2) * tgt.reflect_coeff
        paths.append(PathTruth(
            kind="NLoS",
            gain=complex(gain),
            delay_s=(d1 + d2) / c,
            doppler_hz=rate / lam,
            aoa=direction_angles(p - rx),
            aod=direction_angles(p - tx),
        ))
    return paths
