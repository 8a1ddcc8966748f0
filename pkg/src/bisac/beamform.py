"""Transmit multi-beam design and least-squares receive beamformers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ArrayGeometry, angular_distance
from .channel import steering_vector

# Beam kinds
TX_SCAN = "tx_scan"
TX_COMM = "tx_comm"
TX_COMBINED = "tx_combined"
RX_LS = "rx_ls"

# Directions closer than this (great-circle) are treated as duplicates: they
# sit inside half a search-grid step and make the LS fit meaningless.
MIN_SEPARATION_RAD = math.radians(0.25)

# Relative singular-value cutoff for the pseudo-inverse.
SVD_RCOND = 1e-10


class BeamformError(ValueError):
    pass


@dataclass
class BeamVector:
    weights: np.ndarray
    kind: str


def matched_beam(geom: ArrayGeometry, direction: tuple[float, float],
                 kind: str = TX_SCAN) -> BeamVector:
    """Unit-norm conjugate-matched beam toward one direction."""
    a = steering_vector(geom, direction)
    return BeamVector(weights=np.conj(a) / np.linalg.norm(a), kind=kind)


def ls_beam(geom: ArrayGeometry, directions: list[tuple[float, float]],
            desired: np.ndarray | None = None, kind: str = RX_LS) -> BeamVector:
    """Least-squares beam: response matrix pseudo-inverse times desired gains.

    Rows of the response matrix are steering vectors (transposed, matching the
    ``a^T w`` gain convention); ``desired`` defaults to uniform unit gain.
    """
    k = len(directions)
    if k < 1:
        raise BeamformError("need at least one direction")
    if k > geom.size:
        raise BeamformError(f"{k} directions exceed array size {geom.size}")
    for i in range(k):
        for j in range(i + 1, k):
            if angular_distance(directions[i], directions[j]) < MIN_SEPARATION_RAD:
                raise BeamformError(
                    f"directions {i} and {j} are nearly coincident "
                    f"({math.degrees(angular_distance(directions[i], directions[j])):.4f} deg apart)"
                )
    a_q = np.stack([steering_vector(geom, d) for d in directions])  # (K, ant)
    if desired is None:
        desired = np.ones(k, dtype=np.complex128)
    v = np.asarray(desired, dtype=np.complex128)
    if v.shape != (k,):
        raise BeamformError(f"desired response must have length {k}")

    u, s, vh = np.linalg.svd(a_q, full_matrices=False)
    rank = int(np.sum(s > SVD_RCOND * s[0]))
    if rank < k:
        # identify the most coherent pair for the error message
        worst, pair = -1.0, (0, 1)
        for i in range(k):
            for j in range(i + 1, k):
                c = abs(np.vdot(a_q[i], a_q[j])) / (
                    np.linalg.norm(a_q[i]) * np.linalg.norm(a_q[j]))
                if c > worst:
                    worst, pair = c, (i, j)
        raise BeamformError(
            f"response matrix is rank deficient (rank {rank} < {k}); "
            f"directions {pair[0]} and {pair[1]} are coherent (|corr|={worst:.6f})"
        )
    w = vh.conj().T @ ((u.conj().T @ v) / s)
    return BeamVector(weights=w, kind=kind)


def combine_multibeam(scan: BeamVector, comm: BeamVector,
                      beta_r: float, phi: float) -> BeamVector:
    """Power-split combination of the scanning and communication sub-beams."""
    if not 0.0 <= beta_r <= 1.0:
        raise BeamformError(f"beta_r must lie in [0, 1], got {beta_r}")
    ws, wc = scan.weights, comm.weights
    if ws.shape != wc.shape:
        raise BeamformError("sub-beam lengths differ")
    for name, w in (("scan", ws), ("comm", wc)):
        norm = np.linalg.norm(w)
        if abs(norm - 1.0) > 1e-6:
            raise BeamformError(f"{name} beam norm {norm} != 1")
    w = np.sqrt(beta_r) * np.exp(1j * phi) * ws + np.sqrt(1.0 - beta_r) * wc
    return BeamVector(weights=w, kind=TX_COMBINED)


def tx_gain(aod: tuple[float, float], beam: BeamVector, geom: ArrayGeometry) -> complex:
    """Transmit gain toward a departure direction: a(aod)^T w."""
    a = steering_vector(geom, aod)
    if a.shape != beam.weights.shape:
        raise BeamformError("beam length does not match array size")
    return complex(np.dot(a, beam.weights))
