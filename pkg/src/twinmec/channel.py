"""Uplink channel model: path loss, SIC SINR, and finite-blocklength rates.

Subsystems share one multi-antenna access point.  Small-scale fading is
Rayleigh; large-scale attenuation follows

    PL(d) = -35.3 - 37.6 * log10(d)   [dB]

Decoding uses successive interference cancellation in descending order
of channel gain, so the strongest subsystem is decoded first and sees
residual interference from everyone decoded after it.  Achievable rates
use the finite-blocklength normal approximation

    rate = B * log2(1 + sinr) - B * sqrt(V / N) * Qinv(eps) / ln 2

with channel dispersion V = 1 - (1 + sinr)^-2, clamped at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DegenerateChannelError,
    InvalidGeometryError,
    UnreachableDestinationError,
)

LN2 = math.log(2.0)


def path_loss_db(distance_m: float) -> float:
    """Large-scale attenuation in dB at a transmitter-receiver distance."""
    if distance_m <= 0.0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return -35.3 - 37.6 * math.log10(distance_m)


def path_loss_gain(distance_m: float) -> float:
    """Linear power gain corresponding to path_loss_db."""
    return 10.0 ** (path_loss_db(distance_m) / 10.0)


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inv(eps: float, tol: float = 1e-15, max_iters: int = 200) -> float:
    """Inverse Gaussian tail by bisection on the erfc form.

    Valid for eps in (0, 1); Q(q_inv(eps)) matches eps to better than
    1e-12 relative over the URLLC range.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"tail probability must be in (0, 1), got {eps}")
    if eps == 0.5:
        return 0.0
    if eps > 0.5:
        return -q_inv(1.0 - eps, tol, max_iters)
    lo, hi = 0.0, 45.0
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        val = q_function(mid)
        if val == eps:
            return mid
        if val > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def urllc_rate(sinr: float, bandwidth_hz: float, blocklength: int, eps: float) -> float:
    """Achievable finite-blocklength rate in bit/s, clamped at zero."""
    if sinr < 0.0:
        raise ValueError(f"SINR must be non-negative, got {sinr}")
    if bandwidth_hz <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    if blocklength < 1:
        raise ValueError(f"blocklength must be >= 1, got {blocklength}")
    shannon = bandwidth_hz * math.log2(1.0 + sinr)
    dispersion = 1.0 - 1.0 / ((1.0 + sinr) ** 2)
    penalty = bandwidth_hz * math.sqrt(dispersion / blocklength) * q_inv(eps) / LN2
    return max(shannon - penalty, 0.0)


@dataclass
class ChannelRealization:
    """One slot's channels from every subsystem to the access point."""

    h: np.ndarray  # (L, M) complex
    gains_large_scale: np.ndarray  # (M,)
    positions: np.ndarray  # (M, 2)
    ap_position: np.ndarray  # (2,)
    tx_power_w: np.ndarray  # (M,)
    noise_w: float
    bandwidth_hz: float
    blocklength: int
    eps: float

    def __post_init__(self):
        if self.h.ndim != 2:
            raise ValueError("channel matrix must be (antennas, subsystems)")
        if self.h.shape[1] != self.positions.shape[0]:
            raise ValueError("one channel column per subsystem required")

    @property
    def n_subsystems(self) -> int:
        return self.h.shape[1]

    @property
    def n_antennas(self) -> int:
        return self.h.shape[0]

    def sic_order(self) -> np.ndarray:
        """Decode order: descending channel gain, index breaks ties."""
        norms = np.sum(np.abs(self.h) ** 2, axis=0)
        if np.any(norms == 0.0):
            raise DegenerateChannelError("zero-norm channel vector in realization")
        return np.argsort(-norms, kind="stable")

    def sinr(self) -> np.ndarray:
        """Per-subsystem SINR under the SIC decode order."""
        order = self.sic_order().astype(np.int64)
        powers = np.asarray(self.tx_power_w, dtype=float)
        return kernels.sic_sinr(
            np.ascontiguousarray(self.h.real),
            np.ascontiguousarray(self.h.imag),
            powers,
            order,
            self.noise_w,
        )

    def rates(self) -> np.ndarray:
        """Per-subsystem achievable uplink rate in bit/s."""
        sinr = self.sinr()
        return np.array(
            [
                urllc_rate(float(g), self.bandwidth_hz, self.blocklength, self.eps)
                for g in sinr
            ]
        )


def generate_channel(
    rng: np.random.Generator,
    positions: np.ndarray,
    ap_position,
    n_antennas: int,
    tx_power_w: float,
    noise_w: float,
    bandwidth_hz: float,
    blocklength: int,
    eps: float,
    area_m: float | None = None,
) -> ChannelRealization:
    """Draw a Rayleigh-faded realization for fixed node positions."""
    positions = np.asarray(positions, dtype=float)
    ap_position = np.asarray(ap_position, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise InvalidGeometryError("positions must be (M, 2)")
    if area_m is not None:
        bounds_ok = np.all(positions >= 0.0) and np.all(positions <= area_m)
        if not bounds_ok:
            raise InvalidGeometryError(f"positions fall outside the {area_m} m area")
    m = positions.shape[0]
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    dists = np.linalg.norm(positions - ap_position[None, :], axis=1)
    gains = np.array([path_loss_gain(max(d, 1.0)) for d in dists])
    fading = (
        rng.standard_normal((n_antennas, m)) + 1j * rng.standard_normal((n_antennas, m))
    ) / math.sqrt(2.0)
    h = fading * np.sqrt(gains)[None, :]
    return ChannelRealization(
        h=h,
        gains_large_scale=gains,
        positions=positions,
        ap_position=ap_position,
        tx_power_w=np.full(m, tx_power_w),
        noise_w=noise_w,
        bandwidth_hz=bandwidth_hz,
        blocklength=blocklength,
        eps=eps,
    )


def tx_latency(shares: dict, input_bits: float, rates: dict) -> float:
    """Transmission time of a split upload: slowest destination wins.

    shares maps destination -> fraction of the input routed there; rates
    maps destination -> link rate in bit/s.  A positive share on a
    zero-rate destination raises UnreachableDestinationError.
    """
    worst = 0.0
    for dest, share in shares.items():
        if share < 0.0:
            raise ValueError(f"negative share for destination {dest}")
        if share == 0.0:
            continue
        rate = rates[dest]
        if rate <= 0.0:
            raise UnreachableDestinationError(
                f"destination {dest} has zero rate but share {share}"
            )
        worst = max(worst, share * input_bits / rate)
    return worst
