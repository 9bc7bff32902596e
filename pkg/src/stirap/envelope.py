"""Gaussian drive envelopes for the pump/Stokes pair and derived quantities.

The pump (0-1) Gaussian is centred at ``t = 0`` and the Stokes (1-2) Gaussian
at ``t = t_sep``; counter-intuitive ordering means ``t_sep < 0``.  All
amplitudes are angular frequencies (rad/s), all times are seconds.

Envelopes are full analytic Gaussians.  Truncation of the sequence is
represented only by the integration window chosen in :mod:`stirap.designer`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DrivePair:
    """Pump and Stokes Gaussian envelopes sharing the width ``sigma``.

    Attributes
    ----------
    omega01_peak : float
        Peak angular Rabi frequency of the pump drive (rad/s).
    omega12_peak : float
        Peak angular Rabi frequency of the Stokes drive (rad/s).
    sigma : float
        Gaussian standard deviation (s).
    t_sep : float
        Pump-to-Stokes centre separation (s); negative for counter-intuitive
        ordering.
    """

    omega01_peak: float
    omega12_peak: float
    sigma: float
    t_sep: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if self.omega01_peak < 0 or self.omega12_peak < 0:
            raise ValueError("drive peak amplitudes must be non-negative")
        if not all(math.isfinite(v) for v in (self.omega01_peak, self.omega12_peak, self.t_sep)):
            raise ValueError("drive parameters must be finite")
        if self.t_sep > 0:
            warnings.warn(
                "t_sep > 0 gives intuitive ordering (pump before Stokes); "
                "adiabatic transfer expects t_sep < 0",
                stacklevel=3,
            )

    @classmethod
    def from_cyclic(cls, omega01_hz, omega12_hz, sigma, t_sep):
        """Build a pair from cyclic peak amplitudes ``Omega/(2 pi)`` in Hz."""
        return cls(TWO_PI * omega01_hz, TWO_PI * omega12_hz, sigma, t_sep)

    @property
    def r(self) -> float:
        """Normalised separation ``t_sep / sigma``."""
        return self.t_sep / self.sigma

    @property
    def alpha(self) -> float:
        """Amplitude ratio pump/Stokes."""
        self._require_driven()
        return self.omega01_peak / self.omega12_peak

    @property
    def counter_intuitive(self) -> bool:
        return self.t_sep < 0

    def _require_driven(self):
        if self.omega01_peak <= 0 or self.omega12_peak <= 0:
            raise ValueError("mixing angle is undefined when a drive amplitude is zero")


def envelope_at(pair: DrivePair, t):
    """Return ``(omega01(t), omega12(t))`` in rad/s; ``t`` may be an array."""
    t = np.asarray(t, dtype=float)
    s2 = 2.0 * pair.sigma**2
    omega01 = pair.omega01_peak * np.exp(-(t**2) / s2)
    omega12 = pair.omega12_peak * np.exp(-((t - pair.t_sep) ** 2) / s2)
    if omega01.ndim == 0:
        return float(omega01), float(omega12)
    return omega01, omega12


def log_amplitude_ratio(pair: DrivePair, t):
    """``ln(omega01(t) / omega12(t))``, linear in ``t``.

    Computed from the exponents directly so it stays finite where both
    Gaussians underflow.
    """
    pair._require_driven()
    t = np.asarray(t, dtype=float)
    ts = pair.t_sep
    return math.log(pair.alpha) + (ts * ts - 2.0 * t * ts) / (2.0 * pair.sigma**2)


def _arctan_exp(x):
    # arctan(e^x) without overflow; exactly pi/4 at x == 0
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = np.where(x > 0, 0.5 * np.pi - np.arctan(np.exp(-np.abs(x))), np.arctan(np.exp(-np.abs(x))))
    return out


def mixing_angle(pair: DrivePair, t):
    """Mixing angle ``arctan(omega01/omega12)`` in radians, in (0, pi/2)."""
    out = _arctan_exp(log_amplitude_ratio(pair, t))
    return float(out) if out.ndim == 0 else out


def mixing_angle_rate(pair: DrivePair, t):
    """Time derivative of the mixing angle (rad/s).

    For Gaussians of equal width the quotient
    ``(d01 * o12 - o01 * d12) / (o01**2 + o12**2)`` collapses to
    ``-t_sep / (2 sigma**2 cosh x)`` with ``x = ln(o01/o12)``, which is the
    form evaluated here.  It peaks at the equal-amplitude time, where
    ``x = 0``.
    """
    x = np.asarray(log_amplitude_ratio(pair, t))
    slope = -pair.t_sep / pair.sigma**2
    with np.errstate(over="ignore"):
        out = slope / (2.0 * np.cosh(x))
    return float(out) if out.ndim == 0 else out


def effective_area(pair: DrivePair, t):
    """Instantaneous generalised Rabi rate ``sqrt(omega01**2 + omega12**2)``."""
    omega01, omega12 = envelope_at(pair, t)
    out = np.hypot(omega01, omega12)
    return float(out) if np.ndim(out) == 0 else out


def equal_amplitude_time(pair: DrivePair) -> float:
    """Crossing time where ``omega01 == omega12``.

    ``t_I = t_sep/2 + sigma**2 ln(alpha) / t_sep``.
    """
    if pair.t_sep == 0:
        raise ValueError("equal-amplitude time is undefined for t_sep == 0")
    return pair.t_sep / 2.0 + pair.sigma**2 * math.log(pair.alpha) / pair.t_sep
