"""Pulse-program design from a target infidelity.

Given the infidelity amplitude ``epsilon`` (infidelity ``epsilon**2``), the
normalised separation ``r = t_sep/sigma``, the width ``sigma`` and the
amplitude ratio ``alpha``, :func:`design` returns the truncation window,
total duration and the minimum peak amplitude required by the local
adiabaticity criterion at the equal-amplitude time.

Amplitude thresholds are dimensionless ``sigma * Omega`` products where
``Omega`` is the *cyclic* peak amplitude ``Omega0 / (2 pi)``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

from .envelope import DrivePair, equal_amplitude_time, mixing_angle

#: 2 (2 - sqrt 2), the denominator shared by all local thresholds
_CRITERION_DENOM = 2.0 * (2.0 - math.sqrt(2.0))

#: designs shorter than this many widths are treated as no evolution at all
DEGENERATE_T_OVER_SIGMA = 1e-3

#: epsilon above which the protocol no longer counts as a transfer
TRANSFER_EPSILON_MAX = 0.5

PULSE_AREA_MIN = 10.0


class DesignError(ValueError):
    """Raised for specifications that cannot produce a valid pulse program."""


class SetKind(str, enum.Enum):
    SET1 = "1"
    SET2 = "2"

    @classmethod
    def parse(cls, value) -> "SetKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().removeprefix("set")
        try:
            return cls(text)
        except ValueError:
            raise DesignError(f"unknown parameter set {value!r}; expected 1 or 2") from None


def _check_epsilon(epsilon):
    if not 0.0 < epsilon < 1.0:
        raise DesignError(f"epsilon must lie in (0, 1), got {epsilon!r}")


def _check_r(r):
    if r == 0 or not math.isfinite(r):
        raise DesignError("r must be finite and non-zero")


def _check_negative_r(r):
    if not r < 0:
        raise DesignError(f"adiabaticity thresholds require r < 0, got {r!r}")


def log_infidelity_ratio(epsilon: float) -> float:
    """``ln(epsilon / sqrt(1 - epsilon**2))``; negative for epsilon < 1/sqrt(2)."""
    _check_epsilon(epsilon)
    return math.log(epsilon) - 0.5 * math.log1p(-epsilon * epsilon)


def truncation_set1(epsilon: float, r: float) -> float:
    """Symmetric truncation parameter ``n_t`` from the dark-state boundary condition.

    May be negative for large ``|r|``.
    """
    _check_r(r)
    return log_infidelity_ratio(epsilon) / r + r / 2.0


def truncation_set2(epsilon: float, r: float) -> float:
    """Truncation parameter with the ``1/r`` factor replaced by ``-1`` for ``|r| < 1``."""
    _check_r(r)
    if abs(r) < 1.0:
        return -log_infidelity_ratio(epsilon) + r / 2.0
    return truncation_set1(epsilon, r)


def truncation(epsilon: float, r: float, set_kind=SetKind.SET1) -> float:
    if SetKind.parse(set_kind) is SetKind.SET2:
        return truncation_set2(epsilon, r)
    return truncation_set1(epsilon, r)


def window_duration(n_i: float, n_f: float, r: float, sigma: float) -> float:
    """Window length ``(n_i + n_f - r) sigma`` for the window ``[-n_i sigma + t_s, n_f sigma]``."""
    return (n_i + n_f - r) * sigma


def total_duration(epsilon: float, r: float, sigma: float) -> float:
    """Total duration of the Set 1 window, ``(2 sigma / r) ln(eps / sqrt(1 - eps**2))``."""
    _check_r(r)
    if not sigma > 0:
        raise DesignError("sigma must be positive")
    return 2.0 * sigma * log_infidelity_ratio(epsilon) / r


def total_duration_log_eps(epsilon: float, r: float, sigma: float) -> float:
    """Duration using ``ln(epsilon)`` alone, dropping the ``sqrt(1 - eps**2)`` factor.

    This small-epsilon form reproduces durations quoted with that
    approximation.
    """
    _check_epsilon(epsilon)
    _check_r(r)
    return 2.0 * sigma * math.log(epsilon) / r


def initial_angle(n_t: float, r: float) -> float:
    """Mixing angle at ``t_i`` of a symmetric window (alpha = 1), radians."""
    return math.atan(math.exp(r * n_t - r * r / 2.0))


def final_angle(n_t: float, r: float) -> float:
    """Mixing angle at ``t_f``; equals ``pi/2 - initial_angle`` for alpha = 1."""
    return 0.5 * math.pi - initial_angle(n_t, r)


def truncation_asymmetric(epsilon: float, r: float, alpha: float, set_kind=SetKind.SET2):
    """Left/right truncation ``(n_i, n_f)`` for unequal peak amplitudes.

    ``n_f - n_i = (2/r) ln(alpha)``; the total duration does not depend on
    ``alpha``.
    """
    if not alpha > 0:
        raise DesignError(f"alpha must be positive, got {alpha!r}")
    base = truncation(epsilon, r, set_kind)
    shift = math.log(alpha) / r
    return base - shift, base + shift


def amplitude_criterion_general(r: float, sigma: float, alpha: float, t_I: float) -> float:
    """Lower bound on ``sigma * Omega01 / (2 pi)`` for arbitrary alpha.

    ``-r exp(t_I**2 / (2 sigma**2)) / (2 (2 - sqrt 2))``.
    """
    _check_negative_r(r)
    if not alpha > 0:
        raise DesignError("alpha must be positive")
    return -r * math.exp(t_I * t_I / (2.0 * sigma * sigma)) / _CRITERION_DENOM


def amplitude_criterion_set1(r: float) -> float:
    """``sigma * Omega >= -r exp(r**2/8) / (2 (2 - sqrt 2))`` (alpha = 1)."""
    _check_negative_r(r)
    return -r * math.exp(r * r / 8.0) / _CRITERION_DENOM


def amplitude_criterion_set2(r: float) -> float:
    """Set 1 threshold with the ``-r`` prefactor replaced by 1 for ``|r| < 1``."""
    _check_negative_r(r)
    if abs(r) < 1.0:
        return math.exp(r * r / 8.0) / _CRITERION_DENOM
    return amplitude_criterion_set1(r)


def amplitude_criterion(r: float, set_kind=SetKind.SET1) -> float:
    if SetKind.parse(set_kind) is SetKind.SET2:
        return amplitude_criterion_set2(r)
    return amplitude_criterion_set1(r)


def global_criterion() -> float:
    """Reference line ``sigma * Omega = sqrt(pi)/4`` of the global criterion."""
    return math.sqrt(math.pi) / 4.0


@dataclass(frozen=True)
class DesignSpec:
    epsilon: float
    r: float
    sigma: float
    alpha: float = 1.0
    set_kind: SetKind = SetKind.SET2
    omega_multiplier: float = 1.0

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        _check_r(self.r)
        if not self.sigma > 0:
            raise DesignError("sigma must be positive")
        if not self.alpha > 0:
            raise DesignError("alpha must be positive")
        if not self.omega_multiplier > 0:
            raise DesignError("omega_multiplier must be positive")
        object.__setattr__(self, "set_kind", SetKind.parse(self.set_kind))


@dataclass(frozen=True)
class DesignResult:
    spec: DesignSpec
    n_i: float
    n_f: float
    t_i: float
    t_f: float
    T: float
    omega_min_cyclic: float
    threshold: float
    sigma_omega: float
    global_ok: bool
    t_omega_product: float
    pulse_area_ok: bool
    extrapolated: bool = False
    warnings: tuple = field(default=())

    @property
    def t_sep(self) -> float:
        return self.spec.r * self.spec.sigma

    @property
    def window(self):
        return (self.t_i, self.t_f)

    def drives(self) -> DrivePair:
        """Drive pair at the designed amplitude; the Stokes peak is ``Omega01/alpha``."""
        omega01 = self.omega_min_cyclic
        return DrivePair.from_cyclic(omega01, omega01 / self.spec.alpha, self.spec.sigma, self.t_sep)

    def to_record(self) -> dict:
        """Flat key-value record; times in ns and amplitudes in cyclic MHz."""
        s = self.spec
        return {
            "epsilon": s.epsilon,
            "r": s.r,
            "sigma_ns": s.sigma * 1e9,
            "alpha": s.alpha,
            "set_kind": s.set_kind.value,
            "n_i": self.n_i,
            "n_f": self.n_f,
            "t_i_ns": self.t_i * 1e9,
            "t_f_ns": self.t_f * 1e9,
            "T_ns": self.T * 1e9,
            "omega_MHz": self.omega_min_cyclic * 1e-6,
            "sigma_omega": self.sigma_omega,
            "global_ok": self.global_ok,
            "t_omega_product": self.t_omega_product,
        }


RECORD_FIELDS = tuple(
    "epsilon r sigma_ns alpha set_kind n_i n_f t_i_ns t_f_ns T_ns omega_MHz "
    "sigma_omega global_ok t_omega_product".split()
)


def design_threshold(spec: DesignSpec):
    """Amplitude threshold for ``spec`` and whether it extrapolates beyond the closed forms."""
    r, alpha = spec.r, spec.alpha
    _check_negative_r(r)
    if alpha == 1.0:
        return amplitude_criterion(r, spec.set_kind), False
    pair = DrivePair(alpha, 1.0, spec.sigma, r * spec.sigma)
    t_I = equal_amplitude_time(pair)
    threshold = amplitude_criterion_general(r, spec.sigma, alpha, t_I)
    if spec.set_kind is SetKind.SET2 and abs(r) < 1.0:
        # -r prefactor replaced by 1, mirroring the alpha = 1 Set 2 form
        return threshold / -r, True
    return threshold, False


def design(spec: DesignSpec) -> DesignResult:
    """Assemble the truncation window and minimum amplitude for ``spec``."""
    notes = []
    if spec.epsilon > TRANSFER_EPSILON_MAX:
        notes.append(f"epsilon={spec.epsilon} > {TRANSFER_EPSILON_MAX}: final angle below 60 deg")
        warnings.warn(notes[-1], stacklevel=2)
    n_i, n_f = truncation_asymmetric(spec.epsilon, spec.r, spec.alpha, spec.set_kind)
    T = window_duration(n_i, n_f, spec.r, spec.sigma)
    if T <= DEGENERATE_T_OVER_SIGMA * spec.sigma:
        raise DesignError(
            f"degenerate: T=0 (T={T * 1e9:.3g} ns is below {DEGENERATE_T_OVER_SIGMA:g} sigma; "
            f"no evolution for epsilon={spec.epsilon}, r={spec.r})"
        )
    threshold, extrapolated = design_threshold(spec)
    if extrapolated:
        notes.append("alpha != 1 with |r| < 1: Set 2 threshold extrapolated")
    sigma_omega = spec.omega_multiplier * threshold
    omega = sigma_omega / spec.sigma
    t_omega = T * omega
    t_s = spec.r * spec.sigma
    return DesignResult(
        spec=spec,
        n_i=n_i,
        n_f=n_f,
        t_i=-n_i * spec.sigma + t_s,
        t_f=n_f * spec.sigma,
        T=T,
        omega_min_cyclic=omega,
        threshold=threshold,
        sigma_omega=sigma_omega,
        global_ok=sigma_omega > global_criterion(),
        t_omega_product=t_omega,
        pulse_area_ok=t_omega > PULSE_AREA_MIN,
        extrapolated=extrapolated,
        warnings=tuple(notes),
    )


def criteria_diagnostics(sigma: float, omega_cyclic: float, T: float) -> dict:
    """Global and pulse-area checks for an arbitrary (sigma, Omega, T) triple."""
    so = sigma * omega_cyclic
    to = T * omega_cyclic
    return {
        "sigma_omega": so,
        "global_line": global_criterion(),
        "global_ok": so > global_criterion(),
        "t_omega_product": to,
        "pulse_area_ok": to > PULSE_AREA_MIN,
    }


def boundary_angles(result: DesignResult):
    """Mixing angles at the window edges of a designed sequence."""
    pair = DrivePair(result.spec.alpha, 1.0, result.spec.sigma, result.t_sep)
    return mixing_angle(pair, result.t_i), mixing_angle(pair, result.t_f)

