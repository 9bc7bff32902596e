"""Three-level Schrodinger propagation under the STIRAP Hamiltonian.

Units: hbar = 1, energies are angular frequencies (rad/s), times in seconds.
The generator is ``H = M/2`` with

    M = [[0,        o01(t),  0                  ],
         [o01(t),   2 d01,   o12(t)             ],
         [0,        o12(t),  2 (d01 + d12)      ]]

:func:`evolve` is a fixed-step classic Runge-Kutta integrator (no norm
renormalisation, so the norm drift is a usable accuracy diagnostic).
:func:`evolve_oracle` is an independent piecewise-constant propagator using
exact 3x3 Hermitian exponentials.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .envelope import DrivePair, envelope_at, mixing_angle

#: default step in units of sigma
DEFAULT_STEPS_PER_SIGMA = 1000
#: phase advanced per step by the largest instantaneous eigenvalue, upper bound
MAX_PHASE_PER_STEP = 0.1
MAX_STEPS = 2_000_000
#: steps coarser than sigma / MIN_STEPS_PER_SIGMA are rejected
MIN_STEPS_PER_SIGMA = 10

CSV_COLUMNS = ("t_ns", "p0", "p1", "p2", "theta_rad", "dark_overlap", "norm")


class IntegrationError(RuntimeError):
    """Non-finite state or unusable integration settings."""


@dataclass(frozen=True)
class HamiltonianParams:
    drives: DrivePair
    delta01: float = 0.0
    delta12: float = 0.0

    @property
    def two_photon_resonant(self) -> bool:
        return self.delta01 == -self.delta12


def basis_state(k: int) -> np.ndarray:
    psi = np.zeros(3, dtype=complex)
    psi[k] = 1.0
    return psi


def hamiltonian_at(params: HamiltonianParams, t: float) -> np.ndarray:
    """3x3 Hermitian generator at time ``t`` (rad/s)."""
    o01, o12 = envelope_at(params.drives, t)
    d1 = params.delta01
    d2 = params.delta01 + params.delta12
    return 0.5 * np.array(
        [[0.0, o01, 0.0], [o01, 2.0 * d1, o12], [0.0, o12, 2.0 * d2]],
        dtype=complex,
    )


def _as_pair(obj) -> DrivePair:
    if isinstance(obj, HamiltonianParams):
        if not obj.two_photon_resonant:
            raise ValueError("dark state requires two-photon resonance (delta01 == -delta12)")
        return obj.drives
    return obj


def dark_state(pair, t) -> np.ndarray:
    """Dark state ``cos(theta)|0> - sin(theta)|2>``.

    ``pair`` is a :class:`DrivePair` or resonant :class:`HamiltonianParams`.
    Off-resonant parameters are rejected.
    """
    theta = mixing_angle(_as_pair(pair), t)
    return np.array([math.cos(theta), 0.0, -math.sin(theta)], dtype=complex)


@dataclass
class SimulationRecord:
    t: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    theta: np.ndarray
    dark_overlap: np.ndarray
    norm: np.ndarray
    psi_final: np.ndarray
    step: float
    n_steps: int

    @property
    def final_p2(self) -> float:
        """Target-state fidelity ``|<2|psi(t_f)>|**2``."""
        return float(abs(self.psi_final[2]) ** 2)

    @property
    def final_populations(self):
        return tuple(float(v) for v in np.abs(self.psi_final) ** 2)

    @property
    def norm_drift(self) -> float:
        """Largest deviation of the squared norm from 1 over the record."""
        return float(np.max(np.abs(self.norm - 1.0)))

    def rows(self):
        for k in range(len(self.t)):
            yield (
                self.t[k] * 1e9,
                self.p0[k],
                self.p1[k],
                self.p2[k],
                self.theta[k],
                self.dark_overlap[k],
                self.norm[k],
            )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(v)) for v in row])


def resolve_step(params: HamiltonianParams, window, step=None) -> tuple[int, float]:
    """Number of steps and signed step size covering ``window``.

    With ``step=None`` the step is ``sigma/1000``, tightened so the largest
    eigenvalue advances at most ``MAX_PHASE_PER_STEP`` radians per step, and
    coarsened if needed to keep at most ``MAX_STEPS`` steps.
    """
    t_a, t_b = window
    span = t_b - t_a
    if span == 0 or not math.isfinite(span):
        raise IntegrationError(f"window must have non-zero finite length, got {window!r}")
    sigma = params.drives.sigma
    if step is None:
        step = sigma / DEFAULT_STEPS_PER_SIGMA
        h_max = 0.5 * (params.drives.omega01_peak + params.drives.omega12_peak) + abs(params.delta01) + abs(
            params.delta01 + params.delta12
        )
        if h_max > 0:
            step = min(step, MAX_PHASE_PER_STEP / h_max)
        step = max(step, abs(span) / MAX_STEPS)
    if not step > 0:
        raise IntegrationError("step must be positive")
    if step >= sigma / MIN_STEPS_PER_SIGMA:
        raise IntegrationError(f"step {step:.3g} s is under-resolved (>= sigma/{MIN_STEPS_PER_SIGMA})")
    n = max(1, math.ceil(abs(span) / step - 1e-9))
    return n, span / n


def _prepare(params, psi0, window, step):
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (3,):
        raise ValueError("psi0 must have three components")
    if not abs(np.vdot(psi0, psi0).real - 1.0) <= 1e-9:
        raise ValueError("psi0 must be normalised")
    n, dt = resolve_step(params, window, step)
    return psi0, n, dt


def _record(params, times, states, dt, n):
    states = np.asarray(states)
    pops = np.abs(states) ** 2
    norm = pops.sum(axis=1)
    pair = params.drives
    if pair.omega01_peak > 0 and pair.omega12_peak > 0 and params.two_photon_resonant:
        theta = np.asarray(mixing_angle(pair, times), dtype=float)
        overlap = np.abs(np.cos(theta) * states[:, 0] - np.sin(theta) * states[:, 2]) ** 2
    else:
        theta = np.full(len(times), np.nan)
        overlap = np.full(len(times), np.nan)
    return SimulationRecord(
        t=np.asarray(times),
        p0=pops[:, 0],
        p1=pops[:, 1],
        p2=pops[:, 2],
        theta=theta,
        dark_overlap=overlap,
        norm=norm,
        psi_final=states[-1].copy(),
        step=abs(dt),
        n_steps=n,
    )


def evolve(params: HamiltonianParams, psi0, window, step=None, decimation: int = 1) -> SimulationRecord:
    """Integrate ``i dpsi/dt = H(t) psi`` from ``window[0]`` to ``window[1]``.

    A window with ``window[1] < window[0]`` integrates backward in time.
    Every ``decimation``-th step is recorded; the first and last states
    always are.
    """
    psi0, n, dt = _prepare(params, psi0, window, step)
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    t_a = window[0]
    grid = t_a + dt * 0.5 * np.arange(2 * n + 1)
    a, b = envelope_at(params.drives, grid)
    a = np.atleast_1d(0.5 * a).tolist()
    b = np.atleast_1d(0.5 * b).tolist()
    e1 = params.delta01
    e2 = params.delta01 + params.delta12
    c0, c1, c2 = (complex(v) for v in psi0)
    h = 0.5 * dt
    w = dt / 6.0
    mi = -1j
    times = [t_a]
    states = [(c0, c1, c2)]
    for k in range(n):
        j = 2 * k
        a0, am, a1 = a[j], a[j + 1], a[j + 2]
        b0, bm, b1 = b[j], b[j + 1], b[j + 2]
        k10 = mi * (a0 * c1)
        k11 = mi * (a0 * c0 + e1 * c1 + b0 * c2)
        k12 = mi * (b0 * c1 + e2 * c2)
        x0 = c0 + h * k10
        x1 = c1 + h * k11
        x2 = c2 + h * k12
        k20 = mi * (am * x1)
        k21 = mi * (am * x0 + e1 * x1 + bm * x2)
        k22 = mi * (bm * x1 + e2 * x2)
        x0 = c0 + h * k20
        x1 = c1 + h * k21
        x2 = c2 + h * k22
        k30 = mi * (am * x1)
        k31 = mi * (am * x0 + e1 * x1 + bm * x2)
        k32 = mi * (bm * x1 + e2 * x2)
        x0 = c0 + dt * k30
        x1 = c1 + dt * k31
        x2 = c2 + dt * k32
        k40 = mi * (a1 * x1)
        k41 = mi * (a1 * x0 + e1 * x1 + b1 * x2)
        k42 = mi * (b1 * x1 + e2 * x2)
        c0 = c0 + w * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
        c1 = c1 + w * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        c2 = c2 + w * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        if (k + 1) % decimation == 0 or k == n - 1:
            if not (math.isfinite(abs(c0)) and math.isfinite(abs(c1)) and math.isfinite(abs(c2))):
                raise IntegrationError(f"non-finite state at t={grid[j + 2]!r} after {k + 1} steps")
            times.append(grid[j + 2])
            states.append((c0, c1, c2))
    return _record(params, times, states, dt, n)


_ORACLE_CHUNK = 65536


def _step_unitaries(params, t_mid, dt):
    o01, o12 = envelope_at(params.drives, t_mid)
    m = len(t_mid)
    hm = np.zeros((m, 3, 3))
    hm[:, 0, 1] = hm[:, 1, 0] = 0.5 * o01
    hm[:, 1, 2] = hm[:, 2, 1] = 0.5 * o12
    hm[:, 1, 1] = params.delta01
    hm[:, 2, 2] = params.delta01 + params.delta12
    vals, vecs = np.linalg.eigh(hm)
    return np.einsum("kij,kj,klj->kil", vecs, np.exp(-1j * vals * dt), vecs.conj())


def evolve_oracle(params: HamiltonianParams, psi0, window, step=None, decimation: int = 1) -> SimulationRecord:
    """Piecewise-constant propagation ``exp(-i H(t_mid) dt)`` per step.

    Each exponential comes from an eigendecomposition of the Hermitian
    generator, so the propagator is unitary to rounding.  Second-order
    accurate in ``dt``; intended as an independent cross-check of
    :func:`evolve`.
    """
    psi, n, dt = _prepare(params, psi0, window, step)
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    t_a = window[0]
    times = [t_a]
    states = [psi.copy()]
    for start in range(0, n, _ORACLE_CHUNK):
        ks = np.arange(start, min(n, start + _ORACLE_CHUNK))
        unitaries = _step_unitaries(params, t_a + (ks + 0.5) * dt, dt)
        for k, u in zip(ks.tolist(), unitaries):
            psi = u @ psi
            if (k + 1) % decimation == 0 or k == n - 1:
                if not np.all(np.isfinite(psi)):
                    raise IntegrationError(f"non-finite state after {k + 1} steps")
                times.append(t_a + (k + 1) * dt)
                states.append(psi.copy())
    return _record(params, times, states, dt, n)


def simulate_design(result, omega_cyclic=None, step=None, decimation=1, psi0=None, delta01=0.0, delta12=0.0,
                    integrator=evolve) -> SimulationRecord:
    """Propagate a :class:`~stirap.designer.DesignResult` from ``|0>`` over its window.

    ``omega_cyclic`` overrides the pump peak (Hz); the Stokes peak follows as
    ``omega/alpha``.
    """
    pair = result.drives()
    if omega_cyclic is not None:
        pair = DrivePair.from_cyclic(omega_cyclic, omega_cyclic / result.spec.alpha, pair.sigma, pair.t_sep)
    params = HamiltonianParams(pair, delta01, delta12)
    if psi0 is None:
        psi0 = basis_state(0)
    return integrator(params, psi0, result.window, step=step, decimation=decimation)
