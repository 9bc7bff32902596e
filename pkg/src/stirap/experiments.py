"""Parameter sweeps regenerating the data behind the design trade-off maps.

Every sweep is described by a :class:`SweepGrid`; :func:`run_sweep` maps a
grid to a :class:`SweepResult` deterministically, so a grid read back from a
JSON sidecar reproduces the CSV bit for bit.  Grid points are independent
and may be evaluated in a process pool (``jobs > 1``); results are always
assembled in row-major order.
"""
from __future__ import annotations

import csv
import enum
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .designer import (
    RECORD_FIELDS,
    DesignSpec,
    SetKind,
    amplitude_criterion_set1,
    amplitude_criterion_set2,
    design,
    final_angle,
    global_criterion,
    total_duration_log_eps,
    truncation_set1,
    window_duration,
)
from .envelope import DrivePair
from .propagator import HamiltonianParams, basis_state, evolve, simulate_design

DEFAULT_EPSILONS = (0.01, 0.05, 0.1, 0.2, 0.3)
#: epsilon values reproducing the durations quoted at r = -1.5, sigma = 40 ns
QUOTED_EPSILONS = (10**-1.5, 0.1, 0.2236, 0.3168, 0.7606)
DEFAULT_POINTS = 81


class SweepKind(str, enum.Enum):
    THETA_F = "theta_f"
    TRUNCATION = "truncation"
    CRITERIA = "criteria"
    POPULATION = "population"
    COST = "cost"


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")
        if self.start == self.stop:
            raise ValueError(f"axis {self.name!r} is degenerate")
        if self.spacing != "linear":
            raise ValueError(f"unsupported spacing {self.spacing!r}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepGrid:
    kind: SweepKind
    axes: tuple
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", SweepKind(self.kind))
        object.__setattr__(self, "axes", tuple(self.axes))

    def axis(self, name) -> Axis:
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise KeyError(f"{self.kind.value} grid has no axis {name!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "axes": [vars(ax).copy() for ax in self.axes],
            "fixed": dict(self.fixed),
        }

    @classmethod
    def from_dict(cls, data) -> "SweepGrid":
        return cls(SweepKind(data["kind"]), tuple(Axis(**ax) for ax in data["axes"]), dict(data.get("fixed", {})))


@dataclass
class SweepResult:
    grid: SweepGrid
    columns: tuple
    rows: list
    summary: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows])


def _map(func, tasks, jobs):
    if jobs is None or jobs <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# -- theta_f -----------------------------------------------------------------

def theta_f_grid(nt=(0.0, 4.0), r=(-4.0, None), points=DEFAULT_POINTS) -> SweepGrid:
    """Grid over ``n_t`` and ``r``; ``r=(far, near)`` with ``near=None`` stopping one step short of 0."""
    r_far, r_near = r
    if r_near is None:
        r_near = r_far / points
    return SweepGrid(SweepKind.THETA_F, (Axis("n_t", nt[0], nt[1], points), Axis("r", r_far, r_near, points)))


def sweep_theta_f(grid: SweepGrid) -> SweepResult:
    """Final mixing angle (degrees) of a symmetric window, alpha = 1."""
    rows = []
    for n_t in grid.axis("n_t").values():
        for r in grid.axis("r").values():
            rows.append((float(n_t), float(r), math.degrees(final_angle(n_t, r))))
    theta = np.array([row[2] for row in rows])
    return SweepResult(grid, ("n_t", "r", "theta_f_deg"), rows,
                       {"theta_f_min_deg": float(theta.min()), "theta_f_max_deg": float(theta.max())})


# -- truncation curves ---------------------------------------------------------

def truncation_grid(epsilons=DEFAULT_EPSILONS, r=(-4.0, -0.1), points=DEFAULT_POINTS) -> SweepGrid:
    return SweepGrid(SweepKind.TRUNCATION, (Axis("r", r[0], r[1], points),), {"epsilons": [float(e) for e in epsilons]})


def sweep_truncation_curves(grid: SweepGrid) -> SweepResult:
    """Set 1 ``n_t`` and ``T/sigma`` versus r, one curve per epsilon.

    ``T_over_sigma_log_eps`` drops the ``sqrt(1 - eps**2)`` factor.
    """
    rows = []
    negative_nt = {}
    for eps in grid.fixed["epsilons"]:
        for r in grid.axis("r").values():
            n_t = truncation_set1(eps, r)
            rows.append((eps, float(r), n_t, window_duration(n_t, n_t, r, 1.0),
                         total_duration_log_eps(eps, r, 1.0)))
            if n_t < 0:
                key = repr(float(eps))
                negative_nt[key] = max(negative_nt.get(key, -math.inf), float(r))
    t_over_sigma = np.array([row[3] for row in rows])
    summary = {
        # per epsilon, the grid r closest to zero that still has n_t < 0
        "negative_nt_boundary_r": negative_nt,
        "T_over_sigma_min": float(t_over_sigma.min()),
    }
    return SweepResult(grid, ("epsilon", "r", "n_t", "T_over_sigma", "T_over_sigma_log_eps"), rows, summary)


# -- criteria comparison -------------------------------------------------------

def criteria_grid(r=(-4.0, -0.1), points=40, epsilon=0.05, sigma=30e-9) -> SweepGrid:
    return SweepGrid(SweepKind.CRITERIA, (Axis("r", r[0], r[1], points),), {"epsilon": epsilon, "sigma": sigma})


def _criteria_point(task):
    r, epsilon, sigma = task
    p2 = []
    for kind in (SetKind.SET1, SetKind.SET2):
        res = design(DesignSpec(epsilon, r, sigma, set_kind=kind))
        p2.append(simulate_design(res).final_p2)
    return (r, amplitude_criterion_set1(r), amplitude_criterion_set2(r), global_criterion(), p2[0], p2[1])


def sweep_criteria_comparison(grid: SweepGrid, jobs=1) -> SweepResult:
    """Set 1, Set 2 and global thresholds with the simulated final ``p2`` of both designs."""
    eps, sigma = grid.fixed["epsilon"], grid.fixed["sigma"]
    tasks = [(float(r), eps, sigma) for r in grid.axis("r").values()]
    rows = _map(_criteria_point, tasks, jobs)
    p2_set2 = [row[5] for row in rows]
    return SweepResult(
        grid,
        ("r", "set1_threshold", "set2_threshold", "global_line", "p2_set1", "p2_set2"),
        rows,
        {"p2_set2_min": min(p2_set2), "p2_set1_min": min(row[4] for row in rows)},
    )


# -- population and cost maps --------------------------------------------------

def map_grid(kind, sigma_ns=(5.0, 100.0), r=(-0.1, -4.0), points=DEFAULT_POINTS, epsilon=0.05,
             baseline_nt=3.0, baseline_omega_mhz=45.0, variants=("baseline", "tailored")) -> SweepGrid:
    fixed = {"epsilon": epsilon}
    if SweepKind(kind) is SweepKind.POPULATION:
        fixed.update(baseline_nt=baseline_nt, baseline_omega_mhz=baseline_omega_mhz, variants=list(variants))
    return SweepGrid(kind, (Axis("sigma_ns", sigma_ns[0], sigma_ns[1], points), Axis("r", r[0], r[1], points)), fixed)


def baseline_p2(sigma, r, n_t, omega_cyclic) -> float:
    """Final ``p2`` for a fixed symmetric truncation and equal fixed amplitudes."""
    pair = DrivePair.from_cyclic(omega_cyclic, omega_cyclic, sigma, r * sigma)
    window = (-(n_t - r) * sigma, n_t * sigma)
    return evolve(HamiltonianParams(pair), basis_state(0), window).final_p2


def _population_point(task):
    sigma_ns, r, fixed = task
    sigma = sigma_ns * 1e-9
    out = [sigma_ns, r]
    variants = fixed["variants"]
    if "baseline" in variants:
        omega = fixed["baseline_omega_mhz"] * 1e6
        out += [baseline_p2(sigma, r, fixed["baseline_nt"], omega), sigma * omega]
    if "tailored" in variants:
        res = design(DesignSpec(fixed["epsilon"], r, sigma, set_kind=SetKind.SET2))
        out.append(simulate_design(res).final_p2)
        out += [res.to_record()[k] for k in RECORD_FIELDS]
    return tuple(out)


def sweep_population_maps(grid: SweepGrid, jobs=1) -> SweepResult:
    """Final ``p2`` over (sigma, r) for the fixed baseline and the Set 2 tailored design.

    Tailored rows carry the full design record alongside ``p2``.
    """
    fixed = grid.fixed
    variants = fixed["variants"]
    columns = ["sigma_ns", "r"]
    if "baseline" in variants:
        columns += ["p2_baseline", "sigma_omega_baseline"]
    if "tailored" in variants:
        columns += ["p2_tailored"] + ["design_" + k for k in RECORD_FIELDS]
    tasks = [(float(s), float(r), fixed) for s in grid.axis("sigma_ns").values() for r in grid.axis("r").values()]
    rows = _map(_population_point, tasks, jobs)
    result = SweepResult(grid, tuple(columns), rows)
    floor = 1.0 - fixed["epsilon"] ** 2 - 0.01
    if "baseline" in variants:
        p2 = result.column("p2_baseline")
        so = result.column("sigma_omega_baseline")
        result.summary.update(p2_baseline_min=float(p2.min()),
                              baseline_global_ok_fraction=float(np.mean(so > global_criterion())))
    if "tailored" in variants:
        p2 = result.column("p2_tailored")
        result.summary.update(p2_tailored_min=float(p2.min()), p2_floor=floor,
                              tailored_points_below_floor=int(np.sum(p2 < floor)))
    return result


def _cost_point(task):
    sigma_ns, r, epsilon = task
    res = design(DesignSpec(epsilon, r, sigma_ns * 1e-9, set_kind=SetKind.SET2))
    return (sigma_ns, r, res.T * 1e9, res.omega_min_cyclic * 1e-6)


def sweep_cost_maps(grid: SweepGrid, jobs=1) -> SweepResult:
    """Total duration (ns) and minimum cyclic amplitude (MHz) of Set 2 designs."""
    eps = grid.fixed["epsilon"]
    tasks = [(float(s), float(r), eps) for s in grid.axis("sigma_ns").values() for r in grid.axis("r").values()]
    rows = [_cost_point(t) for t in tasks]
    return SweepResult(grid, ("sigma_ns", "r", "T_ns", "omega_MHz"), rows)


def run_sweep(grid: SweepGrid, jobs=1) -> SweepResult:
    kind = grid.kind
    if kind is SweepKind.THETA_F:
        return sweep_theta_f(grid)
    if kind is SweepKind.TRUNCATION:
        return sweep_truncation_curves(grid)
    if kind is SweepKind.CRITERIA:
        return sweep_criteria_comparison(grid, jobs)
    if kind is SweepKind.POPULATION:
        return sweep_population_maps(grid, jobs)
    return sweep_cost_maps(grid, jobs)


# -- output ----------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(result: SweepResult, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_cell(v) for v in row])


def write_sweep(result: SweepResult, out_dir, config=None, wall_seconds=None, timestamp=None):
    """Write ``<kind>_<timestamp>.csv`` and its JSON sidecar; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    now = datetime.now(timezone.utc)
    stamp = timestamp or now.strftime("%Y%m%dT%H%M%S%fZ")
    stem = f"{result.grid.kind.value}_{stamp}"
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    write_csv(result, csv_path)
    sidecar = {
        "grid": result.grid.to_dict(),
        "columns": list(result.columns),
        "summary": result.summary,
        "config": config or {},
        "software": {"package": "stirap", "version": __version__},
        "created_utc": now.isoformat(),
        "wall_seconds": wall_seconds,
        "csv": csv_path.name,
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_sidecar(path) -> tuple[SweepGrid, dict]:
    data = json.loads(Path(path).read_text())
    return SweepGrid.from_dict(data["grid"]), data


def default_output_dir() -> Path:
    return Path(os.environ.get("STIRAP_OUTPUT_DIR", "stirap_out"))


def timed_sweep(grid: SweepGrid, jobs=1):
    t0 = time.perf_counter()
    result = run_sweep(grid, jobs)
    return result, time.perf_counter() - t0
