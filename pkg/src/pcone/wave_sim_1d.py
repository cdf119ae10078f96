"""
Velocity-stress waves in a 1-D bar under uniaxial strain.

Node velocities (axial) live at half steps and cell stresses at whole steps of a
staggered leapfrog scheme. Each cell carries a full symmetric stress tensor and
is advanced with the elasto-plastic stress rate 𝓗(σ, ε̇), where the only nonzero
strain-rate component is ε̇11 = ∂v/∂x.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .config import BOUNDARY_KINDS, CFL_MAX, VOIGT_LABELS
from .constitutive import DriftPolicy, rate_split
from .elasticity import ElasticModuli, hooke_inverse_voigt, hooke_voigt, p_wave_speed, plastic_wave_speed
from .errors import CFLError, IntegrationError, MembershipError, ValidationError
from .tensor_core import SymTensor3, deviator_voigt, dot_voigt
from .yield_domain import TrescaFunction, VonMisesFunction, YieldDomain

logger = logging.getLogger(__name__)


class TimeProgram(object):
    """A scalar function of time: a constant, or knots [[t, value], ...] interpolated
    piecewise-linearly (``linear``) or held until the next knot (``constant``)."""

    def __init__(self, knots: Sequence[Tuple[float, float]], interpolation: str = "linear"):
        if not knots:
            raise ValidationError("needs at least one knot", field="program")
        times = np.array([float(t) for t, _ in knots])
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("knot times must be strictly increasing", field="program")
        if interpolation not in ("linear", "constant"):
            raise ValidationError(f"unknown interpolation {interpolation!r}", field="program")
        self.times = times
        self.values = np.array([float(v) for _, v in knots])
        self.interpolation = interpolation

    @classmethod
    def constant(cls, value: float) -> "TimeProgram":
        return cls([(0.0, float(value))])

    @classmethod
    def from_spec(cls, spec, interpolation="linear", field_name="program") -> "TimeProgram":
        if spec is None:
            return cls.constant(0.0)
        if isinstance(spec, (int, float)):
            return cls.constant(spec)
        try:
            knots = [(float(t), float(v)) for t, v in spec]
        except (TypeError, ValueError):
            raise ValidationError(f"expected a number or [[t, value], ...], got {spec!r}", field=field_name)
        return cls(knots, interpolation)

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    def value_at(self, t: float) -> float:
        if self.interpolation == "linear":
            return float(np.interp(t, self.times, self.values))
        i = max(0, int(np.searchsorted(self.times, t, side="right")) - 1)
        return float(self.values[i])


class BoundaryCondition(object):
    """One end of the bar.

    ``velocity`` prescribes the end-node velocity, ``traction`` the traction
    σ·n on the outward normal (so σ11 = −t at the left end and σ11 = t at the
    right end), and ``free`` is zero traction.
    """

    def __init__(self, side: str, kind: str = "free", program: Optional[TimeProgram] = None):
        if side not in ("left", "right"):
            raise ValidationError(f"expected left or right, got {side!r}", field="bc")
        if kind not in BOUNDARY_KINDS:
            raise ValidationError(f"expected one of {BOUNDARY_KINDS}, got {kind!r}", field=f"bc.{side}.kind")
        self.side = side
        self.kind = kind
        self.program = TimeProgram.constant(0.0) if program is None else program

    def __repr__(self):
        return f"BoundaryCondition({self.side!r}, {self.kind!r})"

    def value_at(self, t: float) -> float:
        return self.program.value_at(t)

    def boundary_sigma11(self, t: float) -> float:
        if self.kind == "free":
            return 0.0
        traction = self.value_at(t)
        return -traction if self.side == "left" else traction


class Grid1D(object):
    def __init__(self, n_cells: int, length: float, rho: float, stress=None, velocity=None):
        if int(n_cells) != n_cells or n_cells < 1:
            raise ValidationError(f"must be a positive integer, got {n_cells}", field="grid.n_cells")
        if not length > 0.0:
            raise ValidationError(f"must be positive, got {length}", field="grid.length")
        self.n_cells = int(n_cells)
        self.length = float(length)
        self.dx = self.length / self.n_cells
        self.rho = float(rho)
        self.stress = np.zeros((self.n_cells, 6)) if stress is None else np.array(stress, dtype=float)
        self.velocity = np.zeros(self.n_cells + 1) if velocity is None else np.array(velocity, dtype=float)
        if self.stress.shape != (self.n_cells, 6):
            raise ValidationError(f"expected shape {(self.n_cells, 6)}, got {self.stress.shape}", field="grid.stress")
        if self.velocity.shape != (self.n_cells + 1,):
            raise ValidationError(f"expected {self.n_cells + 1} nodes, got {self.velocity.shape}", field="grid.velocity")

    def copy(self) -> "Grid1D":
        return Grid1D(self.n_cells, self.length, self.rho, self.stress.copy(), self.velocity.copy())

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_cells + 1)

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def node_mass(self) -> np.ndarray:
        m = np.full(self.n_cells + 1, self.rho * self.dx)
        m[0] *= 0.5
        m[-1] *= 0.5
        return m

    def cell_velocity(self) -> np.ndarray:
        return 0.5 * (self.velocity[:-1] + self.velocity[1:])


def stable_dt(grid: Grid1D, moduli: ElasticModuli, cfl: float) -> float:
    return cfl * grid.dx / p_wave_speed(moduli)


def check_cfl(grid: Grid1D, moduli: ElasticModuli, dt: float, cfl_max: float = CFL_MAX) -> float:
    """Courant number c_e·dt/dx; raises CFLError above ``cfl_max``."""
    if not dt > 0.0:
        raise CFLError(f"must be positive, got {dt}", field="dt")
    courant = p_wave_speed(moduli) * dt / grid.dx
    if courant > cfl_max * (1.0 + 1e-12):
        raise CFLError(
            f"dt={dt:g} gives a Courant number {courant:.4f} above {cfl_max}; "
            f"use dt <= {stable_dt(grid, moduli, cfl_max):.6g}",
            field="dt",
        )
    return courant


def _voigt_matrices(arr: np.ndarray) -> np.ndarray:
    m = np.empty((arr.shape[0], 3, 3))
    m[:, 0, 0], m[:, 1, 1], m[:, 2, 2] = arr[:, 0], arr[:, 1], arr[:, 2]
    m[:, 0, 1] = m[:, 1, 0] = arr[:, 3]
    m[:, 0, 2] = m[:, 2, 0] = arr[:, 4]
    m[:, 1, 2] = m[:, 2, 1] = arr[:, 5]
    return m


def cell_values(domain: YieldDomain, stress: np.ndarray, reporting: bool = False) -> np.ndarray:
    """(n_cells, n_functions) array of f_i per cell, in stored or reporting units."""
    out = np.empty((stress.shape[0], len(domain.functions)))
    for j, f in enumerate(domain.functions):
        if isinstance(f, VonMisesFunction):
            s = deviator_voigt(stress)
            j2 = 0.5 * dot_voigt(s, s)
            out[:, j] = np.sqrt(np.maximum(j2, 0.0)) if reporting else j2
        elif isinstance(f, TrescaFunction):
            lam = np.linalg.eigvalsh(_voigt_matrices(stress))
            out[:, j] = 0.5 * (lam[:, -1] - lam[:, 0])
        else:
            values = [f.value(SymTensor3.from_voigt(row)) for row in stress]
            out[:, j] = [f.reporting_value(SymTensor3.from_voigt(row)) for row in stress] if reporting else values
    return out


def _levels(domain: YieldDomain, reporting: bool = False) -> np.ndarray:
    return np.array([f.reporting_level if reporting else f.level for f in domain.functions])


def _drift_correct(domain: YieldDomain, drift: DriftPolicy, stress: np.ndarray) -> np.ndarray:
    if drift.kind == "none":
        return stress
    gaps = cell_values(domain, stress) - _levels(domain)
    outside = np.any(gaps > 0.0, axis=1)
    if not np.any(outside):
        return stress
    fn = domain.functions[0]
    if len(domain.functions) == 1 and isinstance(fn, (VonMisesFunction, TrescaFunction)):
        rows = stress[outside]
        dev = deviator_voigt(rows)
        axis = rows - dev
        values = cell_values(domain, rows, reporting=True)[:, 0]
        scale = fn.k / values
        stress = stress.copy()
        stress[outside] = axis + scale[:, None] * dev
        return stress
    stress = stress.copy()
    for i in np.flatnonzero(outside):
        stress[i] = drift.apply(domain, SymTensor3.from_voigt(stress[i])).voigt
    return stress


class StepResult(NamedTuple):
    grid: Grid1D
    kinetic: float
    elastic: float
    dissipation: float
    plastic_cells: int


def step(
    grid: Grid1D,
    moduli: ElasticModuli,
    domain: YieldDomain,
    dt: float,
    t: float = 0.0,
    left: Optional[BoundaryCondition] = None,
    right: Optional[BoundaryCondition] = None,
    body_force: Optional[TimeProgram] = None,
    drift: Optional[DriftPolicy] = None,
) -> StepResult:
    """Advance velocities to t + dt/2, then stresses to t + dt.

    The returned energies belong to time t: kinetic energy pairs the velocities
    before and after the update, elastic energy uses the stresses at t.
    """
    check_cfl(grid, moduli, dt)
    left = BoundaryCondition("left") if left is None else left
    right = BoundaryCondition("right") if right is None else right
    drift = DriftPolicy() if drift is None else drift
    h1 = 0.0 if body_force is None else body_force.value_at(t)
    rho, dx = grid.rho, grid.dx
    s11 = grid.stress[:, 0]

    v_old = grid.velocity
    v = v_old.copy()
    v[1:-1] += dt / rho * ((s11[1:] - s11[:-1]) / dx + h1)
    t_half = t + 0.5 * dt
    if left.kind == "velocity":
        v[0] = left.value_at(t_half)
    else:
        v[0] += dt / (rho * 0.5 * dx) * (s11[0] - left.boundary_sigma11(t)) + dt / rho * h1
    if right.kind == "velocity":
        v[-1] = right.value_at(t_half)
    else:
        v[-1] += dt / (rho * 0.5 * dx) * (right.boundary_sigma11(t) - s11[-1]) + dt / rho * h1

    kinetic = 0.5 * float(np.sum(grid.node_mass * v_old * v))
    elastic = 0.5 * dx * float(np.sum(dot_voigt(grid.stress, hooke_inverse_voigt(moduli, grid.stress))))

    rates = np.zeros((grid.n_cells, 6))
    rates[:, 0] = (v[1:] - v[:-1]) / dx
    sigma_rate = hooke_voigt(moduli, rates)
    eps_p = np.zeros_like(rates)

    # states a little outside after a step still count as saturated
    stepping = domain.with_tolerance(max(domain.saturation_tol, drift.drift_tol))
    gaps = cell_values(stepping, grid.stress) - _levels(stepping)
    tols = np.array([stepping.tolerance(i) for i in range(len(stepping.functions))])
    if np.any(gaps > tols):
        worst = float(np.max(gaps))
        raise MembershipError("cell stress lies outside the yield domain", max_violation=worst)
    saturated = np.any(np.abs(gaps) <= tols, axis=1)
    n_plastic = int(np.count_nonzero(saturated))
    if n_plastic:
        fn = domain.functions[0]
        if len(domain.functions) == 1 and isinstance(fn, VonMisesFunction):
            dev = deviator_voigt(grid.stress[saturated])
            load = np.maximum(dot_voigt(rates[saturated], dev), 0.0)
            gg = dot_voigt(dev, dev)
            # a zero deviator can only be "saturated" under a loose tolerance
            ratio = np.divide(load, gg, out=np.zeros_like(load), where=gg > 0.0)
            eps_p[saturated] = ratio[:, None] * dev
        else:
            for i in np.flatnonzero(saturated):
                split = rate_split(stepping, moduli, SymTensor3.from_voigt(grid.stress[i]), SymTensor3.from_voigt(rates[i]))
                eps_p[i] = split.eps_p_rate.voigt
        sigma_rate -= 2.0 * moduli.mu * eps_p

    dissipation = dt * dx * float(np.sum(dot_voigt(eps_p, grid.stress)))
    stress = _drift_correct(domain, drift, grid.stress + dt * sigma_rate)
    new_grid = Grid1D(grid.n_cells, grid.length, grid.rho, stress, v)
    return StepResult(new_grid, kinetic, elastic, dissipation, n_plastic)


@dataclass
class WaveScenario:
    grid: Grid1D
    moduli: ElasticModuli
    domain: YieldDomain
    left: BoundaryCondition
    right: BoundaryCondition
    dt: float
    t_end: float
    output_stride: int = 1
    body_force: TimeProgram = field(default_factory=lambda: TimeProgram.constant(0.0))
    drift: DriftPolicy = field(default_factory=DriftPolicy)
    gauges: Tuple[float, ...] = (0.5,)
    arrival_threshold: Optional[float] = None

    @property
    def n_steps(self) -> int:
        return max(0, int(round(self.t_end / self.dt)))

    def threshold(self) -> Optional[float]:
        if self.arrival_threshold is not None:
            return float(self.arrival_threshold)
        amplitudes = [bc.program.amplitude for bc in (self.left, self.right) if bc.kind == "velocity"]
        if not amplitudes or max(amplitudes) == 0.0:
            return None
        return 0.5 * max(amplitudes)


class Snapshot(NamedTuple):
    step: int
    t: float
    velocity: np.ndarray
    stress: np.ndarray


class WaveRecord(object):
    def __init__(self, scenario: WaveScenario):
        self.scenario = scenario
        self.snapshots: List[Snapshot] = []
        self.energy_times: List[float] = []
        self.kinetic: List[float] = []
        self.elastic: List[float] = []
        self.dissipation: List[float] = []
        self.arrivals: Dict[float, Optional[float]] = {p: None for p in scenario.gauges}
        self.max_membership_violation = -math.inf
        self.max_yield_violation = -math.inf
        self.plastic_cell_steps = 0

    @property
    def energy(self) -> np.ndarray:
        return np.asarray(self.kinetic) + np.asarray(self.elastic)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def measured_speeds(self) -> Dict[float, Optional[float]]:
        length = self.scenario.grid.length
        out = {}
        for p, t in self.arrivals.items():
            x = p * length if self.scenario.left.kind == "velocity" else (1.0 - p) * length
            out[p] = None if not t else x / t
        return out

    def relative_energy_change(self, after: float = 0.0) -> float:
        """max |E − E0| / |E0| over recorded energies at times ≥ `after`."""
        times = np.asarray(self.energy_times)
        e = self.energy[times >= after]
        if e.size == 0 or e[0] == 0.0:
            return 0.0
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    def energy_rise(self, after: float = 0.0) -> float:
        """Largest one-step increase of E at times ≥ `after`, relative to the largest |E| of the run."""
        times = np.asarray(self.energy_times)
        e = self.energy[times >= after]
        scale = float(np.max(np.abs(self.energy))) if self.kinetic else 0.0
        if e.size < 2 or scale == 0.0:
            return 0.0
        return max(float(np.max(np.diff(e))), 0.0) / scale

    def to_frame(self) -> pd.DataFrame:
        grid = self.scenario.grid
        x = grid.cell_centers
        frames = []
        for snap in self.snapshots:
            data = {"step": snap.step, "t": snap.t, "x": x, "v": 0.5 * (snap.velocity[:-1] + snap.velocity[1:])}
            for j, label in enumerate(VOIGT_LABELS):
                data[f"sigma_{label}"] = snap.stress[:, j]
            data["f_value"] = np.max(cell_values(self.scenario.domain, snap.stress, reporting=True), axis=1)
            frames.append(pd.DataFrame(data))
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> dict:
        s = self.scenario
        c_e = p_wave_speed(s.moduli)
        return {
            "n_cells": s.grid.n_cells,
            "dt": s.dt,
            "t_end": s.t_end,
            "steps": s.n_steps,
            "courant": c_e * s.dt / s.grid.dx,
            "p_wave_speed": c_e,
            "plastic_wave_speed": plastic_wave_speed(s.moduli),
            "front_arrival_times": {f"{p:g}": t for p, t in self.arrivals.items()},
            "measured_speeds": {f"{p:g}": v for p, v in self.measured_speeds().items()},
            "max_membership_violation": self.max_membership_violation,
            "max_yield_violation": self.max_yield_violation,
            "min_step_dissipation": min(self.dissipation) if self.dissipation else 0.0,
            "plastic_cell_steps": self.plastic_cell_steps,
            "energy": {
                "t": list(self.energy_times),
                "kinetic": list(self.kinetic),
                "elastic": list(self.elastic),
            },
        }


def _gauge_nodes(grid: Grid1D, gauges: Sequence[float]) -> List[int]:
    nodes = []
    for p in gauges:
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"gauge positions are fractions of the bar length, got {p}", field="gauges")
        nodes.append(int(round(p * grid.n_cells)))
    return nodes


def _track_violation(record: WaveRecord, domain: YieldDomain, stress: np.ndarray) -> None:
    record.max_membership_violation = max(
        record.max_membership_violation, float(np.max(cell_values(domain, stress) - _levels(domain)))
    )
    record.max_yield_violation = max(
        record.max_yield_violation,
        float(np.max(cell_values(domain, stress, reporting=True) - _levels(domain, reporting=True))),
    )


def run(scenario: WaveScenario, progress: bool = False) -> WaveRecord:
    """Iterate :func:`step` to ``t_end``, keeping every ``output_stride``-th state."""
    s = scenario
    check_cfl(s.grid, s.moduli, s.dt)
    if int(s.output_stride) != s.output_stride or s.output_stride < 1:
        raise ValidationError(f"must be a positive integer, got {s.output_stride}", field="output_stride")
    record = WaveRecord(s)
    grid = s.grid.copy()
    n_steps = s.n_steps
    threshold = s.threshold()
    gauge_nodes = _gauge_nodes(grid, s.gauges)
    previous = np.abs(grid.velocity[gauge_nodes])
    t_prev = 0.0

    record.snapshots.append(Snapshot(0, 0.0, grid.velocity.copy(), grid.stress.copy()))
    _track_violation(record, s.domain, grid.stress)
    logger.info(
        "wave run: %d cells, %d steps, dt=%g, Courant %.3f, %r",
        grid.n_cells, n_steps, s.dt, p_wave_speed(s.moduli) * s.dt / grid.dx, s.domain,
    )
    for n in tqdm(range(n_steps), desc="wave", disable=not progress):
        t = n * s.dt
        try:
            result = step(grid, s.moduli, s.domain, s.dt, t, s.left, s.right, s.body_force, s.drift)
        except MembershipError as e:
            raise IntegrationError(str(e), n) from e
        grid = result.grid
        record.energy_times.append(t)
        record.kinetic.append(result.kinetic)
        record.elastic.append(result.elastic)
        record.dissipation.append(result.dissipation)
        record.plastic_cell_steps += result.plastic_cells

        violation = float(np.max(cell_values(s.domain, grid.stress) - _levels(s.domain)))
        if violation > s.drift.hard_limit:
            raise IntegrationError(
                f"yield violation {violation:.3e} exceeds the hard limit {s.drift.hard_limit:.3e}", n
            )
        _track_violation(record, s.domain, grid.stress)

        if threshold is not None:
            t_half = t + 0.5 * s.dt
            current = np.abs(grid.velocity[gauge_nodes])
            for j, p in enumerate(s.gauges):
                if record.arrivals[p] is None and current[j] >= threshold:
                    frac = (threshold - previous[j]) / (current[j] - previous[j]) if current[j] > previous[j] else 1.0
                    record.arrivals[p] = t_prev + frac * (t_half - t_prev)
            previous = current
            t_prev = t_half

        if (n + 1) % s.output_stride == 0 or n + 1 == n_steps:
            record.snapshots.append(Snapshot(n + 1, (n + 1) * s.dt, grid.velocity.copy(), grid.stress.copy()))
    logger.info(
        "wave run done: max yield violation %.3e, min step dissipation %.3e",
        record.max_yield_violation, min(record.dissipation) if record.dissipation else 0.0,
    )
    return record
