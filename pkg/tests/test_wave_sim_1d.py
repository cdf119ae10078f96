import math

import numpy as np
import pytest

from pcone.constitutive import DriftPolicy
from pcone.elasticity import p_wave_speed
from pcone.errors import CFLError, IntegrationError, ValidationError
from pcone.wave_sim_1d import (
    BoundaryCondition,
    Grid1D,
    TimeProgram,
    WaveScenario,
    check_cfl,
    run,
    stable_dt,
    step,
)
from pcone.yield_domain import YieldDomain, tresca, von_mises

ELASTIC = YieldDomain([von_mises(1e6)])


def scenario(moduli, domain=ELASTIC, n_cells=200, t_end=0.2, left=None, right=None, cfl=0.5, **kwargs):
    grid = kwargs.pop("grid", None) or Grid1D(n_cells, 1.0, moduli.rho)
    return WaveScenario(
        grid=grid,
        moduli=moduli,
        domain=domain,
        left=left or BoundaryCondition("left", "velocity", TimeProgram.constant(0.01)),
        right=right or BoundaryCondition("right", "free"),
        dt=stable_dt(grid, moduli, cfl),
        t_end=t_end,
        **kwargs,
    )


def test_time_program():
    ramp = TimeProgram([(0.0, 0.0), (1.0, 2.0)])
    assert ramp.value_at(0.5) == pytest.approx(1.0)
    assert ramp.value_at(5.0) == pytest.approx(2.0)
    held = TimeProgram([(0.0, 1.0), (1.0, 3.0)], "constant")
    assert held.value_at(0.99) == 1.0
    assert held.value_at(1.0) == 3.0
    assert TimeProgram.from_spec(0.3).value_at(7.0) == 0.3
    assert TimeProgram.from_spec(None).amplitude == 0.0
    with pytest.raises(ValidationError):
        TimeProgram.from_spec("fast", field_name="bc.left.value")
    with pytest.raises(ValidationError):
        TimeProgram([(1.0, 0.0), (0.0, 1.0)])


def test_boundary_condition_validation():
    with pytest.raises(ValidationError) as info:
        BoundaryCondition("left", "clamped")
    assert info.value.field == "bc.left.kind"
    with pytest.raises(ValidationError):
        BoundaryCondition("top")
    assert BoundaryCondition("left", "traction", TimeProgram.constant(2.0)).boundary_sigma11(0.0) == -2.0
    assert BoundaryCondition("right", "traction", TimeProgram.constant(2.0)).boundary_sigma11(0.0) == 2.0
    assert BoundaryCondition("right").boundary_sigma11(0.0) == 0.0


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid1D(0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        Grid1D(4, -1.0, 1.0)
    with pytest.raises(ValidationError):
        Grid1D(4, 1.0, 1.0, velocity=np.zeros(4))
    grid = Grid1D(4, 2.0, 3.0)
    assert grid.dx == 0.5
    assert grid.node_mass.sum() == pytest.approx(6.0)
    assert np.allclose(grid.cell_centers, [0.25, 0.75, 1.25, 1.75])


def test_cfl_check(unit_moduli):
    grid = Grid1D(100, 1.0, 1.0)
    dt = stable_dt(grid, unit_moduli, 0.9)
    assert check_cfl(grid, unit_moduli, dt) == pytest.approx(0.9)
    with pytest.raises(CFLError) as info:
        check_cfl(grid, unit_moduli, 1.1 * dt)
    assert info.value.field == "dt"
    with pytest.raises(CFLError):
        step(grid, unit_moduli, ELASTIC, 2.0 * dt)


def test_zero_state_is_unchanged(unit_moduli):
    grid = Grid1D(50, 1.0, 1.0)
    result = step(grid, unit_moduli, ELASTIC, stable_dt(grid, unit_moduli, 0.5))
    assert np.all(result.grid.velocity == 0.0)
    assert np.all(result.grid.stress == 0.0)
    assert result.kinetic == 0.0 and result.elastic == 0.0
    assert result.plastic_cells == 0


def test_zero_steps_keep_only_the_initial_snapshot(unit_moduli):
    record = run(scenario(unit_moduli, t_end=0.0))
    assert len(record.snapshots) == 1
    assert record.final.step == 0
    assert record.kinetic == []


def test_uniform_body_force_accelerates_rigidly(unit_moduli):
    force = TimeProgram.constant(2.0)
    s = scenario(
        unit_moduli, n_cells=20, t_end=0.1, left=BoundaryCondition("left"), body_force=force
    )
    record = run(s)
    n = s.n_steps
    assert np.allclose(record.final.velocity, n * s.dt * 2.0)
    assert np.allclose(record.final.stress, 0.0, atol=1e-14)


def test_elastic_front_speed(unit_moduli):
    s = scenario(unit_moduli, n_cells=1000, t_end=0.45, gauges=(0.25, 0.5))
    record = run(s, progress=False)
    c = p_wave_speed(unit_moduli)
    for p, speed in record.measured_speeds().items():
        assert speed == pytest.approx(c, rel=0.02)
    assert record.plastic_cell_steps == 0


def test_traction_end_loads_the_bar(unit_moduli):
    left = BoundaryCondition("left", "traction", TimeProgram.constant(0.01))
    record = run(scenario(unit_moduli, n_cells=400, t_end=0.3, left=left))
    behind = record.final.stress[10:100, 0]
    assert np.mean(behind) == pytest.approx(-0.01, rel=0.05)
    # material behind a compressive front moves into the bar
    assert np.mean(record.final.velocity[10:100]) > 0.0


def test_free_end_reflection_flips_stress(unit_moduli):
    n = 400
    grid = Grid1D(n, 1.0, 1.0)
    c = p_wave_speed(unit_moduli)
    pulse = lambda x: 0.01 * np.exp(-(((x - 0.5) / 0.05) ** 2))
    velocity = pulse(grid.nodes)
    stress = np.zeros((n, 6))
    # right-travelling pulse: σ11 = −ρ c v, lateral stresses from uniaxial strain
    stress[:, 0] = -unit_moduli.rho * c * pulse(grid.cell_centers)
    stress[:, 1] = stress[:, 2] = unit_moduli.lame / (unit_moduli.lame + 2.0 * unit_moduli.mu) * stress[:, 0]
    grid = Grid1D(n, 1.0, 1.0, stress, velocity)
    s = scenario(
        unit_moduli, grid=grid, left=BoundaryCondition("left"), t_end=0.75 / c, output_stride=1000
    )
    record = run(s)
    final = record.final
    peak = int(np.argmax(np.abs(final.velocity)))
    assert 0.65 < grid.nodes[peak] < 0.85
    assert final.velocity[peak] > 0.0
    cell = min(peak, n - 1)
    assert final.stress[cell, 0] > 0.0
    assert record.relative_energy_change() <= 5e-3


def test_plastic_front_respects_the_yield_cap(unit_moduli):
    domain = YieldDomain([von_mises(0.005)])
    record = run(scenario(unit_moduli, domain=domain, n_cells=200, t_end=0.3))
    assert record.plastic_cell_steps > 0
    assert record.max_yield_violation <= 1e-6
    assert min(record.dissipation) >= -1e-12
    assert sum(record.dissipation) > 0.0
    frame = record.to_frame()
    assert frame.f_value.max() <= 0.005 + 1e-6


def test_tresca_bar_goes_through_edges(unit_moduli):
    domain = YieldDomain([tresca(0.003)])
    record = run(scenario(unit_moduli, domain=domain, n_cells=60, t_end=0.2))
    assert record.plastic_cell_steps > 0
    assert record.max_yield_violation <= 1e-6


def test_outside_initial_stress_fails_with_step(unit_moduli):
    stress = np.zeros((20, 6))
    stress[3, 3] = 1.0
    grid = Grid1D(20, 1.0, 1.0, stress=stress)
    domain = YieldDomain([von_mises(0.1)])
    with pytest.raises(IntegrationError) as info:
        run(scenario(unit_moduli, domain=domain, grid=grid))
    assert info.value.step == 0


def test_drift_none_is_allowed_within_the_hard_limit(unit_moduli):
    domain = YieldDomain([von_mises(0.005)])
    s = scenario(unit_moduli, domain=domain, n_cells=100, t_end=0.1, drift=DriftPolicy("none", drift_tol=1e-6))
    record = run(s)
    assert record.max_membership_violation <= 100 * 1e-6


def test_record_outputs(unit_moduli):
    s = scenario(unit_moduli, n_cells=50, t_end=0.05, output_stride=4)
    record = run(s)
    expected = list(range(0, s.n_steps + 1, 4))
    if expected[-1] != s.n_steps:
        expected.append(s.n_steps)
    assert [snap.step for snap in record.snapshots] == expected
    frame = record.to_frame()
    assert len(frame) == 50 * len(expected)
    assert list(frame.columns[:4]) == ["step", "t", "x", "v"]
    summary = record.summary()
    assert summary["steps"] == s.n_steps
    assert summary["courant"] == pytest.approx(0.5)
    assert summary["plastic_wave_speed"] == pytest.approx(math.sqrt(5.0 / 3.0))
    assert math.isfinite(summary["max_yield_violation"])
    with pytest.raises(ValidationError):
        run(scenario(unit_moduli, n_cells=50, t_end=0.05, gauges=(1.5,)))


@pytest.mark.parametrize("domain", [YieldDomain([von_mises(0.005)]), YieldDomain([tresca(0.003)])])
def test_energy_does_not_grow_once_forcing_stops(unit_moduli, domain):
    stop = 0.12
    pulse = TimeProgram([(0.0, 0.0), (0.02, 0.01), (0.1, 0.01), (stop, 0.0)])
    s = scenario(
        unit_moduli,
        domain=domain,
        n_cells=200,
        t_end=0.4,
        left=BoundaryCondition("left", "velocity", pulse),
        output_stride=10 ** 9,
    )
    record = run(s)
    assert record.plastic_cell_steps > 0
    quiet = np.asarray(record.energy_times) >= stop + 2.0 * s.dt
    assert quiet.sum() > 100
    # 1% per 1000 steps
    assert record.energy_rise(after=stop + 2.0 * s.dt) <= 1e-5
    energy = record.energy[quiet]
    assert energy[-1] <= energy[0] * (1.0 + 1e-8)
    assert sum(record.dissipation) > 0.0
