import math

import numpy as np
import pytest

from bresse.errors import BlowUpError, ConfigError
from bresse.experiments import write_run
from bresse.integrate import IntegratorConfig, cfl_dt, simulate, step, time_lattice
from bresse.limits import sl1_initial
from bresse.model import DampingSpec, LoadSpec, SegmentParams, BeamConfig, sl1_config, sl2_config
from bresse.spatial import BeamState, build_grid

from conftest import bump_state, linear_sl1


def test_cfl_step_first_study():
    assert cfl_dt(sl1_config(), 0.1, 0.5) == pytest.approx(0.025)


def test_cfl_step_shrinks_with_shear_stiffness():
    assert cfl_dt(sl2_config(100), 0.1, 0.5) == pytest.approx(cfl_dt(sl2_config(), 0.1, 0.5) / 10)


def test_cfl_step_unit_speeds():
    p = SegmentParams(1.0, 1.0, 1.0, 1.0, 1.0)
    assert cfl_dt(BeamConfig(p, p, 0.0, 10.0, 4.0), 1.0, 1.0) == 1.0


@pytest.mark.parametrize("kw", [dict(t_end=1, cfl_safety=0), dict(t_end=1, cfl_safety=1.5), dict(t_end=-1),
                                dict(t_end=1, output_stride=0), dict(t_end=1, scheme="rk4")])
def test_integrator_config_validation(kw):
    with pytest.raises(ConfigError):
        IntegratorConfig(**kw)


def test_time_lattice_with_sampling():
    dt, n, stride = time_lattice(IntegratorConfig(t_end=1.0, sample_dt=0.01), 0.004)
    assert stride == 3 and dt == pytest.approx(0.01 / 3) and n == 300


def test_time_lattice_lands_on_end_time():
    dt, n, _ = time_lattice(IntegratorConfig(t_end=1.0), 0.3)
    assert n == 4 and n * dt == pytest.approx(1.0)


def test_zero_state_stays_zero(sl1_grid):
    state = BeamState.zeros(sl1_grid)
    cfg = linear_sl1()
    for _ in range(5):
        state = step(state, cfg, sl1_grid, 0.01)
    assert all(not a.any() for a in state.disp.values())
    assert all(not a.any() for a in state.vel.values())


def test_single_step_under_constant_load(sl1_grid):
    const = lambda x: (1.0 + 0 * x, 2.0 + 0 * x, -3.0 + 0 * x)  # noqa: E731
    cfg = linear_sl1().replace(loads=LoadSpec("const", const, const))
    dt = 0.02
    new = step(BeamState.zeros(sl1_grid), cfg, sl1_grid, dt)
    interior = slice(2, 30)
    # rho = 1, beta = 2 on both parts
    assert np.allclose(new.disp["phi"][interior], 0.5 * dt**2 * 1.0, rtol=1e-13, atol=0)
    assert np.allclose(new.disp["psi"][interior], 0.5 * dt**2 * 2.0 / 2.0, rtol=1e-13, atol=0)
    assert np.allclose(new.disp["w"][5:50], 0.5 * dt**2 * -3.0, rtol=1e-13, atol=0)
    assert new.t == dt


def test_linear_undamped_energy_drift_over_many_steps():
    grid = build_grid(10, 4, 0.1, (2.0, 6.0))
    icfg = IntegratorConfig(t_end=250.0, cfl_safety=0.5, output_stride=100)
    traj = simulate(linear_sl1(l=0.0), grid, icfg, bump_state(grid))
    assert round(icfg.t_end / traj.dt) == 10_000
    E = np.array([r.energy for r in traj.ledger])
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-6


def test_zero_end_time_gives_initial_sample(sl1_grid):
    traj = simulate(sl1_config(), sl1_grid, IntegratorConfig(t_end=0.0), sl1_initial(sl1_grid))
    assert traj.times == [0.0]
    assert all(len(v) == 1 for v in traj.samples.values())


def test_first_study_runs_one_time_unit(sl1_grid):
    icfg = IntegratorConfig(t_end=1.0, cfl_safety=0.5)
    traj = simulate(sl1_config(), sl1_grid, icfg, sl1_initial(sl1_grid))
    assert traj.times[-1] == pytest.approx(1.0)
    assert all(np.all(np.isfinite(v)) for v in traj.samples.values())


def test_runs_are_byte_identical(tmp_path, sl1_grid):
    icfg = IntegratorConfig(t_end=0.5)
    for name in ("a", "b"):
        traj = simulate(sl1_config(), sl1_grid, icfg, sl1_initial(sl1_grid))
        write_run(tmp_path / name, traj, sl1_grid)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "energy.csv" in files and "probes_u_6.csv" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_linear_damping_never_increases_energy():
    grid = build_grid(10, 4, 0.1, (2.0, 6.0))
    cfg = linear_sl1().replace(damping=DampingSpec.linear())
    traj = simulate(cfg, grid, IntegratorConfig(t_end=5.0), sl1_initial(grid))
    E = np.array([r.energy for r in traj.ledger])
    assert np.all(E[1:] <= E[:-1] * (1 + 1e-8))
    assert E[-1] < E[0]


@pytest.mark.parametrize("l", [0.0, 0.5, 1.0])
def test_conservation_at_any_curvature(l):
    grid = build_grid(10, 4, 0.1, (2.0, 6.0))
    traj = simulate(linear_sl1(l), grid, IntegratorConfig(t_end=10.0, cfl_safety=0.25), sl1_initial(grid))
    E = np.array([r.energy for r in traj.ledger])
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-5


def test_time_dependent_loads_rejected(sl1_grid):
    loads = LoadSpec("moving", LoadSpec.sl1().left, LoadSpec.sl1().right, time_dependent=True)
    with pytest.raises(ConfigError):
        simulate(sl1_config().replace(loads=loads), sl1_grid, IntegratorConfig(t_end=1.0), BeamState.zeros(sl1_grid))


def test_unstable_step_is_detected():
    grid = build_grid(10, 4, 0.1, (2.0, 6.0))
    icfg = IntegratorConfig(t_end=20.0, dt=2.5 * cfl_dt(linear_sl1(), 0.1, 1.0))
    with pytest.raises(BlowUpError) as err:
        simulate(linear_sl1(), grid, icfg, sl1_initial(grid))
    assert math.isfinite(err.value.t) and err.value.t < 20.0


def test_recorded_fields(sl1_grid):
    icfg = IntegratorConfig(t_end=0.1, record_fields=True)
    traj = simulate(sl1_config(), sl1_grid, icfg, sl1_initial(sl1_grid))
    assert len(traj.snapshots) == len(traj.times)
    assert traj.final_state.t == pytest.approx(0.1)
