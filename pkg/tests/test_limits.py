import numpy as np
import pytest

from bresse.errors import ConfigError, GridError
from bresse.integrate import IntegratorConfig, Trajectory, cfl_dt, simulate
from bresse.limits import (
    EBSystem,
    check_eb_initial,
    eb_simulate,
    merge,
    sl1_initial,
    sl2_initial,
    sl2_phi0,
    sl2_phi1,
    sl2_psi0,
    sl2_u0,
    sl2_u1,
    sl2_v0,
    timoshenko_simulate,
    wave_limit_simulate,
    wave_simulate,
)
from bresse.model import DampingSpec, NonlinearitySpec, sl1_config, sl2_config
from bresse.spatial import BeamState, build_grid

from conftest import bump, unit_config

GRID = build_grid(10, 4, 0.1, (2.0, 6.0))
ICFG = IntegratorConfig(t_end=1.0, record_fields=True)


def _zero_run(fn, cfg=None):
    traj = fn(cfg or sl1_config(l=0.0).replace(loads=type(sl1_config().loads).zero()), GRID, ICFG,
              BeamState.zeros(GRID))
    return max(np.max(np.abs(v)) for v in traj.samples.values())


@pytest.mark.parametrize("fn", [timoshenko_simulate, wave_simulate, wave_limit_simulate])
def test_zero_data_gives_zero_trajectory(fn):
    assert _zero_run(fn) == 0.0


def test_fourth_order_zero_data():
    cfg = sl2_config().replace(loads=type(sl2_config().loads).zero())
    assert _zero_run(eb_simulate, cfg) == 0.0


def _coupled_and_limits(cfg, grid, t_end=1.0):
    icfg = IntegratorConfig(t_end=t_end, record_fields=True)
    initial = sl1_initial(grid)
    dt = cfl_dt(cfg, grid.h, icfg.cfl_safety)
    coupled = simulate(cfg, grid, icfg, initial)
    timo = timoshenko_simulate(cfg, grid, icfg, initial, dt_max=dt)
    wave = wave_simulate(cfg, grid, icfg, initial, dt_max=dt)
    return coupled, timo, wave


def test_decoupling_oracle_without_curvature():
    cfg = sl1_config(l=0.0)
    coupled, timo, wave = _coupled_and_limits(cfg, GRID)
    assert coupled.dt == timo.dt == wave.dt
    worst = 0.0
    for c, t, w in zip(coupled.snapshots, timo.snapshots, wave.snapshots):
        for f in ("phi", "psi", "u", "v"):
            worst = max(worst, np.max(np.abs(c.disp[f] - t.disp[f])))
        for f in ("omega", "w"):
            worst = max(worst, np.max(np.abs(c.disp[f] - w.disp[f])))
    assert worst <= 1e-8


def test_timoshenko_first_study_runs():
    traj = timoshenko_simulate(sl1_config(), GRID, IntegratorConfig(t_end=1.0), sl1_initial(GRID))
    assert traj.times[-1] == pytest.approx(1.0)
    assert set(traj.fields) == {"phi", "psi"}


def test_coupled_nonlinearity_rejected():
    F = lambda a, b, c: (a * c) ** 2  # noqa: E731
    cfg = sl1_config(l=0.0).replace(nonlinearity=NonlinearitySpec.custom(F, F))
    with pytest.raises(ConfigError):
        timoshenko_simulate(cfg, GRID, ICFG, sl1_initial(GRID))


def test_travelling_pulse():
    grid = build_grid(10, 4, 0.02)
    cfg = unit_config()
    f = bump(2.0, radius=0.5)
    fp = lambda x: -(12 / 0.5) * ((x - 2.0) / 0.5) * np.where(np.abs(x - 2.0) < 0.5, (1 - ((x - 2.0) / 0.5) ** 2) ** 5, 0)  # noqa: E731
    zero = lambda x: 0 * x  # noqa: E731
    initial = BeamState.from_functions(grid, {"omega": f, "w": zero}, {"omega": lambda x: -fp(x), "w": zero})
    traj = wave_simulate(cfg, grid, IntegratorConfig(t_end=1.0, record_fields=True), initial)
    final = traj.snapshots[-1].disp["omega"]
    peak = grid.left_nodes[np.argmax(final)]
    assert abs(peak - 3.0) <= 2 * grid.h
    assert np.max(final) == pytest.approx(1.0, abs=0.02)


def test_wave_limit_matches_wave_solver():
    cfg = sl2_config()
    initial = sl2_initial(GRID)
    a = wave_limit_simulate(cfg, GRID, ICFG, initial)
    b = wave_simulate(cfg, GRID, ICFG, initial)
    for key in a.samples:
        assert np.array_equal(a.samples[key], b.samples[key])
    assert a.times[-1] == pytest.approx(1.0)


def test_wave_limit_needs_zero_displacement():
    with pytest.raises(ConfigError) as err:
        wave_limit_simulate(sl1_config(), GRID, ICFG, sl1_initial(GRID))
    assert err.value.key == "initial.omega"


# ----------------------------------------------------------- fourth order


def test_mass_solve_reproduces_right_hand_side():
    system = EBSystem(sl2_config(), GRID)
    chi = system.join(sl2_initial(GRID).disp)
    rhs = system.rhs(chi)
    acc = system.solve_mass(rhs)
    assert np.max(np.abs(system.mass_residual(acc, rhs))) <= 1e-10


def test_fourth_order_second_study_run():
    traj = eb_simulate(sl2_config(), GRID, ICFG, sl2_initial(GRID))
    assert traj.times[-1] == pytest.approx(1.0)
    for x in (2.0, 6.0):
        assert np.all(np.isfinite(traj.series("phi", x)))
        assert len(traj.series("psi", x)) == len(traj.times)
    assert traj.max_interface_residual <= 1e-8


def test_rotation_is_minus_slope_and_ends_stay_clamped():
    h = GRID.h
    traj = eb_simulate(sl2_config(), GRID, ICFG, sl2_initial(GRID))
    for snap, k in zip(traj.snapshots, range(len(traj.times))):
        chi = np.concatenate([snap.disp["phi"], snap.disp["u"][1:]])
        assert chi[0] == 0.0 and chi[-1] == 0.0
        slope0 = (-3 * chi[0] + 4 * chi[1] - chi[2]) / (2 * h)
        assert abs(slope0) <= 5 * h**2
        for x in (2.0, 6.0):
            i = GRID.node_index(x)
            dx = (chi[i + 1] - chi[i - 1]) / (2 * h)
            assert abs(traj.series("psi", x)[k] + dx) <= 5 * h**2


def test_energy_balance_of_fourth_order_run():
    traj = eb_simulate(sl2_config(), GRID, IntegratorConfig(t_end=2.0), sl2_initial(GRID))
    E0 = traj.ledger[0].energy
    worst = max(abs(r.energy + r.dissipated_cum - E0 - r.work_cum) for r in traj.ledger)
    assert worst <= 1e-9 * (1 + abs(E0))
    L = [r.lyapunov for r in traj.ledger]
    assert all(b <= a + 1e-8 * (1 + abs(a)) for a, b in zip(L, L[1:]))


def test_nonlinear_damping_in_fourth_order_limit_warns():
    cfg = sl2_config().replace(damping=DampingSpec.cubic_saturated())
    with pytest.warns(RuntimeWarning, match="experimental"):
        traj = eb_simulate(cfg, GRID, IntegratorConfig(t_end=0.2), sl2_initial(GRID))
    assert np.all(np.isfinite(traj.series("phi", 2.0)))


def test_fourth_order_initial_data_checks():
    bad = sl2_initial(GRID)
    bad.disp["u"][0] += 0.1
    assert check_eb_initial(bad, GRID)
    with pytest.raises(ConfigError):
        eb_simulate(sl2_config(), GRID, ICFG, bad)


def test_merge_requires_common_times():
    a = Trajectory(GRID, 0.1, 1, (), ("phi",), times=[0.0, 0.1])
    b = Trajectory(GRID, 0.1, 1, (), ("omega",), times=[0.0, 0.2])
    with pytest.raises(GridError):
        merge(a, b)


# ---------------------------------------------------------- initial data


def _complex_step(f, x, eps=1e-30):
    return np.imag(f(x + 1j * eps)) / eps


def test_second_study_rotation_is_minus_slope():
    x = np.linspace(0, 10, 100)
    xl, xr = x[x <= 4], x[x >= 4]
    assert np.max(np.abs(sl2_psi0(xl) + _complex_step(sl2_phi0, xl))) <= 1e-9
    assert np.max(np.abs(sl2_v0(xr) + _complex_step(sl2_u0, xr))) <= 1e-9


def test_second_study_data_is_compatible():
    assert sl2_phi0(0.0) == 0.0 and sl2_u0(10.0) == pytest.approx(0.0, abs=1e-12)
    assert sl2_phi0(4.0) == pytest.approx(sl2_u0(4.0), abs=1e-12)
    assert sl2_phi1(4.0) == pytest.approx(1.0) and sl2_u1(4.0) == pytest.approx(1.0)
    # clamped slopes vanish at both ends
    assert _complex_step(sl2_phi0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert _complex_step(sl2_u0, 10.0) == pytest.approx(0.0, abs=1e-12)


def test_first_study_initial_values():
    s = sl1_initial(GRID)
    i2 = GRID.node_index(2.0)
    assert s.disp["phi"][i2] == pytest.approx(-3 / 16 * 4 + 3 / 4 * 2)
    assert s.disp["v"][0] == pytest.approx(1.0) and s.disp["psi"][-1] == pytest.approx(1.0)
    assert s.vel["w"][-1] == 0.0 and s.vel["phi"][0] == 0.0
