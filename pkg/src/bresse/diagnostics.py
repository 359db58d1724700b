"""Energy and Lyapunov ledgers, probe series and distances between runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .model import LEFT_FIELDS, RIGHT_FIELDS, BeamConfig
from .spatial import BeamState, BresseSystem, Grid

CSV_COLUMNS = ("t", "kinetic", "elastic", "potential", "dissipated_cum", "work_cum", "lyapunov", "balance_residual")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    kinetic: float
    elastic: float
    potential: float
    dissipated_cum: float = 0.0
    work_cum: float = 0.0
    lyapunov: float = 0.0

    @property
    def energy(self):
        return self.kinetic + self.elastic + self.potential


@dataclass(frozen=True)
class ProbeSeries:
    x: float
    field: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise DimensionError("times and values differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def energy(state: BeamState, cfg: BeamConfig, grid: Grid):
    """Energy of a single state of the coupled beam on the discrete (lumped) inner products."""
    system = BresseSystem(cfg, grid)
    kinetic = system.kinetic(state.vel)
    elastic = system.elastic_energy(state.disp)
    pot = system.potential_energy(state.disp)
    load = system.load_work(state.disp)
    return EnergyReport(state.t, kinetic, elastic, pot, 0.0, 0.0, kinetic + elastic + pot - load)


def lyapunov(state: BeamState, cfg: BeamConfig, grid: Grid):
    """Energy minus the work of the (time-independent) loads on the current displacement."""
    if cfg.loads.time_dependent:
        raise ConfigError("the Lyapunov function needs time-independent loads", "loads.preset")
    return energy(state, cfg, grid).lyapunov


def energy_balance_residual(trajectory):
    """``E(t) + dissipated(t) - E(0) - work(t)`` along the recorded ledger."""
    led = trajectory.ledger if hasattr(trajectory, "ledger") else trajectory
    if not led:
        return np.zeros(0)
    e0 = led[0].energy
    return np.array([r.energy + r.dissipated_cum - e0 - r.work_cum for r in led])


def ledger_rows(trajectory):
    res = energy_balance_residual(trajectory)
    return [
        (r.t, r.kinetic, r.elastic, r.potential, r.dissipated_cum, r.work_cum, r.lyapunov, b)
        for r, b in zip(trajectory.ledger, res)
    ]


def probe(trajectory, x, field):
    """Sampled series of a field at a registered cross-section.

    Series are stored per physical quantity, so ``u`` and ``phi`` name the
    same transversal displacement (likewise ``v``/``psi`` and ``w``/``omega``).
    """
    if field in RIGHT_FIELDS:
        field = LEFT_FIELDS[RIGHT_FIELDS.index(field)]
    key = (field, float(x))
    if key not in trajectory.samples:
        raise KeyError(f"no probe series for field {field!r} at x={x}")
    return ProbeSeries(float(x), field, np.asarray(trajectory.times, dtype=float), np.asarray(trajectory.samples[key]))


def trapezoid_weights(times):
    times = np.asarray(times, dtype=float)
    w = np.zeros_like(times)
    if times.size > 1:
        dt = np.diff(times)
        w[:-1] += dt / 2
        w[1:] += dt / 2
    return w


def l2_time_distance(a: ProbeSeries, b: ProbeSeries):
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-9):
        raise DimensionError("series live on different time lattices")
    w = trapezoid_weights(a.times)
    return float(np.sqrt(np.sum(w * (a.values - b.values) ** 2)))
