"""Parameter ladders towards the two singular limits and their post-processing."""

from __future__ import annotations

import csv
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, ProbeSeries, ledger_rows, l2_time_distance, probe
from .errors import BlowUpError, ConfigError, InterfaceSolveError
from .integrate import IntegratorConfig, Trajectory, cfl_dt, run
from .limits import (
    eb_simulate,
    merge,
    sl1_initial,
    sl2_initial,
    timoshenko_simulate,
    wave_limit_simulate,
    wave_simulate,
)
from .model import LEFT_FIELDS, RIGHT_FIELDS, BeamConfig, scale_chi, sl1_config, sl2_config
from .spatial import BresseSystem, build_grid

log = logging.getLogger(__name__)

L_VALUES = (1.0, 1 / 3, 1 / 10, 1 / 30, 1 / 100, 1 / 300, 1 / 1000)
CHI_VALUES = (1.0, 3.0, 10.0, 30.0, 100.0, 300.0)
KINDS = ("l-ladder", "chi-ladder")


@dataclass(frozen=True)
class LadderSpec:
    kind: str
    values: tuple
    probes: tuple = (2.0, 6.0)
    fields: tuple = LEFT_FIELDS + RIGHT_FIELDS
    t_end: float = 10.0
    smoothing_window: int = 1
    h: float = 0.05
    cfl_safety: float = 0.5
    sample_dt: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ladder kind {self.kind!r}", "ladder.kind")
        v = np.asarray(self.values, dtype=float)
        if v.size == 0:
            raise ConfigError("needs at least one value", "ladder.values")
        d = np.diff(v)
        if v.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("values must be strictly monotone", "ladder.values")
        if self.kind == "chi-ladder" and np.any(v < 1):
            raise ConfigError("chi values must be >= 1", "ladder.values")
        if self.kind == "l-ladder" and np.any(v < 0):
            raise ConfigError("curvatures must be >= 0", "ladder.values")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError("must be an odd integer >= 1", "ladder.smoothing_window")
        if not self.t_end > 0:
            raise ConfigError("must be positive", "ladder.t_end")

    @classmethod
    def l_ladder(cls, **kw):
        kw.setdefault("t_end", 10.0)
        kw.setdefault("values", L_VALUES)
        return cls("l-ladder", **kw)

    @classmethod
    def chi_ladder(cls, **kw):
        kw.setdefault("t_end", 5.0)
        kw.setdefault("values", CHI_VALUES)
        return cls("chi-ladder", **kw)

    def integrator(self):
        return IntegratorConfig(t_end=self.t_end, cfl_safety=self.cfl_safety, sample_dt=self.sample_dt)


@dataclass
class ConvergenceTable:
    """Distances to the limit run, one row per (ladder value, probe, field)."""

    kind: str
    values: tuple
    rows: list = field(default_factory=list)

    def add(self, value, probe_x, name, distance):
        self.rows.append((float(value), float(probe_x), name, float(distance)))

    def distance(self, value, probe_x, name):
        for v, x, f, d in self.rows:
            if v == float(value) and x == float(probe_x) and f == name:
                return d
        raise KeyError((value, probe_x, name))

    def series(self, probe_x, name):
        """Distances in ladder order for one (probe, field); skipped rungs are absent."""
        return [d for v, x, f, d in self.rows if x == float(probe_x) and f == name]

    def keys(self):
        seen = []
        for _, x, f, _ in self.rows:
            if (x, f) not in seen:
                seen.append((x, f))
        return seen

    def completed_values(self):
        out = []
        for v, *_ in self.rows:
            if v not in out:
                out.append(v)
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("value", "probe", "field", "distance"))
            for v, x, f, d in self.rows:
                w.writerow((fmt(v), fmt(x), f, fmt(d)))


@dataclass
class LadderResult:
    table: ConvergenceTable
    runs: dict
    reference: Trajectory
    warnings: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


class LadderError(RuntimeError):
    """A rung failed; ``partial`` holds what had been computed."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def fmt(x):
    return f"{x:.17g}"


def scale_params_chi(base: BeamConfig, chi):
    """Divide the curvature and multiply both shear stiffnesses by chi."""
    return scale_chi(base, chi)


def smooth(series: ProbeSeries, window):
    """Centered moving average; near the ends the window shrinks symmetrically."""
    if not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 1, got {window!r}")
    n = series.values.size
    if window > n:
        raise ValueError(f"window {window} exceeds series length {n}")
    if window == 1:
        return series
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(series.values)])
    idx = np.arange(n)
    reach = np.minimum(np.minimum(idx, n - 1 - idx), half)
    values = (csum[idx + reach + 1] - csum[idx - reach]) / (2 * reach + 1)
    return ProbeSeries(series.x, series.field, series.times, values)


def field_name(grid, quantity, x):
    """Segment-specific field name of a physical quantity at position x."""
    side, _ = grid.locate(x)
    if side == "right":
        return RIGHT_FIELDS[LEFT_FIELDS.index(quantity)]
    return quantity


def quantities(spec: LadderSpec):
    out = []
    for f in spec.fields:
        q = LEFT_FIELDS[RIGHT_FIELDS.index(f)] if f in RIGHT_FIELDS else f
        if q not in out:
            out.append(q)
    return out


# --------------------------------------------------------------- artifacts


def write_probe_csv(path, series: ProbeSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "value"))
        for t, v in zip(series.times, series.values):
            w.writerow((fmt(t), fmt(v)))


def write_energy_csv(path, trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in ledger_rows(trajectory):
            w.writerow(tuple(fmt(x) for x in row))


def write_run(directory, trajectory, grid, names=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for q in names or trajectory.fields:
        for x in trajectory.probes:
            s = probe(trajectory, x, q)
            write_probe_csv(directory / f"probes_{field_name(grid, q, x)}_{fmt(x)}.csv", s)
    if trajectory.ledger:
        write_energy_csv(directory / "energy.csv", trajectory)


# ------------------------------------------------------------------ rungs


def coupled_run(cfg, grid, icfg, initial):
    return run(BresseSystem(cfg, grid), initial, icfg, cfl_dt(cfg, grid.h, icfg.cfl_safety))


def l_limit_run(cfg, grid, icfg, initial):
    return merge(timoshenko_simulate(cfg, grid, icfg, initial), wave_simulate(cfg, grid, icfg, initial))


def chi_limit_run(cfg, grid, icfg, initial):
    return merge(eb_simulate(cfg, grid, icfg, initial), wave_limit_simulate(cfg, grid, icfg, initial))


def _rung(args):
    solver, cfg, grid, icfg, initial = args
    try:
        return solver(cfg, grid, icfg, initial), None
    except (BlowUpError, InterfaceSolveError) as exc:
        return None, exc


def _workers(n_tasks, workers):
    if workers is None:
        env = os.environ.get("BRESSE_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(workers), n_tasks))


def _run_all(tasks, workers):
    n = _workers(len(tasks), workers)
    if n == 1:
        return [_rung(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_rung, tasks))


def _ladder(spec, base, configs, reference_solver, rung_solver, initial_fn, out, workers, allow_fail):
    grid = build_grid(configs[0].L, configs[0].L0, spec.h, spec.probes)
    initial = initial_fn(grid)
    icfg = spec.integrator()
    tasks = [(reference_solver, base, grid, icfg, initial)]
    tasks += [(rung_solver, cfg, grid, icfg, initial) for cfg in configs]
    results = _run_all(tasks, workers)
    reference, ref_err = results[0]
    if ref_err is not None:
        raise ref_err
    table = ConvergenceTable(spec.kind, tuple(spec.values))
    result = LadderResult(table, {}, reference)
    root = Path(out) / "runs" / spec.kind if out is not None else None
    if root is not None:
        write_run(root / "limit", reference, grid, quantities(spec))
    for value, (traj, err) in zip(spec.values, results[1:]):
        if err is not None:
            msg = f"{spec.kind} rung {fmt(value)} failed at t={err.t if hasattr(err, 't') else '?'}: {err}"
            if spec.kind == "chi-ladder":
                msg += " (stiff configuration: numerical oscillations, reduce the time step)"
            result.failures[value] = err
            result.warnings.append(msg)
            log.warning(msg)
            if not allow_fail:
                if root is not None:
                    table.write_csv(Path(out) / "convergence_table.csv")
                raise LadderError(msg, result)
            continue
        result.runs[value] = traj
        if root is not None:
            write_run(root / fmt(value), traj, grid, quantities(spec))
        for x in spec.probes:
            for q in quantities(spec):
                a = smooth(probe(traj, x, q), spec.smoothing_window)
                b = smooth(probe(reference, x, q), spec.smoothing_window)
                table.add(value, x, field_name(grid, q, x), l2_time_distance(a, b))
    if out is not None:
        table.write_csv(Path(out) / "convergence_table.csv")
    for w in result.warnings:
        warnings.warn(w, RuntimeWarning, stacklevel=3)
    return result


def run_l_ladder(spec: LadderSpec | None = None, base: BeamConfig | None = None, out=None, workers=None,
                 rung_solver=None, initial_fn=sl1_initial):
    """Coupled runs for each curvature against the Timoshenko plus wave limit."""
    spec = spec or LadderSpec.l_ladder()
    if spec.kind != "l-ladder":
        raise ConfigError("expected an l-ladder", "ladder.kind")
    base = base or sl1_config()
    configs = [base.replace(l=float(v)) for v in spec.values]
    return _ladder(spec, base, configs, l_limit_run, rung_solver or coupled_run, initial_fn, out, workers, False)


def run_chi_ladder(spec: LadderSpec | None = None, base: BeamConfig | None = None, out=None, workers=None,
                   rung_solver=None, initial_fn=sl2_initial):
    """Coupled runs with curvature / chi and shear stiffness * chi against the
    fourth-order beam plus wave limit; failed rungs are reported and skipped."""
    spec = spec or LadderSpec.chi_ladder()
    if spec.kind != "chi-ladder":
        raise ConfigError("expected a chi-ladder", "ladder.kind")
    base = base or sl2_config()
    configs = [scale_params_chi(base, float(v)) for v in spec.values]
    return _ladder(spec, base, configs, chi_limit_run, rung_solver or coupled_run, initial_fn, out, workers, True)


def endpoint_ratios(table: ConvergenceTable):
    """``last / first`` distance per (probe, field) over the completed rungs."""
    out = {}
    for key in table.keys():
        s = table.series(*key)
        out[key] = s[-1] / s[0] if s and s[0] > 0 else float("nan")
    return out
