"""Command line front end: config parsing, runs, CSV/SVG artifacts and run manifests."""

from __future__ import annotations

import argparse
import ast
import hashlib
import json
import logging
import sys
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml

from . import __version__
from .diagnostics import energy_balance_residual, probe
from .errors import BlowUpError, ConfigError, DomainError, GridError, InterfaceSolveError
from .experiments import (
    LadderError,
    LadderSpec,
    field_name,
    fmt,
    quantities,
    run_chi_ladder,
    run_l_ladder,
    smooth,
    write_run,
)
from .integrate import SCHEME, IntegratorConfig, simulate
from .limits import sl1_initial, sl2_initial
from .model import (
    BeamConfig,
    DampingSpec,
    LoadSpec,
    NonlinearitySpec,
    SegmentParams,
    check_damping,
    check_gradient_consistency,
    sl1_config,
    sl2_config,
    validate_config,
)
from .spatial import BeamState, build_grid

log = logging.getLogger("bresse")

SEGMENT_KEYS = ("rho", "beta", "k", "sigma", "lambda")
TOP_KEYS = {"preset", "segment", "geometry", "damping", "nonlinearity", "loads", "initial", "integrator", "ladder"}
SECTION_KEYS = {
    "segment": {"left", "right"},
    "geometry": {"l", "L", "L0"},
    "damping": {"variant"},
    "nonlinearity": {"preset", "F1", "F2", "decoupled"},
    "loads": {"preset"},
    "initial": {"preset"},
    "integrator": {"t_end", "cfl_safety", "output_stride", "sample_dt", "h", "probes"},
    "ladder": {"kind", "values", "probes", "t_end", "smoothing_window", "h", "cfl_safety", "sample_dt"},
}
INITIAL_PRESETS = ("sl1", "sl2", "zero")


# ------------------------------------------------- custom potential parsing

_ALLOWED_FUNCS = {"abs": np.abs, "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "tanh": np.tanh}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load, ast.Call,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_potential(source, key):
    """Turn an arithmetic expression in ``a, b, c`` into a vectorized potential."""
    try:
        tree = ast.parse(str(source), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression: {exc.msg}", key) from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError(f"unsupported syntax {type(node).__name__}", key)
        if isinstance(node, ast.Name) and node.id not in ("a", "b", "c") and node.id not in _ALLOWED_FUNCS:
            raise ConfigError(f"unknown name {node.id!r}", key)
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_FUNCS):
            raise ConfigError("only abs, sin, cos, exp, sqrt, tanh may be called", key)
    code = compile(tree, f"<{key}>", "eval")

    def F(a, b, c):
        a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c)))
        return eval(code, {"__builtins__": {}}, {"a": a, "b": b, "c": c, **_ALLOWED_FUNCS}) + 0.0 * a

    F.source = str(source)
    return F


# ----------------------------------------------------------- config files


class RunConfig(NamedTuple):
    beam: BeamConfig
    integrator: IntegratorConfig
    ladder: LadderSpec | None
    h: float
    probes: tuple
    initial: str
    raw: dict


def _require(mapping, key, path):
    if key not in mapping:
        raise ConfigError("missing required key", f"{path}.{key}" if path else key)
    return mapping[key]


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    return float(value)


def _check_keys(mapping, allowed, path):
    if not isinstance(mapping, dict):
        raise ConfigError("expected a mapping", path)
    for key in mapping:
        if key not in allowed:
            raise ConfigError("unknown key", f"{path}.{key}" if path else str(key))


def preset_document(name):
    """Full config document of a builtin preset."""
    if name not in ("sl1", "sl2"):
        raise ConfigError(f"unknown preset {name!r}", "preset")
    cfg = sl1_config() if name == "sl1" else sl2_config()
    doc = config_document(cfg)
    doc["initial"] = {"preset": name}
    doc["integrator"] = {"t_end": 10.0 if name == "sl1" else 5.0, "cfl_safety": 0.5, "h": 0.05, "probes": [2.0, 6.0]}
    return doc


def config_document(cfg: BeamConfig):
    def seg(p):
        return {"rho": p.rho, "beta": p.beta, "k": p.k, "sigma": p.sigma, "lambda": p.lam}

    nl = {"preset": cfg.nonlinearity.name}
    if cfg.nonlinearity.name == "custom":
        nl["F1"] = getattr(cfg.nonlinearity.potentials[0], "source", None)
        nl["F2"] = getattr(cfg.nonlinearity.potentials[1], "source", None)
        nl["decoupled"] = cfg.nonlinearity.decoupled
        if nl["F1"] is None or nl["F2"] is None:
            raise ConfigError("custom potentials without source text cannot be written", "nonlinearity.preset")
    if cfg.damping.variant == "custom":
        raise ConfigError("custom damping laws cannot be written to a config file", "damping.variant")
    return {
        "segment": {"left": seg(cfg.left), "right": seg(cfg.right)},
        "geometry": {"l": cfg.l, "L": cfg.L, "L0": cfg.L0},
        "damping": {"variant": cfg.damping.variant},
        "nonlinearity": nl,
        "loads": {"preset": cfg.loads.name},
    }


def _merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _segment(doc, side):
    path = f"segment.{side}"
    block = _require(doc, side, "segment")
    _check_keys(block, set(SEGMENT_KEYS), path)
    vals = {k: _number(_require(block, k, path), f"{path}.{k}") for k in SEGMENT_KEYS}
    try:
        return SegmentParams(rho=vals["rho"], beta=vals["beta"], k=vals["k"], sigma=vals["sigma"], lam=vals["lambda"])
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], f"{path}.{exc.key}") from None


def _nonlinearity(block):
    _check_keys(block, SECTION_KEYS["nonlinearity"], "nonlinearity")
    name = _require(block, "preset", "nonlinearity")
    if name != "custom":
        extra = set(block) - {"preset"}
        if extra:
            raise ConfigError("only allowed with preset custom", f"nonlinearity.{sorted(extra)[0]}")
        return NonlinearitySpec.from_preset(name)
    F1 = compile_potential(_require(block, "F1", "nonlinearity"), "nonlinearity.F1")
    F2 = compile_potential(_require(block, "F2", "nonlinearity"), "nonlinearity.F2")
    return NonlinearitySpec.custom(F1, F2, decoupled=bool(block.get("decoupled", False)))


def parse_document(doc) -> RunConfig:
    """Validate a config mapping; all errors name the offending key path."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping", "<root>")
    _check_keys(doc, TOP_KEYS, "")
    if "preset" in doc:
        doc = _merge(preset_document(doc["preset"]), {k: v for k, v in doc.items() if k != "preset"})
    for section, allowed in SECTION_KEYS.items():
        if section in doc:
            _check_keys(doc[section], allowed, section)
    seg = _require(doc, "segment", "")
    left, right = _segment(seg, "left"), _segment(seg, "right")
    geo = _require(doc, "geometry", "")
    l_, L, L0 = (_number(_require(geo, k, "geometry"), f"geometry.{k}") for k in ("l", "L", "L0"))
    damping = DampingSpec.from_variant(_require(_require(doc, "damping", ""), "variant", "damping"))
    nonlin = _nonlinearity(_require(doc, "nonlinearity", ""))
    loads = LoadSpec.from_preset(_require(_require(doc, "loads", ""), "preset", "loads"))
    beam = BeamConfig(left, right, l_, L, L0, damping, nonlin, loads)
    validate_config(beam)
    initial = doc.get("initial", {}).get("preset", "zero")
    if initial not in INITIAL_PRESETS:
        raise ConfigError(f"unknown initial data preset {initial!r}", "initial.preset")
    integ = doc.get("integrator", {})
    icfg = IntegratorConfig(
        t_end=_number(integ.get("t_end", 1.0), "integrator.t_end"),
        cfl_safety=_number(integ.get("cfl_safety", 0.5), "integrator.cfl_safety"),
        output_stride=int(integ.get("output_stride", 1)),
        sample_dt=None if integ.get("sample_dt") is None else _number(integ["sample_dt"], "integrator.sample_dt"),
    )
    h = _number(integ.get("h", 0.05), "integrator.h")
    probes = tuple(_number(x, "integrator.probes") for x in integ.get("probes", [2.0, 6.0]))
    ladder = None
    if "ladder" in doc:
        lad = doc["ladder"]
        kind = _require(lad, "kind", "ladder")
        default = LadderSpec.l_ladder() if kind == "l-ladder" else LadderSpec.chi_ladder()
        ladder = LadderSpec(
            kind=kind,
            values=tuple(_number(v, "ladder.values") for v in lad.get("values", default.values)),
            probes=tuple(_number(v, "ladder.probes") for v in lad.get("probes", default.probes)),
            t_end=_number(lad.get("t_end", default.t_end), "ladder.t_end"),
            smoothing_window=int(lad.get("smoothing_window", 1)),
            h=_number(lad.get("h", default.h), "ladder.h"),
            cfl_safety=_number(lad.get("cfl_safety", default.cfl_safety), "ladder.cfl_safety"),
            sample_dt=_number(lad.get("sample_dt", default.sample_dt), "ladder.sample_dt"),
        )
    return RunConfig(beam, icfg, ladder, h, probes, initial, doc)


def parse_config(path_or_preset) -> RunConfig:
    """Parse a YAML config file, or a builtin preset name (``sl1``, ``sl2``)."""
    if str(path_or_preset) in ("sl1", "sl2") and not Path(str(path_or_preset)).exists():
        return parse_document({"preset": str(path_or_preset)})
    path = Path(path_or_preset)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist", "<file>")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}", "<file>") from None
    return parse_document(doc)


def emit_config(rc: RunConfig):
    """YAML text that parses back to the same configuration."""
    doc = config_document(rc.beam)
    doc["initial"] = {"preset": rc.initial}
    integ = {
        "t_end": rc.integrator.t_end,
        "cfl_safety": rc.integrator.cfl_safety,
        "output_stride": rc.integrator.output_stride,
        "h": rc.h,
        "probes": list(rc.probes),
    }
    if rc.integrator.sample_dt is not None:
        integ["sample_dt"] = rc.integrator.sample_dt
    doc["integrator"] = integ
    if rc.ladder is not None:
        lad = rc.ladder
        doc["ladder"] = {
            "kind": lad.kind,
            "values": list(lad.values),
            "probes": list(lad.probes),
            "t_end": lad.t_end,
            "smoothing_window": lad.smoothing_window,
            "h": lad.h,
            "cfl_safety": lad.cfl_safety,
            "sample_dt": lad.sample_dt,
        }
    return yaml.safe_dump(doc, sort_keys=True)


def config_hash(rc: RunConfig):
    return hashlib.sha256(emit_config(rc).encode()).hexdigest()


# -------------------------------------------------------------------- SVG


@dataclass(frozen=True)
class PlotStyle:
    title: str = ""
    xlabel: str = "t"
    ylabel: str = ""
    width: int = 640
    height: int = 400
    palette: tuple = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#000000")


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def emit_plot(series_set, style: PlotStyle | None = None):
    """Deterministic SVG with one polyline and legend entry per ``(label, ProbeSeries)``."""
    style = style or PlotStyle()
    series_set = list(series_set)
    if not series_set:
        raise ValueError("need at least one series to plot")
    times = series_set[0][1].times
    for _, s in series_set:
        if s.times.shape != times.shape or not np.allclose(s.times, times, rtol=0, atol=1e-9):
            raise ValueError("series must share one time lattice")
    W, H = style.width, style.height
    left, right, top, bottom = 60, 150, 30, 40
    pw, ph = W - left - right, H - top - bottom
    t0, t1 = float(times[0]), float(times[-1])
    allv = np.concatenate([s.values for _, s in series_set])
    v0, v1 = float(np.min(allv)), float(np.max(allv))
    if v1 - v0 < 1e-12:
        v0, v1 = v0 - 1.0, v1 + 1.0
    tspan = (t1 - t0) or 1.0

    def X(t):
        return left + (t - t0) / tspan * pw

    def Y(v):
        return top + (v1 - v) / (v1 - v0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.2f}" y="18" text-anchor="middle" font-size="14">{_esc(style.title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2:.2f}" y="{H - 8}" text-anchor="middle" font-size="12">{_esc(style.xlabel)}</text>',
        f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + ph / 2:.2f})">{_esc(style.ylabel)}</text>',
    ]
    if v0 < 0 < v1:
        out.append(f'<line x1="{left}" y1="{Y(0):.2f}" x2="{left + pw}" y2="{Y(0):.2f}" stroke="#cccccc"/>')
    for tick in (t0, t1):
        out.append(f'<text x="{X(tick):.2f}" y="{top + ph + 14}" text-anchor="middle" font-size="10">{tick:.6g}</text>')
    for tick in (v0, v1):
        out.append(f'<text x="{left - 4}" y="{Y(tick):.2f}" text-anchor="end" font-size="10">{tick:.6g}</text>')
    for i, (label, s) in enumerate(series_set):
        color = style.palette[i % len(style.palette)]
        pts = " ".join(f"{X(float(t)):.2f},{Y(float(v)):.2f}" for t, v in zip(s.times, s.values))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        ly = top + 14 * i + 8
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text class="legend" x="{left + pw + 34}" y="{ly + 4}" font-size="11">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    command: str
    config_hash: str | None = None
    grid: dict = field(default_factory=dict)
    dt: float | None = None
    scheme: str = SCHEME
    wall_time: float = 0.0
    exit_status: int = 0
    error: dict | None = None
    warnings: list = field(default_factory=list)
    version: str = __version__

    def write(self, out):
        Path(out).mkdir(parents=True, exist_ok=True)
        Path(out, "manifest.json").write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


EXIT_CODES = {ConfigError: 2, GridError: 2, DomainError: 2, BlowUpError: 3, InterfaceSolveError: 4, LadderError: 5}


def error_record(exc):
    rec = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "t", "residuals"):
        if hasattr(exc, attr):
            rec[attr] = getattr(exc, attr)
    return rec


def exit_code(exc):
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


# ------------------------------------------------------------- commands


def initial_state(name, grid):
    if name == "sl1":
        return sl1_initial(grid)
    if name == "sl2":
        return sl2_initial(grid)
    return BeamState.zeros(grid)


def _grid_summary(grid):
    return {
        "n": grid.n,
        "h": grid.h,
        "i_interface": grid.i_interface,
        "probes": {fmt(x): i for x, i in sorted(grid.probe_indices.items())},
    }


def _load(args):
    if args.config:
        rc = parse_config(args.config)
    else:
        rc = parse_document({"preset": args.preset or "sl1"})
    integ = rc.integrator
    changes = {}
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.cfl is not None:
        changes["cfl_safety"] = args.cfl
    if changes:
        integ = IntegratorConfig(**{**asdict(integ), **changes})
    h = args.h if args.h is not None else rc.h
    probes = tuple(args.probes) if args.probes else rc.probes
    return rc._replace(integrator=integ, h=h, probes=probes)


def _plots(out, traj, grid, names, label):
    for q in names:
        for x in traj.probes:
            s = probe(traj, x, q)
            name = field_name(grid, q, x)
            style = PlotStyle(title=f"{name} at x={x:g}", ylabel=f"{name}(x={x:g}, t)")
            Path(out, f"plot_{name}_{fmt(x)}.svg").write_text(emit_plot([(label, s)], style))


def cmd_simulate(args, manifest):
    rc = _load(args)
    manifest.config_hash = config_hash(rc)
    grid = build_grid(rc.beam.L, rc.beam.L0, rc.h, rc.probes)
    manifest.grid = _grid_summary(grid)
    manifest.warnings.extend(validate_config(rc.beam))
    traj = simulate(rc.beam, grid, rc.integrator, initial_state(rc.initial, grid))
    manifest.dt = traj.dt
    write_run(args.out, traj, grid)
    _plots(args.out, traj, grid, traj.fields, "coupled")
    return traj


def cmd_energy_report(args, manifest):
    traj = cmd_simulate(args, manifest)
    E = np.array([r.energy for r in traj.ledger])
    L = np.array([r.lyapunov for r in traj.ledger])
    bal = energy_balance_residual(traj)
    jumps = np.diff(L) - 1e-8 * (1 + np.abs(L[:-1]))
    summary = {
        "samples": len(E),
        "energy_initial": float(E[0]),
        "energy_final": float(E[-1]),
        "max_relative_energy_change": float(np.max(np.abs(E - E[0])) / E[0]) if E[0] else 0.0,
        "max_balance_residual": float(np.max(np.abs(bal))),
        "lyapunov_nonincreasing": bool(np.all(jumps <= 0)) if jumps.size else True,
        "max_interface_residual": traj.max_interface_residual,
    }
    Path(args.out, "energy_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return traj


def _ladder_spec(args, kind):
    rc = None
    if args.config:
        rc = parse_config(args.config)
    spec = rc.ladder if rc is not None and rc.ladder is not None and rc.ladder.kind == kind else None
    if spec is None:
        spec = LadderSpec.l_ladder() if kind == "l-ladder" else LadderSpec.chi_ladder()
    changes = {}
    if args.values:
        changes["values"] = tuple(args.values)
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.h is not None:
        changes["h"] = args.h
    if args.cfl is not None:
        changes["cfl_safety"] = args.cfl
    if args.smooth is not None:
        changes["smoothing_window"] = args.smooth
    if args.probes:
        changes["probes"] = tuple(args.probes)
    if changes:
        spec = LadderSpec(**{**asdict(spec), **changes})
    base = rc.beam if rc is not None else None
    return spec, base


def cmd_ladder(args, manifest, kind):
    spec, base = _ladder_spec(args, kind)
    runner = run_l_ladder if kind == "l-ladder" else run_chi_ladder
    result = runner(spec, base=base, out=args.out)
    manifest.warnings.extend(result.warnings)
    grid = result.reference.grid
    manifest.grid = _grid_summary(grid)
    manifest.dt = result.reference.dt
    symbol = "l" if kind == "l-ladder" else "chi"
    for q in quantities(spec):
        for x in spec.probes:
            sets = [
                (f"{symbol}={v:.6g}", smooth(probe(traj, x, q), spec.smoothing_window))
                for v, traj in result.runs.items()
            ]
            sets.append(("limit", smooth(probe(result.reference, x, q), spec.smoothing_window)))
            name = field_name(grid, q, x)
            style = PlotStyle(title=f"{kind}: {name} at x={x:g}", ylabel=f"{name}(x={x:g}, t)")
            Path(args.out, f"plot_{name}_{fmt(x)}.svg").write_text(emit_plot(sets, style))
    return result


def cmd_validate(args, manifest):
    rc = _load(args)
    manifest.config_hash = config_hash(rc)
    warnings = validate_config(rc.beam)
    manifest.warnings.extend(warnings)
    worst, _ = check_gradient_consistency(rc.beam.nonlinearity)
    report = {
        "equal_speed": rc.beam.equal_speed,
        "damping_variant": rc.beam.damping.variant,
        "damping_problems": check_damping(rc.beam.damping),
        "gradient_consistency_error": worst,
        "delta": rc.beam.nonlinearity.delta,
        "warnings": warnings,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return report


def _csv_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="bresse", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run the coupled beam and write probe and energy CSVs"),
        ("limit-l", "curvature ladder against the Timoshenko plus wave limit"),
        ("limit-chi", "stiff-shear ladder against the fourth-order beam plus wave limit"),
        ("energy-report", "simulate and summarize the energy and Lyapunov ledgers"),
        ("validate-config", "check a configuration without running it"),
    ):
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="YAML configuration file")
        src.add_argument("--preset", choices=("sl1", "sl2"), help="builtin configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
        p.add_argument("--t-end", type=float, dest="t_end")
        p.add_argument("--h", type=float, help="target grid spacing")
        p.add_argument("--cfl", type=float, help="CFL safety factor in (0, 1]")
        p.add_argument("--values", type=_csv_floats, help="ladder values, comma separated")
        p.add_argument("--smooth", type=int, help="odd moving-average window for ladder distances")
        p.add_argument("--probes", type=_csv_floats, help="probe positions, comma separated")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "energy-report": cmd_energy_report,
    "validate-config": cmd_validate,
    "limit-l": lambda a, m: cmd_ladder(a, m, "l-ladder"),
    "limit-chi": lambda a, m: cmd_ladder(a, m, "chi-ladder"),
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    manifest = RunManifest(command=args.command)
    start = time.perf_counter()
    status = 0
    try:
        COMMANDS[args.command](args, manifest)
    except (ConfigError, GridError, DomainError, BlowUpError, InterfaceSolveError, LadderError, ValueError) as exc:
        status = exit_code(exc)
        manifest.error = error_record(exc)
        print(json.dumps({"error": manifest.error}, default=str), file=sys.stderr)
        log.debug("%s", traceback.format_exc())
    manifest.exit_status = status
    manifest.wall_time = round(time.perf_counter() - start, 6)
    manifest.write(args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
