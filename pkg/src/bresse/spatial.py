"""Grid, beam state and the finite-difference semidiscretization.

The spatial operator is the gradient of a discrete stored energy. Strains
(``phi_x + psi + l*omega`` and friends) live on cells, node values entering a
strain are cell averages, and node masses are the matching lumped weights.
The interface node carries no mass: its six values are fixed at every step
by continuity plus matching of the three discrete resultants across L0, which
is exactly the stationarity condition of the stored energy in those values.
That is why the scheme conserves its discrete energy and the residual of the
discrete transmission conditions is at solver tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import BlowUpError, GridError, InterfaceSolveError
from .model import FIELDS, LEFT_FIELDS, RIGHT_FIELDS, BeamConfig

MAX_INTERVALS = 10**7
INTERFACE_TOL = 1e-12
BLOWUP_LIMIT = 1e12


# ------------------------------------------------------------------- grid


@dataclass(frozen=True)
class Grid:
    L: float
    L0: float
    n: int
    i_interface: int
    probe_indices: dict = field(default_factory=dict)

    @property
    def h(self):
        return self.L / self.n

    @property
    def nodes(self):
        x = np.arange(self.n + 1) * self.h
        x[-1] = self.L
        x[self.i_interface] = self.L0
        return x

    @property
    def left_nodes(self):
        return self.nodes[: self.i_interface + 1]

    @property
    def right_nodes(self):
        return self.nodes[self.i_interface :]

    def locate(self, x):
        """Return ``(side, local_index)`` of the node at x; the interface counts as left."""
        i = self.node_index(x)
        if i <= self.i_interface:
            return "left", i
        return "right", i - self.i_interface

    def node_index(self, x):
        if x in self.probe_indices:
            return self.probe_indices[x]
        pos = x / self.h
        i = int(round(pos))
        if not (0 <= i <= self.n) or abs(pos - i) > 1e-9 * max(1.0, abs(pos)):
            raise GridError(f"x={x} is not a grid node")
        return i


def _exact_fraction(x):
    return Fraction(repr(float(x)))


def build_grid(L, L0, h_target, probes=()):
    """Coarsest uniform grid with spacing <= h_target having L0 and every probe on a node."""
    if not 0 < L0 < L:
        raise GridError(f"need 0 < L0 < L, got L0={L0}, L={L}")
    if not h_target > 0:
        raise GridError(f"h_target must be positive, got {h_target}")
    for p in probes:
        if not 0 <= p <= L:
            raise GridError(f"probe {p} outside [0, {L}]")
    Lf = _exact_fraction(L)
    denom = 1
    for x in (L0, *probes):
        ratio = _exact_fraction(x) / Lf
        denom = denom * ratio.denominator // math.gcd(denom, ratio.denominator)
    n_min = max(1, math.ceil(L / h_target - 1e-12))
    n = denom * math.ceil(n_min / denom)
    if n > MAX_INTERVALS:
        raise GridError(f"no grid with at most {MAX_INTERVALS} intervals places L0 and probes on nodes")
    i_interface = int(_exact_fraction(L0) / Lf * n)
    probe_indices = {float(p): int(_exact_fraction(p) / Lf * n) for p in probes}
    return Grid(L=float(L), L0=float(L0), n=n, i_interface=i_interface, probe_indices=probe_indices)


# ------------------------------------------------------------------ state


@dataclass
class BeamState:
    """Node values and velocities per field.

    Left fields are stored on nodes ``0..i_interface``, right fields on
    ``i_interface..n``; the interface node appears in both.
    """

    disp: dict
    vel: dict
    t: float = 0.0

    @property
    def fields(self):
        return tuple(self.disp)

    def copy(self):
        return BeamState(
            {k: a.copy() for k, a in self.disp.items()},
            {k: a.copy() for k, a in self.vel.items()},
            self.t,
        )

    @classmethod
    def zeros(cls, grid: Grid, fields=FIELDS):
        disp = {}
        for name in fields:
            size = grid.i_interface + 1 if name in LEFT_FIELDS else grid.n - grid.i_interface + 1
            disp[name] = np.zeros(size)
        return cls(disp, {k: np.zeros_like(a) for k, a in disp.items()})

    @classmethod
    def from_functions(cls, grid: Grid, displacement, velocity=None):
        """Sample initial data. ``displacement``/``velocity`` map field names to callables of x."""
        velocity = velocity or {}
        state = cls.zeros(grid, tuple(displacement))
        for name in state.disp:
            x = grid.left_nodes if name in LEFT_FIELDS else grid.right_nodes
            state.disp[name] = np.asarray(displacement[name](x), dtype=float) * np.ones_like(x)
            if name in velocity:
                state.vel[name] = np.asarray(velocity[name](x), dtype=float) * np.ones_like(x)
        return state

    def check_finite(self, t_valid):
        for group in (self.disp, self.vel):
            for name, a in group.items():
                if not np.all(np.isfinite(a)) or np.max(np.abs(a), initial=0.0) > BLOWUP_LIMIT:
                    raise BlowUpError(f"field {name} blew up", t_valid)


def apply_dirichlet(state: BeamState):
    """Clamp left fields at x=0 and right fields at x=L (values and velocities)."""
    for group in (state.disp, state.vel):
        for name, a in group.items():
            if name in LEFT_FIELDS:
                a[0] = 0.0
            else:
                a[-1] = 0.0
    return state


# ---------------------------------------------------------- cell operators


class Segment:
    """Cell/node bookkeeping for one part of the beam.

    Cell averages use weights ``(1/2, 1/2)`` except on the cell touching the
    interface, which takes the value of its far node, so that no strain term
    other than the derivative depends on the interface values.
    """

    def __init__(self, h, ncells, interface_at_end):
        if ncells < 2:
            raise GridError("each part of the beam needs at least two cells")
        self.h = h
        self.ncells = ncells
        self.wlo = np.full(ncells, 0.5)
        self.whi = np.full(ncells, 0.5)
        if interface_at_end:
            self.wlo[-1], self.whi[-1] = 1.0, 0.0
        else:
            self.wlo[0], self.whi[0] = 0.0, 1.0
        self.node_weights = h * self.avg_T(np.ones(ncells))

    def diff(self, a):
        return (a[1:] - a[:-1]) / self.h

    def avg(self, a):
        return self.wlo * a[:-1] + self.whi * a[1:]

    def diff_T(self, c):
        """Transpose of ``h * diff``: node j receives ``c[j-1] - c[j]``."""
        out = np.zeros(c.size + 1)
        out[1:] += c
        out[:-1] -= c
        return out

    def avg_T(self, c):
        out = np.zeros(c.size + 1)
        out[:-1] += self.wlo * c
        out[1:] += self.whi * c
        return out


# ------------------------------------------------------ generic system


class SegmentedSystem:
    """Two-part field system with a massless interface node.

    Subclasses declare ``pairs`` (left field, right field, density attribute),
    the stored energy and its gradient, and the three discrete interface
    fluxes. Everything else (masses, loads, potentials, damping, interface
    solve, energy bookkeeping) is shared.
    """

    pairs: tuple = ()
    damped_field = None

    def __init__(self, cfg: BeamConfig, grid: Grid):
        self.cfg = cfg
        self.grid = grid
        h = grid.h
        self.h = h
        self.m = grid.i_interface
        self.seg = (Segment(h, self.m, True), Segment(h, grid.n - self.m, False))
        self.left_fields = tuple(p[0] for p in self.pairs)
        self.right_fields = tuple(p[1] for p in self.pairs)
        self.fields = self.left_fields + self.right_fields
        self.weights = {}
        self.density = {}
        for lf, rf, dens in self.pairs:
            self.weights[lf] = self.seg[0].node_weights
            self.weights[rf] = self.seg[1].node_weights
            self.density[lf] = getattr(cfg.left, dens)
            self.density[rf] = getattr(cfg.right, dens)
        self.mass = {f: self.weights[f] * self.density[f] for f in self.fields}
        self._free = {}
        for f in self.fields:
            mask = self.mass[f] > 0
            if f in self.left_fields:
                mask[0] = False
            else:
                mask[-1] = False
            self._free[f] = mask
        self._weighted_loads = self._build_loads()
        self._jacobian = None

    # -- hooks -----------------------------------------------------------
    def elastic_energy(self, disp):
        raise NotImplementedError

    def elastic_gradient(self, disp):
        raise NotImplementedError

    def interface_fluxes(self, disp):
        """Scaled jumps of the three discrete resultants across L0."""
        raise NotImplementedError

    def potential_functions(self, side):
        """``(F, dF)``: nodal potential density of one side and its partials, both
        taking the side's field arrays in ``pairs`` order."""
        raise NotImplementedError

    def load_components(self, side, x):
        raise NotImplementedError

    # -- shared machinery ------------------------------------------------
    def _build_loads(self):
        out = {}
        for side, names, x in (
            (0, self.left_fields, self.grid.left_nodes),
            (1, self.right_fields, self.grid.right_nodes),
        ):
            comps = self.load_components(side, x)
            for name in names:
                out[name] = self.weights[name] * np.broadcast_to(comps[name], x.shape)
        return out

    def _side_arrays(self, disp, side):
        names = self.left_fields if side == 0 else self.right_fields
        return names, [disp[n] for n in names]

    def node_potential(self, side, disp):
        """Potential density at the nodes of one side and its gradient per field."""
        F, dF = self.potential_functions(side)
        names, args = self._side_arrays(disp, side)
        return F(*args), dict(zip(names, dF(*args)))

    def potential_gradient_between(self, new, old):
        """Weighted symmetric discrete gradient of the potential between two states.

        ``g . (new - old)`` equals the potential energy difference up to
        roundoff, which is what keeps the discrete energy balance exact.
        """
        out = {}
        for side in (0, 1):
            F, dF = self.potential_functions(side)
            names, x = self._side_arrays(new, side)
            _, y = self._side_arrays(old, side)
            order = tuple(range(len(names)))
            fwd = _itoh_abe(F, dF, x, y, order)
            bwd = _itoh_abe(F, dF, x, y, order[::-1])
            for i, name in enumerate(names):
                out[name] = self.weights[name] * 0.5 * (fwd[i] + bwd[i])
        return out

    def potential_energy(self, disp):
        total = 0.0
        for side, names in ((0, self.left_fields), (1, self.right_fields)):
            dens, _ = self.node_potential(side, disp)
            total += float(np.dot(self.weights[names[0]], dens))
        return total

    def load_work(self, disp):
        """Inner product (P, Phi) with the lumped node weights."""
        return float(sum(np.dot(self._weighted_loads[f], disp[f]) for f in self.fields))

    def conservative_accel(self, disp):
        grad = self.elastic_gradient(disp)
        for side, names in ((0, self.left_fields), (1, self.right_fields)):
            if self.cfg.nonlinearity.is_zero:
                continue
            _, pgrad = self.node_potential(side, disp)
            for name in names:
                grad[name] = grad[name] + self.weights[name] * pgrad[name]
        acc = {}
        for f in self.fields:
            a = np.zeros_like(disp[f])
            free = self._free[f]
            a[free] = (self._weighted_loads[f][free] - grad[f][free]) / self.mass[f][free]
            acc[f] = a
        return acc

    def damping_force(self, vel):
        """Weighted damping force per field (nonzero only for the damped field)."""
        out = {f: np.zeros_like(vel[f]) for f in self.fields}
        if self.damped_field is not None and not self.cfg.damping.is_zero:
            f = self.damped_field
            out[f] = self.weights[f] * self.cfg.damping.gamma(vel[f])
        return out

    def accel(self, state: BeamState):
        acc = self.conservative_accel(state.disp)
        force = self.damping_force(state.vel)
        for f in self.fields:
            free = self._free[f]
            acc[f][free] -= force[f][free] / self.mass[f][free]
        return acc

    def damped_midpoint(self, v_minus, impulse, dt):
        """Velocity update of the damped field with damping at the step midpoint.

        Solves ``m (v+ - v-) = impulse - dt w gamma((v+ + v-)/2)`` at free nodes,
        in place on ``v_minus`` (which becomes v+). Returns the dissipated
        energy ``dt w gamma(s) s`` summed over the nodes.
        """
        f = self.damped_field
        free = self._free[f]
        c = dt / (2 * self.density[f])
        target = v_minus[free] + impulse[free] / (2 * self.mass[f][free])
        damping = self.cfg.damping
        mid = _monotone_solve(damping.gamma, c, target, damping.gamma_prime)
        v_minus[free] = 2 * mid - v_minus[free]
        return dt * float(np.dot(self.weights[f][free], damping.gamma(mid) * mid))

    def kinetic(self, vel):
        return 0.5 * sum(float(np.dot(self.mass[f], vel[f] ** 2)) for f in self.fields)

    def dirichlet(self, arrays):
        for f in self.left_fields:
            arrays[f][0] = 0.0
        for f in self.right_fields:
            arrays[f][-1] = 0.0

    # -- interface -------------------------------------------------------
    def interface_values(self, arrays):
        return np.array(
            [arrays[f][-1] for f in self.left_fields] + [arrays[f][0] for f in self.right_fields]
        )

    def set_interface_values(self, arrays, x):
        k = len(self.left_fields)
        for i, f in enumerate(self.left_fields):
            arrays[f][-1] = x[i]
        for i, f in enumerate(self.right_fields):
            arrays[f][0] = x[k + i]

    def interface_residual(self, arrays):
        k = len(self.left_fields)
        x = self.interface_values(arrays)
        return np.concatenate([x[:k] - x[k:], self.interface_fluxes(arrays)])

    def _interface_jacobian(self, arrays):
        # the residual is affine in the interface values, so unit-step
        # differences give the exact Jacobian
        if self._jacobian is None:
            probe = {f: np.zeros_like(a) for f, a in arrays.items()}
            size = 2 * len(self.left_fields)
            r0 = self.interface_residual(probe)
            J = np.empty((size, size))
            for j in range(size):
                e = np.zeros(size)
                e[j] = 1.0
                self.set_interface_values(probe, e)
                J[:, j] = self.interface_residual(probe) - r0
            self._jacobian = J
        return self._jacobian

    def interface_solve(self, arrays, tol=INTERFACE_TOL, max_iter=50):
        """Damped Newton on continuity plus flux matching; updates arrays in place.

        Returns the final residual max-norm.
        """
        J = self._interface_jacobian(arrays)
        # roundoff floor grows with the size of the strains next to L0
        near = [a[-2:] for f, a in arrays.items() if f in self.left_fields]
        near += [a[:2] for f, a in arrays.items() if f in self.right_fields]
        tol = tol * max(1.0, float(np.max(np.abs(np.concatenate(near)))) / self.h)
        r = self.interface_residual(arrays)
        norm = float(np.max(np.abs(r)))
        history = [norm]
        for _ in range(max_iter):
            if norm <= tol:
                return norm
            x = self.interface_values(arrays)
            dx = np.linalg.solve(J, -r)
            for _halving in range(9):
                self.set_interface_values(arrays, x + dx)
                r_new = self.interface_residual(arrays)
                new_norm = float(np.max(np.abs(r_new)))
                if new_norm < norm or new_norm <= tol:
                    break
                dx = dx / 2
            r, norm = r_new, new_norm
            history.append(norm)
        if norm <= tol:
            return norm
        raise InterfaceSolveError("interface Newton iteration did not converge", history)

    def project(self, arrays):
        self.dirichlet(arrays)
        return self.interface_solve(arrays)

    # -- sampling --------------------------------------------------------
    def output_fields(self):
        """Physical quantities sampled at probes, named after the left fields."""
        return self.left_fields

    def partner(self, name):
        """Left-field name of the physical quantity a field describes."""
        if name in self.right_fields:
            return self.left_fields[self.right_fields.index(name)]
        return name

    def output_value(self, state, name, x):
        """Value of a physical quantity at x, read from whichever part contains x."""
        name = self.partner(name)
        side, _ = self.grid.locate(x)
        if side == "right":
            name = self.right_fields[self.left_fields.index(name)]
        return self.field_value(state, name, x)

    def field_value(self, state: BeamState, name, x):
        side, i = self.grid.locate(x)
        if name in self.left_fields:
            if side != "left":
                raise GridError(f"x={x} is outside the left part where {name} lives")
            return state.disp[name][i]
        if side == "left":
            if i != self.m:
                raise GridError(f"x={x} is outside the right part where {name} lives")
            return state.disp[name][0]
        return state.disp[name][i]


def _itoh_abe(F, dF, x, y, order):
    """Coordinate-increment discrete gradient of F along a path from y to x."""
    point = list(y)
    out = [None] * len(x)
    f_prev = F(*point)
    for i in order:
        d = x[i] - y[i]
        mid = list(point)
        mid[i] = 0.5 * (x[i] + y[i])
        point[i] = x[i]
        f_next = F(*point)
        small = np.abs(d) <= 1e-7 * (1.0 + np.abs(x[i]) + np.abs(y[i]))
        quotient = (f_next - f_prev) / np.where(small, 1.0, d)
        out[i] = np.where(small, dF(*mid)[i], quotient) if np.any(small) else quotient
        f_prev = f_next
    return out


def _monotone_solve(gamma, c, target, gamma_prime=None, iters=200):
    """Solve ``v + c*gamma(v) = target`` elementwise for non-decreasing gamma with gamma(0)=0.

    Newton steps are kept inside a shrinking bracket and replaced by
    bisection when they leave it, so discontinuous gamma is handled too.
    """
    target = np.asarray(target, dtype=float)
    lo = np.minimum(target, 0.0)
    hi = np.maximum(target, 0.0)
    x = target / (1.0 + c * (gamma_prime(np.zeros_like(target)) if gamma_prime is not None else 0.0))
    scale = 1e-15 * (1.0 + np.abs(target))
    for _ in range(iters):
        g = x + c * gamma(x) - target
        done = np.abs(g) <= scale
        if np.all(done | (hi - lo <= scale)):
            break
        hi = np.where(g > 0, x, hi)
        lo = np.where(g < 0, x, lo)
        if gamma_prime is not None:
            step = x - g / (1.0 + c * gamma_prime(x))
        else:
            step = np.full_like(x, np.nan)
        inside = (step > lo) & (step < hi)
        x = np.where(done, x, np.where(inside, step, 0.5 * (lo + hi)))
    return x


# ------------------------------------------------------ coupled Bresse


class BresseSystem(SegmentedSystem):
    """The full six-field composite beam."""

    pairs = (("phi", "u", "rho"), ("psi", "v", "beta"), ("omega", "w", "rho"))
    damped_field = "psi"

    def __init__(self, cfg, grid):
        super().__init__(cfg, grid)
        p1, p2 = cfg.left, cfg.right
        self._scale = (max(p1.k, p2.k), max(p1.lam, p2.lam), max(p1.sigma, p2.sigma))

    def cell_resultants(self, side, xi, zeta, eta):
        seg = self.seg[side]
        p = self.cfg.left if side == 0 else self.cfg.right
        l = self.cfg.l
        Q = p.k * (seg.diff(xi) + seg.avg(zeta) + l * seg.avg(eta))
        N = p.sigma * (seg.diff(eta) - l * seg.avg(xi))
        M = p.lam * seg.diff(zeta)
        return Q, N, M

    def _side(self, disp, side):
        names = self.left_fields if side == 0 else self.right_fields
        return [disp[n] for n in names]

    def elastic_energy(self, disp):
        total = 0.0
        for side in (0, 1):
            p = self.cfg.left if side == 0 else self.cfg.right
            Q, N, M = self.cell_resultants(side, *self._side(disp, side))
            total += 0.5 * self.h * float(np.sum(Q**2) / p.k + np.sum(N**2) / p.sigma + np.sum(M**2) / p.lam)
        return total

    def elastic_gradient(self, disp):
        out = {}
        l, h = self.cfg.l, self.h
        for side in (0, 1):
            seg = self.seg[side]
            names = self.left_fields if side == 0 else self.right_fields
            Q, N, M = self.cell_resultants(side, *self._side(disp, side))
            out[names[0]] = seg.diff_T(Q) - l * h * seg.avg_T(N)
            out[names[1]] = h * seg.avg_T(Q) + seg.diff_T(M)
            out[names[2]] = l * h * seg.avg_T(Q) + seg.diff_T(N)
        return out

    def interface_fluxes(self, disp):
        # resultants on the two cells touching L0; lower-order terms use the
        # far node, matching the Segment averaging convention
        h, l = self.h, self.cfg.l
        p1, p2 = self.cfg.left, self.cfg.right
        phi, psi, om = (disp[f] for f in self.left_fields)
        u, v, w = (disp[f] for f in self.right_fields)
        Q1 = p1.k * ((phi[-1] - phi[-2]) / h + psi[-2] + l * om[-2])
        N1 = p1.sigma * ((om[-1] - om[-2]) / h - l * phi[-2])
        M1 = p1.lam * (psi[-1] - psi[-2]) / h
        Q2 = p2.k * ((u[1] - u[0]) / h + v[1] + l * w[1])
        N2 = p2.sigma * ((w[1] - w[0]) / h - l * u[1])
        M2 = p2.lam * (v[1] - v[0]) / h
        sq, sm, sn = self._scale
        return np.array([(Q1 - Q2) / sq, (M1 - M2) / sm, (N1 - N2) / sn])

    def potential_functions(self, side):
        nl = self.cfg.nonlinearity
        return nl.potentials[side], nl.feedbacks[side]

    def load_components(self, side, x):
        p, r, q = (self.cfg.loads.left if side == 0 else self.cfg.loads.right)(x)
        names = self.left_fields if side == 0 else self.right_fields
        return {names[0]: p, names[1]: r, names[2]: q}


def semidiscrete_accel(state: BeamState, cfg: BeamConfig, grid: Grid):
    """Accelerations of all six fields, damping included; Dirichlet and interface nodes get 0."""
    state.check_finite(state.t)
    return BresseSystem(cfg, grid).accel(state)


def interface_solve(state: BeamState, cfg: BeamConfig, grid: Grid):
    """Copy of ``state`` whose values near L0 satisfy the discrete transmission conditions.

    Nodes ``i_interface -/+ 1`` belong to the explicit update and come back
    unchanged; the six interface values are the unknowns of the Newton solve.
    """
    system = BresseSystem(cfg, grid)
    out = state.copy()
    system.interface_solve(out.disp)
    return out


def interface_residuals(state: BeamState, cfg: BeamConfig, grid: Grid):
    """Continuity and scaled flux-matching residuals at L0 (six numbers)."""
    return BresseSystem(cfg, grid).interface_residual(state.disp)
