"""Solvers for the limit systems and the initial data of the two studies.

* Timoshenko transmission problem (``l = 0``, fields phi, psi | u, v).
* Wave transmission problem (omega | w).
* Fourth-order Euler-Bernoulli type beam reached when ``l -> 0`` and the
  shear stiffness grows without bound; it carries one deflection field on
  the whole beam and the rotation ``psi = -phi_x``.

The first two reuse the segmented machinery of :mod:`bresse.spatial`, so at
``l = 0`` they reproduce the coupled solver up to roundoff.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import BlowUpError, ConfigError, GridError
from .integrate import IntegratorConfig, Trajectory, run
from .model import BeamConfig
from .spatial import BLOWUP_LIMIT, BeamState, Grid, SegmentedSystem, _itoh_abe

# ------------------------------------------------------------ initial data


def sl1_initial(grid: Grid):
    """Initial data of the curvature-to-zero study."""
    disp = {
        "phi": lambda x: -3 / 16 * x**2 + 3 / 4 * x,
        "psi": lambda x: -(x**2) / 12 + 7 / 12 * x,
        "omega": lambda x: x**2 / 16 - x / 4,
        "u": lambda x: 0.0 * x,
        "v": lambda x: -x / 6 + 5 / 3,
        "w": lambda x: -(x**2) / 12 + 7 / 6 * x - 10 / 3,
    }
    left_vel = lambda x: x / 4  # noqa: E731
    right_vel = lambda x: -(x - 10) / 6  # noqa: E731
    vel = {"phi": left_vel, "psi": left_vel, "omega": left_vel, "u": right_vel, "v": right_vel, "w": right_vel}
    return BeamState.from_functions(grid, disp, vel)


def sl2_phi0(x):
    return -13 / 640 * x**4 + 9 / 40 * x**3 - 23 / 40 * x**2


def sl2_u0(x):
    return 41 / 2160 * x**4 - 68 / 135 * x**3 + 823 / 180 * x**2 - 439 / 27 * x + 520 / 27


def sl2_psi0(x):
    return -(-13 / 160 * x**3 + 27 / 40 * x**2 - 23 / 20 * x)


def sl2_v0(x):
    return -(41 / 540 * x**3 - 68 / 45 * x**2 + 823 / 90 * x - 439 / 27)


def sl2_phi1(x):
    return -(x**3) / 32 + 3 / 16 * x**2


def sl2_u1(x):
    return x**3 / 108 - 7 / 36 * x**2 + 10 / 9 * x - 25 / 27


def sl2_initial(grid: Grid):
    """Initial data of the stiff-shear study; shear strain and longitudinal field start at zero."""
    zero = lambda x: 0.0 * x  # noqa: E731
    disp = {"phi": sl2_phi0, "psi": sl2_psi0, "omega": zero, "u": sl2_u0, "v": sl2_v0, "w": zero}
    vel = {
        "phi": sl2_phi1,
        "psi": lambda x: 3 / 5 * x,
        "omega": lambda x: 3 / 5 * x,
        "u": sl2_u1,
        "v": lambda x: -2 / 5 * x + 4,
        "w": lambda x: -2 / 5 * x + 4,
    }
    return BeamState.from_functions(grid, disp, vel)


def restrict(state: BeamState, fields):
    return BeamState(
        {f: state.disp[f].copy() for f in fields},
        {f: state.vel[f].copy() for f in fields},
        state.t,
    )


# ------------------------------------------------------- Timoshenko / wave


class TimoshenkoSystem(SegmentedSystem):
    """Straight composite Timoshenko beam: shear force and bending moment only."""

    pairs = (("phi", "u", "rho"), ("psi", "v", "beta"))
    damped_field = "psi"

    def __init__(self, cfg, grid):
        super().__init__(cfg, grid)
        self._scale = (max(cfg.left.k, cfg.right.k), max(cfg.left.lam, cfg.right.lam))

    def _resultants(self, side, disp):
        seg = self.seg[side]
        p = self.cfg.left if side == 0 else self.cfg.right
        _, (xi, zeta) = self._side_arrays(disp, side)
        return p.k * (seg.diff(xi) + seg.avg(zeta)), p.lam * seg.diff(zeta)

    def elastic_energy(self, disp):
        total = 0.0
        for side, p in ((0, self.cfg.left), (1, self.cfg.right)):
            Q, M = self._resultants(side, disp)
            total += 0.5 * self.h * float(np.sum(Q**2) / p.k + np.sum(M**2) / p.lam)
        return total

    def elastic_gradient(self, disp):
        out = {}
        for side in (0, 1):
            seg = self.seg[side]
            names, _ = self._side_arrays(disp, side)
            Q, M = self._resultants(side, disp)
            out[names[0]] = seg.diff_T(Q)
            out[names[1]] = self.h * seg.avg_T(Q) + seg.diff_T(M)
        return out

    def interface_fluxes(self, disp):
        h = self.h
        p1, p2 = self.cfg.left, self.cfg.right
        phi, psi, u, v = (disp[f] for f in ("phi", "psi", "u", "v"))
        Q1 = p1.k * ((phi[-1] - phi[-2]) / h + psi[-2])
        M1 = p1.lam * (psi[-1] - psi[-2]) / h
        Q2 = p2.k * ((u[1] - u[0]) / h + v[1])
        M2 = p2.lam * (v[1] - v[0]) / h
        sq, sm = self._scale
        return np.array([(Q1 - Q2) / sq, (M1 - M2) / sm])

    def potential_functions(self, side):
        nl = self.cfg.nonlinearity
        F, dF = nl.potentials[side], nl.feedbacks[side]

        def pot(a, b):
            return F(a, b, np.zeros_like(a))

        def grad(a, b):
            f, hh, _ = dF(a, b, np.zeros_like(a))
            return f, hh

        return pot, grad

    def load_components(self, side, x):
        p, r, _ = (self.cfg.loads.left if side == 0 else self.cfg.loads.right)(x)
        names = self.left_fields if side == 0 else self.right_fields
        return {names[0]: p, names[1]: r}


class WaveSystem(SegmentedSystem):
    """Longitudinal wave transmission problem."""

    pairs = (("omega", "w", "rho"),)

    def _axial(self, side, disp):
        p = self.cfg.left if side == 0 else self.cfg.right
        _, (eta,) = self._side_arrays(disp, side)
        return p.sigma * self.seg[side].diff(eta)

    def elastic_energy(self, disp):
        total = 0.0
        for side, p in ((0, self.cfg.left), (1, self.cfg.right)):
            N = self._axial(side, disp)
            total += 0.5 * self.h * float(np.sum(N**2) / p.sigma)
        return total

    def elastic_gradient(self, disp):
        return {
            "omega": self.seg[0].diff_T(self._axial(0, disp)),
            "w": self.seg[1].diff_T(self._axial(1, disp)),
        }

    def interface_fluxes(self, disp):
        h = self.h
        om, w = disp["omega"], disp["w"]
        N1 = self.cfg.left.sigma * (om[-1] - om[-2]) / h
        N2 = self.cfg.right.sigma * (w[1] - w[0]) / h
        return np.array([(N1 - N2) / max(self.cfg.left.sigma, self.cfg.right.sigma)])

    def potential_functions(self, side):
        nl = self.cfg.nonlinearity
        F, dF = nl.potentials[side], nl.feedbacks[side]

        def pot(c):
            z = np.zeros_like(c)
            return F(z, z, c) - F(z, z, z)

        def grad(c):
            z = np.zeros_like(c)
            return (dF(z, z, c)[2],)

        return pot, grad

    def load_components(self, side, x):
        _, _, q = (self.cfg.loads.left if side == 0 else self.cfg.loads.right)(x)
        return {"omega" if side == 0 else "w": q}


def _check_decoupled(cfg: BeamConfig):
    if not cfg.nonlinearity.decoupled:
        raise ConfigError("the limit systems need decoupled nonlinearities", "nonlinearity.preset")


def timoshenko_dt(cfg: BeamConfig, h, safety):
    c = max(math.sqrt(p.k / p.rho) for p in (cfg.left, cfg.right))
    c = max(c, max(math.sqrt(p.lam / p.beta) for p in (cfg.left, cfg.right)))
    return safety * h / c


def wave_dt(cfg: BeamConfig, h, safety):
    return safety * h / max(math.sqrt(p.sigma / p.rho) for p in (cfg.left, cfg.right))


def timoshenko_simulate(cfg: BeamConfig, grid: Grid, icfg: IntegratorConfig, initial: BeamState, dt_max=None):
    """Composite Timoshenko beam; the curvature of ``cfg`` is ignored."""
    _check_decoupled(cfg)
    system = TimoshenkoSystem(cfg.replace(l=0.0), grid)
    state = restrict(initial, system.fields)
    dt_max = dt_max if dt_max is not None else timoshenko_dt(cfg, grid.h, icfg.cfl_safety)
    return run(system, state, icfg, dt_max)


def wave_simulate(cfg: BeamConfig, grid: Grid, icfg: IntegratorConfig, initial: BeamState, dt_max=None):
    _check_decoupled(cfg)
    system = WaveSystem(cfg.replace(l=0.0), grid)
    state = restrict(initial, system.fields)
    dt_max = dt_max if dt_max is not None else wave_dt(cfg, grid.h, icfg.cfl_safety)
    return run(system, state, icfg, dt_max)


def wave_limit_simulate(cfg: BeamConfig, grid: Grid, icfg: IntegratorConfig, initial: BeamState, dt_max=None):
    """Longitudinal limit of the stiff-shear study; starts from zero displacement."""
    for f in ("omega", "w"):
        if np.any(initial.disp[f] != 0):
            raise ConfigError("initial longitudinal displacement must vanish", f"initial.{f}")
    return wave_simulate(cfg, grid, icfg, initial, dt_max)


# ----------------------------------------------------------- Euler-Bernoulli


class EBSystem:
    """Fourth-order beam ``rho chi_tt - beta chi_ttxx + lambda chi_xxxx`` on the whole grid.

    The discrete stored energy is ``sum w lambda kappa^2 / 2`` with nodal
    curvatures from the 3-point second difference; clamped ends use the
    mirror ghost ``chi_{-1} = chi_1``. At L0 the node carries the harmonic
    mean of the bending stiffnesses, so the one-sided curvatures
    ``M / lambda_1`` and ``M / lambda_2`` average to the nodal curvature and
    satisfy ``lambda_1 kappa^- = lambda_2 kappa^+`` by construction.
    The rotation ``psi = -chi_x`` is the central slope. The mass operator
    ``rho - d/dx beta d/dx`` is tridiagonal and solved with a sparse LU.
    """

    fields = ("phi", "u")

    def __init__(self, cfg: BeamConfig, grid: Grid):
        self.cfg = cfg
        self.grid = grid
        n, m, h = grid.n, grid.i_interface, grid.h
        if m < 2 or n - m < 2:
            raise GridError("each part of the beam needs at least two cells")
        self.n, self.m, self.h = n, m, h
        p1, p2 = cfg.left, cfg.right
        w = np.full(n + 1, h)
        w[0] = w[-1] = h / 2
        self.w = w
        # node weights split at L0 into two halves belonging to either part
        self.w_left = np.where(np.arange(n + 1) < m, w, 0.0)
        self.w_left[m] = h / 2
        self.w_right = w - self.w_left
        lam = np.where(np.arange(n + 1) < m, p1.lam, p2.lam)
        lam[m] = 2 * p1.lam * p2.lam / (p1.lam + p2.lam)
        self.lam = lam
        cells = np.arange(n)
        self.left_cells = cells < m
        beta = np.where(self.left_cells, p1.beta, p2.beta)
        D = sparse.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1)) / h
        self.D = D.tocsr()
        C = sparse.lil_matrix((n + 1, n + 1))
        for i in range(1, n):
            C[i, i - 1], C[i, i], C[i, i + 1] = 1.0, -2.0, 1.0
        C[0, 0], C[0, 1] = -2.0, 2.0
        C[n, n], C[n, n - 1] = -2.0, 2.0
        self.C = (C / h**2).tocsr()
        S = sparse.lil_matrix((n + 1, n + 1))
        for i in range(1, n):
            S[i, i - 1], S[i, i + 1] = -1.0, 1.0
        self.S = (S / (2 * h)).tocsr()
        self.free = np.arange(1, n)
        rho_w = self.w_left * p1.rho + self.w_right * p2.rho
        mass = sparse.diags(rho_w) + self.D.T @ sparse.diags(h * beta) @ self.D
        self.mass_full = mass.tocsr()
        self.mass = self._restrict(mass)
        Dl = self.D[self.left_cells]
        self.B = self._restrict(Dl.T @ sparse.diags(np.full(Dl.shape[0], h)) @ Dl)
        self.load = self._load_vector()
        self._solvers = {}

    def _restrict(self, A):
        A = sparse.csr_matrix(A)
        return A[self.free][:, self.free].tocsc()

    def _load_vector(self):
        x = self.grid.nodes
        p1, r1, _ = self.cfg.loads.left(x)
        p2, r2, _ = self.cfg.loads.right(x)
        p1, p2 = (np.broadcast_to(a, x.shape) for a in (p1, p2))
        xc = 0.5 * (x[1:] + x[:-1])
        r_left = np.broadcast_to(self.cfg.loads.left(xc)[1], xc.shape)
        r_right = np.broadcast_to(self.cfg.loads.right(xc)[1], xc.shape)
        rc = np.where(self.left_cells, r_left, r_right)
        # work = sum w p chi + sum_cells h r (-D chi)
        return self.w_left * p1 + self.w_right * p2 - self.D.T @ (self.h * rc)

    # -- energies ----------------------------------------------------------
    def curvature(self, chi):
        return self.C @ chi

    def elastic_energy(self, chi):
        k = self.curvature(chi)
        return 0.5 * float(np.sum(self.w * self.lam * k**2))

    def elastic_gradient(self, chi):
        return self.C.T @ (self.w * self.lam * self.curvature(chi))

    def _potential_parts(self, chi):
        nl = self.cfg.nonlinearity
        psi = -(self.S @ chi)
        z = np.zeros_like(chi)
        out = []
        for side, weight in ((0, self.w_left), (1, self.w_right)):
            F, dF = nl.potentials[side], nl.feedbacks[side]
            out.append((weight, F(chi, psi, z), dF(chi, psi, z)))
        return out

    def potential_energy(self, chi):
        return float(sum(np.dot(w, dens) for w, dens, _ in self._potential_parts(chi)))

    def potential_gradient(self, chi):
        g = np.zeros_like(chi)
        for w, _, (f, hh, _) in self._potential_parts(chi):
            g += w * f - self.S.T @ (w * hh)
        return g

    def potential_gradient_between(self, new, old):
        """Symmetric discrete gradient in the nodal variables ``(chi, psi)``.

        Since ``psi = -S chi`` is linear, ``g . (new - old)`` equals the
        potential energy difference up to roundoff.
        """
        nl = self.cfg.nonlinearity
        x = [new, -(self.S @ new)]
        y = [old, -(self.S @ old)]
        g = np.zeros_like(new)
        for side, weight in ((0, self.w_left), (1, self.w_right)):
            F, dF = nl.potentials[side], nl.feedbacks[side]

            def pot(a, b, F=F):
                return F(a, b, np.zeros_like(a))

            def grad(a, b, dF=dF):
                return dF(a, b, np.zeros_like(a))[:2]

            fwd = _itoh_abe(pot, grad, x, y, (0, 1))
            bwd = _itoh_abe(pot, grad, x, y, (1, 0))
            da, db = 0.5 * (fwd[0] + bwd[0]), 0.5 * (fwd[1] + bwd[1])
            g += weight * da - self.S.T @ (weight * db)
        return g

    def load_work(self, chi):
        return float(np.dot(self.load, chi))

    def kinetic(self, vel):
        return 0.5 * float(vel @ (self.mass_full @ vel))

    def damping_force(self, vel):
        """Generalized damping force and dissipation density (cells of the damped part)."""
        gamma = self.cfg.damping.gamma
        s = -(self.D @ vel)[self.left_cells]
        gs = gamma(s)
        Dl = self.D[self.left_cells]
        return -(Dl.T @ (self.h * gs)), self.h * float(np.dot(gs, s))

    def rhs(self, chi):
        return self.load - self.elastic_gradient(chi) - self.potential_gradient(chi)

    def solve_mass(self, rhs):
        """Acceleration from ``M a = rhs`` at free nodes; the clamped ends stay at zero."""
        if "mass" not in self._solvers:
            self._solvers["mass"] = splu(self.mass)
        a = np.zeros(self.n + 1)
        a[self.free] = self._solvers["mass"].solve(rhs[self.free])
        return a

    def accel(self, chi, vel):
        force, _ = self.damping_force(vel)
        return self.solve_mass(self.rhs(chi) - force)

    def mass_residual(self, acc, rhs):
        """Per-node residual of the mass solve (free nodes)."""
        return (self.mass_full @ acc - rhs)[self.free]

    def interface_residuals(self, chi):
        """Value, slope and curvature matching at L0 (zero by construction up to roundoff)."""
        p1, p2 = self.cfg.left, self.cfg.right
        moment = self.lam[self.m] * self.curvature(chi)[self.m]
        return np.array([0.0, 0.0, p1.lam * (moment / p1.lam) - p2.lam * (moment / p2.lam)])

    # -- sampling ----------------------------------------------------------
    def output_fields(self):
        return ("phi", "psi")

    def output_value(self, state, name, x):
        i = self.grid.node_index(x)
        chi = self.join(state.disp)
        if name in ("phi", "u"):
            return chi[i]
        if name in ("psi", "v"):
            return -(self.S @ chi)[i]
        raise KeyError(f"unknown output {name!r}")

    def join(self, arrays):
        return np.concatenate([arrays["phi"], arrays["u"][1:]])

    def split(self, chi, target):
        target["phi"][:] = chi[: self.m + 1]
        target["u"][:] = chi[self.m :]


class EBStepper:
    """Leapfrog with the damping at the step midpoint and the potential force as
    a discrete gradient; one sparse solve per fixed-point sweep."""

    max_newton = 50
    max_fixed_point = 200

    def __init__(self, system: EBSystem, state: BeamState, dt):
        self.system = system
        self.state = state
        self.dt = dt
        self.dissipated = 0.0
        self.max_residual = 0.0
        sys = system
        self.chi = sys.join(state.disp)
        v0 = sys.join(state.vel)
        for a in (self.chi, v0):
            a[0] = a[-1] = 0.0
        self.vh = v0 - 0.5 * dt * sys.accel(self.chi, v0)
        self.prev = self.chi - dt * self.vh
        self.load0 = sys.load_work(0.5 * (self.chi + self.prev))
        self._sync_state(v0)
        damping = sys.cfg.damping
        self.linear_damping = damping.variant == "linear"
        self.undamped = damping.is_zero
        if self.linear_damping or self.undamped:
            c = 0.0 if self.undamped else 0.5 * dt
            self._lhs = splu((sys.mass + c * sys.B).tocsc())
            self._rhs_op = (sys.mass - c * sys.B).tocsr()

    def _sync_state(self, vel):
        self.system.split(self.chi, self.state.disp)
        self.system.split(vel, self.state.vel)

    def _velocity(self, vm, R):
        if self.linear_damping or self.undamped:
            return self._lhs.solve(self._rhs_op @ vm + self.dt * R)
        return self._newton(vm, R)

    def step(self):
        sys, dt, st = self.system, self.dt, self.state
        t_prev = st.t
        free = sys.free
        vm = self.vh[free]
        if sys.cfg.nonlinearity.is_zero:
            vp = self._velocity(vm, sys.rhs(self.chi)[free])
        else:
            # fixed point on the potential force taken between chi^{n-1} and chi^{n+1}
            linear = (sys.load - sys.elastic_gradient(self.chi))[free]
            vp = self._velocity(vm, sys.rhs(self.chi)[free])
            last = np.inf
            for _ in range(self.max_fixed_point):
                new = self.chi.copy()
                new[free] += dt * vp
                R = linear - sys.potential_gradient_between(new, self.prev)[free]
                cand = self._velocity(vm, R)
                change = float(np.max(np.abs(cand - vp)))
                size = float(np.max(np.abs(cand), initial=0.0))
                vp = cand
                if not np.isfinite(change):
                    raise BlowUpError("deflection update did not converge", t_prev)
                if change <= 1e-14 * (1.0 + size) or (change >= last and change <= 1e-11 * (1.0 + size)):
                    break
                last = change
            else:
                raise BlowUpError("deflection update did not converge", t_prev)
        full = np.zeros(sys.n + 1)
        full[free] = vp
        mid = np.zeros(sys.n + 1)
        mid[free] = 0.5 * (vp + vm)
        _, power = sys.damping_force(mid)
        self.dissipated += dt * power
        self.prev = self.chi.copy()
        self.chi = self.chi + dt * full
        self.vh = full
        st.t = t_prev + dt
        if not (np.all(np.isfinite(self.chi)) and np.max(np.abs(self.chi)) <= BLOWUP_LIMIT):
            raise BlowUpError("deflection blew up", t_prev)
        self.system.split(self.chi, st.disp)
        self.max_residual = max(self.max_residual, float(np.max(np.abs(sys.interface_residuals(self.chi)))))

    def _newton(self, vm, R):
        sys, dt = self.system, self.dt
        gamma_prime = sys.cfg.damping.gamma_prime
        Dl = sys.D[sys.left_cells][:, sys.free]
        vp = vm.copy()
        for _ in range(self.max_newton):
            mid = 0.5 * (vp + vm)
            s = -(Dl @ mid)
            force = -(Dl.T @ (sys.h * sys.cfg.damping.gamma(s)))
            res = sys.mass @ (vp - vm) - dt * R + dt * force
            if np.max(np.abs(res)) <= 1e-13 * (1.0 + np.max(np.abs(sys.mass @ vp))):
                return vp
            J = sys.mass + 0.5 * dt * (Dl.T @ sparse.diags(sys.h * gamma_prime(s)) @ Dl)
            vp = vp - splu(J.tocsc()).solve(res)
        raise BlowUpError("damping update of the fourth-order beam did not converge", self.state.t)

    def sync(self):
        sys = self.system
        acc = sys.accel(self.chi, self.vh)
        self._sync_state(self.vh + 0.5 * self.dt * acc)

    def report(self):
        from .diagnostics import EnergyReport

        sys, dt = self.system, self.dt
        mean = 0.5 * (self.chi + self.prev)
        kinetic = sys.kinetic(self.vh) - dt**2 / 4 * sys.elastic_energy(self.vh)
        elastic = sys.elastic_energy(mean)
        pot = 0.5 * (sys.potential_energy(self.chi) + sys.potential_energy(self.prev))
        load = sys.load_work(mean)
        return EnergyReport(
            t=self.state.t,
            kinetic=kinetic,
            elastic=elastic,
            potential=pot,
            dissipated_cum=self.dissipated,
            work_cum=load - self.load0,
            lyapunov=kinetic + elastic + pot - load,
        )


def eb_dt(cfg: BeamConfig, h, safety):
    return safety * h / max(math.sqrt(p.lam / p.beta) for p in (cfg.left, cfg.right))


def check_eb_initial(initial: BeamState, grid: Grid, tol=1e-9):
    """Problems with the clamped/compatible initial data of the fourth-order limit."""
    problems = []
    phi, u = initial.disp["phi"], initial.disp["u"]
    if abs(phi[0]) > tol or abs(u[-1]) > tol:
        problems.append("deflection does not vanish at the clamped ends")
    if abs(phi[-1] - u[0]) > tol:
        problems.append("deflection is discontinuous at L0")
    return problems


def eb_simulate(cfg: BeamConfig, grid: Grid, icfg: IntegratorConfig, initial: BeamState, dt_max=None):
    """Fourth-order limit beam; outputs the deflection ``phi`` and the rotation ``psi = -phi_x``."""
    _check_decoupled(cfg)
    problems = check_eb_initial(initial, grid)
    if problems:
        raise ConfigError("; ".join(problems), "initial.phi")
    if cfg.damping.variant not in ("none", "linear"):
        # interior and interface damping terms only agree for linear laws
        warnings.warn(f"nonlinear damping {cfg.damping.variant!r} in the fourth-order limit is experimental",
                      RuntimeWarning, stacklevel=2)
    system = EBSystem(cfg, grid)
    state = restrict(initial, ("phi", "u"))
    dt_max = dt_max if dt_max is not None else eb_dt(cfg, grid.h, icfg.cfl_safety)
    return run(system, state, icfg, dt_max, stepper_cls=EBStepper)


def merge(*trajectories: Trajectory):
    """Combine the probe series of runs on a common time lattice."""
    base = trajectories[0]
    out = Trajectory(
        grid=base.grid,
        dt=base.dt,
        stride=base.stride,
        probes=base.probes,
        fields=tuple(f for t in trajectories for f in t.fields),
        times=list(base.times),
    )
    for t in trajectories:
        if len(t.times) != len(base.times) or not np.allclose(t.times, base.times, rtol=0, atol=1e-9):
            raise GridError("runs to merge have different sample times")
        out.samples.update(t.samples)
        out.max_interface_residual = max(out.max_interface_residual, t.max_interface_residual)
    return out
