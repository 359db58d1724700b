"""Physical data model for the composite curved beam.

The beam occupies ``(0, L)``; the damped part is ``(0, L0)`` and carries the
fields ``(phi, psi, omega)`` (transversal displacement, shear angle variation,
longitudinal displacement), the undamped part ``(L0, L)`` carries ``(u, v, w)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, DimensionError, DomainError

LEFT_FIELDS = ("phi", "psi", "omega")
RIGHT_FIELDS = ("u", "v", "w")
FIELDS = LEFT_FIELDS + RIGHT_FIELDS

EQUAL_SPEED_RTOL = 1e-12


@dataclass(frozen=True)
class SegmentParams:
    rho: float
    beta: float
    k: float
    sigma: float
    lam: float

    def __post_init__(self):
        for name in ("rho", "beta", "k", "sigma", "lam"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                key = "lambda" if name == "lam" else name
                raise ConfigError(f"must be a positive number, got {value!r}", key)

    def wave_speeds(self):
        """Shear, bending and axial propagation speeds."""
        return (
            math.sqrt(self.k / self.rho),
            math.sqrt(self.lam / self.beta),
            math.sqrt(self.sigma / self.rho),
        )


# ---------------------------------------------------------------- damping


def _zero(s):
    return np.zeros_like(np.asarray(s, dtype=float))


def _linear(s):
    return np.asarray(s, dtype=float) * 1.0


def _one(s):
    return np.ones_like(np.asarray(s, dtype=float))


def _cubic_c1(s):
    s = np.asarray(s, dtype=float)
    inner = s**3 / 100.0
    outer = np.sign(s) * (3.0 * np.abs(s) - 20.0)
    return np.where(np.abs(s) <= 10.0, inner, outer)


def _cubic_c1_prime(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 10.0, 3.0 * s**2 / 100.0, 3.0)


def _cubic_printed(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 10.0, s**3 / 100.0, 10.0 * s)


def _cubic_printed_prime(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 10.0, 3.0 * s**2 / 100.0, 10.0)


@dataclass(frozen=True)
class DampingSpec:
    """Scalar damping law acting on the shear-angle velocity of the damped part.

    ``lipschitz`` is the declared bound M on difference quotients of ``gamma``.
    """

    variant: str
    gamma: Callable
    gamma_prime: Callable
    lipschitz: float

    VARIANTS = ("none", "linear", "cubic-saturated-C1", "cubic-saturated-as-printed", "custom")

    @classmethod
    def none(cls):
        return cls("none", _zero, _zero, 0.0)

    @classmethod
    def linear(cls):
        return cls("linear", _linear, _one, 1.0)

    @classmethod
    def cubic_saturated(cls, as_printed=False):
        if as_printed:
            return cls("cubic-saturated-as-printed", _cubic_printed, _cubic_printed_prime, 10.0)
        return cls("cubic-saturated-C1", _cubic_c1, _cubic_c1_prime, 3.0)

    @classmethod
    def custom(cls, gamma, lipschitz, gamma_prime=None, step=1e-6):
        if gamma_prime is None:
            def gamma_prime(s):
                s = np.asarray(s, dtype=float)
                return (gamma(s + step) - gamma(s - step)) / (2 * step)
        return cls("custom", gamma, gamma_prime, float(lipschitz))

    @classmethod
    def from_variant(cls, variant):
        table = {
            "none": cls.none,
            "linear": cls.linear,
            "cubic-saturated-C1": cls.cubic_saturated,
            "cubic-saturated-as-printed": lambda: cls.cubic_saturated(as_printed=True),
        }
        if variant not in table:
            raise ConfigError(f"unknown damping variant {variant!r}", "damping.variant")
        return table[variant]()

    @property
    def is_zero(self):
        return self.variant == "none"


def damping_eval(s, spec: DampingSpec):
    return spec.gamma(s)


def check_damping(spec: DampingSpec, n=10_000, bound=100.0):
    """Return a list of violated damping conditions on a sampled lattice.

    Checks gamma(0)=0, monotonicity and the declared Lipschitz bound (which is
    also what catches a jump discontinuity).
    """
    problems = []
    s = np.linspace(-bound, bound, n)
    g = np.asarray(spec.gamma(s), dtype=float)
    g0 = float(np.asarray(spec.gamma(np.array([0.0])))[0])
    if g0 != 0.0:
        problems.append(f"gamma(0) = {g0} != 0")
    dg = np.diff(g)
    if np.any(dg < 0):
        problems.append("gamma is not non-decreasing")
    slopes = np.abs(dg) / np.diff(s)
    if np.any(slopes > spec.lipschitz * (1 + 1e-9) + 1e-12):
        worst = s[np.argmax(slopes)]
        problems.append(
            f"difference quotient {slopes.max():.4g} exceeds declared M={spec.lipschitz} near s={worst:.4g}"
        )
    return problems


# ------------------------------------------------------------ nonlinearity


def _zero_potential(a, b, c):
    return np.zeros(np.broadcast(a, b, c).shape)


def _zero_feedback(a, b, c):
    z = _zero_potential(a, b, c)
    return z, z.copy(), z.copy()


def _sl1_potential(a, b, c):
    s = a + b
    return s**4 - s**2 + (a * b) ** 2 + np.abs(c) ** 3


def _sl1_feedback(a, b, c):
    s = a + b
    common = 4 * s**3 - 2 * s
    return common + 2 * a * b**2, common + 2 * a**2 * b, 3 * np.abs(c) * c


def _sl2_potential_left(a, b, c):
    return a**4 - a**2 + np.abs(c) ** 3


def _sl2_feedback_left(a, b, c):
    return 4 * a**3 - 2 * a, np.zeros_like(a * b), 3 * np.abs(c) * c


def _sl2_potential_right(a, b, c):
    return a**4 - 4 * a**2 + 2 * np.abs(c) ** 3


def _sl2_feedback_right(a, b, c):
    return 4 * a**3 - 8 * a, np.zeros_like(a * b), 6 * np.abs(c) * c


@dataclass(frozen=True)
class NonlinearitySpec:
    """Potentials of both segments with their gradients ``(f, h, g)``.

    ``delta`` is a lower bound with ``F_i >= -delta`` and ``decoupled`` marks
    nonlinearities where (f, h) do not depend on the longitudinal field and g
    depends on it alone.
    """

    name: str
    potentials: tuple
    feedbacks: tuple
    decoupled: bool
    delta: float

    @classmethod
    def zero(cls):
        return cls("zero", (_zero_potential, _zero_potential), (_zero_feedback, _zero_feedback), True, 0.0)

    @classmethod
    def sl1(cls):
        return cls("sl1", (_sl1_potential, _sl1_potential), (_sl1_feedback, _sl1_feedback), True, 0.25)

    @classmethod
    def sl2(cls):
        return cls(
            "sl2",
            (_sl2_potential_left, _sl2_potential_right),
            (_sl2_feedback_left, _sl2_feedback_right),
            True,
            4.0,
        )

    @classmethod
    def custom(cls, F1, F2, decoupled=False, delta=None, step=1e-6):
        """Build a spec from potentials alone; feedbacks are central differences."""

        def make_grad(F):
            def grad(a, b, c):
                a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
                return (
                    (F(a + step, b, c) - F(a - step, b, c)) / (2 * step),
                    (F(a, b + step, c) - F(a, b - step, c)) / (2 * step),
                    (F(a, b, c + step) - F(a, b, c - step)) / (2 * step),
                )

            return grad

        spec = cls("custom", (F1, F2), (make_grad(F1), make_grad(F2)), decoupled, 0.0)
        if delta is None:
            delta = max(0.0, -min(potential_lower_bound(F1), potential_lower_bound(F2)))
        return dataclasses.replace(spec, delta=float(delta))

    @classmethod
    def from_preset(cls, name):
        table = {"zero": cls.zero, "sl1": cls.sl1, "sl2": cls.sl2}
        if name not in table:
            raise ConfigError(f"unknown nonlinearity preset {name!r}", "nonlinearity.preset")
        return table[name]()

    @property
    def is_zero(self):
        return self.name == "zero"


def _segment_index(which):
    # segments are numbered 1 (damped, left) and 2 (undamped, right)
    if which in ("left", 1):
        return 0
    if which in ("right", 2):
        return 1
    raise ValueError(f"segment must be 'left'/'right' or 1/2, got {which!r}")


def feedback(point, which, spec: NonlinearitySpec):
    a, b, c = (np.asarray(x, dtype=float) for x in point)
    return spec.feedbacks[_segment_index(which)](a, b, c)


def potential(point, which, spec: NonlinearitySpec):
    a, b, c = (np.asarray(x, dtype=float) for x in point)
    return spec.potentials[_segment_index(which)](a, b, c)


def check_gradient_consistency(spec: NonlinearitySpec, n=1000, box=2.0, step=1e-5, rtol=1e-6, seed=0):
    """Largest relative mismatch between feedbacks and the FD gradient of the potential.

    The mismatch at a point is ``|fd - grad| / max(1, |grad|)`` (Euclidean norms).
    Returns ``(worst, ok)``.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for seg in (0, 1):
        pts = rng.uniform(-box, box, size=(3, n))
        F = spec.potentials[seg]
        grad = np.array(spec.feedbacks[seg](*pts), dtype=float)
        fd = np.empty_like(grad)
        for j in range(3):
            e = np.zeros((3, 1))
            e[j] = step
            fd[j] = (F(*(pts + e)) - F(*(pts - e))) / (2 * step)
        err = np.linalg.norm(fd - grad, axis=0) / np.maximum(1.0, np.linalg.norm(grad, axis=0))
        worst = max(worst, float(err.max()))
    return worst, worst <= rtol


def potential_lower_bound(F, box=3.0, n=41, starts=5):
    """Minimum of F over the cube ``[-box, box]^3``: lattice search refined by L-BFGS-B."""
    grid = np.linspace(-box, box, n)
    a, b, c = np.meshgrid(grid, grid, grid, indexing="ij")
    vals = np.asarray(F(a, b, c), dtype=float).ravel()
    best = float(vals.min())
    pts = np.stack([a.ravel(), b.ravel(), c.ravel()], axis=1)
    for i in np.argsort(vals)[:starts]:
        res = minimize(lambda p: float(F(*p)), pts[i], method="L-BFGS-B", bounds=[(-box, box)] * 3)
        best = min(best, float(res.fun))
    return best


def sampled_potential_min(spec: NonlinearitySpec, which, box=3.0, n=41):
    grid = np.linspace(-box, box, n)
    a, b, c = np.meshgrid(grid, grid, grid, indexing="ij")
    return float(np.min(spec.potentials[_segment_index(which)](a, b, c)))


# ------------------------------------------------------------------ loads


def _zero_load(x):
    z = np.zeros_like(np.asarray(x, dtype=float))
    return z, z.copy(), z.copy()


def _sl1_left(x):
    x = np.asarray(x, dtype=float)
    return np.sin(x), x * 1.0, np.sin(x)


def _sl1_right(x):
    x = np.asarray(x, dtype=float)
    return np.cos(x), x + 1.0, np.cos(x)


def _sl2_left(x):
    x = np.asarray(x, dtype=float)
    return np.sin(x), x + 4.0, np.sin(x)


def _sl2_right(x):
    x = np.asarray(x, dtype=float)
    return np.cos(x), 2.0 * x, np.cos(x)


@dataclass(frozen=True)
class LoadSpec:
    """Time-independent loads ``(p, r, q)`` on each segment as functions of x."""

    name: str
    left: Callable
    right: Callable
    time_dependent: bool = False

    @classmethod
    def zero(cls):
        return cls("zero", _zero_load, _zero_load)

    @classmethod
    def sl1(cls):
        return cls("sl1", _sl1_left, _sl1_right)

    @classmethod
    def sl2(cls):
        return cls("sl2", _sl2_left, _sl2_right)

    @classmethod
    def from_preset(cls, name):
        table = {"zero": cls.zero, "sl1": cls.sl1, "sl2": cls.sl2}
        if name not in table:
            raise ConfigError(f"unknown load preset {name!r}", "loads.preset")
        return table[name]()

    @property
    def is_zero(self):
        return self.name == "zero"


# ----------------------------------------------------------------- config


@dataclass(frozen=True)
class BeamConfig:
    left: SegmentParams
    right: SegmentParams
    l: float
    L: float
    L0: float
    damping: DampingSpec = field(default_factory=DampingSpec.none)
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec.zero)
    loads: LoadSpec = field(default_factory=LoadSpec.zero)

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigError(f"must be positive, got {self.L}", "geometry.L")
        if not 0 < self.L0 < self.L:
            raise ConfigError(f"must satisfy 0 < L0 < L, got L0={self.L0}, L={self.L}", "geometry.L0")
        if not self.l >= 0:
            raise ConfigError(f"curvature must be >= 0, got {self.l}", "geometry.l")

    @property
    def equal_speed(self):
        p = self.left
        return math.isclose(p.k, p.sigma, rel_tol=EQUAL_SPEED_RTOL) and math.isclose(
            p.rho / p.k, p.beta / p.lam, rel_tol=EQUAL_SPEED_RTOL
        )

    @property
    def max_speed(self):
        return max(max(self.left.wave_speeds()), max(self.right.wave_speeds()))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def sl1_config(l=1.0, k1=4.0, k2=1.0, damping=None):
    """Parameters of the curvature-to-zero study (k1, k2 are not given there; 4 and 1 by default)."""
    return BeamConfig(
        left=SegmentParams(rho=1.0, beta=2.0, k=k1, sigma=4.0, lam=8.0),
        right=SegmentParams(rho=1.0, beta=2.0, k=k2, sigma=2.0, lam=4.0),
        l=l,
        L=10.0,
        L0=4.0,
        damping=damping if damping is not None else DampingSpec.cubic_saturated(),
        nonlinearity=NonlinearitySpec.sl1(),
        loads=LoadSpec.sl1(),
    )


def sl2_config(chi=1.0):
    base = BeamConfig(
        left=SegmentParams(rho=1.0, beta=2.0, k=4.0, sigma=4.0, lam=8.0),
        right=SegmentParams(rho=1.0, beta=2.0, k=1.0, sigma=2.0, lam=4.0),
        l=1.0,
        L=10.0,
        L0=4.0,
        damping=DampingSpec.linear(),
        nonlinearity=NonlinearitySpec.sl2(),
        loads=LoadSpec.sl2(),
    )
    return base if chi == 1 else scale_chi(base, chi)


def scale_chi(cfg: BeamConfig, chi):
    if chi < 1:
        raise ConfigError(f"chi must be >= 1, got {chi}", "chi")
    return cfg.replace(
        l=cfg.l / chi,
        left=dataclasses.replace(cfg.left, k=cfg.left.k * chi),
        right=dataclasses.replace(cfg.right, k=cfg.right.k * chi),
    )


PRESETS = {"sl1": sl1_config, "sl2": sl2_config}


def preset_config(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}", "preset")
    return PRESETS[name]()


# -------------------------------------------------------------- resultants


class Resultants(NamedTuple):
    Q: np.ndarray
    N: np.ndarray
    M: np.ndarray


def resultants(xi, zeta, eta, xi_x, zeta_x, eta_x, params: SegmentParams, l):
    """Shear force, axial force and bending moment from fields and their x-derivatives."""
    arrs = [np.asarray(a, dtype=float) for a in (xi, zeta, eta, xi_x, zeta_x, eta_x)]
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1:
        raise DimensionError(f"field and derivative arrays differ in shape: {sorted(shapes)}")
    xi, zeta, eta, xi_x, zeta_x, eta_x = arrs
    return Resultants(
        Q=params.k * (xi_x + zeta + l * eta),
        N=params.sigma * (eta_x - l * xi),
        M=params.lam * zeta_x,
    )


def load_eval(x, cfg: BeamConfig):
    """Loads at a single position as ``(p1, r1, q1, p2, r2, q2)``.

    Entries of the segment not containing x are zero; at x = L0 both are filled.
    """
    x = float(x)
    if not 0.0 <= x <= cfg.L:
        raise DomainError(f"x={x} outside [0, {cfg.L}]")
    out = np.zeros(6)
    if x <= cfg.L0:
        out[:3] = [float(v) for v in cfg.loads.left(np.array(x))]
    if x >= cfg.L0:
        out[3:] = [float(v) for v in cfg.loads.right(np.array(x))]
    return out


def validate_config(cfg: BeamConfig):
    """Run the sampled checks on damping and nonlinearity; raise ConfigError on failure.

    The printed saturated damping is accepted (it was chosen explicitly) but
    its failed continuity check is returned as a warning.
    """
    warnings = []
    problems = check_damping(cfg.damping)
    if problems:
        if cfg.damping.variant == "cubic-saturated-as-printed":
            warnings.extend(f"damping: {p}" for p in problems)
        else:
            raise ConfigError("; ".join(problems), "damping.variant")
    worst, ok = check_gradient_consistency(cfg.nonlinearity)
    if not ok:
        raise ConfigError(f"feedbacks are not the gradient of the potential (rel. err {worst:.3g})", "nonlinearity.preset")
    for seg in (1, 2):
        m = sampled_potential_min(cfg.nonlinearity, seg)
        if m < -cfg.nonlinearity.delta - 1e-12:
            raise ConfigError(f"potential {seg} drops to {m} below -delta", "nonlinearity.preset")
    return warnings
