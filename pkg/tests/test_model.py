import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bresse.errors import ConfigError, DimensionError, DomainError
from bresse.model import (
    BeamConfig,
    DampingSpec,
    LoadSpec,
    NonlinearitySpec,
    SegmentParams,
    check_damping,
    check_gradient_consistency,
    damping_eval,
    feedback,
    load_eval,
    potential,
    preset_config,
    resultants,
    sampled_potential_min,
    scale_chi,
    sl1_config,
    sl2_config,
    validate_config,
)

finite = st.floats(-5, 5, allow_nan=False)
P = SegmentParams(rho=1.0, beta=2.0, k=4.0, sigma=4.0, lam=8.0)


# ---------------------------------------------------------------- resultants


def test_resultants_of_zero_state_vanish():
    z = np.zeros(5)
    Q, N, M = resultants(z, z, z, z, z, z, P, 1.0)
    assert not Q.any() and not N.any() and not M.any()


def test_shear_force_from_slope():
    Q, _, _ = resultants(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, P, 1.0)
    assert Q == 4.0


def test_axial_force_with_curvature():
    _, N, _ = resultants(0.5, 0.0, 0.0, 0.0, 0.0, 1.0, P, 1.0)
    assert N == pytest.approx(2.0, abs=1e-15)


def test_resultants_reject_mismatched_shapes():
    with pytest.raises(DimensionError):
        resultants(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(4), np.zeros(3), np.zeros(3), P, 1.0)


@given(st.lists(finite, min_size=6, max_size=6), st.lists(finite, min_size=6, max_size=6), finite, finite,
       st.floats(0, 2))
def test_resultants_are_linear(U, V, a, b, l):
    U, V = np.array(U), np.array(V)
    lhs = resultants(*(a * U + b * V), P, l)
    rU, rV = resultants(*U, P, l), resultants(*V, P, l)
    for x, y, z in zip(lhs, rU, rV):
        assert x == pytest.approx(a * y + b * z, abs=1e-11 * (1 + abs(a) + abs(b)) * 50)


# ------------------------------------------------------------ nonlinearity


def test_first_study_feedback_values():
    spec = NonlinearitySpec.sl1()
    f, h, g = feedback((1.0, 0.0, 0.0), "left", spec)
    assert f == 2.0
    _, _, g = feedback((0.0, 0.0, 1.0), 1, spec)
    assert g == 3.0


@pytest.mark.parametrize("preset", ["zero", "sl1", "sl2"])
def test_feedbacks_vanish_at_origin(preset):
    spec = NonlinearitySpec.from_preset(preset)
    for side in ("left", "right"):
        assert all(float(x) == 0.0 for x in feedback((0.0, 0.0, 0.0), side, spec))


def test_first_study_potential_values():
    spec = NonlinearitySpec.sl1()
    assert potential((1.0, 0.0, 0.0), "left", spec) == 0.0
    assert potential((0.0, 0.0, 0.0), "right", spec) == 0.0


def test_lower_bound_of_first_study_potential():
    # along psi = omega = 0 the potential is t^4 - t^2, minimal (-1/4) at t^2 = 1/2
    t = np.linspace(-2, 2, 400_001)
    assert np.min(t**4 - t**2) == pytest.approx(-0.25, abs=1e-10)
    spec = NonlinearitySpec.sl1()
    assert spec.delta == 0.25
    s = math.sqrt(0.5)
    assert potential((s, 0.0, 0.0), 1, spec) == pytest.approx(-0.25, abs=1e-15)
    for side in (1, 2):
        assert sampled_potential_min(spec, side) >= -spec.delta


def test_second_study_potential_bound():
    spec = NonlinearitySpec.sl2()
    # a^4 - 4 a^2 has its minimum -4 at a^2 = 2
    assert spec.delta == 4.0
    assert min(sampled_potential_min(spec, 1), sampled_potential_min(spec, 2)) >= -4.0


@pytest.mark.parametrize("preset", ["zero", "sl1", "sl2"])
def test_feedbacks_are_gradients(preset):
    worst, ok = check_gradient_consistency(NonlinearitySpec.from_preset(preset))
    assert ok, worst


def test_gradient_check_flags_inconsistent_feedback():
    good = NonlinearitySpec.sl1()
    wrong = lambda a, b, c: (a, b, c)  # noqa: E731
    bad = NonlinearitySpec("bad", good.potentials, (wrong, wrong), True, 0.25)
    _, ok = check_gradient_consistency(bad)
    assert not ok


def test_custom_nonlinearity_derives_feedbacks():
    F = lambda a, b, c: a**2 + b**4 + np.abs(c) ** 3  # noqa: E731
    spec = NonlinearitySpec.custom(F, F)
    f, h, g = feedback((1.0, 1.0, -1.0), "left", spec)
    assert (f, h, g) == pytest.approx((2.0, 4.0, -3.0), rel=1e-8)
    assert spec.delta == 0.0
    assert check_gradient_consistency(spec)[1]


def test_unknown_segment_name():
    with pytest.raises(ValueError):
        feedback((0, 0, 0), "middle", NonlinearitySpec.sl1())


# ----------------------------------------------------------------- damping


@pytest.mark.parametrize("variant", DampingSpec.VARIANTS[:4])
def test_damping_vanishes_at_zero(variant):
    assert damping_eval(0.0, DampingSpec.from_variant(variant)) == 0.0


def test_printed_saturation_values():
    spec = DampingSpec.from_variant("cubic-saturated-as-printed")
    assert damping_eval(1.0, spec) == pytest.approx(0.01)
    assert damping_eval(10.5, spec) == 105.0


def test_continuous_saturation_extension():
    spec = DampingSpec.from_variant("cubic-saturated-C1")
    assert damping_eval(20.0, spec) == 40.0
    # value and slope agree at the switch point
    assert damping_eval(10.0, spec) == pytest.approx(3 * 10 - 20)
    eps = 1e-6
    left = (damping_eval(10.0, spec) - damping_eval(10.0 - eps, spec)) / eps
    right = (damping_eval(10.0 + eps, spec) - damping_eval(10.0, spec)) / eps
    assert left == pytest.approx(3.0, rel=1e-5) and right == pytest.approx(3.0, rel=1e-5)


@pytest.mark.parametrize("variant", ["none", "linear", "cubic-saturated-C1"])
def test_accepted_damping_is_monotone(variant):
    spec = DampingSpec.from_variant(variant)
    s = np.sort(np.random.default_rng(1).uniform(-100, 100, 10_000))
    assert np.all(np.diff(spec.gamma(s)) >= 0)
    assert check_damping(spec) == []


def test_printed_saturation_fails_continuity_check():
    problems = check_damping(DampingSpec.from_variant("cubic-saturated-as-printed"))
    assert any("exceeds declared" in p for p in problems)
    cfg = sl1_config(damping=DampingSpec.from_variant("cubic-saturated-as-printed"))
    warnings = validate_config(cfg)
    assert warnings and all(w.startswith("damping:") for w in warnings)


def test_decreasing_custom_damping_is_rejected():
    spec = DampingSpec.custom(lambda s: -np.asarray(s, dtype=float), 1.0)
    assert any("non-decreasing" in p for p in check_damping(spec))
    with pytest.raises(ConfigError) as err:
        validate_config(sl1_config(damping=spec))
    assert err.value.key == "damping.variant"


def test_unknown_damping_variant():
    with pytest.raises(ConfigError) as err:
        DampingSpec.from_variant("quadratic")
    assert err.value.key == "damping.variant"


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_saturated_damping_is_monotone_and_lipschitz(a, b):
    spec = DampingSpec.cubic_saturated()
    ga, gb = float(spec.gamma(a)), float(spec.gamma(b))
    assert (ga - gb) * (a - b) >= 0
    assert abs(ga - gb) <= spec.lipschitz * abs(a - b) + 1e-9


# ------------------------------------------------------------------- loads


def test_first_study_loads_at_origin():
    assert np.array_equal(load_eval(0.0, sl1_config())[:3], np.zeros(3))


def test_second_study_shear_loads_match_at_interface():
    out = load_eval(4.0, sl2_config())
    assert out[1] == 8.0 and out[4] == 8.0


def test_zero_loads_everywhere():
    cfg = sl1_config().replace(loads=LoadSpec.zero())
    for x in np.linspace(0, 10, 11):
        assert not load_eval(x, cfg).any()


def test_load_outside_beam():
    with pytest.raises(DomainError):
        load_eval(11.0, sl1_config())


# ------------------------------------------------------------------ config


def test_first_study_coefficients():
    cfg = sl1_config()
    assert (cfg.left.rho, cfg.left.beta, cfg.left.sigma, cfg.left.lam) == (1, 2, 4, 8)
    assert (cfg.right.rho, cfg.right.beta, cfg.right.sigma, cfg.right.lam) == (1, 2, 2, 4)
    assert (cfg.L, cfg.L0, cfg.l) == (10, 4, 1)
    assert cfg.damping.variant == "cubic-saturated-C1"


def test_second_study_base_and_scaling():
    cfg = sl2_config()
    assert (cfg.l, cfg.left.k, cfg.right.k) == (1, 4, 1)
    s = scale_chi(cfg, 10)
    assert (s.l, s.left.k, s.right.k) == (0.1, 40, 10)
    s = sl2_config(300)
    assert (s.l, s.left.k, s.right.k) == (1 / 300, 1200, 300)


def test_equal_speed_flag():
    # left part: k = sigma = 4, rho/k = 1/4 = beta/lambda
    assert sl1_config().equal_speed
    assert not sl1_config(k1=3.0).equal_speed


def test_max_speed():
    assert sl1_config().max_speed == 2.0
    assert sl2_config(100).max_speed == 20.0


@pytest.mark.parametrize("name", ["rho", "beta", "k", "sigma", "lam"])
def test_segment_parameters_must_be_positive(name):
    kw = dict(rho=1.0, beta=1.0, k=1.0, sigma=1.0, lam=1.0)
    kw[name] = -1.0
    with pytest.raises(ConfigError) as err:
        SegmentParams(**kw)
    assert err.value.key == ("lambda" if name == "lam" else name)


@pytest.mark.parametrize("L,L0,l", [(10, 0, 1), (10, 10, 1), (-1, 0.5, 1), (10, 4, -0.1)])
def test_geometry_checks(L, L0, l):
    with pytest.raises(ConfigError):
        BeamConfig(P, P, l, L, L0)


def test_presets():
    assert preset_config("sl1") == sl1_config()
    with pytest.raises(ConfigError):
        preset_config("sl3")
    with pytest.raises(ConfigError):
        scale_chi(sl2_config(), 0.5)
