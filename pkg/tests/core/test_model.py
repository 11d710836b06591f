import math

import numpy as np
import pytest

from projeuler.core.errors import ConfigError
from projeuler.core.model import (
    SdeModel,
    admissible_step_bound,
    derive_coercivity,
    model_from_dict,
    model_to_dict,
    offset_norms,
    periodicity_defect,
    probe_growth,
    probe_monotonicity,
    scheme_constants,
    theoretical_order,
)
from projeuler.models.examples import (
    example1_multiplicative,
    example2_additive,
    linear_diffusion_model,
    linear_model,
    zero_model,
)


def _zero(t, x):
    return np.zeros(np.shape(x))


def _unit(t, x):
    return np.ones(np.shape(x) + (1,))


def _aperiodic(t, x):
    return x * 0 + np.sin(np.asarray(t, dtype=np.float64)[..., np.newaxis])


def make_model(**overrides):
    kwargs = dict(
        name="test",
        dim=1,
        noise_dim=1,
        lam=(1.0,),
        drift=_zero,
        diffusion=_unit,
        period=1.0,
        gamma=1.0,
        alpha1=0.0,
        p1=2.0,
        growth_c1=0.0,
        growth_c2=0.0,
    )
    kwargs.update(overrides)
    return SdeModel(**kwargs)


def test_valid_model():
    model = make_model(dim=2, noise_dim=1, lam=[1.0, 3.0])
    assert model.lam == (1.0, 3.0)
    assert model.lambda1 == 1.0
    assert model.lambda_d == 3.0
    assert model.dissipation_gap == 1.0
    np.testing.assert_array_equal(model.lam_array, [1.0, 3.0])


@pytest.mark.parametrize(
    "overrides",
    [
        {"lam": (1.0, 2.0)},
        {"lam": (0.0,)},
        {"dim": 2, "noise_dim": 2, "lam": (2.0, 1.0)},
        {"period": 0.0},
        {"p1": 1.0},
        {"gamma": 0.5},
        {"gamma": 1.5},
        {"alpha1": 1.0},
        {"growth_c1": -1.0},
        {"additive": True},
        {"additive": True, "c_f": 2.0, "c_g": 1.0},
    ],
)
def test_invalid_model(overrides):
    with pytest.raises(ConfigError):
        make_model(**overrides)


def test_additive_gap_uses_c_f():
    model = make_model(alpha1=0.5, additive=True, c_f=0.25, c_g=1.0)
    assert model.dissipation_gap == 0.75
    assert example2_additive().dissipation_gap == math.pi


def test_reduce_time():
    model = make_model(period=2.0)
    assert model.reduce_time(5.0) == 1.0
    assert model.reduce_time(-0.5) == 1.5


def test_with_constants_revalidates():
    model = make_model()
    assert model.with_constants(alpha1=0.5).alpha1 == 0.5
    with pytest.raises(ConfigError):
        model.with_constants(alpha1=2.0)


def test_model_dict_roundtrip():
    model = example2_additive()
    document = model_to_dict(model)
    assert document["lambda"] == [math.pi]
    rebuilt = model_from_dict(document, model.drift, model.diffusion)
    assert model_to_dict(rebuilt) == document


def test_model_from_dict_rejects_unknown_keys():
    document = model_to_dict(zero_model())
    document["alpha_1"] = 0.0
    with pytest.raises(ConfigError, match="unknown model keys"):
        model_from_dict(document, _zero, _unit)


def test_model_from_dict_requires_lambda():
    document = model_to_dict(zero_model())
    del document["lambda"]
    with pytest.raises(ConfigError):
        model_from_dict(document, _zero, _unit)


def test_model_from_dict_incomplete():
    with pytest.raises(ConfigError, match="incomplete"):
        model_from_dict({"lambda": [1.0], "dim": 1}, _zero, _unit)


def test_derive_coercivity():
    alpha2, c0 = derive_coercivity(0.5, 0.25, 3.0, 1.0, 2.0, 0.0)
    assert alpha2 == 0.75
    assert c0 == pytest.approx(8.0)


@pytest.mark.parametrize(
    "args",
    [
        (0.0, 0.0, 2.0, 1.0, 1.0, 1.0),
        (0.0, 0.5, 2.0, 2.0, 1.0, 1.0),
        (0.0, 0.5, 2.0, 0.5, 1.0, 1.0),
        (0.0, 0.5, 2.0, 1.0, -1.0, 1.0),
    ],
)
def test_derive_coercivity_rejects(args):
    with pytest.raises(ValueError):
        derive_coercivity(*args)


def test_offset_norms():
    f0, g0 = offset_norms(example2_additive())
    assert f0 == pytest.approx(1.0, abs=1e-12)
    assert g0 == 1.0
    f0, g0 = offset_norms(example1_multiplicative())
    assert f0 == pytest.approx(1.0)
    assert g0 == pytest.approx(2.0)


def test_scheme_constants_linear():
    model = linear_model(lam=1.0, sigma=0.1)
    consts = scheme_constants(model)
    assert consts.epsilon == 0.5
    assert consts.alpha2 == 0.5
    assert consts.c0 == pytest.approx(3.75 * 0.01)
    assert consts.l1 == 0.0
    assert consts.l2 == 0.0
    assert consts.p2 == 1.0


def test_scheme_constants_growth():
    consts = scheme_constants(example1_multiplicative())
    assert consts.l1 == 4.0
    assert consts.l2 == 4.5


def test_scheme_constants_rejects_epsilon():
    with pytest.raises(ValueError):
        scheme_constants(linear_model(lam=1.0), epsilon=1.0)


def test_admissible_step_bound():
    model = linear_model(lam=1.0)
    consts = scheme_constants(model)
    assert admissible_step_bound(model, consts) == pytest.approx(2**-1.5)
    assert admissible_step_bound(model, consts, delta1=0.0, delta2=0.0) == 1.0


def test_admissible_step_bound_example1():
    model = example1_multiplicative()
    bound = admissible_step_bound(model, scheme_constants(model))
    gap = 2 * math.pi - 1
    expected = gap**3.5 / (2**3.5 * (2 * math.pi + 4.5) ** 7)
    assert bound == pytest.approx(expected)
    assert bound < 0.01


@pytest.mark.parametrize("delta1, delta2", [(1.0, 1.0), (-0.1, 1.0), (0.5, -1.0)])
def test_admissible_step_bound_rejects(delta1, delta2):
    model = linear_model(lam=1.0)
    with pytest.raises(ValueError):
        admissible_step_bound(model, scheme_constants(model), delta1, delta2)


def test_theoretical_order():
    assert theoretical_order(example1_multiplicative()) == 0.5
    assert theoretical_order(example2_additive()) == 1.0


def test_probe_monotonicity_linear_diffusion():
    model = linear_diffusion_model(lam=1.0, sigma=0.1)
    value = probe_monotonicity(model, radius=3.0, samples=2000, seed=1)
    assert value == pytest.approx(0.015)
    assert value <= model.alpha1 + 1e-12


def test_probe_monotonicity_zero_model():
    assert probe_monotonicity(zero_model(), radius=1.0, samples=100, seed=0) == 0.0


def test_probe_monotonicity_deterministic():
    model = example2_additive()
    a = probe_monotonicity(model, radius=2.0, samples=25_000, seed=3)
    b = probe_monotonicity(model, radius=2.0, samples=25_000, seed=3)
    assert a == b
    # -(x^2 + xy + y^2) is never positive, up to rounding
    assert a <= 1e-9


def _monotone_cubic(t, x):
    return -x * x * x - x


def _no_noise(t, x):
    return np.zeros(np.shape(x) + (1,))


@pytest.mark.parametrize("radius", [0.1, 1.0, 10.0])
def test_probe_monotonicity_monotone_pair(radius):
    model = make_model(
        drift=_monotone_cubic, diffusion=_no_noise, alpha1=-1.0, gamma=3.0, p1=6.0
    )
    assert probe_monotonicity(model, radius, 10_000, seed=2) <= model.alpha1 + 1e-9


def test_probe_monotonicity_example1_regression():
    model = example1_multiplicative()
    value = probe_monotonicity(model, radius=2.0, samples=100_000, seed=0)
    assert value == pytest.approx(76.508, abs=1e-3)
    # supremum 1 - 12 + 5.5 * 16 is attained at x = y = 2
    assert model.alpha1 < value < 77.0


@pytest.mark.parametrize("radius, samples", [(0.0, 10), (1.0, 0)])
def test_probe_monotonicity_rejects(radius, samples):
    with pytest.raises(ValueError):
        probe_monotonicity(zero_model(), radius, samples, 0)


def test_probe_growth_linear_diffusion():
    c1, c2 = probe_growth(linear_diffusion_model(sigma=0.1), radius=2.0, samples=1000, seed=0)
    assert c1 == pytest.approx(0.1 / 3)
    assert c2 == 0.0


def test_probe_growth_presets_within_recorded_constants():
    for model in (example1_multiplicative(), example2_additive()):
        c1, c2 = probe_growth(model, radius=3.0, samples=20_000, seed=5)
        assert c1 <= model.growth_c1 + 1e-12
        assert c2 <= model.growth_c2 + 1e-12


def test_periodicity_defect():
    assert periodicity_defect(example1_multiplicative()) == 0.0
    assert periodicity_defect(example2_additive()) == 0.0
    assert periodicity_defect(make_model(drift=_aperiodic)) > 0.1
