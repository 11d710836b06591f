import logging
import pickle

import numpy as np
import pytest

from projeuler.core.errors import AdmissibilityError, BlowUpError, ConfigError
from projeuler.core.model import scheme_constants
from projeuler.core.scheme import (
    Admissibility,
    SchemeConfig,
    SchemeKind,
    check_admissible,
    em_step,
    integrate,
    integrate_batch,
    pe_step,
    project,
    run,
)
from projeuler.core.wiener import GridSpec, generate
from projeuler.models.examples import (
    example1_multiplicative,
    example2_additive,
    linear_model,
    zero_model,
)


def test_scheme_config_coerces_enums():
    config = SchemeConfig(0.01, kind="euler-maruyama", admissibility="off")
    assert config.kind is SchemeKind.EULER_MARUYAMA
    assert config.admissibility is Admissibility.OFF


@pytest.mark.parametrize(
    "kwargs",
    [
        {"h": 0.0},
        {"h": -0.1},
        {"h": 2.0},
        {"h": 0.1, "kind": "runge-kutta"},
        {"h": 0.1, "admissibility": "sometimes"},
    ],
)
def test_scheme_config_rejects(kwargs):
    with pytest.raises(ConfigError):
        SchemeConfig(**kwargs)


def test_scheme_config_large_step_without_admissibility():
    assert SchemeConfig(2.0, admissibility="off").h == 2.0


def test_project_properties():
    rng = np.random.default_rng(0)
    for dim in (1, 2, 5):
        for gamma in (1.0, 2.0, 3.0):
            for _ in range(500):
                x = rng.standard_normal(dim) * 10.0 ** rng.uniform(-3, 2)
                y = rng.standard_normal(dim) * 10.0 ** rng.uniform(-3, 2)
                h = 10.0 ** rng.uniform(-4, 0)
                cap = h ** (-1 / (2 * gamma))
                px, py = project(x, h, gamma), project(y, h, gamma)
                np.testing.assert_array_equal(project(px, h, gamma), px)
                norm_x = np.linalg.norm(x)
                norm_px = np.linalg.norm(px)
                assert norm_px <= cap * (1 + 1e-12)
                assert norm_px**gamma <= h**-0.5 * (1 + 1e-12)
                assert norm_px <= norm_x * (1 + 1e-12)
                gap = np.linalg.norm(px - py)
                assert gap <= np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12
                moved = np.linalg.norm(x - px)
                assert moved <= h**2 * norm_x ** (4 * gamma + 1) * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("preset", [example1_multiplicative, example2_additive])
def test_drift_is_bounded_after_projection(preset):
    model = preset()
    l1 = scheme_constants(model).l1
    rng = np.random.default_rng(4)
    n = 10_000
    x = rng.standard_normal((n, 1)) * 10.0 ** rng.uniform(-2, 3, (n, 1))
    t = model.period * rng.random(n)
    for h in (1.0, 0.1, 0.01, 1e-3, 1e-4):
        drift = model.drift(t, project(x, h, model.gamma))
        assert np.all(np.linalg.norm(drift, axis=1) <= l1 * h**-0.5)


def test_project_keeps_small_states_and_zero():
    x = np.array([[0.3, -0.4], [0.0, 0.0]])
    np.testing.assert_array_equal(project(x, 0.01, 1.0), x)


def test_zero_model_matches_closed_form():
    model = zero_model(lam=1.0)
    config = SchemeConfig(0.01)
    path = generate(GridSpec(0.0, 1.28, 7), 1, seed=0, stream_id=0)
    trajectory = integrate(model, config, path, 0.0, 100, 2.0)
    expected = 2.0 * (1 - 0.01) ** np.arange(101)
    np.testing.assert_allclose(trajectory.states[:, 0], expected, rtol=1e-12, atol=0)
    assert trajectory.steps == 100
    assert trajectory.time(100) == pytest.approx(1.0)
    assert (trajectory.model_id, trajectory.seed, trajectory.stream_id) == ("zero", 0, 0)


def test_projection_inactive_on_small_data():
    model = linear_model(lam=1.0, sigma=0.1)
    path = generate(GridSpec(0.0, 10.24, 10), 1, seed=3, stream_id=1)
    pe = integrate(model, SchemeConfig(0.01, SchemeKind.PROJECTED_EULER), path, 0.0, 1000, 0.5)
    em = integrate(model, SchemeConfig(0.01, SchemeKind.EULER_MARUYAMA), path, 0.0, 1000, 0.5)
    np.testing.assert_array_equal(pe.states, em.states)
    assert np.max(np.abs(pe.states)) < 10.0


def test_single_steps():
    model = example2_additive()
    x = np.array([0.5])
    dW = np.array([0.1])
    expected = 0.5 - np.pi * 0.01 * 0.5 + 0.01 * (-0.125 + np.sin(2 * np.pi * 0.25)) + 0.1
    assert pe_step(model, 0.25, x, 0.01, dW)[0] == pytest.approx(expected, rel=1e-14)
    assert em_step(model, 0.25, x, 0.01, dW)[0] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("x", [0.5, 10.0, -1e3])
def test_pe_step_example1_closed_form(x):
    model = example1_multiplicative()
    t, h, dw = 2.25, 0.01, 0.1
    cap = h ** (-1 / 6)
    y = float(np.clip(x, -cap, cap))
    forcing = np.cos(np.pi * 0.25)
    expected = y - 2 * np.pi * h * y + h * (y - y**3 + forcing) + (1 + y**2 + forcing) * dw
    out = pe_step(model, t, np.array([x]), h, np.array([dw]))
    assert out[0] == pytest.approx(expected, rel=1e-12)


def test_em_step_grows_from_large_states():
    model = example1_multiplicative()
    x, h = 1e3, 0.01
    expected = x - 2 * np.pi * h * x + h * (x - x**3 + 1.0)
    out = em_step(model, 0.0, np.array([x]), h, np.array([0.0]))
    assert out[0] == pytest.approx(expected, rel=1e-12)
    assert abs(out[0]) > 1e3 * x
    assert abs(pe_step(model, 0.0, np.array([x]), h, np.array([0.0]))[0]) < 10.0


def test_pe_step_projects_large_states():
    model = example1_multiplicative()
    x = np.array([1e200])
    with pytest.raises(BlowUpError) as e:
        em_step(model, 0.0, x, 0.05, np.array([0.0]), node=7)
    assert e.value.node == 7
    assert np.isfinite(pe_step(model, 0.0, x, 0.05, np.array([0.0]))).all()


def test_integrate_rejects_misaligned_runs():
    model = linear_model()
    path = generate(GridSpec(0.0, 1.28, 7), 1, seed=0, stream_id=0)
    with pytest.raises(ConfigError):
        integrate(model, SchemeConfig(0.03), path, 0.0, 10, 0.0)
    with pytest.raises(ConfigError):
        integrate(model, SchemeConfig(0.04), path, 0.01, 10, 0.0)
    with pytest.raises(ValueError):
        integrate(model, SchemeConfig(0.01), path, 0.005, 10, 0.0)
    with pytest.raises(IndexError):
        integrate(model, SchemeConfig(0.01), path, 0.0, 200, 0.0)
    with pytest.raises(ValueError):
        integrate(model, SchemeConfig(0.01), path, 0.0, -1, 0.0)


def test_integrate_on_coarser_step_uses_the_same_noise():
    model = linear_model(lam=1.0, sigma=1.0)
    path = generate(GridSpec(0.0, 1.0, 6), 1, seed=5, stream_id=0)
    h = 1.0 / 16
    trajectory = integrate(model, SchemeConfig(h), path, 0.0, 16, 0.0)
    x = 0.0
    for j in range(16):
        x = x + (-h) * x + (path.values[4 * (j + 1), 0] - path.values[4 * j, 0])
    assert trajectory.states[-1, 0] == pytest.approx(x, abs=1e-14)


def test_integrate_batch_matches_single_paths():
    model = example1_multiplicative()
    config = SchemeConfig(0.01, admissibility="off")
    grid = GridSpec.covering(-2.0, 2.0, 0.01)
    paths = [generate(grid, 1, seed=9, stream_id=s) for s in range(5)]
    batch = integrate_batch(model, config, paths, -2.0, 400, 0.3)
    assert batch.shape == (401, 5, 1)
    for b, path in enumerate(paths):
        single = integrate(model, config, path, -2.0, 400, 0.3)
        np.testing.assert_array_equal(batch[:, b], single.states)
    terminal = integrate_batch(model, config, paths, -2.0, 400, 0.3, record=False)
    np.testing.assert_array_equal(terminal, batch[-1])


def test_integrate_batch_per_path_initial_values():
    model = zero_model(lam=1.0)
    grid = GridSpec(0.0, 1.28, 7)
    paths = [generate(grid, 1, seed=0, stream_id=s) for s in range(3)]
    xi = np.array([[1.0], [2.0], [-1.0]])
    out = integrate_batch(model, SchemeConfig(0.01), paths, 0.0, 10, xi, record=False)
    np.testing.assert_allclose(out[:, 0], xi[:, 0] * 0.99**10, rtol=1e-13)


def test_euler_maruyama_blows_up_where_projection_does_not():
    model = example1_multiplicative()
    grid = GridSpec.covering(0.0, 5.0, 0.05)
    paths = [generate(grid, 1, seed=1, stream_id=s) for s in (10, 11)]
    em = SchemeConfig(0.05, SchemeKind.EULER_MARUYAMA, "off")
    with pytest.raises(BlowUpError) as e:
        integrate_batch(model, em, paths, 0.0, 100, 50.0)
    assert e.value.stream_id in (10, 11)
    assert e.value.h == 0.05
    assert 1 <= e.value.node <= 100
    pe = SchemeConfig(0.05, SchemeKind.PROJECTED_EULER, "off")
    assert np.isfinite(integrate_batch(model, pe, paths, 0.0, 100, 50.0)).all()


def test_blow_up_error_survives_pickling():
    error = BlowUpError("non-finite state", node=4, stream_id=2, h=0.5)
    restored = pickle.loads(pickle.dumps(error))
    assert (restored.node, restored.stream_id, restored.h) == (4, 2, 0.5)
    assert str(restored) == "non-finite state (node 4, stream 2, h=0.5)"


def test_run_without_stream_ids():
    model = example1_multiplicative()
    dW = np.zeros((1, 50, 1))
    with pytest.raises(BlowUpError) as e:
        run(model, SchemeKind.EULER_MARUYAMA, 0.05, 0.0, np.array([[1e100]]), dW)
    assert e.value.stream_id is None


def test_check_admissible(caplog):
    model = example1_multiplicative()
    with pytest.raises(AdmissibilityError):
        check_admissible(model, SchemeConfig(0.01, admissibility="strict"))
    with caplog.at_level(logging.WARNING):
        bound = check_admissible(model, SchemeConfig(0.01, admissibility="warn"))
    assert "exceeds the admissible bound" in caplog.text
    assert bound < 0.01
    caplog.clear()
    check_admissible(model, SchemeConfig(0.01, admissibility="off"))
    assert caplog.text == ""


def test_check_admissible_passes_small_steps():
    model = linear_model(lam=1.0)
    assert check_admissible(model, SchemeConfig(0.1, admissibility="strict")) > 0.1


def test_integrate_applies_policy():
    model = example1_multiplicative()
    path = generate(GridSpec(0.0, 1.28, 7), 1, seed=0, stream_id=0)
    with pytest.raises(AdmissibilityError):
        integrate(model, SchemeConfig(0.01, admissibility="strict"), path, 0.0, 10, 0.3)
    trajectory = integrate(
        model, SchemeConfig(0.01, admissibility="strict"), path, 0.0, 10, 0.3, check=False
    )
    assert trajectory.steps == 10
