import numpy as np
import pytest
from scipy.integrate import quad

from dualflow import flux as fx

ATTR = fx.quadratic_attractive()
REP = fx.quadratic_repulsive()
LIN = fx.polynomial([1.0, -2.0])          # a(u) = 1 - 2u
CUBIC = fx.polynomial([0.75, -3.0, 3.0])  # a(u) = 3(u - 1/2)^2, S-shaped A
PWL = fx.piecewise_linear([(0.0, 1.0), (0.5, -1.0), (2.0, -1.0)])

ALL_MODELS = [ATTR, REP, LIN, CUBIC, PWL]


def test_eval_a_examples():
    assert fx.eval_a(ATTR, 1.0) == -1.0
    assert fx.eval_a(ATTR, 0.0) == 0.0
    assert fx.eval_a(LIN, 0.5) == 0.0


def test_eval_A_examples():
    assert fx.eval_A(ATTR, 1.0) == -0.5
    for m in ALL_MODELS:
        assert fx.eval_A(m, 0.0) == 0.0
    assert fx.eval_A(REP, 2.0) == 2.0


def test_non_finite_input_rejected():
    with pytest.raises(fx.FluxError):
        fx.eval_a(ATTR, float("nan"))
    with pytest.raises(fx.FluxError):
        fx.eval_A(REP, float("inf"))
    with pytest.raises(fx.FluxError):
        fx.godunov_flux(ATTR, 0.0, float("nan"))


@pytest.mark.parametrize("model", ALL_MODELS)
def test_antiderivative_matches_quadrature(model):
    # A(u) must equal the integral of a from 0 to u
    pts = [u for u, _ in model.nodes] if model.nodes else None
    for u in np.linspace(-0.5, 2.0, 9):
        ref, _ = quad(lambda s: fx.eval_a(model, s), 0.0, u,
                      points=pts, limit=200)
        assert fx.eval_A(model, u) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("model", [ATTR, REP, LIN, CUBIC])
def test_finite_difference_consistency(model):
    h = 1e-4
    rng = np.random.default_rng(1)
    for u in rng.uniform(0.0, 2.0, 100):
        fd = (fx.eval_A(model, u + h) - fx.eval_A(model, u - h)) / (2 * h)
        assert abs(fd - fx.eval_a(model, u)) <= 10 * h * h


def test_godunov_flux_examples():
    assert fx.godunov_flux(ATTR, 0.0, 1.0) == -0.5
    assert fx.godunov_flux(REP, 0.0, 1.0) == 0.0
    for m in ALL_MODELS:
        assert fx.godunov_flux(m, 0.3, 0.3) == pytest.approx(
            fx.eval_A(m, 0.3), abs=1e-15)


def test_godunov_flux_interior_extremum():
    # a(u) = 1 - 2u vanishes at 1/2 where A = u - u^2 peaks
    assert fx.godunov_flux(LIN, 1.0, 0.0) == pytest.approx(0.25, abs=1e-14)
    assert fx.godunov_flux(LIN, 0.0, 1.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("model", ALL_MODELS)
def test_godunov_flux_monotone(model):
    rng = np.random.default_rng(7)
    eps = 1e-6
    for _ in range(200):
        ul, ur = rng.uniform(-0.5, 2.0, 2)
        base = fx.godunov_flux(model, ul, ur)
        assert fx.godunov_flux(model, ul + eps, ur) >= base - 1e-12
        assert fx.godunov_flux(model, ul, ur + eps) <= base + 1e-12


@pytest.mark.parametrize("model", ALL_MODELS)
def test_chord_slope_in_velocity_range(model):
    rng = np.random.default_rng(11)
    for _ in range(100):
        ul = rng.uniform(-0.5, 1.5)
        ur = ul + rng.uniform(1e-3, 1.0)
        slope = (fx.eval_A(model, ur) - fx.eval_A(model, ul)) / (ur - ul)
        amin, amax = fx.a_range(model, ul, ur)
        assert amin - 1e-12 <= slope <= amax + 1e-12


def test_velocity_continuity_by_sampling():
    for model in ALL_MODELS:
        u = np.linspace(-0.1, 2.1, 20001)
        jumps = np.abs(np.diff(fx.eval_a(model, u)))
        assert np.max(jumps) < 1e-2  # shrinks with sample spacing


def test_max_wave_speed():
    assert fx.max_wave_speed(ATTR, 0.0, 1.0) == 1.0
    assert fx.max_wave_speed(REP, 0.0, 1.0) == 1.0
    assert fx.max_wave_speed(LIN, 0.0, 1.0) == 1.0
    # interior max of a(u) = 3(u-1/2)^2 on [0,1] sits at the endpoints
    assert fx.max_wave_speed(CUBIC, 0.0, 1.0) == pytest.approx(0.75)


def test_attractive_classification():
    assert fx.is_attractive(ATTR, 1.0)
    assert fx.is_attractive(LIN, 1.0)
    assert not fx.is_attractive(REP, 1.0)
    assert not fx.is_attractive(CUBIC, 1.0)
    assert fx.is_attractive(PWL, 2.0)  # a never increases, flat tail included
    assert fx.max_slope_of_a(PWL, 0.0, 2.0) <= 0.0
    rising = fx.piecewise_linear([(0.0, -1.0), (1.0, 1.0)])
    assert not fx.is_attractive(rising, 1.0)


def test_from_dict_fail_closed():
    assert fx.from_dict({"kind": "quadratic-attractive"}) == ATTR
    with pytest.raises(fx.FluxError):
        fx.from_dict({"kind": "quadratic-attractive", "extra": 1})
    with pytest.raises(fx.FluxError):
        fx.from_dict({"kind": "polynomial"})
    with pytest.raises(fx.FluxError):
        fx.from_dict({"kind": "tabulated"})
