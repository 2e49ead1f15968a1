import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pitepde.grid import SpectralDiagonal
from pitepde.variants import (ConfigError, PiteConfig, apite_slope, block_gain, build_theta,
                              fold_angle, theta_values, underlying_function, vs_schedule,
                              vs_steps_for_time)


def lam(values):
    return SpectralDiagonal(np.asarray(values, dtype=float), "fourier")


def test_exact_theta_examples():
    assert theta_values("exact", 0.0) == 0.0
    assert theta_values("exact", 0.0, m0=0.9) == pytest.approx(0.451027, abs=1e-6)
    assert theta_values("exact", np.log(2)) == pytest.approx(np.pi / 3, abs=1e-15)


def test_aapite_theta_examples():
    for order in (1, 2, 4):
        assert theta_values("aapite", 0.0, order=order) == 0.0
    assert theta_values("aapite", 0.02) == pytest.approx(0.2, abs=1e-15)
    assert theta_values("aapite", 0.01, order=2) == pytest.approx(
        np.sqrt(2) * (0.1 - 0.001 / 6), abs=1e-15)
    assert theta_values("aapite", 0.01, order=2) == pytest.approx(0.141186, abs=1e-6)


def test_apite_theta_examples():
    assert theta_values("apite", 0.0, m0=0.9) == pytest.approx(0.451027, abs=1e-6)
    theta0, s0 = apite_slope(1 / np.sqrt(2))
    assert theta0 == pytest.approx(np.pi / 4) and s0 == pytest.approx(1.0)
    th = build_theta(PiteConfig(variant="apite", m0=0.9), lam([0.0, 1.0, 10.0]), 0.1)
    assert th.over_range == 1


def test_negative_spectrum_rejected():
    with pytest.raises(ValueError):
        theta_values("exact", -0.1)


def test_config_validation():
    with pytest.raises(ConfigError):
        PiteConfig(variant="apite", m0=1.0)
    with pytest.raises(ConfigError):
        PiteConfig(variant="bogus")
    with pytest.raises(ConfigError):
        PiteConfig(order=3)
    with pytest.raises(ConfigError):
        PiteConfig(dtau=0.0)
    with pytest.raises(ConfigError):
        PiteConfig(variant="vs_apite", m0=0.9)
    with pytest.raises(ConfigError):
        PiteConfig(variant="vs_apite", m0=0.9, vs_dtau=(2e-4, 1e-4))
    with pytest.raises(ConfigError):
        PiteConfig(trotter_order=3)
    with pytest.raises(ConfigError):
        PiteConfig(potential_variant="apite")
    assert PiteConfig(potential_variant="exact").for_potential().variant == "exact"


def test_aapite_ignores_m0_and_block_gain():
    cfg = PiteConfig(variant="aapite", m0=0.5)
    th = build_theta(cfg, lam([0.0]), 0.1)
    assert th.values[0] == 0.0
    assert block_gain(cfg) == 1.0
    assert block_gain(PiteConfig(variant="apite", m0=0.8)) == pytest.approx(1.25)


def test_fold_preserves_cosine():
    raw = np.array([0.1, 1.9, 3.5, 7.0, -0.4])
    folded = fold_angle(raw)
    assert np.all((folded >= 0) & (folded <= np.pi))
    np.testing.assert_allclose(np.cos(folded), np.cos(raw), atol=1e-15)


def test_vs_schedule_examples():
    assert vs_schedule(1e-4, 9e-4, 1).tolist() == [1e-4]
    np.testing.assert_allclose(vs_schedule(1e-4, 9e-4, 5), [1e-4, 3e-4, 5e-4, 7e-4, 9e-4])
    np.testing.assert_allclose(vs_schedule(2e-4, 2e-4, 4), 2e-4)
    assert vs_steps_for_time(1e-4, 9e-4, 0.1) == 200
    assert vs_schedule(1e-4, 9e-4, 200).sum() == pytest.approx(0.1)


def test_underlying_function_examples():
    assert underlying_function("hhl", 1.0) == 0.5
    assert underlying_function("aap", np.pi ** 2 / 2) == pytest.approx(-1.0, abs=1e-15)
    assert underlying_function("HHL", 1.0) == underlying_function("hhl", 1.0)
    with pytest.raises(ValueError):
        underlying_function("nope", 1.0)


def test_oap_second_order_coefficient():
    # g(y) = 1 - y + c2 y^2 + O(y^3); estimate c2 by Richardson on two step sizes
    def c2(h):
        return (underlying_function("oap", h, 0.9) - 1 + h) / h ** 2
    est = 2 * c2(1e-4) - c2(2e-4)
    assert est == pytest.approx(-81 / 38, rel=1e-6)


def test_aap_closer_than_hhl_on_small_y():
    y = np.linspace(1e-6, 0.1, 2000)
    exa = underlying_function("exa", y)
    assert np.all(np.abs(underlying_function("aap", y) - exa)
                  < np.abs(underlying_function("hhl", y) - exa))


def test_order4_series_remainder():
    x = np.linspace(0, 0.5, 400)
    th = theta_values("aapite", x ** 2, order=4)
    # arccos(e^{-y}) = 2 arcsin(sqrt((1 - e^{-y}) / 2)) avoids cancellation near y = 0
    oracle = 2 * np.arcsin(np.sqrt(-np.expm1(-x ** 2) / 2))
    assert np.all(np.abs(th - oracle) <= 5 * x ** 9 + 1e-15)


@settings(max_examples=60, deadline=None)
@given(y=st.floats(0, 20), m0=st.floats(0.05, 1.0))
def test_exact_cosine_identity(y, m0):
    assert abs(np.cos(theta_values("exact", y, m0=m0)) - m0 * np.exp(-y)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(y=st.floats(0, 1))
def test_aapite_error_bound(y):
    assert abs(np.cos(theta_values("aapite", y)) - np.exp(-y)) <= (2 / 3) * y ** 2 + 1e-16


@settings(max_examples=40, deadline=None)
@given(variant=st.sampled_from(["exact", "aapite", "apite"]), order=st.sampled_from([1, 2, 4]),
       ys=st.lists(st.floats(0, 1.0), min_size=2, max_size=20))
def test_theta_monotone(variant, order, ys):
    ys = np.sort(np.asarray(ys))
    th = theta_values(variant, ys, m0=0.9 if variant == "apite" else 1.0, order=order)
    ok = th <= np.pi / 2
    assert np.all(np.diff(th[ok]) >= -1e-15)
