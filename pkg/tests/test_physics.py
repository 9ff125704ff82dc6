import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwacap.physics import (
    THORP_LOW_FREQ_KHZ,
    DomainError,
    EnvironmentParams,
    absorption_db_per_km,
    an_product,
    frequency_grid,
    log10_an_product,
    log10_an_scalar,
    noise_components,
    noise_psd_linear,
    optimal_frequency,
    path_loss_linear,
)

ENV = EnvironmentParams()

# Hand evaluations of the formulas at 30 significant digits (mpmath).
A_10KHZ = 1.18702993870815652993870815653
A_100HZ = 0.00319910891089108910891089108911
PATH_LOSS_2KM_10KHZ = 4.88597208326293769669962579035
PATH_LOSS_1KM_10KHZ = 1.31432568124559330010164577498
N_TURB_1KHZ = 50.1187233627272285001554186885
N_THERM_1KHZ = 0.0316227766016837933199889354443
N_SHIP_1KHZ = 8374.84256683654354963316318789
N_WIND_1KHZ = 26030.8204914618908788004997918


def test_absorption_values():
    assert absorption_db_per_km(10.0) == pytest.approx(A_10KHZ, rel=1e-14)
    assert absorption_db_per_km(0.1) == pytest.approx(A_100HZ, rel=1e-14)
    assert absorption_db_per_km(1e-6) == pytest.approx(0.002, rel=1e-9)


def test_absorption_seam_is_small():
    below = absorption_db_per_km(np.nextafter(THORP_LOW_FREQ_KHZ, 0))
    at = absorption_db_per_km(THORP_LOW_FREQ_KHZ)
    assert 0 < at - below < 1.1e-3


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_absorption_domain(bad):
    with pytest.raises(DomainError):
        absorption_db_per_km(bad)


def test_absorption_increasing_above_1khz():
    f = np.logspace(0, 3, 5000)
    assert np.all(np.diff(absorption_db_per_km(f)) > 0)


def test_path_loss_values():
    assert path_loss_linear(1.0, 10.0, ENV) == pytest.approx(PATH_LOSS_1KM_10KHZ, rel=1e-13)
    assert path_loss_linear(2.0, 10.0, ENV) == pytest.approx(PATH_LOSS_2KM_10KHZ, rel=1e-13)
    ratio = path_loss_linear(2.0, 10.0, ENV.replace(k=2.0)) / path_loss_linear(2.0, 10.0, ENV)
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_path_loss_domain():
    with pytest.raises(DomainError):
        path_loss_linear(0.0, 10.0, ENV)
    with pytest.raises(DomainError):
        path_loss_linear(1.0, -3.0, ENV)


def test_path_loss_increasing_in_distance():
    l = np.linspace(1.0, 50.0, 200)
    for f in (0.5, 5.0, 50.0):
        assert np.all(np.diff(path_loss_linear(l, f, ENV)) > 0)


@given(
    l=st.floats(0.05, 200.0),
    f=st.floats(0.02, 500.0),
    k_i=st.floats(1.0, 2.0),
    k_j=st.floats(1.0, 2.0),
)
@settings(max_examples=200, deadline=None)
def test_spreading_factor_scaling(l, f, k_i, k_j):
    lhs = log10_an_product(l, f, ENV.replace(k=k_j))
    rhs = (k_j - k_i) * math.log10(l) + log10_an_product(l, f, ENV.replace(k=k_i))
    # Compare linear values at 1e-12 relative.
    assert 10 ** (lhs - rhs) == pytest.approx(1.0, abs=1e-12)


def test_noise_component_values():
    c = noise_components(1.0, ENV)
    assert c["turbulence"] == pytest.approx(N_TURB_1KHZ, rel=1e-13)
    assert c["thermal"] == pytest.approx(N_THERM_1KHZ, rel=1e-13)
    assert c["shipping"] == pytest.approx(N_SHIP_1KHZ, rel=1e-13)
    assert c["wind"] == pytest.approx(N_WIND_1KHZ, rel=1e-13)
    assert noise_psd_linear(1.0, ENV) == pytest.approx(sum(c.values()), rel=1e-15)


def test_shipping_term_vanishes_at_half():
    # s = 0.5: shipping psd is 10**(4 + 2.6 log f - 6 log(f + 0.03)) with no s term.
    f = 3.0
    expected = 10 ** (4 + 2.6 * math.log10(f) - 6 * math.log10(f + 0.03))
    assert noise_components(f, ENV)["shipping"] == pytest.approx(expected, rel=1e-13)
    high = noise_components(f, ENV.replace(s=1.0))["shipping"]
    assert high / expected == pytest.approx(10.0, rel=1e-13)


def test_noise_components_positive_and_bounded_by_total():
    f = np.logspace(-2, 3, 500)
    for env in (ENV, ENV.replace(s=0.0, w=20.0), ENV.replace(s=1.0, w=5.0)):
        c = noise_components(f, env)
        total = noise_psd_linear(f, env)
        for v in c.values():
            assert np.all(v > 0)
            assert np.all(total >= v)


def test_shipping_decays_faster_than_wind():
    f = np.logspace(0, 3, 1000)
    for w in (0.0, 5.0):
        c = noise_components(f, ENV.replace(w=w))
        assert np.all(np.diff(c["shipping"] / c["wind"]) < 0)


def test_environment_validation():
    with pytest.raises(DomainError):
        EnvironmentParams(s=1.5)
    with pytest.raises(DomainError):
        EnvironmentParams(w=-1.0)
    with pytest.raises(DomainError):
        EnvironmentParams(f_min_khz=10.0, f_max_khz=1.0)
    with pytest.warns(UserWarning):
        EnvironmentParams(k=2.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        EnvironmentParams(k=1.0)


def test_an_product_is_product():
    f = np.logspace(-2, 3, 50)
    np.testing.assert_allclose(an_product(5.0, f, ENV), path_loss_linear(5.0, f, ENV) * noise_psd_linear(f, ENV), rtol=1e-13)
    grid = frequency_grid(ENV)
    an = an_product(3.0, grid, ENV)
    assert np.all(np.isfinite(an)) and np.all(an > 0)


def test_an_curves_differ_by_constant_factor_in_k():
    grid = frequency_grid(ENV)
    ratio = an_product(7.0, grid, ENV.replace(k=2.0)) / an_product(7.0, grid, ENV)
    np.testing.assert_allclose(ratio, 7.0**0.5, rtol=1e-12)


def test_scalar_matches_vector():
    for f in (0.011, 0.29999, 0.3, 2.5, 44.0, 800.0):
        for env in (ENV, ENV.replace(s=0.0, w=12.0, k=1.0)):
            assert log10_an_scalar(4.2, f, env) == pytest.approx(log10_an_product(4.2, f, env), abs=1e-12)


def test_optimal_frequency_invariant_to_k():
    grid = frequency_grid(ENV)
    for l in (0.1, 1.0, 10.0, 60.0):
        i1 = np.argmin(log10_an_product(l, grid, ENV.replace(k=1.0)))
        i2 = np.argmin(log10_an_product(l, grid, ENV.replace(k=2.0)))
        assert i1 == i2
        assert optimal_frequency(l, ENV.replace(k=1.0)) == optimal_frequency(l, ENV.replace(k=2.0))


def test_optimal_frequency_nonincreasing_in_distance():
    l = np.linspace(1.0, 100.0, 300)
    f0 = [optimal_frequency(x, ENV) for x in l]
    assert all(b <= a for a, b in zip(f0, f0[1:]))


def test_optimal_frequency_is_local_minimum():
    grid = frequency_grid(ENV)
    for l in (0.5, 5.0, 50.0):
        f0 = optimal_frequency(l, ENV)
        i = int(np.searchsorted(grid, f0))
        here = an_product(l, grid[i], ENV)
        assert an_product(l, grid[i - 1], ENV) >= here
        assert an_product(l, grid[i + 1], ENV) >= here
