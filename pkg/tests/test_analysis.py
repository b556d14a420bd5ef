import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_stable
from ffmor.analysis import (band_error, band_error_sup, band_gain_bound, error_system,
                            frequency_grid, grid_points, hinf_norm, sigma_sweep)
from ffmor.errors import DimensionMismatch, NotAdmissible, NotStable
from ffmor.mapping import FLAVORS, PfdMapKind, admissible_side, pfd_map
from ffmor.model import FrequencyRange, StateSpaceModel, eval_transfer, example_model, sigma_max_at
from ffmor.pfdbt import pfdbt_lf


def test_static_model_constant_sweep(rng):
    A = random_stable(rng, 3).A
    m = StateSpaceModel(A, np.ones((3, 2)), np.zeros((2, 3)), np.diag([2.0, 1.0]))
    sw = sigma_sweep(m, FrequencyRange.lf(5.0), 50)
    np.testing.assert_array_equal(sw.sigma_max, 2.0)


def test_example1_three_points(ex1):
    sw = sigma_sweep(ex1, FrequencyRange.lf(0.1), 3)
    np.testing.assert_array_equal(sw.omega, [-0.1, 0.0, 0.1])
    for w, s in zip(sw.omega, sw.sigma_max):
        oracle = np.linalg.svd(eval_transfer(ex1, 1j * w), compute_uv=False)[0]
        assert s == pytest.approx(oracle, rel=1e-13)


def test_mf_sweep_reproducible(ex2):
    band = FrequencyRange.mf(1.0, 2.0)
    a, b = sigma_sweep(ex2, band, 600), sigma_sweep(ex2, band, 600)
    assert len(a) == 600 and a == b
    assert a.omega[0] == 1.0 and a.omega[-1] == 2.0


@pytest.mark.parametrize("band", ["ef", "lf:2", "mf:0,3", "mf:1,3", "hf:4"])
@pytest.mark.parametrize("n", [2, 3, 600, 601])
def test_grid_shape(band, n):
    band = FrequencyRange.parse(band)
    w = frequency_grid(band, n)
    assert w.size == n and np.all(np.diff(w) > 0)
    if band.kind in ("lf", "mf"):
        assert w[-1] == band.w2 and (w[0] == band.w1 or band.kind == "lf")
    if band.kind == "hf":
        assert np.min(np.abs(w)) == band.wh
        if n >= 4:
            assert np.max(np.abs(w)) == pytest.approx(1e3 * band.wh)
        assert np.all(band.contains(w))


def test_discrete_grid():
    w = frequency_grid(FrequencyRange.ef(), 5, "discrete")
    np.testing.assert_allclose(w, np.linspace(-np.pi, np.pi, 5))
    with pytest.raises(ValueError):
        frequency_grid(FrequencyRange.lf(1.0), 5, "discrete")
    with pytest.raises(ValueError):
        frequency_grid(FrequencyRange.lf(1.0), 1)


def test_grid_points_env(monkeypatch):
    monkeypatch.delenv("FFMOR_GRID_POINTS", raising=False)
    assert grid_points() == 600
    monkeypatch.setenv("FFMOR_GRID_POINTS", "37")
    assert grid_points() == 37
    assert len(sigma_sweep(StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))) == 37
    monkeypatch.setenv("FFMOR_GRID_POINTS", "")
    assert grid_points() == 600
    monkeypatch.setenv("FFMOR_GRID_POINTS", "x")
    with pytest.raises(ValueError):
        grid_points()


def test_skipped_points_recorded():
    m = StateSpaceModel([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    sw = sigma_sweep(m, FrequencyRange.lf(1.0), 3)
    assert sw.skipped == (-1.0, 1.0) and list(sw.omega) == [0.0]


# --------------------------------------------------------------------------
# infinity norm

def test_hinf_first_order():
    g, w = hinf_norm(StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))
    assert g == pytest.approx(1.0, rel=1e-12) and w == 0.0


def test_hinf_delay():
    g, _ = hinf_norm(StateSpaceModel([[0.0]], [[1.0]], [[1.0]], [[0.0]], "discrete"))
    assert g == pytest.approx(1.0, rel=1e-12)


def test_hinf_example2_brute_force(ex2):
    g, _ = hinf_norm(ex2)
    w = np.concatenate([[0.0], np.geomspace(1e-4, 1e6, 20000)])
    brute = max(np.nanmax(sigma_max_at(ex2, 1j * w)), np.linalg.norm(ex2.D, 2))
    assert g >= brute * (1 - 1e-12)
    assert (g - brute) / brute <= 1e-5


@pytest.mark.parametrize("zeta", [0.3, 1e-2, 1e-4])
def test_hinf_resonance_analytic(zeta):
    # 1/(s^2 + 2 zeta w s + w^2), peak 1/(2 zeta w^2 sqrt(1 - zeta^2))
    wn = 10.0
    A = np.array([[0.0, 1.0], [-wn ** 2, -2 * zeta * wn]])
    m = StateSpaceModel(A, [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    g, w = hinf_norm(m)
    exact = 1 / (2 * zeta * wn ** 2 * math.sqrt(1 - zeta ** 2))
    assert g == pytest.approx(exact, rel=1e-6)
    assert w == pytest.approx(wn * math.sqrt(1 - 2 * zeta ** 2), rel=1e-3)


def test_hinf_feedthrough_limit():
    m = StateSpaceModel([[-1.0]], [[1.0]], [[-1.0]], [[3.0]])  # 3 - 1/(s+1), sup at infinity
    g, w = hinf_norm(m)
    assert g == 3.0 and w == math.inf


def test_hinf_unstable():
    with pytest.raises(NotStable):
        hinf_norm(StateSpaceModel([[0.5]], [[1.0]], [[1.0]], [[0.0]]))


@given(st.integers(1, 6), st.booleans(), st.booleans(), st.integers(0, 2**32 - 1))
def test_hinf_dominates_grid(n, discrete, cplx, seed):
    rng = np.random.default_rng(seed)
    m = random_stable(rng, n, 2, 2, discrete=discrete, complex_=cplx)
    g, _ = hinf_norm(m)
    if discrete:
        pts = np.exp(1j * np.linspace(-np.pi, np.pi, 3001))
    else:
        pts = 1j * np.concatenate([-np.geomspace(1e-3, 1e4, 1500), [0], np.geomspace(1e-3, 1e4, 1500)])
    assert g >= np.nanmax(sigma_max_at(m, pts)) * (1 - 1e-12)


# --------------------------------------------------------------------------
# band gains

def _rhos(model, flavor, band, count):
    side, t = admissible_side(model.A, flavor, band)
    offsets = np.geomspace(1e-2, 1e2, count)
    return t + offsets if side == "above" else t - offsets


@pytest.mark.parametrize("band", ["lf:1", "mf:1,3", "hf:2"])
def test_band_gain_bound_above_true_gain(ex1, band):
    band = FrequencyRange.parse(band)
    true = sigma_sweep(ex1, band, 600).max()
    for flavor in FLAVORS:
        for rho in _rhos(ex1, flavor, band, 5):
            est = band_gain_bound(ex1, band, rho, flavor)
            assert est >= true - 1e-6 * est


def test_band_gain_bound_static_model(rng):
    D = np.array([[1.5, 0.2], [0.0, 0.7]])
    m = StateSpaceModel(random_stable(rng, 2).A, np.ones((2, 2)), np.zeros((2, 2)), D)
    band = FrequencyRange.lf(1.0)
    for flavor in FLAVORS:
        rho = _rhos(m, flavor, band, 1)[0]
        assert band_gain_bound(m, band, rho, flavor) >= np.linalg.norm(D, 2) * (1 - 1e-9)


def test_band_gain_bound_inadmissible(ex1):
    band = FrequencyRange.lf(1.0)
    side, t = admissible_side(ex1.A, "upper", band)
    with pytest.raises(NotAdmissible):
        band_gain_bound(ex1, band, t - 1.0, "upper")


def test_printed_left_map_can_undercut(ex1):
    band = FrequencyRange.lf(10.0)
    true = sigma_sweep(ex1, band, 600).max()
    rho = _rhos(ex1, "left", band, 1)[0]
    assert band_gain_bound(ex1, band, rho, "left", "printed") < true


# --------------------------------------------------------------------------
# band errors

def test_error_of_identical_models_is_zero(ex2):
    sw = band_error(ex2, ex2, FrequencyRange.lf(1.0), 50)
    assert sw.max() <= 1e-14


def test_error_system_is_pointwise_difference(ex2):
    red = pfdbt_lf(ex2, FrequencyRange.lf(1.0), 4.0, 3).reduced
    E = error_system(ex2, red)
    for w in np.linspace(-5, 5, 21):
        diff = eval_transfer(ex2, 1j * w) - eval_transfer(red, 1j * w)
        np.testing.assert_allclose(eval_transfer(E, 1j * w), diff, atol=1e-10)


def test_band_error_below_lf_bound(ex2):
    band = FrequencyRange.lf(1.0)
    res = pfdbt_lf(ex2, band, 4.0, 3)
    assert band_error(ex2, res.reduced, band, 600).max() <= res.bound


def test_band_error_dimension_mismatch(ex2):
    other = StateSpaceModel(ex2.A, ex2.B, np.vstack([ex2.C, ex2.C]), np.zeros((2, 1)))
    with pytest.raises(DimensionMismatch):
        band_error(ex2, other, FrequencyRange.lf(1.0), 10)


def test_band_error_sup_includes_infinity():
    a = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    b = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    assert band_error_sup(a, b, FrequencyRange.hf(1.0), 10) == 1.0


def test_hinf_discrete_poles_near_one():
    # upper map at large rho: real poles within 3e-5 of z=1, peak at theta ~ 1e-5
    m = example_model("example1")
    kind = PfdMapKind("upper", FrequencyRange.lf(100.0), 169313.5315968124)
    mapped = pfd_map(m, kind).model
    th = np.geomspace(1e-9, np.pi, 40001)
    brute = sigma_max_at(mapped, np.exp(1j * th)).max()
    gamma, _ = hinf_norm(mapped)
    assert gamma >= brute * (1 - 1e-9)
