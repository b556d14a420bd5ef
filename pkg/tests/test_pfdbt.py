import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_stable
from ffmor.analysis import band_error_sup, error_system
from ffmor.bt import balance
from ffmor.errors import (BadOrder, NearlyNonMinimal, NoAdmissiblePoint, NotAchievable,
                          NotAdmissible, StabilityLost)
from ffmor.mapping import forward_map
from ffmor.model import FrequencyRange, StateSpaceModel, example_model, freqresp
from ffmor.pfdbt import (default_rho_grid, ff_bounds, min_order_for_tolerance, pfdbt, pfdbt_hf,
                         pfdbt_lf, pfdbt_stable, sweep_rho)

LF1 = FrequencyRange.lf(1.0)


def unstable_case():
    # R2 on the second example at rho=-4 gives an unstable third-order model
    return example_model("example2"), -4.0, 3


def test_example2_lf_r1(ex2):
    res = pfdbt_lf(ex2, LF1, 4.0, 3, "r1")
    assert res.reduced.n == 3 and res.reduced.is_real and res.reduced.is_continuous
    assert res.bound_kind == "LF" and res.method == "PFDBT-R1" and res.rho == 4.0
    assert res.mapped.time_domain == "discrete" and res.mapped_reduced.n == 3
    assert band_error_sup(ex2, res.reduced, LF1, 600) <= res.bound


def test_bound_is_exact_arithmetic(ex2):
    for routing, rho in (("r1", 7.0), ("r2", -7.0)):
        res = pfdbt_lf(ex2, FrequencyRange.lf(2.0), rho, 2, routing)
        assert res.bound == 2.0 * math.hypot(rho, 2.0) * float(np.sum(res.tail_sv))
        np.testing.assert_array_equal(res.tail_sv, res.hankel_sv[2:])
        np.testing.assert_array_equal(res.hankel_sv, balance(res.mapped).hankel_sv)


def test_tail_is_zero_for_nonminimal_mapped():
    # the third state is neither reachable nor observable
    A = np.diag([-1.0, -2.0, -5.0])
    B = np.array([[1.0], [1.0], [0.0]])
    C = np.array([[1.0, 2.0, 0.0]])
    m = StateSpaceModel(A, B, C, [[0.1]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearlyNonMinimal)
        res = pfdbt_lf(m, LF1, 2.0, 2)
    assert res.bound <= 1e-12
    assert band_error_sup(m, res.reduced, LF1, 200) <= 1e-10


def test_rho_zero_inadmissible():
    m = StateSpaceModel(np.diag([-0.5, -3.0]), [[1.0], [1.0]], [[1.0, 1.0]], [[0.0]])
    with pytest.raises(NotAdmissible):
        pfdbt_lf(m, LF1, 0.0, 1)


def test_r2_needs_negative_rho(ex2):
    with pytest.raises(NotAdmissible):
        pfdbt_lf(ex2, LF1, 4.0, 2, "r2")
    assert pfdbt_lf(ex2, LF1, -4.0, 2, "r2").method == "PFDBT-R2"


def test_argument_checks(ex2):
    with pytest.raises(BadOrder):
        pfdbt_lf(ex2, LF1, 4.0, 6)
    with pytest.raises(ValueError):
        pfdbt_lf(ex2, FrequencyRange.hf(1.0), 4.0, 3)
    with pytest.raises(ValueError):
        pfdbt(ex2, FrequencyRange.ef(), 4.0, 3)
    with pytest.raises(ValueError):
        pfdbt(ex2, LF1, 4.0, 3, "r3")


def test_bound_monotone_in_order(ex2):
    for band, rho in ((LF1, 4.0), (FrequencyRange.hf(2.0), 5.0)):
        b = ff_bounds(ex2, band, rho)
        assert np.all(np.diff(b) <= 0) and b[-1] == 0
        for r in range(1, 6):
            assert pfdbt(ex2, band, rho, r).bound == pytest.approx(b[r - 1], rel=1e-14)


@pytest.mark.parametrize("routing, sign", [("r1", 1), ("r2", -1)])
def test_mapped_error_system_identity(ex2, routing, sign):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityLost)
        res = pfdbt_lf(ex2, LF1, sign * 4.0, 3, routing)
    mapped_err = forward_map(error_system(ex2, res.reduced), res.kind)
    z = np.exp(1j * np.linspace(-3.0, 3.0, 25))
    lhs = freqresp(mapped_err, z)
    rhs = freqresp(res.mapped, z) - freqresp(res.mapped_reduced, z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * np.max(np.abs(freqresp(res.mapped, z))))


@pytest.mark.parametrize("wh", [2.0, 10.0])
def test_example2_hf(ex2, wh):
    band = FrequencyRange.hf(wh)
    for routing in ("r1", "r2"):
        rho = default_rho_grid(ex2, band, routing)[1]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityLost)
            res = pfdbt_hf(ex2, band, rho, 3, routing)
        assert res.bound_kind == "HF"
        assert band_error_sup(ex2, res.reduced, band, 600) <= res.bound * (1 + 1e-6)


def test_mf_path_gives_complex_model(ex2):
    band = FrequencyRange.mf(1.0, 3.0)
    rho = default_rho_grid(ex2, band)[1]
    res = pfdbt(ex2, band, rho, 3)
    assert not res.reduced.is_real and res.bound_kind == "MF"


def test_stability_lost_warning():
    m, rho, r = unstable_case()
    with pytest.warns(StabilityLost):
        res = pfdbt_lf(m, LF1, rho, r, "r2")
    assert not res.reduced_stable
    # the bound still holds
    assert band_error_sup(m, res.reduced, LF1, 600) <= res.bound * (1 + 1e-6)


def test_retry_with_larger_rho():
    m, rho, r = unstable_case()
    res = pfdbt_stable(m, LF1, rho, r, "r2")
    assert res.reduced_stable and abs(res.rho) > abs(rho)


def test_default_rho_grid_sides(ex2):
    up = default_rho_grid(ex2, LF1, "r1")
    lo = default_rho_grid(ex2, LF1, "r2")
    assert all(x > 0 for x in up) and up[1] == pytest.approx(10 * up[0])
    assert lo == [-x for x in up]


def test_sweep_rho(ex2):
    grid = default_rho_grid(ex2, LF1)
    sw = sweep_rho(ex2, LF1, 3, "r1", grid[::-1])
    assert [p.rho for p in sw.points] == sorted(grid)
    assert sw.best.bound == min(p.bound for p in sw.points)
    assert not sw.skipped


def test_sweep_rho_single_point(ex2):
    sw = sweep_rho(ex2, LF1, 3, "r1", [4.0])
    assert len(sw.points) == 1 and sw.best_rho == 4.0


def test_sweep_rho_skips_and_fails(ex2):
    t = default_rho_grid(ex2, LF1)[0]
    sw = sweep_rho(ex2, LF1, 3, "r1", [t - 100, 4.0])
    assert len(sw.points) == 1 and sw.skipped[0][0] == t - 100
    with pytest.raises(NoAdmissiblePoint):
        sweep_rho(ex2, LF1, 3, "r1", [t - 100, t - 50])
    with pytest.raises(ValueError):
        sweep_rho(ex2, LF1, 3, "r1", [])


def test_sweep_rho_with_executor(ex2):
    from concurrent.futures import ThreadPoolExecutor

    grid = [4.0, 7.0, 20.0]
    with ThreadPoolExecutor(3) as ex:
        par = sweep_rho(ex2, LF1, 3, "r1", grid, map_fn=ex.map)
    assert par == sweep_rho(ex2, LF1, 3, "r1", grid)


def test_min_order(ex2):
    b = ff_bounds(ex2, LF1, 4.0)
    assert min_order_for_tolerance(ex2, LF1, 4.0, "r1", b[0]) == 1
    assert min_order_for_tolerance(ex2, LF1, 4.0, "r1", b[2] * 1.0001) <= 3
    with pytest.raises(NotAchievable) as info:
        min_order_for_tolerance(ex2, LF1, 4.0, "r1", b[4] / 2)
    assert info.value.best_bound == b[4]
    with pytest.raises(ValueError):
        min_order_for_tolerance(ex2, LF1, 4.0, "r1", 0.0)


@given(st.integers(2, 7), st.sampled_from(["r1", "r2"]), st.integers(0, 2**32 - 1))
def test_bound_validity_random(n, routing, seed):
    rng = np.random.default_rng(seed)
    m = random_stable(rng, n)
    band = FrequencyRange.lf(float(rng.uniform(0.2, 5.0)))
    rho = default_rho_grid(m, band, routing)[int(rng.integers(0, 3))]
    r = int(rng.integers(1, n))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = pfdbt(m, band, rho, r, routing)
    err = band_error_sup(m, res.reduced, band, 300)
    assert err <= res.bound + 1e-6 * (1 + res.bound)
