import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omniinput import (BinGrid, Direction, MissingPrecisionError,
                       OutputDistribution, PrecisionPerBin,
                       UndefinedPrecisionError, Window, aupr,
                       dominant_bin_precision, pr_curve, precision_at,
                       recall_at, roc_unnormalized)
from omniinput.histogram import NormalizationState

LOWER = Direction.LOWER_IS_CONFIDENT
HIGHER = Direction.HIGHER_IS_CONFIDENT


def two_bin_fixture():
    """The hand example: bin z=1 (rho=10, r=0.5), bin z=2 (rho=90, r=0.1)."""
    grid = BinGrid(1.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.log([10.0, 90.0]),
                             NormalizationState.NORMALIZED_TO_SPACE)
    r = PrecisionPerBin(grid, np.array([0.5, 0.1]))
    return grid, rho, r


def test_precision_hand_example():
    _, rho, r = two_bin_fixture()
    assert precision_at(2.0, r, rho, LOWER) == pytest.approx(0.14)
    assert precision_at(1.0, r, rho, LOWER) == pytest.approx(0.5)


def test_precision_all_ones():
    grid = BinGrid(0.0, 5.0, 1.0)
    rho = OutputDistribution(grid, np.log([1, 10, 100, 1000, 10]))
    r = PrecisionPerBin(grid, np.ones(5))
    for lam in [0.0, 2.0, 4.0]:
        assert precision_at(lam, r, rho, LOWER) == pytest.approx(1.0)


def test_recall_hand_example():
    _, rho, r = two_bin_fixture()
    unnorm, norm = recall_at(2.0, r, rho, LOWER)
    assert unnorm == pytest.approx(14.0)
    assert norm == pytest.approx(1.0)
    unnorm1, norm1 = recall_at(1.0, r, rho, LOWER)
    assert unnorm1 == pytest.approx(5.0)
    assert norm1 == pytest.approx(5.0 / 14.0)


def test_recall_zero_everywhere():
    grid, rho, _ = two_bin_fixture()
    r = PrecisionPerBin(grid, np.zeros(2))
    unnorm, norm = recall_at(2.0, r, rho, LOWER)
    assert unnorm == 0.0
    assert norm == 0.0


def test_recall_single_confident_bin():
    _, rho, r = two_bin_fixture()
    unnorm, _ = recall_at(1.0, r, rho, LOWER)
    assert unnorm == pytest.approx(10.0 * 0.5)


def test_missing_r_is_an_error():
    grid = BinGrid(0.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.log([5.0, 5.0, 5.0]))
    r = PrecisionPerBin(grid, np.array([1.0, np.nan, 0.5]))
    with pytest.raises(MissingPrecisionError) as err:
        precision_at(2.0, r, rho, LOWER)
    assert err.value.bins == [1]
    # the missing bin is harmless while outside the cumulative set
    assert precision_at(0.0, r, rho, LOWER) == pytest.approx(1.0)


def test_empty_cumulative_set_is_an_error():
    grid = BinGrid(0.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.array([-np.inf, -np.inf, 1.0]))
    r = PrecisionPerBin(grid, np.full(3, 0.5))
    with pytest.raises(UndefinedPrecisionError):
        precision_at(0.0, r, rho, LOWER)


def test_pr_curve_hand_example():
    grid, rho, r = two_bin_fixture()
    curve = pr_curve(r, rho, LOWER, Window(1.0, 3.0))
    assert [p.lam for p in curve.points] == [1.0, 2.0]
    assert curve.points[0].precision == pytest.approx(0.5)
    assert curve.points[0].recall_norm == pytest.approx(5.0 / 14.0)
    assert curve.points[1].precision == pytest.approx(0.14)
    assert curve.points[1].recall_norm == pytest.approx(1.0)


def test_recall_monotone_in_lambda():
    grid = BinGrid(0.0, 10.0, 1.0)
    rng = np.random.default_rng(8)
    rho = OutputDistribution(grid, rng.normal(scale=5, size=10))
    r = PrecisionPerBin(grid, rng.uniform(size=10))
    curve = pr_curve(r, rho, LOWER, Window(0.0, 10.0))
    unnorm = [p.recall_unnorm for p in curve.points]
    assert all(b >= a for a, b in zip(unnorm, unnorm[1:]))


def test_aupr_constant_precision():
    grid = BinGrid(0.0, 5.0, 1.0)
    rho = OutputDistribution(grid, np.log([1, 5, 20, 50, 3]))
    r = PrecisionPerBin(grid, np.full(5, 0.37))
    curve = pr_curve(r, rho, LOWER, Window(0.0, 5.0))
    assert aupr(curve) == pytest.approx(0.37)


def test_higher_direction_sweeps_from_high_z():
    grid = BinGrid(0.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.log([10.0, 20.0, 70.0]))
    r = PrecisionPerBin(grid, np.array([0.0, 0.5, 1.0]))
    # lambda = 2: include bins [2, 3) only
    assert precision_at(2.0, r, rho, HIGHER) == pytest.approx(1.0)
    # lambda = 1: bins [1, 2) and [2, 3)
    assert precision_at(1.0, r, rho, HIGHER) == \
        pytest.approx((20 * 0.5 + 70) / 90)


def test_dominant_bin_examples():
    grid, rho, r = two_bin_fixture()
    assert dominant_bin_precision(2.0, r, rho, LOWER) == pytest.approx(0.1)
    assert dominant_bin_precision(1.0, r, rho, LOWER) == pytest.approx(0.5)


def test_dominant_bin_tie_breaks_less_confident():
    grid = BinGrid(0.0, 2.0, 1.0)
    rho = OutputDistribution(grid, np.log([50.0, 50.0]))
    r = PrecisionPerBin(grid, np.array([0.9, 0.2]))
    assert dominant_bin_precision(2.0, r, rho, LOWER) == pytest.approx(0.2)


def test_dominant_bin_close_to_exact_on_steep_rho():
    # adjacent bins 6+ nats apart: dominant-bin approximation within 0.01
    grid = BinGrid(0.0, 4.0, 1.0)
    rho = OutputDistribution(grid, np.array([0.0, 6.5, 13.0, 19.5]))
    r = PrecisionPerBin(grid, np.array([1.0, 0.8, 0.3, 0.6]))
    for lam in [1.0, 2.0, 3.0]:
        exact = precision_at(lam, r, rho, LOWER)
        approx = dominant_bin_precision(lam, r, rho, LOWER)
        assert abs(approx - exact) <= 0.01


def test_roc_hand_example():
    _, rho, r = two_bin_fixture()
    points = roc_unnormalized(r, rho, LOWER, Window(1.0, 3.0))
    lam, tp, fp = points[-1]
    assert lam == 2.0
    assert tp == pytest.approx(14.0)
    assert fp == pytest.approx(86.0)
    assert tp + fp == pytest.approx(100.0, rel=1e-9)


def test_roc_perfect_precision_no_false_positives():
    grid = BinGrid(0.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.log([5.0, 10.0, 2.0]))
    r = PrecisionPerBin(grid, np.ones(3))
    for _, tp, fp in roc_unnormalized(r, rho, LOWER, Window(0.0, 3.0)):
        assert fp == 0.0


@st.composite
def random_instance(draw):
    n = draw(st.integers(2, 12))
    log_rho = draw(st.lists(st.floats(-50, 50), min_size=n, max_size=n))
    r = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    return np.array(log_rho), np.array(r)


@given(random_instance(), st.data())
@settings(max_examples=100, deadline=None)
def test_tp_plus_fp_identity(instance, data):
    log_rho, r_vals = instance
    n = len(r_vals)
    grid = BinGrid(0.0, float(n), 1.0)
    rho = OutputDistribution(grid, log_rho)
    r = PrecisionPerBin(grid, r_vals)
    direction = data.draw(st.sampled_from([LOWER, HIGHER]))
    for lam, tp, fp in roc_unnormalized(r, rho, direction, Window(0.0, n)):
        from omniinput import included_bins
        ks = included_bins(grid, lam, direction, Window(0.0, float(n)))
        total = np.exp(log_rho[ks]).sum()
        assert tp + fp == pytest.approx(total, rel=1e-9)


@given(random_instance(), st.floats(-100, 100))
@settings(max_examples=60, deadline=None)
def test_shift_invariance(instance, shift):
    log_rho, r_vals = instance
    n = len(r_vals)
    grid = BinGrid(0.0, float(n), 1.0)
    rho = OutputDistribution(grid, log_rho)
    rho_shifted = OutputDistribution(grid, log_rho + shift)
    r = PrecisionPerBin(grid, r_vals)
    lam = float(n // 2)
    try:
        p0 = precision_at(lam, r, rho, LOWER)
    except UndefinedPrecisionError:
        return
    p1 = precision_at(lam, r, rho_shifted, LOWER)
    assert p1 == pytest.approx(p0, rel=1e-9)
    u0, n0 = recall_at(lam, r, rho, LOWER)
    u1, n1 = recall_at(lam, r, rho_shifted, LOWER)
    assert n1 == pytest.approx(n0, rel=1e-9, abs=1e-12)
    if 1e-280 < u0 < math.inf and 1e-280 < u1 < math.inf:
        # unnormalized recall scales by exp(shift); skip the denormal range
        # where exp() quantization dominates
        assert math.log(u1) - math.log(u0) == pytest.approx(shift, abs=1e-6)


def test_precision_always_in_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 10))
        grid = BinGrid(0.0, float(n), 1.0)
        rho = OutputDistribution(grid, rng.normal(scale=20, size=n))
        r = PrecisionPerBin(grid, rng.uniform(size=n))
        p = precision_at(float(n), r, rho, LOWER)
        assert 0.0 <= p <= 1.0


def test_curve_csv(tmp_path):
    _, rho, r = two_bin_fixture()
    curve = pr_curve(r, rho, LOWER, Window(1.0, 3.0))
    path = tmp_path / "pr.csv"
    curve.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "lambda,recall_unnorm_log,recall_norm,precision"
