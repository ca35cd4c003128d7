import numpy as np
import pytest

import mapfilt as mf
from mapfilt.errors import DataError, InvalidLagError, LengthError, ShapeError

from conftest import lyapunov_gamma0


def test_multiseries_validation():
    with pytest.raises(DataError):
        mf.MultiSeries(np.array([[1.0, np.nan]]))
    with pytest.raises(DataError):
        mf.MultiSeries(np.ones((3, 2)), names=["a", "a"])
    with pytest.raises(ShapeError):
        mf.MultiSeries(np.ones((3, 2)), names=["a"])
    s = mf.MultiSeries([1.0, 2.0, 3.0])
    assert s.T == 3 and s.n == 1


def test_sample_acvf_constant_series():
    x = mf.MultiSeries(np.full((50, 2), 3.7))
    acvf = mf.sample_acvf(x, 5)
    assert np.allclose(acvf.gamma, 0.0, atol=1e-12)


def test_sample_acvf_hand_example():
    x = mf.MultiSeries(np.array([1.0, -1.0]))
    acvf = mf.sample_acvf(x, 1)
    assert acvf.gamma[0][0, 0] == pytest.approx(1.0, abs=1e-12)
    assert acvf.gamma[1][0, 0] == pytest.approx(-0.5, abs=1e-12)


def test_sample_acvf_matches_direct_sum():
    rng = np.random.default_rng(0)
    x = mf.MultiSeries(rng.standard_normal((37, 3)))
    acvf = mf.sample_acvf(x, 9)
    xc = x.values - x.values.mean(axis=0)
    for h in range(10):
        direct = xc[h:].T @ xc[: 37 - h] / 37
        assert np.allclose(acvf.gamma[h], direct, atol=1e-12)


def test_sample_acvf_var1_lyapunov(var1_model):
    x = mf.simulate_var(var1_model, 50000, seed=11)
    acvf = mf.sample_acvf(x, 2)
    oracle = lyapunov_gamma0(var1_model.coeffs[0], var1_model.noise_cov)
    rel = np.linalg.norm(acvf.gamma[0] - oracle) / np.linalg.norm(oracle)
    assert rel < 0.05


def test_sample_acvf_cauchy_schwarz():
    rng = np.random.default_rng(3)
    x = mf.MultiSeries(rng.standard_normal((200, 3)).cumsum(axis=0) * 0.1
                       + rng.standard_normal((200, 3)))
    acvf = mf.sample_acvf(x, 20)
    d = np.sqrt(np.diag(acvf.gamma[0]))
    bound = np.outer(d, d)
    for h in range(21):
        assert np.all(np.abs(acvf.gamma[h]) <= bound + 1e-12)


def test_sample_acvf_lag_error():
    x = mf.MultiSeries(np.ones((5, 1)))
    with pytest.raises(InvalidLagError):
        mf.sample_acvf(x, 5)


def test_difference_linear_trend():
    x = mf.MultiSeries(np.arange(10, dtype=float))
    y, state = mf.difference(x, mf.DiffSpec(d=1))
    assert np.allclose(y.values, 1.0)
    assert y.T == 9


def test_difference_seasonal_periodic():
    base = np.array([1.0, 5.0, -2.0, 0.5])
    x = mf.MultiSeries(np.tile(base, 6))
    y, _ = mf.difference(x, mf.DiffSpec(D=1, s=4))
    assert np.allclose(y.values, 0.0, atol=1e-14)


def test_difference_too_short():
    x = mf.MultiSeries(np.ones((4, 1)))
    with pytest.raises(LengthError):
        mf.difference(x, mf.DiffSpec(d=1, D=1, s=4))


@pytest.mark.parametrize("spec", [
    mf.DiffSpec(d=1),
    mf.DiffSpec(D=1, s=4),
    mf.DiffSpec(d=1, D=1, s=4),
    mf.DiffSpec(d=2, D=1, s=3),
])
def test_difference_integrate_roundtrip(spec):
    rng = np.random.default_rng(5)
    x = mf.MultiSeries(rng.standard_normal((60, 2)) + np.arange(60)[:, None])
    y, state = mf.difference(x, spec)
    back = mf.integrate(y, state, spec)
    # exact up to floating-point addition order
    scale = np.max(np.abs(x.values))
    assert np.max(np.abs(back.values - x.values)) <= 1e-14 * scale


def test_integrate_reproduces_periodic_from_zeros():
    base = np.array([1.0, 5.0, -2.0, 0.5])
    x = mf.MultiSeries(np.tile(base, 6))
    y, state = mf.difference(x, mf.DiffSpec(D=1, s=4))
    rebuilt = mf.integrate(
        mf.MultiSeries(np.zeros_like(y.values), y.names), state, mf.DiffSpec(D=1, s=4)
    )
    assert np.allclose(rebuilt.values, x.values)


def test_integrate_cumsum_from_first_value():
    diffs = np.array([1.0, 2.0, 3.0])
    state = mf.DiffState([np.array([[10.0]])])
    out = mf.integrate(mf.MultiSeries(diffs), state, mf.DiffSpec(d=1))
    assert np.allclose(out.values[:, 0], [10.0, 11.0, 13.0, 16.0])


def test_integrate_mismatched_state():
    y = mf.MultiSeries(np.ones((5, 1)))
    with pytest.raises(LengthError):
        mf.integrate(y, mf.DiffState([np.ones((2, 1))]), mf.DiffSpec(d=1))


def test_qwi_shaped_roundtrip():
    rng = np.random.default_rng(9)
    x = mf.MultiSeries(rng.standard_normal((104, 2)).cumsum(axis=0), period=4)
    spec = mf.DiffSpec(D=1, s=4)
    y, state = mf.difference(x, spec)
    assert y.T == 100
    back = mf.integrate(y, state, spec)
    scale = np.max(np.abs(x.values))
    assert np.max(np.abs(back.values - x.values)) <= 1e-14 * scale


def test_forecast_extend_white_noise_is_zero():
    rng = np.random.default_rng(1)
    x = mf.MultiSeries(rng.standard_normal((30, 2)))
    gam = np.zeros((6, 2, 2))
    gam[0] = np.eye(2)
    ext = mf.forecast_extend(x, mf.AcvfSeq(gam), 4)
    assert ext.T == 38
    assert np.allclose(ext.values[:4], 0.0)
    assert np.allclose(ext.values[-4:], 0.0)
    assert np.allclose(ext.values[4:-4], x.values)


def test_forecast_extend_ar1_closed_form():
    phi = 0.5
    gam = np.array([[[phi ** h]] for h in range(8)])
    x = mf.MultiSeries(np.array([0.3, -1.0, 2.0]))
    ext = mf.forecast_extend(x, mf.AcvfSeq(gam), 2)
    assert ext.values[-2, 0] == pytest.approx(phi * 2.0, abs=1e-10)
    assert ext.values[-1, 0] == pytest.approx(phi ** 2 * 2.0, abs=1e-10)
    # backcasts use the reversed process, same coefficients for scalar AR(1)
    assert ext.values[1, 0] == pytest.approx(phi * 0.3, abs=1e-10)


def test_forecast_extend_output_length():
    rng = np.random.default_rng(2)
    x = mf.MultiSeries(rng.standard_normal((25, 2)))
    acvf = mf.sample_acvf(x, 10)
    ext = mf.forecast_extend(x, acvf, 7)
    assert ext.T == 25 + 14


def test_forecast_extend_singular_falls_back():
    gam = np.zeros((4, 2, 2))  # singular gamma(0)
    x = mf.MultiSeries(np.ones((10, 2)))
    with pytest.warns(RuntimeWarning):
        ext = mf.forecast_extend(x, mf.AcvfSeq(gam), 3)
    assert np.allclose(ext.values[:3], 0.0)


def _identity_filter(n, shift=0, halfwidth=1):
    coeffs = np.zeros((2 * halfwidth + 1, n, n))
    coeffs[halfwidth + shift] = np.eye(n)
    return mf.MapFilter(coeffs, halfwidth)


def test_apply_filter_identity():
    rng = np.random.default_rng(4)
    x = mf.MultiSeries(rng.standard_normal((20, 2)))
    y = mf.apply_filter(x, _identity_filter(2, 0, 1))
    assert np.allclose(y.values, x.values[1:-1])


def test_apply_filter_lag_shift():
    rng = np.random.default_rng(4)
    x = mf.MultiSeries(rng.standard_normal((20, 2)))
    y = mf.apply_filter(x, _identity_filter(2, 1, 1))
    # y_t = x_{t-1}
    assert np.allclose(y.values, x.values[0:-2])


def test_apply_filter_matches_double_loop():
    rng = np.random.default_rng(6)
    M, n, T = 3, 2, 15
    coeffs = rng.standard_normal((2 * M + 1, n, n))
    f = mf.MapFilter(coeffs, M)
    x = mf.MultiSeries(rng.standard_normal((T + 2 * M, n)))
    y = mf.apply_filter(x, f)
    for t in range(T):
        acc = np.zeros(n)
        for k in range(-M, M + 1):
            acc += coeffs[k + M] @ x.values[t + M - k]
        assert np.allclose(y.values[t], acc, atol=1e-12)


def test_apply_filter_linear():
    rng = np.random.default_rng(8)
    M, n = 2, 2
    f = mf.MapFilter(rng.standard_normal((2 * M + 1, n, n)), M)
    x = rng.standard_normal((20, n))
    z = rng.standard_normal((20, n))
    lhs = mf.apply_filter(mf.MultiSeries(2.0 * x - 3.0 * z), f).values
    rhs = (
        2.0 * mf.apply_filter(mf.MultiSeries(x), f).values
        - 3.0 * mf.apply_filter(mf.MultiSeries(z), f).values
    )
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_apply_filter_insufficient_padding():
    f = _identity_filter(1, 0, 4)
    with pytest.raises(LengthError):
        mf.apply_filter(mf.MultiSeries(np.ones((8, 1))), f)


def test_series_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    x = mf.MultiSeries(rng.standard_normal((11, 3)), names=["a", "b", "c"])
    path = tmp_path / "s.csv"
    mf.write_series_csv(path, x, time=[f"2000Q{1 + t % 4}" for t in range(11)])
    back, labels = mf.read_series_csv(path)
    assert back.names == ["a", "b", "c"]
    assert labels[0] == "2000Q1"
    assert np.array_equal(back.values, x.values)
