import numpy as np
import pytest

import mapfilt as mf
from mapfilt.errors import ConditioningError, DataError
from mapfilt.spectral import FreqGrid, SpectralGrid, TaperSpec, ct


def hermitian_grid(rng, N, n, scale=1.0):
    """Random conjugate-symmetric Hermitian grid built from a real acvf."""
    gam = rng.standard_normal((4, n, n)) * scale
    gam[0] = gam[0] @ gam[0].T + n * np.eye(n)
    acvf = mf.AcvfSeq(gam * 0.2)
    return mf.flat_top_estimate(acvf, FreqGrid(N), TaperSpec(1, 1e-8))


def test_freqgrid_symmetry():
    g = FreqGrid(16)
    lam = g.lambdas
    for j in range(16):
        assert lam[g.neg_index(j)] == pytest.approx(
            -lam[j] if j > 0 else lam[0]
        )
    with pytest.raises(DataError):
        FreqGrid(15)
    with pytest.raises(DataError):
        FreqGrid(4)


def test_flat_top_identity_acvf():
    gam = np.zeros((3, 2, 2))
    gam[0] = np.eye(2)
    s = mf.flat_top_estimate(mf.AcvfSeq(gam), FreqGrid(32), TaperSpec(2, 1e-6))
    assert np.allclose(s.mats, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("bandwidth", [1, 2, 5])
def test_flat_top_cosine_sum(bandwidth):
    # gamma beyond lag 1 is zero, so any bandwidth >= 1 gives 1.25 + 2*0.5
    gam = np.zeros((11, 1, 1))
    gam[0], gam[1] = 1.25, 0.5
    grid = FreqGrid(64)
    s = mf.flat_top_estimate(mf.AcvfSeq(gam), grid, TaperSpec(bandwidth, 1e-6))
    j0 = int(np.argmin(np.abs(grid.lambdas)))
    assert s.mats[j0, 0, 0].real == pytest.approx(2.25, abs=1e-12)


def test_flat_top_matches_direct_sum():
    rng = np.random.default_rng(0)
    gam = rng.standard_normal((7, 3, 3))
    gam[0] = gam[0] @ gam[0].T + 3 * np.eye(3)
    acvf = mf.AcvfSeq(gam)
    grid = FreqGrid(16)
    taper = TaperSpec(3, 1e-6)
    s = mf.flat_top_estimate(acvf, grid, taper)
    w = mf.spectral.flat_top_weight(np.arange(7) / 3)
    for j in [0, 3, 9]:
        direct = np.zeros((3, 3), complex)
        for h in range(-6, 7):
            direct += w[abs(h)] * acvf.at(h) * np.exp(-1j * grid.lambdas[j] * h)
        assert np.allclose(s.mats[j], direct, atol=1e-10)


def test_flat_top_conjugate_symmetry():
    rng = np.random.default_rng(1)
    s = hermitian_grid(rng, 32, 3)
    assert s.max_conjsym_defect() < 1e-12
    assert s.max_hermitian_defect() < 1e-12


def test_flat_top_bandwidth_precondition():
    gam = np.zeros((2, 1, 1))
    gam[0] = 1.0
    with pytest.raises(DataError):
        mf.flat_top_estimate(mf.AcvfSeq(gam), FreqGrid(16), TaperSpec(3, 1e-6))


def test_pd_truncate_clamps():
    grid = FreqGrid(8)
    mats = np.tile(np.diag([2.0, -0.1]).astype(complex), (8, 1, 1))
    s = SpectralGrid(grid, mats, "joint")
    out = mf.pd_truncate(s, 0.01)
    w = np.linalg.eigvalsh(out.mats)
    assert np.allclose(np.sort(w, axis=1)[:, 0], 0.01, atol=1e-12)
    assert np.allclose(np.sort(w, axis=1)[:, 1], 2.0, atol=1e-12)


def test_pd_truncate_noop_when_pd():
    rng = np.random.default_rng(2)
    s = hermitian_grid(rng, 16, 2)
    floor = np.linalg.eigvalsh(s.mats).min()
    if floor <= 0:
        pytest.skip("draw not PD")
    out = mf.pd_truncate(s, floor / 2)
    assert np.max(np.abs(out.mats - s.mats)) < 1e-12


def test_pd_truncate_moves_up_only():
    rng = np.random.default_rng(3)
    s = hermitian_grid(rng, 16, 3, scale=2.0)
    out = mf.pd_truncate(s, 0.5)
    diff = out.mats - s.mats
    assert np.linalg.eigvalsh(diff).min() > -1e-10


def test_pd_truncate_idempotent():
    rng = np.random.default_rng(4)
    s = hermitian_grid(rng, 16, 3, scale=2.0)
    once = mf.pd_truncate(s, 0.3)
    twice = mf.pd_truncate(once, 0.3)
    assert np.max(np.abs(once.mats - twice.mats)) < 1e-12


def test_conditional_spectrum_block_diagonal():
    grid = FreqGrid(8)
    mats = np.tile(np.diag([2.0, 3.0, 4.0]).astype(complex), (8, 1, 1))
    s = SpectralGrid(grid, mats, "joint")
    cond = mf.conditional_spectrum(s, 1)
    assert np.allclose(cond.mats[:, 0, 0], 2.0)


def test_conditional_spectrum_scalar_schur():
    grid = FreqGrid(8)
    mats = np.tile(np.array([[4.0, 1.0], [1.0, 2.0]], dtype=complex), (8, 1, 1))
    cond = mf.conditional_spectrum(SpectralGrid(grid, mats, "joint"), 1)
    assert np.allclose(cond.mats[:, 0, 0].real, 3.5, atol=1e-12)


def test_conditional_spectrum_pd_preserved():
    rng = np.random.default_rng(5)
    s = hermitian_grid(rng, 32, 4)
    s = mf.pd_truncate(s, 1e-3)
    cond = mf.conditional_spectrum(s, 2)
    assert np.linalg.eigvalsh(cond.mats).min() > 0


def test_conditional_spectrum_singular_z_block():
    grid = FreqGrid(8)
    mats = np.zeros((8, 2, 2), dtype=complex)
    mats[:, 0, 0] = 1.0  # z block identically zero
    with pytest.raises(ConditioningError, match="frequency index"):
        mf.conditional_spectrum(SpectralGrid(grid, mats, "joint"), 1)


def test_grid_average_white_noise_exact():
    gam = np.zeros((2, 2, 2))
    gam[0] = np.array([[1.0, 0.3], [0.3, 2.0]])
    s = mf.flat_top_estimate(mf.AcvfSeq(gam), FreqGrid(64), TaperSpec(1, 1e-6))
    avg = mf.grid_average(s)
    assert np.max(np.abs(avg - gam[0])) < 1e-10


def test_acvf_from_spectrum_roundtrip():
    rng = np.random.default_rng(6)
    gam = rng.standard_normal((5, 2, 2))
    gam[0] = gam[0] @ gam[0].T + 4 * np.eye(2)
    acvf = mf.AcvfSeq(gam)
    grid = FreqGrid(64)
    s = mf.flat_top_estimate(acvf, grid, TaperSpec(4, 1e-6))
    back = mf.acvf_from_spectrum(s, 4)
    assert np.allclose(back.gamma, gam, atol=1e-10)


def test_flat_top_consistency_var1(var1_model):
    x = mf.simulate_var(var1_model, 20000, seed=13)
    T = x.T
    taper = mf.default_taper(T)
    lag = int(np.ceil(2 * T ** (1 / 3)))
    acvf = mf.sample_acvf(x, lag)
    grid = FreqGrid(512)
    est = mf.pd_truncate(mf.flat_top_estimate(acvf, grid, taper), taper.eps)
    truth = mf.model_spectrum(var1_model, grid)
    num = np.linalg.norm(est.mats - truth.mats, axis=(1, 2))
    den = np.linalg.norm(truth.mats, axis=(1, 2))
    assert num.mean() / den.mean() < 0.10


def test_export_spectral_csv(tmp_path):
    rng = np.random.default_rng(7)
    s = hermitian_grid(rng, 8, 2)
    path = tmp_path / "spec.csv"
    mf.export_spectral_csv(s, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("j,lambda,re_11,im_11")
    assert len(lines) == 9
